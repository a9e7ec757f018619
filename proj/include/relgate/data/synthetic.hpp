#pragma once

#include <cstddef>
#include <cstdint>

#include "relgate/data/dataset.hpp"

namespace relgate {

struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t num_dialogues = 50;
  std::size_t num_relation_types = 6;
  std::size_t max_pairs = 3;
};

inline constexpr std::size_t kTemplatesPerRelation = 2;

/// Relation id carried by a template; the generator never labels otherwise.
inline std::size_t synthetic_label_of_template(std::size_t template_id) {
  return template_id / kTemplatesPerRelation;
}

/// Rule-based dialogue corpus. Each relation pair is stated by one templated
/// utterance naming both entities; filler utterances name nobody. Labels are
/// dealt from a reshuffled deck of all relations. Throws ConfigError on zero counts.
Corpus generate_synthetic(const SyntheticOptions& options);

}  // namespace relgate
