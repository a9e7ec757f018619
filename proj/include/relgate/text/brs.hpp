#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relgate/text/vocab.hpp"

namespace relgate {

/// Layout of the entity tail. With n pairs (subject S_i, object O_i, and
/// relation token R = [CLS]):
///   Standard:        [CLS] X [SEP] (S_i R O_i [SEP])*
///   V2:              [CLS] X (R S_i [SEP] O_i)* [SEP]
///   V3:              [CLS] X [SEP] (S_i [SEP] O_i R)*
///   SingleRelation:  Standard with exactly one pair.
/// V2 and V3 swap each pair's relation [CLS] with the [SEP] just before the
/// subject (V2) or just after the object (V3), so every variant keeps n+1
/// [CLS] and n+1 [SEP] tokens and the same length.
enum class BrsVariant { Standard, V2, V3, SingleRelation };

std::string_view to_string(BrsVariant variant);
/// Accepts "standard", "v2", "v3", "single" (case-insensitive). Throws ConfigError.
BrsVariant parse_brs_variant(std::string_view name);

struct EntityPair {
  std::vector<std::string> subject;
  std::vector<std::string> object;
};

struct BrsSequence {
  std::vector<TokenId> token_ids;
  /// Surface tokens, specials included; OOV tokens keep their text here.
  std::vector<std::string> tokens;
  std::vector<std::int64_t> segment_ids;
  std::size_t global_cls_pos = 0;
  std::vector<std::size_t> relation_cls_pos;
  std::size_t attention_len = 0;
  std::size_t kept_text_tokens = 0;
  bool truncated = false;
  BrsVariant variant = BrsVariant::Standard;

  std::size_t size() const { return token_ids.size(); }
};

/// Builds one relation token sequence. When the sequence would exceed
/// `max_seq_len`, the dialogue text is trimmed from the right; the entity tail
/// is never cut. Throws ContractError on an empty pair list, an empty entity,
/// SingleRelation with more than one pair, or a tail that cannot fit.
BrsSequence build_brs(const Vocab& vocab, std::span<const std::string> dialogue_tokens,
                      std::span<const EntityPair> pairs, BrsVariant variant, std::size_t max_seq_len);

/// Right-padded id matrix, row-major [batch × seq_len].
struct PaddedBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<TokenId> ids;
  std::vector<std::int64_t> segments;
  std::vector<std::uint8_t> mask;
  std::vector<std::vector<std::size_t>> relation_positions;
};

/// Pads every sequence to `max_len` with [PAD]. Throws ContractError when a
/// sequence is longer than `max_len`.
PaddedBatch pad_batch(std::span<const BrsSequence> sequences, std::size_t max_len);

}  // namespace relgate
