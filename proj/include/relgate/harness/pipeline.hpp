#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relgate/core/rng.hpp"
#include "relgate/data/dataset.hpp"
#include "relgate/text/brs.hpp"
#include "relgate/text/vocab.hpp"

namespace relgate {

/// One encoder input: a BRS over some of a dialogue's relation pairs.
struct PreparedSequence {
  std::size_t dialogue = 0;
  std::vector<std::size_t> pairs;  // indices into the dialogue's relations, one per slot
  BrsSequence sequence;
  std::vector<std::vector<std::size_t>> gold;  // per slot
};

struct PreparedData {
  std::vector<PreparedSequence> sequences;
  /// Sequence indices per dialogue, in corpus order.
  std::vector<std::vector<std::size_t>> by_dialogue;

  std::size_t num_relations() const;
};

/// Utterances tokenized and concatenated in order.
std::vector<std::string> dialogue_tokens(const DialogueExample& dialogue);
Vocab build_corpus_vocab(std::span<const DialogueExample> dialogues, std::size_t max_size);

/// Standard/V2/V3 put every pair of a dialogue in one sequence; SingleRelation
/// makes one sequence per pair.
PreparedData prepare_data(std::span<const DialogueExample> dialogues, const Vocab& vocab, BrsVariant variant,
                          std::size_t max_seq_len);

/// Groups whole dialogues into batches of `batch_size`, shuffled when `shuffle` is given.
std::vector<std::vector<std::size_t>> make_batches(const PreparedData& data, std::size_t batch_size, Rng* shuffle);

PaddedBatch collate(const PreparedData& data, std::span<const std::size_t> sequence_indices);

}  // namespace relgate
