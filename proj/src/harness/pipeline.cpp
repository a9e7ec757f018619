#include "relgate/harness/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "relgate/core/errors.hpp"
#include "relgate/text/tokenizer.hpp"

namespace relgate {

std::size_t PreparedData::num_relations() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.pairs.size();
  return n;
}

std::vector<std::string> dialogue_tokens(const DialogueExample& dialogue) {
  std::vector<std::string> out;
  for (const auto& u : dialogue.utterances) {
    auto t = tokenize(u);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

Vocab build_corpus_vocab(std::span<const DialogueExample> dialogues, std::size_t max_size) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& d : dialogues) {
    streams.push_back(dialogue_tokens(d));
    for (const auto& r : d.relations) {
      streams.push_back(tokenize(r.subject));
      streams.push_back(tokenize(r.object));
    }
  }
  return Vocab::build(streams, max_size);
}

PreparedData prepare_data(std::span<const DialogueExample> dialogues, const Vocab& vocab, BrsVariant variant,
                          std::size_t max_seq_len) {
  PreparedData data;
  for (std::size_t d = 0; d < dialogues.size(); ++d) {
    const auto& dialogue = dialogues[d];
    const auto tokens = dialogue_tokens(dialogue);
    std::vector<EntityPair> pairs;
    for (const auto& r : dialogue.relations) pairs.push_back({tokenize(r.subject), tokenize(r.object)});

    std::vector<std::vector<std::size_t>> groups;
    if (variant == BrsVariant::SingleRelation) {
      for (std::size_t p = 0; p < pairs.size(); ++p) groups.push_back({p});
    } else {
      groups.emplace_back(pairs.size());
      std::iota(groups.back().begin(), groups.back().end(), 0);
    }
    auto& index = data.by_dialogue.emplace_back();
    for (const auto& group : groups) {
      std::vector<EntityPair> subset;
      PreparedSequence seq;
      seq.dialogue = d;
      seq.pairs = group;
      for (auto p : group) {
        subset.push_back(pairs[p]);
        seq.gold.push_back(dialogue.relations[p].labels);
      }
      try {
        seq.sequence = build_brs(vocab, tokens, subset, variant, max_seq_len);
      } catch (const ContractError& e) {
        throw DataError("dialogue " + std::to_string(d) + ": " + e.what());
      }
      index.push_back(data.sequences.size());
      data.sequences.push_back(std::move(seq));
    }
  }
  return data;
}

std::vector<std::vector<std::size_t>> make_batches(const PreparedData& data, std::size_t batch_size, Rng* shuffle) {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  std::vector<std::size_t> order(data.by_dialogue.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) shuffle->shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    auto& batch = batches.emplace_back();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
      const auto& seqs = data.by_dialogue[order[i]];
      batch.insert(batch.end(), seqs.begin(), seqs.end());
    }
  }
  return batches;
}

PaddedBatch collate(const PreparedData& data, std::span<const std::size_t> sequence_indices) {
  std::vector<BrsSequence> seqs;
  std::size_t longest = 0;
  for (auto i : sequence_indices) {
    seqs.push_back(data.sequences.at(i).sequence);
    longest = std::max(longest, seqs.back().size());
  }
  return pad_batch(seqs, longest);
}

}  // namespace relgate
