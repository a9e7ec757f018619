#include "relgate/text/vocab.hpp"

#include <algorithm>
#include <map>

#include "relgate/core/errors.hpp"

namespace relgate {

Vocab Vocab::build(std::span<const std::vector<std::string>> corpus, std::size_t max_size) {
  if (max_size < kNumReserved + 1) {
    throw ConfigError("vocabulary max_size must be at least " + std::to_string(kNumReserved + 1) + ", got " +
                      std::to_string(max_size));
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& stream : corpus) {
    for (const auto& tok : stream) {
      if (tok == kPadToken || tok == kUnkToken || tok == kClsToken || tok == kSepToken) continue;
      ++counts[tok];
    }
  }
  if (counts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
                                  std::string(kSepToken)};
  for (const auto& [tok, count] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved || tokens[kPadId] != kPadToken || tokens[kUnkId] != kUnkToken ||
      tokens[kClsId] != kClsToken || tokens[kSepId] != kSepToken) {
    throw DataError("vocabulary must start with [PAD], [UNK], [CLS], [SEP]");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    auto [it, inserted] = v.ids_.emplace(v.tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw DataError("duplicate vocabulary token '" + v.tokens_[i] + "'");
  }
  return v;
}

TokenId Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

}  // namespace relgate
