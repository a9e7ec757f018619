#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace relgate {

using TokenId = std::int64_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::size_t kNumReserved = 4;

/// Token <-> id map. Ids 0..3 are the reserved specials; the rest are assigned
/// by descending corpus frequency, ties broken lexicographically.
class Vocab {
 public:
  /// Builds from tokenized text. Throws ConfigError if `max_size` < 5 and
  /// DataError if the corpus holds no tokens.
  static Vocab build(std::span<const std::vector<std::string>> corpus, std::size_t max_size);
  /// Rebuilds from an id-ordered token list (reserved tokens first).
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  /// [UNK] for unknown tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace relgate
