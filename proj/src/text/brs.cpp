#include "relgate/text/brs.hpp"

#include <algorithm>
#include <cctype>

#include "relgate/core/errors.hpp"

namespace relgate {

std::string_view to_string(BrsVariant variant) {
  switch (variant) {
    case BrsVariant::Standard: return "standard";
    case BrsVariant::V2: return "v2";
    case BrsVariant::V3: return "v3";
    case BrsVariant::SingleRelation: return "single";
  }
  return "unknown";
}

BrsVariant parse_brs_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "standard") return BrsVariant::Standard;
  if (lower == "v2") return BrsVariant::V2;
  if (lower == "v3") return BrsVariant::V3;
  if (lower == "single" || lower == "singlerelation") return BrsVariant::SingleRelation;
  throw ConfigError("unknown BRS variant '" + std::string(name) + "' (expected standard, v2, v3, single)");
}

namespace {

class SequenceWriter {
 public:
  explicit SequenceWriter(const Vocab& vocab, BrsSequence& seq) : vocab_(vocab), seq_(seq) {}

  void token(const std::string& tok, std::int64_t segment) {
    seq_.token_ids.push_back(vocab_.id(tok));
    seq_.tokens.push_back(tok);
    seq_.segment_ids.push_back(segment);
  }
  void special(TokenId id, std::string_view text, std::int64_t segment) {
    seq_.token_ids.push_back(id);
    seq_.tokens.emplace_back(text);
    seq_.segment_ids.push_back(segment);
  }
  void cls(std::int64_t segment) { special(kClsId, kClsToken, segment); }
  void sep(std::int64_t segment) { special(kSepId, kSepToken, segment); }
  void relation_cls() {
    seq_.relation_cls_pos.push_back(seq_.token_ids.size());
    cls(1);
  }
  void span(const std::vector<std::string>& toks, std::int64_t segment) {
    for (const auto& t : toks) token(t, segment);
  }

 private:
  const Vocab& vocab_;
  BrsSequence& seq_;
};

}  // namespace

BrsSequence build_brs(const Vocab& vocab, std::span<const std::string> dialogue_tokens,
                      std::span<const EntityPair> pairs, BrsVariant variant, std::size_t max_seq_len) {
  if (pairs.empty()) throw ContractError("build_brs: no entity pairs");
  if (variant == BrsVariant::SingleRelation && pairs.size() != 1) {
    throw ContractError("build_brs: single-relation layout needs exactly one pair, got " +
                        std::to_string(pairs.size()));
  }
  std::size_t fixed = 2;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].subject.empty() || pairs[i].object.empty()) {
      throw ContractError("build_brs: pair " + std::to_string(i) + " has an empty entity");
    }
    fixed += pairs[i].subject.size() + pairs[i].object.size() + 2;
  }
  if (fixed > max_seq_len) {
    throw ContractError("build_brs: entity tail needs " + std::to_string(fixed) + " tokens but max_seq_len is " +
                        std::to_string(max_seq_len));
  }
  const std::size_t kept = std::min(dialogue_tokens.size(), max_seq_len - fixed);

  BrsSequence seq;
  seq.variant = variant;
  seq.kept_text_tokens = kept;
  seq.truncated = kept < dialogue_tokens.size();
  seq.token_ids.reserve(fixed + kept);

  SequenceWriter w(vocab, seq);
  w.cls(0);
  for (std::size_t t = 0; t < kept; ++t) w.token(dialogue_tokens[t], 0);
  switch (variant) {
    case BrsVariant::Standard:
    case BrsVariant::SingleRelation:
      w.sep(0);
      for (const auto& p : pairs) {
        w.span(p.subject, 1);
        w.relation_cls();
        w.span(p.object, 1);
        w.sep(1);
      }
      break;
    case BrsVariant::V2:
      for (const auto& p : pairs) {
        w.relation_cls();
        w.span(p.subject, 1);
        w.sep(1);
        w.span(p.object, 1);
      }
      w.sep(1);
      break;
    case BrsVariant::V3:
      w.sep(0);
      for (const auto& p : pairs) {
        w.span(p.subject, 1);
        w.sep(1);
        w.span(p.object, 1);
        w.relation_cls();
      }
      break;
  }
  seq.attention_len = seq.token_ids.size();
  return seq;
}

PaddedBatch pad_batch(std::span<const BrsSequence> sequences, std::size_t max_len) {
  PaddedBatch out;
  out.batch = sequences.size();
  out.seq_len = max_len;
  out.ids.assign(out.batch * max_len, kPadId);
  out.segments.assign(out.batch * max_len, 0);
  out.mask.assign(out.batch * max_len, 0);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    const auto& s = sequences[b];
    if (s.size() > max_len) {
      throw ContractError("pad_batch: sequence " + std::to_string(b) + " has " + std::to_string(s.size()) +
                          " tokens, more than " + std::to_string(max_len));
    }
    std::copy(s.token_ids.begin(), s.token_ids.end(), out.ids.begin() + b * max_len);
    std::copy(s.segment_ids.begin(), s.segment_ids.end(), out.segments.begin() + b * max_len);
    std::fill_n(out.mask.begin() + b * max_len, s.size(), 1);
    out.relation_positions.push_back(s.relation_cls_pos);
  }
  return out;
}

}  // namespace relgate
