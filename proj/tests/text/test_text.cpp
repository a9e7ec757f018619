#include <algorithm>
#include <random>

#include "doctest.h"
#include "relgate/core/errors.hpp"
#include "relgate/text/brs.hpp"
#include "relgate/text/tokenizer.hpp"
#include "relgate/text/vocab.hpp"
#include "support/brs_oracle.hpp"

using namespace relgate;

namespace {

using Tokens = std::vector<std::string>;

Vocab small_vocab() {
  std::vector<Tokens> corpus{{"hello", "monica", "s2", "richard", "monica", "s2", "s1", "!"}};
  return Vocab::build(corpus, 100);
}

std::size_t count_id(const BrsSequence& s, TokenId id) {
  return static_cast<std::size_t>(std::count(s.token_ids.begin(), s.token_ids.end(), id));
}

}  // namespace

TEST_CASE("vocab frequency order") {
  std::vector<Tokens> corpus{{"a", "a", "b"}};
  auto v = Vocab::build(corpus, 6);
  CHECK(v.size() == 6);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK(v.id("[PAD]") == 0);
  CHECK(v.id("[UNK]") == 1);
  CHECK(v.id("[CLS]") == 2);
  CHECK(v.id("[SEP]") == 3);
  CHECK(v.id("never") == kUnkId);
}

TEST_CASE("vocab ties are lexicographic and size is capped") {
  std::vector<Tokens> corpus{{"zeta", "beta", "alpha", "beta", "gamma"}};
  auto v = Vocab::build(corpus, 6);
  CHECK(v.tokens() == Tokens{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "beta", "alpha"});
  CHECK(v.id("gamma") == kUnkId);
  CHECK(Vocab::build(corpus, 6) == v);
  CHECK(Vocab::from_tokens(v.tokens()) == v);
}

TEST_CASE("vocab errors") {
  std::vector<Tokens> corpus{{"a"}};
  CHECK_THROWS_AS(Vocab::build(corpus, 4), ConfigError);
  std::vector<Tokens> empty;
  CHECK_THROWS_AS(Vocab::build(empty, 10), DataError);
  std::vector<Tokens> blank{{}, {}};
  CHECK_THROWS_AS(Vocab::build(blank, 10), DataError);
  CHECK_THROWS_AS(Vocab::from_tokens({"[PAD]", "x"}), DataError);
}

TEST_CASE("tokenize") {
  CHECK(tokenize("Where the hell") == Tokens{"where", "the", "hell"});
  CHECK(tokenize("marry her!") == Tokens{"marry", "her", "!"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("S1: Richard told Monica") == Tokens{"s1", ":", "richard", "told", "monica"});
  CHECK(tokenize("  tabs\tand\nnewlines  ") == Tokens{"tabs", "and", "newlines"});
  CHECK(tokenize("What?!") == Tokens{"what", "?", "!"});
}

TEST_CASE("tokenize handles unicode") {
  // no-break space and ideographic space separate words
  CHECK(tokenize("a b　c") == Tokens{"a", "b", "c"});
  CHECK(tokenize("I’ve") == Tokens{"i", "’", "ve"});
  CHECK(tokenize("ÉCOLE") == Tokens{"école"});
  CHECK(tokenize("你好啊") == Tokens{"你", "好", "啊"});
  CHECK(tokenize("My…Oh") == Tokens{"my", "…", "oh"});
}

TEST_CASE("single pair layout") {
  auto v = small_vocab();
  Tokens x{"hello"};
  std::vector<EntityPair> pairs{{{"monica"}, {"s2"}}};
  auto s = build_brs(v, x, pairs, BrsVariant::SingleRelation, 64);
  CHECK(s.tokens == Tokens{"[CLS]", "hello", "[SEP]", "monica", "[CLS]", "s2", "[SEP]"});
  CHECK(s.token_ids == std::vector<TokenId>{kClsId, v.id("hello"), kSepId, v.id("monica"), kClsId, v.id("s2"), kSepId});
  CHECK(s.relation_cls_pos == std::vector<std::size_t>{4});
  CHECK(s.global_cls_pos == 0);
  CHECK(s.segment_ids == std::vector<std::int64_t>{0, 0, 0, 1, 1, 1, 1});
  CHECK_FALSE(s.truncated);
  CHECK(s.attention_len == 7);
  CHECK(build_brs(v, x, pairs, BrsVariant::Standard, 64).tokens == s.tokens);
}

TEST_CASE("two dialogue pairs") {
  auto v = small_vocab();
  Tokens x = {"s1", ":", "richard", "told", "monica"};
  std::vector<EntityPair> pairs{{{"monica"}, {"s2"}}, {{"richard"}, {"monica"}}};
  auto s = build_brs(v, x, pairs, BrsVariant::Standard, 64);
  CHECK(count_id(s, kClsId) == 3);
  CHECK(count_id(s, kSepId) == 3);
  REQUIRE(s.relation_cls_pos.size() == 2);
  CHECK(s.relation_cls_pos[0] < s.relation_cls_pos[1]);
  CHECK(s.token_ids.front() == kClsId);
  CHECK(s.token_ids.back() == kSepId);
  CHECK(s.token_ids[1] == v.id("s1"));
  CHECK(s.token_ids[2] == kUnkId);
  CHECK(s.token_ids[4] == kUnkId);
  CHECK(s.tokens[4] == "told");
}

TEST_CASE("variant layouts") {
  auto v = small_vocab();
  Tokens x{"hello"};
  std::vector<EntityPair> pairs{{{"monica"}, {"s2"}}, {{"richard"}, {"s1"}}};
  auto v2 = build_brs(v, x, pairs, BrsVariant::V2, 64);
  CHECK(v2.tokens == Tokens{"[CLS]", "hello", "[CLS]", "monica", "[SEP]", "s2", "[CLS]", "richard", "[SEP]", "s1",
                            "[SEP]"});
  CHECK(v2.relation_cls_pos == std::vector<std::size_t>{2, 6});
  CHECK(v2.segment_ids[1] == 0);
  CHECK(v2.segment_ids[2] == 1);
  auto v3 = build_brs(v, x, pairs, BrsVariant::V3, 64);
  CHECK(v3.tokens == Tokens{"[CLS]", "hello", "[SEP]", "monica", "[SEP]", "s2", "[CLS]", "richard", "[SEP]", "s1",
                            "[CLS]"});
  CHECK(v3.relation_cls_pos == std::vector<std::size_t>{6, 10});
}

TEST_CASE("truncation trims only the dialogue") {
  auto v = small_vocab();
  Tokens x(20, "hello");
  std::vector<EntityPair> pairs{{{"monica"}, {"s2"}}};
  auto s = build_brs(v, x, pairs, BrsVariant::Standard, 10);
  CHECK(s.size() == 10);
  CHECK(s.truncated);
  CHECK(s.kept_text_tokens == 4);
  CHECK(s.tokens[s.relation_cls_pos[0] - 1] == "monica");
  CHECK(s.tokens[s.relation_cls_pos[0] + 1] == "s2");

  auto exact = build_brs(v, Tokens(4, "hello"), pairs, BrsVariant::Standard, 10);
  CHECK_FALSE(exact.truncated);
}

TEST_CASE("build_brs errors") {
  auto v = small_vocab();
  Tokens x{"hello"};
  std::vector<EntityPair> none;
  CHECK_THROWS_AS(build_brs(v, x, none, BrsVariant::Standard, 64), ContractError);
  std::vector<EntityPair> empty_entity{{{}, {"s2"}}};
  CHECK_THROWS_AS(build_brs(v, x, empty_entity, BrsVariant::Standard, 64), ContractError);
  std::vector<EntityPair> two{{{"a"}, {"b"}}, {{"c"}, {"d"}}};
  CHECK_THROWS_AS(build_brs(v, x, two, BrsVariant::SingleRelation, 64), ContractError);
  // tail alone: 2 + (1+1+2)*2 = 10 tokens
  CHECK_THROWS_AS(build_brs(v, x, two, BrsVariant::Standard, 9), ContractError);
  CHECK_NOTHROW(build_brs(v, x, two, BrsVariant::Standard, 10));
  CHECK_THROWS_AS(parse_brs_variant("v4"), ConfigError);
  CHECK(parse_brs_variant("V3") == BrsVariant::V3);
}

TEST_CASE("brs matches the brute-force layout oracle") {
  auto v = small_vocab();
  std::mt19937_64 rng(99);
  for (auto variant : {BrsVariant::Standard, BrsVariant::V2, BrsVariant::V3, BrsVariant::SingleRelation}) {
    for (int trial = 0; trial < 300; ++trial) {
      auto inst = oracle::random_brs_instance(rng, variant == BrsVariant::SingleRelation ? 1 : 4);
      const std::size_t max_len = std::uniform_int_distribution<std::size_t>(30, 80)(rng);
      if (oracle::brs_length(0, inst.pairs) > max_len) {
        CHECK_THROWS_AS(build_brs(v, inst.text, inst.pairs, variant, max_len), ContractError);
        continue;
      }
      auto s = build_brs(v, inst.text, inst.pairs, variant, max_len);
      auto expect = oracle::brute_force_brs(inst.text, inst.pairs, variant, max_len);
      CHECK(s.tokens == expect.tokens);
      CHECK(s.relation_cls_pos == expect.relation_cls);
      CHECK(s.size() == oracle::brs_length(s.kept_text_tokens, inst.pairs));
      CHECK(s.truncated == (expect.kept_text < inst.text.size()));
      const std::size_t n = inst.pairs.size();
      CHECK(count_id(s, kClsId) == n + 1);
      CHECK(count_id(s, kSepId) == n + 1);
      for (auto p : s.relation_cls_pos) CHECK(s.token_ids[p] == kClsId);
    }
  }
}

TEST_CASE("entities are recoverable around each relation token") {
  auto v = small_vocab();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = oracle::random_brs_instance(rng, 3);
    auto s = build_brs(v, inst.text, inst.pairs, BrsVariant::Standard, 512);
    REQUIRE_FALSE(s.truncated);
    for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
      const auto p = s.relation_cls_pos[i];
      // walk left to the previous [SEP], right to the next [SEP]
      std::size_t l = p;
      while (s.token_ids[l - 1] != kSepId) --l;
      std::size_t r = p + 1;
      while (s.token_ids[r] != kSepId) ++r;
      Tokens subject(s.tokens.begin() + l, s.tokens.begin() + p);
      Tokens object(s.tokens.begin() + p + 1, s.tokens.begin() + r);
      CHECK(subject == inst.pairs[i].subject);
      CHECK(object == inst.pairs[i].object);
    }
  }
}

TEST_CASE("pad_batch") {
  auto v = small_vocab();
  std::vector<EntityPair> one{{{"monica"}, {"s2"}}};
  // lengths 3 and 5 are not reachable with BRS, so shape them by hand
  BrsSequence a, b;
  a.token_ids = {kClsId, 5, kSepId};
  a.segment_ids = {0, 0, 0};
  b.token_ids = {kClsId, 5, 6, 7, kSepId};
  b.segment_ids = {0, 0, 0, 1, 1};
  std::vector<BrsSequence> seqs{a, b};
  auto batch = pad_batch(seqs, 5);
  CHECK(batch.mask == std::vector<std::uint8_t>{1, 1, 1, 0, 0, 1, 1, 1, 1, 1});
  CHECK(batch.ids[3] == kPadId);

  auto single = build_brs(v, Tokens{"hello"}, one, BrsVariant::Standard, 32);
  std::vector<BrsSequence> just_one{single};
  auto same = pad_batch(just_one, single.size());
  CHECK(same.ids == single.token_ids);
  CHECK(same.relation_positions[0] == single.relation_cls_pos);

  CHECK_THROWS_AS(pad_batch(seqs, 4), ContractError);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BrsSequence> batch_seqs;
    std::size_t longest = 0;
    for (int k = 0; k < 4; ++k) {
      auto inst = oracle::random_brs_instance(rng, 3);
      batch_seqs.push_back(build_brs(v, inst.text, inst.pairs, BrsVariant::Standard, 256));
      longest = std::max(longest, batch_seqs.back().size());
    }
    auto pb = pad_batch(batch_seqs, longest + 3);
    for (std::size_t r = 0; r < batch_seqs.size(); ++r) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < pb.seq_len; ++c) total += pb.mask[r * pb.seq_len + c];
      CHECK(total == batch_seqs[r].size());
    }
  }
}
