#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "relgate/core/autograd.hpp"
#include "relgate/core/errors.hpp"
#include "relgate/core/ops.hpp"
#include "relgate/data/synthetic.hpp"
#include "relgate/harness/config.hpp"
#include "relgate/harness/evaluate.hpp"
#include "relgate/harness/metrics.hpp"
#include "relgate/harness/model_io.hpp"
#include "relgate/harness/pipeline.hpp"
#include "relgate/harness/runs.hpp"
#include "relgate/harness/train.hpp"

using namespace relgate;

namespace {

std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(RELGATE_FIXTURE_DIR) / name;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("relgate_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

// Small, fast configuration for mechanics tests.
RunConfig small_config() {
  RunConfig c;
  c.encoder.hidden = 16;
  c.encoder.layers = 1;
  c.encoder.heads = 2;
  c.encoder.max_seq_len = 128;
  c.batch_size = 4;
  c.epochs = 2;
  c.learning_rate = 1e-3;
  c.output_dir = "";
  c.eval_train_each_epoch = false;
  return c;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("run config defaults") {
  RunConfig c;
  CHECK(c.batch_size == 6);
  CHECK(c.epochs == 20);
  CHECK(c.learning_rate == 3e-4);
  CHECK(c.gate.tau == 0.6);
  CHECK(c.gate.max_refinements == 3);
  CHECK(c.encoder.hidden == 64);
  CHECK(c.variant == BrsVariant::Standard);
  CHECK(c.sweep_values.size() == 7);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text parsing") {
  auto entries = parse_config_text("# comment\n\n epochs = 7 \nvariant=v2\ntau=0.35\n");
  CHECK(entries.size() == 3);
  CHECK(entries.at("epochs") == "7");
  auto c = resolve_config(entries, nullptr, {});
  CHECK(c.epochs == 7);
  CHECK(c.variant == BrsVariant::V2);
  CHECK(c.gate.tau == 0.35);

  CHECK_THROWS_AS(parse_config_text("epochs 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("epochs=1\nepochs=2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("=3\n"), ConfigError);
  try {
    parse_config_text("a=1\nbroken\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("config keys and values") {
  RunConfig c;
  CHECK_THROWS_AS(c.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("epochs", "-1"), ConfigError);
  CHECK_THROWS_AS(c.set("epochs", "3x"), ConfigError);
  CHECK_THROWS_AS(c.set("tau", "abc"), ConfigError);
  CHECK_THROWS_AS(c.set("rrg_enabled", "maybe"), ConfigError);
  CHECK_THROWS_AS(c.set("variant", "v4"), ConfigError);
  CHECK_THROWS_AS(c.set("task", "document"), ConfigError);
  try {
    c.set("batch_size", "six");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
  }
  c.set("rrg_enabled", "no");
  CHECK_FALSE(c.gate.rrg_enabled);
  c.set("sweep_values", "0.3, 0.6,0.9");
  CHECK(c.sweep_values == std::vector<double>{0.3, 0.6, 0.9});
  c.set("data_format", "TACRED");
  CHECK(c.data_format == DataFormat::Tacred);
  c.set("task", "sentence");
  c.set("learning_rate", "0.001");
  c.set("dialogre_relation_field", "rel");

  // Every key survives a text round trip.
  auto back = resolve_config(parse_config_text(c.to_text()), nullptr, {});
  CHECK(back.to_text() == c.to_text());
  CHECK(config_keys().size() == parse_config_text(c.to_text()).size());
  for (const auto& key : config_keys()) CHECK(back.get(key) == c.get(key));
}

TEST_CASE("config precedence: file, then RELGATE_SEED, then flags") {
  std::map<std::string, std::string> file{{"seed", "5"}, {"epochs", "4"}};
  CHECK(resolve_config(file, nullptr, {}).seed == 5);
  CHECK(resolve_config(file, "", {}).seed == 5);
  CHECK(resolve_config(file, "11", {}).seed == 11);
  CHECK(resolve_config(file, "11", {{"seed", "12"}}).seed == 12);
  CHECK(resolve_config(file, nullptr, {{"epochs", "9"}}).epochs == 9);
  CHECK_THROWS_AS(resolve_config(file, "eleven", {}), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.encoder.heads = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.sweep_values = {0.5, 1.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.task = Task::SentenceSingleLabel;
  c.variant = BrsVariant::V3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(RunConfig{}.checkpoint_path() == std::filesystem::path("runs/default/best.rgt"));
}

TEST_CASE("micro F1 hand cases") {
  using Sets = std::vector<std::vector<std::size_t>>;
  Sets gold{{3}}, pred{{3, 5}};
  auto m = micro_f1(pred, gold);
  CHECK(m.total.precision() == 0.5);
  CHECK(m.total.recall() == 1.0);
  CHECK(m.total.f1() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  Sets same{{1, 2}, {0}};
  CHECK(micro_f1(same, same).total.f1() == 1.0);

  Sets none{{}, {}};
  auto empty = micro_f1(none, same);
  CHECK(empty.total.f1() == 0.0);
  CHECK(empty.total.precision() == 0.0);
  CHECK(micro_f1(none, none).total.f1() == 0.0);

  Sets with_nr{{0, 2}, {0}}, gold_nr{{2}, {0}};
  auto excl = micro_f1(with_nr, gold_nr, 0);
  CHECK(excl.total == F1Counts{1, 1, 1});
  CHECK(excl.per_relation.count(0) == 0);
  CHECK_THROWS_AS(micro_f1(with_nr, Sets{{1}}), DimensionError);
}

TEST_CASE("micro F1 matches brute-force set arithmetic") {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 12)(gen);
    const std::size_t labels = std::uniform_int_distribution<std::size_t>(1, 6)(gen);
    std::optional<std::size_t> excluded;
    if (gen() % 2) excluded = gen() % labels;
    auto draw = [&] {
      std::vector<std::size_t> v(std::uniform_int_distribution<std::size_t>(0, 4)(gen));
      for (auto& x : v) x = gen() % labels;  // duplicates allowed
      return v;
    };
    std::vector<std::vector<std::size_t>> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = draw();
      gold[i] = draw();
    }
    std::set<std::pair<std::size_t, std::size_t>> p, g, both;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto r : pred[i])
        if (r != excluded) p.insert({i, r});
      for (auto r : gold[i])
        if (r != excluded) g.insert({i, r});
    }
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::inserter(both, both.begin()));
    const auto m = micro_f1(pred, gold, excluded);
    CHECK(m.total.true_positive == both.size());
    CHECK(m.total.predicted == p.size());
    CHECK(m.total.gold == g.size());
    const double prec = p.empty() ? 0.0 : double(both.size()) / double(p.size());
    const double rec = g.empty() ? 0.0 : double(both.size()) / double(g.size());
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    CHECK(m.total.f1() == f1);
  }
}

TEST_CASE("prepared data covers every relation exactly once") {
  auto corpus = generate_synthetic({5, 12, 4, 3});
  auto vocab = build_corpus_vocab(corpus.dialogues, 1000);
  std::size_t total = 0;
  for (const auto& d : corpus.dialogues) total += d.relations.size();

  for (auto variant : {BrsVariant::Standard, BrsVariant::V2, BrsVariant::V3, BrsVariant::SingleRelation}) {
    auto data = prepare_data(corpus.dialogues, vocab, variant, 256);
    CHECK(data.num_relations() == total);
    CHECK(data.by_dialogue.size() == corpus.dialogues.size());
    for (std::size_t d = 0; d < corpus.dialogues.size(); ++d) {
      std::vector<std::size_t> seen;
      for (auto s : data.by_dialogue[d]) {
        CHECK(data.sequences[s].dialogue == d);
        for (auto p : data.sequences[s].pairs) seen.push_back(p);
      }
      std::sort(seen.begin(), seen.end());
      std::vector<std::size_t> expected(corpus.dialogues[d].relations.size());
      for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = i;
      CHECK(seen == expected);
      if (variant == BrsVariant::SingleRelation) {
        CHECK(data.by_dialogue[d].size() == expected.size());
      } else {
        CHECK(data.by_dialogue[d].size() == 1);
      }
    }
    Rng a(3), b(3);
    auto batches = make_batches(data, 5, &a);
    CHECK(batches == make_batches(data, 5, &b));
    std::vector<std::size_t> all;
    for (const auto& batch : batches) all.insert(all.end(), batch.begin(), batch.end());
    std::sort(all.begin(), all.end());
    CHECK(all.size() == data.sequences.size());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
  CHECK_THROWS_AS(prepare_data(corpus.dialogues, vocab, BrsVariant::Standard, 5), DataError);
}

TEST_CASE("dump-brs matches golden files") {
  const Corpus corpus = read_corpus(fixture("tiny_corpus.jsonl"));
  for (const std::string name : {"standard", "v2", "v3", "single"}) {
    RunConfig c;
    c.variant = parse_brs_variant(name);
    CHECK_MESSAGE(dump_brs_lines(corpus, c) == read_lines(fixture("dump_brs_" + name + ".golden.jsonl")), name);
  }
  RunConfig c;
  c.encoder.max_seq_len = 20;
  CHECK(dump_brs_lines(corpus, c) == read_lines(fixture("dump_brs_standard_len20.golden.jsonl")));
}

TEST_CASE("bundle save and load") {
  auto corpus = generate_synthetic({4, 6, 3, 2});
  auto config = small_config();
  config.gate.share_confidence_head = true;
  auto bundle = make_bundle(config, build_corpus_vocab(corpus.dialogues, 1000), corpus.labels);
  CHECK(bundle.config.encoder.vocab_size == bundle.vocab.size());
  CHECK(bundle.config.gate.num_relations == 3);

  auto dir = scratch_dir("bundle");
  save_bundle(dir / "m.rgt", bundle);
  CHECK(std::filesystem::exists(meta_path(dir / "m.rgt")));
  auto loaded = load_bundle(dir / "m.rgt");
  CHECK(bundle_records(loaded) == bundle_records(bundle));
  CHECK(loaded.vocab == bundle.vocab);
  CHECK(loaded.labels == bundle.labels);
  CHECK(loaded.config.to_text() == bundle.config.to_text());

  // Evaluation leaves the checkpoint untouched.
  const auto before = read_text_file(dir / "m.rgt");
  evaluate(loaded, corpus.dialogues, loaded.config.gate);
  CHECK(bundle_records(loaded) == bundle_records(bundle));
  CHECK(read_text_file(dir / "m.rgt") == before);

  // Metadata disagreeing with the tensors is rejected.
  auto meta = read_text_file(meta_path(dir / "m.rgt"));
  const auto pos = meta.find("\"hidden\": \"16\"");
  REQUIRE(pos != std::string::npos);
  write_text_file(meta_path(dir / "m.rgt"), meta.replace(pos, 14, "\"hidden\": \"8\""));
  CHECK_THROWS_AS(load_bundle(dir / "m.rgt"), FormatError);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_bundle(dir / "m.rgt"));
}

TEST_CASE("training is deterministic and learns") {
  auto corpus = generate_synthetic({9, 10, 3, 2});
  auto config = small_config();
  config.epochs = 5;
  auto a = train(config, corpus);
  auto b = train(config, corpus);
  REQUIRE(a.epochs.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) CHECK(a.epochs[e].loss == b.epochs[e].loss);
  CHECK(bundle_records(a.bundle) == bundle_records(b.bundle));
  CHECK(a.epochs[4].loss < a.epochs[0].loss);

  auto other_seed = config;
  other_seed.seed = 2;
  CHECK_FALSE(bundle_records(train(other_seed, corpus).bundle) == bundle_records(a.bundle));
}

TEST_CASE("training writes checkpoints and metrics") {
  auto corpus = generate_synthetic({9, 8, 3, 2});
  auto dev = generate_synthetic({10, 4, 3, 2});
  auto config = small_config();
  config.output_dir = scratch_dir("train_outputs").string();
  config.gate.rrg_enabled = false;
  config.eval_train_each_epoch = true;
  auto result = train(config, corpus, &dev);
  CHECK(result.epochs.size() == 2);
  CHECK(result.epochs[0].train_f1.has_value());
  CHECK(result.epochs[0].dev_f1.has_value());
  CHECK(result.best_epoch >= 1);
  const std::filesystem::path dir = config.output_dir;
  CHECK(read_lines(dir / "metrics.jsonl").size() == 2);
  auto last = load_bundle(dir / "last.rgt");
  CHECK(bundle_records(last) == bundle_records(result.bundle));
  CHECK_FALSE(last.config.gate.rrg_enabled);
  CHECK_NOTHROW(load_bundle(dir / "best.rgt"));
  std::filesystem::remove_all(dir);

  auto stop = small_config();
  stop.epochs = 4;
  std::size_t calls = 0;
  auto early = train(stop, corpus, nullptr, [&](const EpochMetrics&) { return ++calls < 2; });
  CHECK(early.epochs.size() == 2);

  Corpus empty{corpus.labels, {}};
  CHECK_THROWS_AS(train(small_config(), empty), DataError);
  Corpus other_labels{LabelMap({"x"}), {}};
  CHECK_THROWS_AS(train(small_config(), corpus, &other_labels), ConfigError);
}

TEST_CASE("evaluation: one decision per relation, independent of threads") {
  auto corpus = generate_synthetic({12, 9, 4, 3});
  auto bundle = make_bundle(small_config(), build_corpus_vocab(corpus.dialogues, 1000), corpus.labels);
  std::size_t total = 0;
  for (const auto& d : corpus.dialogues) total += d.relations.size();

  auto one = evaluate(bundle, corpus.dialogues, bundle.config.gate, 1);
  auto three = evaluate(bundle, corpus.dialogues, bundle.config.gate, 3);
  CHECK(one.records.size() == total);
  CHECK(format_eval_report(one, bundle) == format_eval_report(three, bundle));

  auto text = format_eval_report(one, bundle);
  std::istringstream in(text);
  std::string first;
  std::getline(in, first);
  CHECK(first.find("\"type\":\"summary\"") != std::string::npos);
  CHECK(first.find("f1_convention") != std::string::npos);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == total + 1);

  auto single = bundle.config;
  single.variant = BrsVariant::SingleRelation;
  auto single_bundle = make_bundle(single, bundle.vocab, bundle.labels);
  CHECK(evaluate(single_bundle, corpus.dialogues, single_bundle.config.gate).records.size() == total);

  CHECK_THROWS_AS(check_label_map(bundle, LabelMap({"a", "b", "c", "d"})), ConfigError);
  CHECK_NOTHROW(check_label_map(bundle, corpus.labels));
}

TEST_CASE("tau sweep") {
  auto corpus = generate_synthetic({13, 8, 4, 3});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto config = small_config();
    config.seed = seed;
    config.encoder.init_stddev = 0.3;  // spread the confidences
    auto bundle = make_bundle(config, build_corpus_vocab(corpus.dialogues, 1000), corpus.labels);
    std::vector<double> taus{0.0, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    auto rows = sweep_tau(bundle, corpus.dialogues, taus, seed % 2 ? 1 : 2);
    REQUIRE(rows.size() == taus.size());
    CHECK(rows.front().mean_iterations == 0.0);
    CHECK(rows.back().mean_iterations == 3.0);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mean_iterations >= rows[i - 1].mean_iterations);

    GateConfig g = bundle.config.gate;
    g.tau = 0.6;
    CHECK(rows[4].f1 == evaluate(bundle, corpus.dialogues, g).f1.total.f1());
    const auto csv = format_sweep_csv(rows);
    CHECK(csv.rfind("tau,f1,mean_iterations\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == taus.size() + 1);
  }
  auto bundle = make_bundle(small_config(), build_corpus_vocab(corpus.dialogues, 1000), corpus.labels);
  std::vector<double> bad{1.5};
  CHECK_THROWS_AS(sweep_tau(bundle, corpus.dialogues, bad), ConfigError);
}

TEST_CASE("gradcheck suite") {
  RunConfig config;
  auto report = run_gradcheck_suite(config);
  MESSAGE(format_gradcheck_report(report));
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-5);

  std::set<std::string> names;
  for (const auto& p : report.params) names.insert(p.name);
  for (const std::string expected : {"encoder.token_embedding", "encoder.layer0.attention.query.weight",
                                     "encoder.layer0.ffn_norm.bias", "gate.confidence.weight", "gate.refine.weight",
                                     "gate.refine.bias", "gate.classifier.bias"}) {
    CHECK_MESSAGE(names.count(expected) == 1, expected);
  }
  CHECK(names.size() == report.params.size());

  GradcheckSuiteOptions corrupt;
  corrupt.logits_hook = [](std::vector<Tensor> logits) {
    for (auto& l : logits) {
      Tensor y = Tensor::from_data(l.shape(), l.to_vector());
      Tensor x = l;
      record_op("corrupt_identity", {x}, y, [x, y]() {
        std::vector<double> g(y.grad().begin(), y.grad().end());
        for (auto& v : g) v *= 1.5;
        x.accumulate_grad(g);
      });
      l = y;
    }
    return logits;
  };
  auto bad = run_gradcheck_suite(config, corrupt);
  CHECK_FALSE(bad.passed);
  CHECK(format_gradcheck_report(bad).find("FAIL") != std::string::npos);
}

TEST_CASE("load_split by format") {
  RunConfig c;
  auto corpus = load_split(c, fixture("tiny_corpus.jsonl"));
  CHECK(corpus.dialogues.size() == 2);
  LabelMap other({"per:friends"});
  CHECK_THROWS_AS(load_split(c, fixture("tiny_corpus.jsonl"), &other), ConfigError);
  CHECK_THROWS_AS(load_split(c, fixture("missing.jsonl")), ConfigError);

  auto dir = scratch_dir("load_split");
  std::filesystem::create_directories(dir);
  write_dialogre(dir / "d.json", corpus.dialogues, corpus.labels);
  c.data_format = DataFormat::Dialogre;
  auto d = load_split(c, dir / "d.json");
  // Collected labels are sorted, so compare by name rather than id.
  REQUIRE(d.dialogues.size() == corpus.dialogues.size());
  for (std::size_t i = 0; i < d.dialogues.size(); ++i) {
    CHECK(d.dialogues[i].utterances == corpus.dialogues[i].utterances);
    REQUIRE(d.dialogues[i].relations.size() == corpus.dialogues[i].relations.size());
    for (std::size_t r = 0; r < d.dialogues[i].relations.size(); ++r) {
      std::set<std::string> got, want;
      for (auto id : d.dialogues[i].relations[r].labels) got.insert(d.labels.name(id));
      for (auto id : corpus.dialogues[i].relations[r].labels) want.insert(corpus.labels.name(id));
      CHECK(got == want);
    }
  }
  CHECK(d.labels.names() == std::vector<std::string>{"per:friends", "per:girl/boyfriend", "per:positive_impression"});

  write_text_file(dir / "labels.txt", "per:friends\nper:girl/boyfriend\nper:positive_impression\nunanswerable\n");
  c.labels_path = (dir / "labels.txt").string();
  auto with_file = load_split(c, dir / "d.json");
  CHECK(with_file.labels.size() == 4);
  CHECK(with_file.labels.no_relation_id() == std::optional<std::size_t>(3));

  c = RunConfig{};
  c.data_format = DataFormat::Tacred;
  c.task = Task::SentenceSingleLabel;
  write_text_file(dir / "t.json", R"([{"token": ["a", "b", "c"], "subj_start": 0, "subj_end": 0, "obj_start": 2,
                                       "obj_end": 2, "relation": "no_relation"}])");
  auto t = load_split(c, dir / "t.json");
  CHECK(t.labels.no_relation_id() == std::optional<std::size_t>(0));
  std::filesystem::remove_all(dir);
}
