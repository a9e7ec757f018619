#include "relgate/harness/train.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "relgate/core/adam.hpp"
#include "relgate/core/autograd.hpp"
#include "relgate/core/errors.hpp"
#include "relgate/harness/evaluate.hpp"
#include "relgate/harness/pipeline.hpp"

namespace relgate {

namespace {

// Independent streams for shuffling and dropout, both derived from the run seed.
constexpr std::uint64_t kShuffleStream = 0x53485546464c45ULL;
constexpr std::uint64_t kDropoutStream = 0x44524f504f5554ULL;

}  // namespace

std::string format_epoch_metrics(const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch}, {"loss", m.loss}, {"steps", m.steps}, {"seconds", m.seconds}};
  j["train_f1"] = m.train_f1 ? nlohmann::json(*m.train_f1) : nlohmann::json();
  j["dev_f1"] = m.dev_f1 ? nlohmann::json(*m.dev_f1) : nlohmann::json();
  return j.dump();
}

TrainResult train(const RunConfig& config, const Corpus& train_corpus, const Corpus* dev,
                  const std::function<bool(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (train_corpus.dialogues.empty()) throw DataError("training corpus is empty");
  validate_corpus(train_corpus.dialogues, train_corpus.labels.size());
  if (dev && !(dev->labels == train_corpus.labels)) throw ConfigError("label-map mismatch between train and dev");

  Vocab vocab = build_corpus_vocab(train_corpus.dialogues, config.max_vocab);
  TrainResult result{make_bundle(config, std::move(vocab), train_corpus.labels), {}, 0};
  ModelBundle& bundle = result.bundle;
  const RunConfig& cfg = bundle.config;

  // Surfaces oversize tails and bad positions as errors before any step.
  const PreparedData data = prepare_data(train_corpus.dialogues, bundle.vocab, cfg.variant, cfg.encoder.max_seq_len);
  std::optional<PreparedData> dev_data;
  if (dev) dev_data = prepare_data(dev->dialogues, bundle.vocab, cfg.variant, cfg.encoder.max_seq_len);

  auto params_named = bundle.model.parameters();
  std::vector<Tensor> params;
  for (auto& p : params_named) params.push_back(p.tensor);
  AdamOptions adam_options;
  adam_options.learning_rate = cfg.learning_rate;
  AdamState adam(adam_options, params);
  Rng shuffle_rng(cfg.seed ^ kShuffleStream);
  Rng dropout_rng(cfg.seed ^ kDropoutStream);

  const std::filesystem::path out_dir = cfg.output_dir;
  std::ofstream metrics_out;
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    metrics_out.open(out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics_out) throw DataError("cannot write " + (out_dir / "metrics.jsonl").string());
  }

  double best_score = -1.0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch;
    double loss_total = 0.0;
    for (const auto& batch_indices : make_batches(data, cfg.batch_size, &shuffle_rng)) {
      const PaddedBatch batch = collate(data, batch_indices);
      std::vector<std::vector<std::size_t>> gold;
      for (auto s : batch_indices)
        for (const auto& g : data.sequences[s].gold) gold.push_back(g);

      for (auto& p : params) p.zero_grad();
      Tape::current().clear();
      const ModelOutput out = bundle.model.forward(batch, cfg.encoder.dropout > 0.0 ? &dropout_rng : nullptr);
      Tensor loss = relation_loss(out.logits, gold, cfg.gate);
      loss_total += loss.item();
      backward(loss);
      adam_step(params, adam);
      ++m.steps;
    }
    m.loss = loss_total / static_cast<double>(m.steps);
    if (cfg.eval_train_each_epoch || cfg.stop_at_train_f1 > 0.0) {
      m.train_f1 = evaluate_prepared(bundle, data, cfg.gate, cfg.threads).f1.total.f1();
    }
    if (dev_data) m.dev_f1 = evaluate_prepared(bundle, *dev_data, cfg.gate, cfg.threads).f1.total.f1();
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // Higher is better; loss is negated when no F1 is available.
    const double score = m.dev_f1 ? *m.dev_f1 : m.train_f1 ? *m.train_f1 : -m.loss;
    const bool improved = epoch == 1 || score > best_score;
    if (improved) {
      best_score = score;
      result.best_epoch = epoch;
    }
    if (!cfg.output_dir.empty()) {
      save_bundle(out_dir / "last.rgt", bundle);
      if (improved) save_bundle(out_dir / "best.rgt", bundle);
      metrics_out << format_epoch_metrics(m) << "\n" << std::flush;
    }
    result.epochs.push_back(m);
    bool keep_going = true;
    if (on_epoch) keep_going = on_epoch(m);
    if (cfg.stop_at_train_f1 > 0.0 && m.train_f1 && *m.train_f1 >= cfg.stop_at_train_f1) keep_going = false;
    if (!keep_going) break;
  }
  return result;
}

}  // namespace relgate
