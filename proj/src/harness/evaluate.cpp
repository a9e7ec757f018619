#include "relgate/harness/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <exception>
#include <thread>

#include <json.hpp>

#include "relgate/core/autograd.hpp"
#include "relgate/core/errors.hpp"

namespace relgate {

using nlohmann::json;

namespace {

struct BatchResult {
  std::vector<EvalRecord> records;
};

// Runs `work(batch_index, model)` for every batch, contiguous shards per worker.
template <typename Result, typename Work>
std::vector<Result> run_sharded(const ModelBundle& bundle, std::size_t num_batches, std::size_t threads, Work work) {
  std::vector<Result> results(num_batches);
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, num_batches));
  if (workers == 1) {
    NoGradGuard no_grad;
    for (std::size_t b = 0; b < num_batches; ++b) results[b] = work(b, bundle.model);
    return results;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        NoGradGuard no_grad;
        const RelationModel replica = bundle.model.clone();
        const std::size_t begin = num_batches * w / workers, end = num_batches * (w + 1) / workers;
        for (std::size_t b = begin; b < end; ++b) results[b] = work(b, replica);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

EvalReport summarize(std::vector<EvalRecord> records, const ModelBundle& bundle) {
  EvalReport report;
  std::vector<std::vector<std::size_t>> predicted, gold;
  double total_iterations = 0.0;
  for (const auto& r : records) {
    predicted.push_back(r.predicted);
    gold.push_back(r.gold);
    ++report.exit_histogram[r.trace.iterations_used];
    total_iterations += static_cast<double>(r.trace.iterations_used);
  }
  report.f1 = micro_f1(predicted, gold, bundle.labels.no_relation_id());
  report.mean_iterations = records.empty() ? 0.0 : total_iterations / static_cast<double>(records.size());
  report.records = std::move(records);
  return report;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void check_label_map(const ModelBundle& bundle, const LabelMap& corpus_labels) {
  if (!(bundle.labels == corpus_labels)) {
    throw ConfigError("label-map mismatch: checkpoint has " + std::to_string(bundle.labels.size()) +
                      " relations, corpus has " + std::to_string(corpus_labels.size()) +
                      " (names, order or no-relation label differ)");
  }
}

EvalReport evaluate_prepared(const ModelBundle& bundle, const PreparedData& data, const GateConfig& gate,
                             std::size_t threads) {
  const auto batches = make_batches(data, bundle.config.batch_size, nullptr);
  auto results = run_sharded<BatchResult>(bundle, batches.size(), threads, [&](std::size_t b, const RelationModel& m) {
    const PaddedBatch batch = collate(data, batches[b]);
    const ModelOutput out = m.gate_batch(batch, m.encode(batch, nullptr), gate);
    BatchResult result;
    std::size_t k = 0;
    for (auto s : batches[b]) {
      const auto& seq = data.sequences[s];
      for (std::size_t slot = 0; slot < seq.pairs.size(); ++slot, ++k) {
        EvalRecord rec;
        rec.dialogue = seq.dialogue;
        rec.pair = seq.pairs[slot];
        rec.gold = seq.gold[slot];
        rec.trace = out.traces[k];
        rec.predicted = predict(rec.trace.logits, gate);
        result.records.push_back(std::move(rec));
      }
    }
    return result;
  });
  std::vector<EvalRecord> records;
  for (auto& r : results)
    for (auto& rec : r.records) records.push_back(std::move(rec));
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    return std::tie(a.dialogue, a.pair) < std::tie(b.dialogue, b.pair);
  });
  return summarize(std::move(records), bundle);
}

EvalReport evaluate(const ModelBundle& bundle, std::span<const DialogueExample> dialogues, const GateConfig& gate,
                    std::size_t threads) {
  const auto data =
      prepare_data(dialogues, bundle.vocab, bundle.config.variant, bundle.config.encoder.max_seq_len);
  return evaluate_prepared(bundle, data, gate, threads);
}

std::string format_eval_report(const EvalReport& report, const ModelBundle& bundle) {
  auto names = [&](const std::vector<std::size_t>& ids) {
    json out = json::array();
    for (auto id : ids) out.push_back(bundle.labels.name(id));
    return out;
  };
  json per_relation = json::object();
  for (const auto& [id, c] : report.f1.per_relation) {
    per_relation[bundle.labels.name(id)] = {
        {"true_positive", c.true_positive}, {"predicted", c.predicted}, {"gold", c.gold}, {"f1", c.f1()}};
  }
  json histogram = json::object();
  for (const auto& [k, n] : report.exit_histogram) histogram[std::to_string(k)] = n;
  const auto& t = report.f1.total;
  json summary = {{"type", "summary"},
                  {"f1_convention", kF1Convention},
                  {"no_relation", bundle.labels.no_relation_name() ? json(*bundle.labels.no_relation_name()) : json()},
                  {"decision_threshold", bundle.config.gate.decision_threshold},
                  {"tau", bundle.config.gate.tau},
                  {"max_refinements", bundle.config.gate.max_refinements},
                  {"rrg_enabled", bundle.config.gate.rrg_enabled},
                  {"variant", std::string(to_string(bundle.config.variant))},
                  {"precision", t.precision()},
                  {"recall", t.recall()},
                  {"f1", t.f1()},
                  {"true_positive", t.true_positive},
                  {"predicted", t.predicted},
                  {"gold", t.gold},
                  {"decisions", report.records.size()},
                  {"mean_iterations", report.mean_iterations},
                  {"exit_histogram", histogram},
                  {"per_relation", per_relation}};
  std::string out = summary.dump() + "\n";
  for (const auto& r : report.records) {
    json line = {{"type", "decision"},
                 {"dialogue", r.dialogue},
                 {"pair", r.pair},
                 {"gold", names(r.gold)},
                 {"predicted", names(r.predicted)},
                 {"iterations_used", r.trace.iterations_used},
                 {"exited_early", r.trace.exited_early},
                 {"confidences", r.trace.confidences},
                 {"logits", r.trace.logits}};
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<SweepRow> sweep_tau(const ModelBundle& bundle, std::span<const DialogueExample> dialogues,
                                std::span<const double> taus, std::size_t threads) {
  for (double t : taus) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("sweep tau " + format_number(t) + " outside [0, 1]");
  }
  const auto data =
      prepare_data(dialogues, bundle.vocab, bundle.config.variant, bundle.config.encoder.max_seq_len);
  const auto batches = make_batches(data, bundle.config.batch_size, nullptr);
  // results[batch][tau] -> records
  using PerTau = std::vector<std::vector<EvalRecord>>;
  auto results = run_sharded<PerTau>(bundle, batches.size(), threads, [&](std::size_t b, const RelationModel& m) {
    const PaddedBatch batch = collate(data, batches[b]);
    const EncoderOutput encoded = m.encode(batch, nullptr);
    PerTau per_tau;
    for (double tau : taus) {
      GateConfig gate = bundle.config.gate;
      gate.tau = tau;
      const ModelOutput out = m.gate_batch(batch, encoded, gate);
      auto& recs = per_tau.emplace_back();
      std::size_t k = 0;
      for (auto s : batches[b]) {
        const auto& seq = data.sequences[s];
        for (std::size_t slot = 0; slot < seq.pairs.size(); ++slot, ++k) {
          EvalRecord rec;
          rec.dialogue = seq.dialogue;
          rec.pair = seq.pairs[slot];
          rec.gold = seq.gold[slot];
          rec.trace = out.traces[k];
          rec.predicted = predict(rec.trace.logits, gate);
          recs.push_back(std::move(rec));
        }
      }
    }
    return per_tau;
  });
  std::vector<SweepRow> rows;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    std::vector<EvalRecord> records;
    for (auto& r : results)
      for (auto& rec : r[t]) records.push_back(std::move(rec));
    const EvalReport report = summarize(std::move(records), bundle);
    rows.push_back({taus[t], report.f1.total.f1(), report.mean_iterations});
  }
  return rows;
}

std::string format_sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "tau,f1,mean_iterations\n";
  for (const auto& r : rows) {
    out += format_number(r.tau) + "," + format_number(r.f1) + "," + format_number(r.mean_iterations) + "\n";
  }
  return out;
}

}  // namespace relgate
