#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relgate/harness/metrics.hpp"
#include "relgate/harness/model_io.hpp"
#include "relgate/harness/pipeline.hpp"

namespace relgate {

/// One decision: a (dialogue, pair) with its prediction and gate trace.
struct EvalRecord {
  std::size_t dialogue = 0;
  std::size_t pair = 0;
  std::vector<std::size_t> gold;
  std::vector<std::size_t> predicted;
  GateTrace trace;
};

struct EvalReport {
  MicroF1 f1;
  std::vector<EvalRecord> records;             // corpus order
  std::map<std::size_t, std::size_t> exit_histogram;  // iterations_used -> count
  double mean_iterations = 0.0;
};

inline constexpr const char* kF1Convention =
    "micro-F1 over (pair, relation) tuples; the no-relation label is excluded from predicted and gold tuples; "
    "multi-label decisions are sigmoid(logit) > decision_threshold, single-label decisions are the argmax";

/// Throws ConfigError when the corpus label map differs from the bundle's.
void check_label_map(const ModelBundle& bundle, const LabelMap& corpus_labels);

/// Runs the frozen model over every relation of `dialogues` with `gate`.
/// Batches are sharded over `threads` workers, each with its own model copy;
/// the result does not depend on the thread count.
EvalReport evaluate(const ModelBundle& bundle, std::span<const DialogueExample> dialogues, const GateConfig& gate,
                    std::size_t threads = 1);
/// Same, on already prepared sequences.
EvalReport evaluate_prepared(const ModelBundle& bundle, const PreparedData& data, const GateConfig& gate,
                             std::size_t threads = 1);

/// JSON lines: a summary line, then one line per decision.
std::string format_eval_report(const EvalReport& report, const ModelBundle& bundle);

struct SweepRow {
  double tau = 0.0;
  double f1 = 0.0;
  double mean_iterations = 0.0;
};

/// Encodes each batch once and re-runs only the gate for every tau.
std::vector<SweepRow> sweep_tau(const ModelBundle& bundle, std::span<const DialogueExample> dialogues,
                                std::span<const double> taus, std::size_t threads = 1);
/// Header "tau,f1,mean_iterations", one row per tau.
std::string format_sweep_csv(std::span<const SweepRow> rows);

}  // namespace relgate
