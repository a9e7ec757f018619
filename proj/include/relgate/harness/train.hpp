#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relgate/data/dataset.hpp"
#include "relgate/harness/config.hpp"
#include "relgate/harness/model_io.hpp"

namespace relgate {

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean batch loss
  std::size_t steps = 0;
  std::optional<double> train_f1;
  std::optional<double> dev_f1;
  double seconds = 0.0;  // wall clock; not part of any deterministic output
};

struct TrainResult {
  ModelBundle bundle;  // state after the last epoch
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
};

/// Trains on `train` (and tracks `dev` when non-null). When config.output_dir
/// is non-empty, writes last.rgt every epoch, best.rgt on improvement and
/// metrics.jsonl. `on_epoch` may return false to stop early.
TrainResult train(const RunConfig& config, const Corpus& train, const Corpus* dev = nullptr,
                  const std::function<bool(const EpochMetrics&)>& on_epoch = {});

std::string format_epoch_metrics(const EpochMetrics& m);

}  // namespace relgate
