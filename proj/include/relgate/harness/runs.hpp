#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relgate/core/gradcheck.hpp"
#include "relgate/data/dataset.hpp"
#include "relgate/harness/config.hpp"

namespace relgate {

/// Label map for a raw split: labels_path when set, else the names found in `path`.
/// The no-relation label is config.no_relation_label, or "unanswerable" /
/// "no_relation" (dialogue / sentence task) when present.
LabelMap resolve_label_map(const RunConfig& config, const std::filesystem::path& path);

/// Loads a split in config.data_format. With `labels` given, raw formats are
/// resolved through it and corpus files must carry an identical map.
Corpus load_split(const RunConfig& config, const std::filesystem::path& path, const LabelMap* labels = nullptr);

struct GradcheckSuiteOptions {
  GradcheckOptions check;
  /// Applied to the gate's logits before the loss; tests use it to plant a wrong backward.
  std::function<std::vector<Tensor>(std::vector<Tensor>)> logits_hook;
};

/// Forces d=8, L=1, H=2, |R|=4, tau=1, no dropout; keeps seed, B, init_stddev,
/// variant and head sharing from `config`. Checks every encoder and gate
/// parameter on one synthetic batch.
GradcheckReport run_gradcheck_suite(const RunConfig& config, const GradcheckSuiteOptions& options = {});

std::string format_gradcheck_report(const GradcheckReport& report);

/// One JSON line per built sequence: dialogue, pairs, variant, tokens,
/// relation_cls_pos, truncated.
std::vector<std::string> dump_brs_lines(const Corpus& corpus, const RunConfig& config);

}  // namespace relgate
