#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relgate/data/dataset.hpp"
#include "relgate/data/synthetic.hpp"
#include "relgate/model/encoder.hpp"
#include "relgate/model/gate.hpp"
#include "relgate/text/brs.hpp"

namespace relgate {

enum class DataFormat { Corpus, Dialogre, Tacred };

/// Everything a run needs. Every field has a flat config key; see `config_keys()`.
struct RunConfig {
  Task task = Task::DialogueMultiLabel;
  BrsVariant variant = BrsVariant::Standard;
  EncoderConfig encoder;  // vocab_size is filled in from the training data
  GateConfig gate;        // num_relations is filled in from the label map

  std::size_t batch_size = 6;
  std::size_t epochs = 20;
  double learning_rate = 3e-4;
  std::uint64_t seed = 1;
  std::size_t max_vocab = 30000;
  std::size_t threads = 1;
  bool eval_train_each_epoch = true;
  double stop_at_train_f1 = 0.0;  // 0 disables early stopping

  DataFormat data_format = DataFormat::Corpus;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string labels_path;
  std::string no_relation_label;  // empty: "unanswerable" / "no_relation" when present
  std::string output_dir = "runs/default";
  std::string checkpoint;  // empty: <output_dir>/best.rgt
  std::string report_path;
  std::string sweep_output;
  std::vector<double> sweep_values{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

  DialogreSchema dialogre;
  TacredSchema tacred;
  SyntheticOptions synthetic;

  /// Throws ConfigError naming the offending key.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// key=value lines in key-table order; parse_config_text of it round-trips.
  std::string to_text() const;
  /// Checks ranges that do not depend on the data.
  void validate() const;

  std::filesystem::path checkpoint_path() const;
};

const std::vector<std::string>& config_keys();

/// Flat key=value text; '#' starts a comment line. Throws ConfigError with the line number.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies, in order: `file_entries`, RELGATE_SEED (when `env_seed` is non-null), `overrides`.
RunConfig resolve_config(const std::map<std::string, std::string>& file_entries, const char* env_seed,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

std::string_view to_string(Task task);
std::string_view to_string(DataFormat format);

}  // namespace relgate
