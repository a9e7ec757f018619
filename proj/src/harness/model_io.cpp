#include "relgate/harness/model_io.hpp"

#include <string>

#include <json.hpp>

#include "relgate/core/errors.hpp"

namespace relgate {

using nlohmann::json;

namespace {

const std::string kHparamPrefix = "hparam.";

std::vector<std::pair<std::string, double>> hparams(const RunConfig& c) {
  return {
      {"vocab_size", static_cast<double>(c.encoder.vocab_size)},
      {"hidden", static_cast<double>(c.encoder.hidden)},
      {"layers", static_cast<double>(c.encoder.layers)},
      {"heads", static_cast<double>(c.encoder.heads)},
      {"ffn_dim", static_cast<double>(c.encoder.effective_ffn_dim())},
      {"max_seq_len", static_cast<double>(c.encoder.max_seq_len)},
      {"num_relations", static_cast<double>(c.gate.num_relations)},
      {"max_refinements", static_cast<double>(c.gate.max_refinements)},
      {"tau", c.gate.tau},
      {"decision_threshold", c.gate.decision_threshold},
      {"rrg_enabled", c.gate.rrg_enabled ? 1.0 : 0.0},
      {"share_confidence_head", c.gate.share_confidence_head ? 1.0 : 0.0},
      {"task", c.task == Task::DialogueMultiLabel ? 0.0 : 1.0},
      {"variant", static_cast<double>(static_cast<int>(c.variant))},
  };
}

}  // namespace

std::filesystem::path meta_path(const std::filesystem::path& checkpoint) {
  return checkpoint.string() + ".meta.json";
}

ModelBundle make_bundle(RunConfig config, Vocab vocab, LabelMap labels) {
  config.encoder.vocab_size = vocab.size();
  config.gate.num_relations = labels.size();
  config.gate.task = config.task;
  config.validate();
  RelationModel model(ModelConfig{config.encoder, config.gate}, config.seed);
  return ModelBundle{std::move(config), std::move(vocab), std::move(labels), std::move(model)};
}

std::vector<NamedTensor> bundle_records(const ModelBundle& bundle) {
  auto records = snapshot(bundle.model.parameters());
  for (const auto& [name, value] : hparams(bundle.config)) records.push_back({kHparamPrefix + name, {1}, {value}});
  return records;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_checkpoint(path, bundle_records(bundle));

  json config = json::object();
  for (const auto& key : config_keys()) config[key] = bundle.config.get(key);
  json meta = {{"format", "relgate-model"},
               {"version", 1},
               {"config", config},
               {"vocab", bundle.vocab.tokens()},
               {"labels", bundle.labels.names()}};
  if (auto nr = bundle.labels.no_relation_name()) {
    meta["no_relation"] = *nr;
  } else {
    meta["no_relation"] = nullptr;
  }
  write_text_file(meta_path(path), meta.dump(1) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  json meta;
  try {
    meta = json::parse(read_text_file(meta_path(path)));
  } catch (const json::exception& e) {
    throw FormatError("model metadata " + meta_path(path).string() + ": " + e.what());
  }
  if (!meta.is_object() || meta.value("format", "") != "relgate-model" || meta.value("version", 0) != 1) {
    throw FormatError("model metadata " + meta_path(path).string() + " has an unknown format");
  }
  RunConfig config;
  std::vector<std::string> vocab_tokens, label_names;
  std::optional<std::string> no_relation;
  try {
    for (const auto& [key, value] : meta.at("config").items()) config.set(key, value.get<std::string>());
    vocab_tokens = meta.at("vocab").get<std::vector<std::string>>();
    label_names = meta.at("labels").get<std::vector<std::string>>();
    if (meta.at("no_relation").is_string()) no_relation = meta["no_relation"].get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError("model metadata " + meta_path(path).string() + ": " + e.what());
  }

  ModelBundle bundle = make_bundle(config, Vocab::from_tokens(std::move(vocab_tokens)),
                                   LabelMap(std::move(label_names), no_relation));
  const auto records = load_checkpoint(path);
  std::vector<NamedTensor> params;
  std::map<std::string, double> stored;
  for (const auto& r : records) {
    if (r.name.rfind(kHparamPrefix, 0) == 0) {
      if (r.data.size() != 1) throw FormatError("hyperparameter record " + r.name + " is not a scalar");
      stored[r.name.substr(kHparamPrefix.size())] = r.data[0];
    } else {
      params.push_back(r);
    }
  }
  for (const auto& [name, value] : hparams(bundle.config)) {
    auto it = stored.find(name);
    if (it == stored.end()) throw FormatError("checkpoint lacks hyperparameter " + name);
    if (it->second != value) {
      throw FormatError("checkpoint hyperparameter " + name + " = " + std::to_string(it->second) +
                        " disagrees with metadata " + std::to_string(value));
    }
  }
  const auto model_params = bundle.model.parameters();
  if (params.size() != model_params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(params.size()) + " parameters, model expects " +
                      std::to_string(model_params.size()));
  }
  restore(model_params, params);
  return bundle;
}

}  // namespace relgate
