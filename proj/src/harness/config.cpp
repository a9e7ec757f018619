#include "relgate/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "relgate/core/errors.hpp"

namespace relgate {

namespace {

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const auto v = lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) bad_value(key, value, "a comma-separated list of numbers");
  return out;
}

struct KeyEntry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

KeyEntry size_key(std::string key, std::size_t RunConfig::*field) {
  return {key, [field](const RunConfig& c) { return std::to_string(c.*field); },
          [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_u64(k, v); }};
}

template <typename Owner>
KeyEntry nested_size_key(std::string key, Owner RunConfig::*owner, std::size_t Owner::*field) {
  return {key, [=](const RunConfig& c) { return std::to_string(c.*owner.*field); },
          [=](RunConfig& c, const std::string& k, const std::string& v) { c.*owner.*field = parse_u64(k, v); }};
}

template <typename Owner>
KeyEntry nested_double_key(std::string key, Owner RunConfig::*owner, double Owner::*field) {
  return {key, [=](const RunConfig& c) { return format_double(c.*owner.*field); },
          [=](RunConfig& c, const std::string& k, const std::string& v) { c.*owner.*field = parse_double(k, v); }};
}

template <typename Owner>
KeyEntry nested_bool_key(std::string key, Owner RunConfig::*owner, bool Owner::*field) {
  return {key, [=](const RunConfig& c) { return std::string(c.*owner.*field ? "true" : "false"); },
          [=](RunConfig& c, const std::string& k, const std::string& v) { c.*owner.*field = parse_bool(k, v); }};
}

template <typename Owner>
KeyEntry nested_string_key(std::string key, Owner RunConfig::*owner, std::string Owner::*field) {
  return {key, [=](const RunConfig& c) { return c.*owner.*field; },
          [=](RunConfig& c, const std::string&, const std::string& v) { c.*owner.*field = v; }};
}

KeyEntry string_key(std::string key, std::string RunConfig::*field) {
  return {key, [field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; }};
}

const std::vector<KeyEntry>& key_table() {
  static const std::vector<KeyEntry> table = [] {
    std::vector<KeyEntry> t;
    t.push_back({"task", [](const RunConfig& c) { return std::string(to_string(c.task)); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const auto s = lower(v);
                   if (s == "dialogue") {
                     c.task = Task::DialogueMultiLabel;
                   } else if (s == "sentence") {
                     c.task = Task::SentenceSingleLabel;
                   } else {
                     bad_value(k, v, "dialogue or sentence");
                   }
                 }});
    t.push_back({"variant", [](const RunConfig& c) { return std::string(to_string(c.variant)); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.variant = parse_brs_variant(v);
                   } catch (const ConfigError&) {
                     bad_value(k, v, "standard, v2, v3 or single");
                   }
                 }});
    t.push_back(nested_size_key("hidden", &RunConfig::encoder, &EncoderConfig::hidden));
    t.push_back(nested_size_key("layers", &RunConfig::encoder, &EncoderConfig::layers));
    t.push_back(nested_size_key("heads", &RunConfig::encoder, &EncoderConfig::heads));
    t.push_back(nested_size_key("ffn_dim", &RunConfig::encoder, &EncoderConfig::ffn_dim));
    t.push_back(nested_size_key("max_seq_len", &RunConfig::encoder, &EncoderConfig::max_seq_len));
    t.push_back(nested_double_key("dropout", &RunConfig::encoder, &EncoderConfig::dropout));
    t.push_back(nested_double_key("init_stddev", &RunConfig::encoder, &EncoderConfig::init_stddev));
    t.push_back(nested_double_key("tau", &RunConfig::gate, &GateConfig::tau));
    t.push_back(nested_size_key("max_refinements", &RunConfig::gate, &GateConfig::max_refinements));
    t.push_back(nested_double_key("decision_threshold", &RunConfig::gate, &GateConfig::decision_threshold));
    t.push_back(nested_bool_key("rrg_enabled", &RunConfig::gate, &GateConfig::rrg_enabled));
    t.push_back(nested_bool_key("share_confidence_head", &RunConfig::gate, &GateConfig::share_confidence_head));
    t.push_back(size_key("batch_size", &RunConfig::batch_size));
    t.push_back(size_key("epochs", &RunConfig::epochs));
    t.push_back({"learning_rate", [](const RunConfig& c) { return format_double(c.learning_rate); },
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.learning_rate = parse_double(k, v); }});
    t.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }});
    t.push_back(size_key("max_vocab", &RunConfig::max_vocab));
    t.push_back(size_key("threads", &RunConfig::threads));
    t.push_back({"eval_train_each_epoch",
                 [](const RunConfig& c) { return std::string(c.eval_train_each_epoch ? "true" : "false"); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.eval_train_each_epoch = parse_bool(k, v);
                 }});
    t.push_back({"stop_at_train_f1", [](const RunConfig& c) { return format_double(c.stop_at_train_f1); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.stop_at_train_f1 = parse_double(k, v);
                 }});
    t.push_back({"data_format", [](const RunConfig& c) { return std::string(to_string(c.data_format)); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   const auto s = lower(v);
                   if (s == "corpus") {
                     c.data_format = DataFormat::Corpus;
                   } else if (s == "dialogre") {
                     c.data_format = DataFormat::Dialogre;
                   } else if (s == "tacred") {
                     c.data_format = DataFormat::Tacred;
                   } else {
                     bad_value(k, v, "corpus, dialogre or tacred");
                   }
                 }});
    t.push_back(string_key("train_path", &RunConfig::train_path));
    t.push_back(string_key("dev_path", &RunConfig::dev_path));
    t.push_back(string_key("test_path", &RunConfig::test_path));
    t.push_back(string_key("labels_path", &RunConfig::labels_path));
    t.push_back(string_key("no_relation_label", &RunConfig::no_relation_label));
    t.push_back(string_key("output_dir", &RunConfig::output_dir));
    t.push_back(string_key("checkpoint", &RunConfig::checkpoint));
    t.push_back(string_key("report_path", &RunConfig::report_path));
    t.push_back(string_key("sweep_output", &RunConfig::sweep_output));
    t.push_back({"sweep_values",
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
                     if (i) out += ',';
                     out += format_double(c.sweep_values[i]);
                   }
                   return out;
                 },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.sweep_values = parse_double_list(k, v);
                 }});
    t.push_back(nested_string_key("dialogre_subject_field", &RunConfig::dialogre, &DialogreSchema::subject_field));
    t.push_back(nested_string_key("dialogre_object_field", &RunConfig::dialogre, &DialogreSchema::object_field));
    t.push_back(nested_string_key("dialogre_relation_field", &RunConfig::dialogre, &DialogreSchema::relation_field));
    t.push_back(nested_string_key("tacred_tokens_field", &RunConfig::tacred, &TacredSchema::tokens_field));
    t.push_back(nested_string_key("tacred_subject_start_field", &RunConfig::tacred, &TacredSchema::subject_start_field));
    t.push_back(nested_string_key("tacred_subject_end_field", &RunConfig::tacred, &TacredSchema::subject_end_field));
    t.push_back(nested_string_key("tacred_object_start_field", &RunConfig::tacred, &TacredSchema::object_start_field));
    t.push_back(nested_string_key("tacred_object_end_field", &RunConfig::tacred, &TacredSchema::object_end_field));
    t.push_back(nested_string_key("tacred_relation_field", &RunConfig::tacred, &TacredSchema::relation_field));
    t.push_back({"synthetic_seed", [](const RunConfig& c) { return std::to_string(c.synthetic.seed); },
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.synthetic.seed = parse_u64(k, v); }});
    t.push_back(nested_size_key("synthetic_dialogues", &RunConfig::synthetic, &SyntheticOptions::num_dialogues));
    t.push_back(nested_size_key("synthetic_relations", &RunConfig::synthetic, &SyntheticOptions::num_relation_types));
    t.push_back(nested_size_key("synthetic_max_pairs", &RunConfig::synthetic, &SyntheticOptions::max_pairs));
    return t;
  }();
  return table;
}

const KeyEntry& find_key(const std::string& key) {
  for (const auto& e : key_table())
    if (e.key == key) return e;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::string_view to_string(Task task) { return task == Task::DialogueMultiLabel ? "dialogue" : "sentence"; }

std::string_view to_string(DataFormat format) {
  switch (format) {
    case DataFormat::Corpus: return "corpus";
    case DataFormat::Dialogre: return "dialogre";
    case DataFormat::Tacred: return "tacred";
  }
  return "corpus";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : key_table()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) { find_key(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return find_key(key).get(*this); }

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : key_table()) out += e.key + "=" + e.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (threads == 0) throw ConfigError("threads must be at least 1");
  if (max_vocab < kNumReserved + 1) throw ConfigError("max_vocab must be at least 5");
  if (stop_at_train_f1 < 0.0 || stop_at_train_f1 > 1.0) throw ConfigError("stop_at_train_f1 must lie in [0, 1]");
  if (!(gate.tau >= 0.0 && gate.tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(gate.decision_threshold > 0.0 && gate.decision_threshold < 1.0)) {
    throw ConfigError("decision_threshold must lie in (0, 1)");
  }
  for (double t : sweep_values) {
    if (t < 0.0 || t > 1.0) throw ConfigError("sweep_values must lie in [0, 1]");
  }
  EncoderConfig probe = encoder;
  probe.vocab_size = std::max<std::size_t>(probe.vocab_size, 1);
  probe.validate();
  if (task == Task::SentenceSingleLabel && variant != BrsVariant::SingleRelation &&
      variant != BrsVariant::Standard) {
    throw ConfigError("sentence task supports only the standard or single variant");
  }
}

std::filesystem::path RunConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return std::filesystem::path(output_dir) / "best.rgt";
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_entries, const char* env_seed,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig config;
  for (const auto& [k, v] : file_entries) config.set(k, v);
  if (env_seed != nullptr && *env_seed != '\0') {
    try {
      config.set("seed", env_seed);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("RELGATE_SEED: ") + e.what());
    }
  }
  for (const auto& [k, v] : overrides) config.set(k, v);
  return config;
}

}  // namespace relgate
