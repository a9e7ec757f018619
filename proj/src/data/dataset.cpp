#include "relgate/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relgate/core/errors.hpp"
#include "relgate/text/tokenizer.hpp"

namespace relgate {

using nlohmann::json;

LabelMap::LabelMap(std::vector<std::string> names, std::optional<std::string> no_relation)
    : names_(std::move(names)) {
  if (names_.empty()) throw ConfigError("label map is empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!ids_.emplace(names_[i], i).second) throw ConfigError("duplicate relation name '" + names_[i] + "'");
  }
  if (no_relation) {
    auto it = ids_.find(*no_relation);
    if (it == ids_.end()) throw ConfigError("no-relation label '" + *no_relation + "' is not in the label map");
    no_relation_ = it->second;
  }
}

std::size_t LabelMap::id(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw DataError("unknown relation '" + name + "'");
  return it->second;
}

const std::string& LabelMap::name(std::size_t id) const {
  if (id >= names_.size()) throw DataError("relation id " + std::to_string(id) + " out of range");
  return names_[id];
}

std::optional<std::string> LabelMap::no_relation_name() const {
  if (!no_relation_) return std::nullopt;
  return names_[*no_relation_];
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::string> read_label_file(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    names.push_back(line);
  }
  return names;
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(what + ": malformed JSON: " + e.what());
  }
}

const json& field(const json& obj, const std::string& name, const std::string& where) {
  if (!obj.is_object()) throw DataError(where + ": expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) throw DataError(where + ": missing field '" + name + "'");
  return *it;
}

std::string string_field(const json& obj, const std::string& name, const std::string& where) {
  const json& v = field(obj, name, where);
  if (!v.is_string()) throw DataError(where + ": field '" + name + "' is not a string");
  return v.get<std::string>();
}

std::size_t index_field(const json& obj, const std::string& name, const std::string& where) {
  const json& v = field(obj, name, where);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw DataError(where + ": field '" + name + "' is not a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::size_t> resolve_labels(const std::vector<std::string>& names, const LabelMap& labels,
                                        const std::string& where) {
  std::vector<std::size_t> ids;
  for (const auto& n : names) {
    if (!labels.contains(n)) throw DataError(where + ": unknown relation '" + n + "'");
    ids.push_back(labels.id(n));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::string> string_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw DataError(where + ": expected an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw DataError(where + ": expected an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::string dump(const json& j, int indent = -1) {
  try {
    return j.dump(indent);
  } catch (const json::type_error& e) {
    throw DataError(std::string("cannot serialize: ") + e.what());
  }
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

void validate_corpus(std::span<const DialogueExample> dialogues, std::size_t num_labels) {
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    const auto& d = dialogues[i];
    const std::string where = "dialogue " + std::to_string(i);
    if (d.utterances.empty()) throw DataError(where + ": no utterances");
    if (d.relations.empty()) throw DataError(where + ": no relation instances");
    for (std::size_t r = 0; r < d.relations.size(); ++r) {
      const auto& rel = d.relations[r];
      const std::string at = where + " relation " + std::to_string(r);
      if (tokenize(rel.subject).empty()) throw DataError(at + ": subject '" + rel.subject + "' has no tokens");
      if (tokenize(rel.object).empty()) throw DataError(at + ": object '" + rel.object + "' has no tokens");
      if (rel.labels.empty()) throw DataError(at + ": empty gold label set");
      for (auto id : rel.labels) {
        if (id >= num_labels) throw DataError(at + ": label id " + std::to_string(id) + " out of range");
      }
    }
  }
}

std::vector<std::string> collect_dialogre_labels(const std::filesystem::path& path, const DialogreSchema& schema) {
  const json root = parse_json(read_text_file(path), path.string());
  if (!root.is_array()) throw DataError(path.string() + ": expected a top-level array");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = path.string() + " item " + std::to_string(i);
    if (!root[i].is_array() || root[i].size() < 2) throw DataError(where + ": expected [utterances, relations]");
    for (const auto& rel : root[i][1]) {
      for (auto& n : string_array(field(rel, schema.relation_field, where), where)) names.push_back(n);
    }
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::vector<DialogueExample> parse_dialogre(const std::string& text, const LabelMap& labels,
                                            const DialogreSchema& schema, LoadStats* stats) {
  const json root = parse_json(text, "dialogre");
  if (!root.is_array()) throw DataError("dialogre: expected a top-level array");
  LoadStats local;
  std::vector<DialogueExample> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& item = root[i];
    const std::string where = "dialogre item " + std::to_string(i);
    if (!item.is_array() || item.size() < 2) throw DataError(where + ": expected [utterances, relations]");
    DialogueExample ex;
    ex.utterances = string_array(item[0], where + " utterances");
    if (ex.utterances.empty()) throw DataError(where + ": no utterances");
    if (!item[1].is_array()) throw DataError(where + ": relations are not an array");
    for (std::size_t r = 0; r < item[1].size(); ++r) {
      const json& rel = item[1][r];
      const std::string at = where + " relation " + std::to_string(r);
      RelationInstance inst;
      inst.subject = string_field(rel, schema.subject_field, at);
      inst.object = string_field(rel, schema.object_field, at);
      inst.labels = resolve_labels(string_array(field(rel, schema.relation_field, at), at), labels, at);
      if (inst.labels.empty()) {
        ++local.skipped_pairs;
        continue;
      }
      ex.relations.push_back(std::move(inst));
    }
    if (ex.relations.empty()) {
      ++local.skipped_items;
      continue;
    }
    out.push_back(std::move(ex));
  }
  try {
    validate_corpus(out, labels.size());
  } catch (const DataError& e) {
    throw DataError(std::string("dialogre: ") + e.what());
  }
  if (stats) *stats = local;
  return out;
}

std::vector<DialogueExample> load_dialogre(const std::filesystem::path& path, const LabelMap& labels,
                                           const DialogreSchema& schema, LoadStats* stats) {
  return parse_dialogre(read_text_file(path), labels, schema, stats);
}

std::string format_dialogre(std::span<const DialogueExample> dialogues, const LabelMap& labels,
                            const DialogreSchema& schema) {
  json root = json::array();
  for (const auto& d : dialogues) {
    json rels = json::array();
    for (const auto& r : d.relations) {
      json names = json::array();
      for (auto id : r.labels) names.push_back(labels.name(id));
      rels.push_back({{schema.subject_field, r.subject}, {schema.object_field, r.object}, {schema.relation_field, names}});
    }
    root.push_back(json::array({d.utterances, rels}));
  }
  return dump(root, 1) + "\n";
}

void write_dialogre(const std::filesystem::path& path, std::span<const DialogueExample> dialogues,
                    const LabelMap& labels, const DialogreSchema& schema) {
  write_text_file(path, format_dialogre(dialogues, labels, schema));
}

std::vector<std::string> collect_tacred_labels(const std::filesystem::path& path, const TacredSchema& schema) {
  const json root = parse_json(read_text_file(path), path.string());
  if (!root.is_array()) throw DataError(path.string() + ": expected a top-level array");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < root.size(); ++i) {
    names.push_back(string_field(root[i], schema.relation_field, path.string() + " record " + std::to_string(i)));
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::vector<DialogueExample> parse_tacred(const std::string& text, const LabelMap& labels, const TacredSchema& schema) {
  const json root = parse_json(text, "tacred");
  if (!root.is_array()) throw DataError("tacred: expected a top-level array");
  std::vector<DialogueExample> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& rec = root[i];
    const std::string where = "tacred record " + std::to_string(i);
    auto tokens = string_array(field(rec, schema.tokens_field, where), where);
    auto span = [&](const std::string& start_field, const std::string& end_field) {
      const std::size_t start = index_field(rec, start_field, where);
      const std::size_t end = index_field(rec, end_field, where);
      if (start > end) {
        throw DataError(where + ": inverted span [" + std::to_string(start) + "," + std::to_string(end) + "]");
      }
      if (end >= tokens.size()) {
        throw DataError(where + ": span end " + std::to_string(end) + " beyond " + std::to_string(tokens.size()) +
                        " tokens");
      }
      return join(tokens, start, end + 1);
    };
    RelationInstance inst;
    inst.subject = span(schema.subject_start_field, schema.subject_end_field);
    inst.object = span(schema.object_start_field, schema.object_end_field);
    inst.labels = resolve_labels({string_field(rec, schema.relation_field, where)}, labels, where);
    DialogueExample ex;
    ex.utterances.push_back(join(tokens, 0, tokens.size()));
    ex.relations.push_back(std::move(inst));
    out.push_back(std::move(ex));
  }
  try {
    validate_corpus(out, labels.size());
  } catch (const DataError& e) {
    throw DataError(std::string("tacred: ") + e.what());
  }
  return out;
}

std::vector<DialogueExample> load_tacred(const std::filesystem::path& path, const LabelMap& labels,
                                         const TacredSchema& schema) {
  return parse_tacred(read_text_file(path), labels, schema);
}

std::string format_corpus(const Corpus& corpus) {
  json header = {{"format", "relgate-corpus"}, {"version", 1}, {"labels", corpus.labels.names()}};
  if (auto nr = corpus.labels.no_relation_name()) {
    header["no_relation"] = *nr;
  } else {
    header["no_relation"] = nullptr;
  }
  std::string out = dump(header) + "\n";
  for (const auto& d : corpus.dialogues) {
    json rels = json::array();
    for (const auto& r : d.relations) {
      json names = json::array();
      for (auto id : r.labels) names.push_back(corpus.labels.name(id));
      json rel = {{"subject", r.subject}, {"object", r.object}, {"labels", names}};
      if (r.template_id) rel["template"] = *r.template_id;
      rels.push_back(std::move(rel));
    }
    out += dump(json{{"utterances", d.utterances}, {"relations", rels}}) + "\n";
  }
  return out;
}

Corpus parse_corpus(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("corpus: empty file");
  const json header = parse_json(line, "corpus header");
  if (!header.is_object() || header.value("format", "") != "relgate-corpus") {
    throw DataError("corpus: not a relgate corpus file");
  }
  if (header.value("version", 0) != 1) throw DataError("corpus: unsupported version");
  std::optional<std::string> no_relation;
  if (header.contains("no_relation") && header["no_relation"].is_string()) {
    no_relation = header["no_relation"].get<std::string>();
  }
  Corpus corpus;
  corpus.labels = LabelMap(string_array(field(header, "labels", "corpus header"), "corpus header"), no_relation);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    const json j = parse_json(line, where);
    DialogueExample ex;
    ex.utterances = string_array(field(j, "utterances", where), where);
    for (const auto& rel : field(j, "relations", where)) {
      RelationInstance inst;
      inst.subject = string_field(rel, "subject", where);
      inst.object = string_field(rel, "object", where);
      inst.labels = resolve_labels(string_array(field(rel, "labels", where), where), corpus.labels, where);
      if (rel.contains("template")) inst.template_id = index_field(rel, "template", where);
      ex.relations.push_back(std::move(inst));
    }
    corpus.dialogues.push_back(std::move(ex));
  }
  validate_corpus(corpus.dialogues, corpus.labels.size());
  return corpus;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  write_text_file(path, format_corpus(corpus));
}

Corpus read_corpus(const std::filesystem::path& path) { return parse_corpus(read_text_file(path)); }

}  // namespace relgate
