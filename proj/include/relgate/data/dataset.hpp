#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relgate {

/// One (subject, object) pair with its gold relation ids, sorted and unique.
struct RelationInstance {
  std::string subject;
  std::string object;
  std::vector<std::size_t> labels;
  std::optional<std::size_t> template_id;  // synthetic corpora only

  bool operator==(const RelationInstance&) const = default;
};

struct DialogueExample {
  std::vector<std::string> utterances;
  std::vector<RelationInstance> relations;

  bool operator==(const DialogueExample&) const = default;
};

/// Bijective relation name <-> id map, ids in insertion order.
class LabelMap {
 public:
  LabelMap() = default;
  /// Throws ConfigError on duplicates or an empty list. `no_relation` must be
  /// one of `names` when given.
  LabelMap(std::vector<std::string> names, std::optional<std::string> no_relation = std::nullopt);

  std::size_t size() const { return names_.size(); }
  bool contains(const std::string& name) const { return ids_.count(name) != 0; }
  /// Throws DataError naming the unknown relation.
  std::size_t id(const std::string& name) const;
  const std::string& name(std::size_t id) const;
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> no_relation_id() const { return no_relation_; }
  std::optional<std::string> no_relation_name() const;

  bool operator==(const LabelMap& other) const {
    return names_ == other.names_ && no_relation_ == other.no_relation_;
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> ids_;
  std::optional<std::size_t> no_relation_;
};

/// Reads one relation name per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_label_file(const std::filesystem::path& path);

struct Corpus {
  LabelMap labels;
  std::vector<DialogueExample> dialogues;
};

/// Field names of the DialogRE-style JSON, configurable to absorb schema drift.
struct DialogreSchema {
  std::string subject_field = "x";
  std::string object_field = "y";
  std::string relation_field = "r";
};

struct TacredSchema {
  std::string tokens_field = "token";
  std::string subject_start_field = "subj_start";
  std::string subject_end_field = "subj_end";
  std::string object_start_field = "obj_start";
  std::string object_end_field = "obj_end";
  std::string relation_field = "relation";
};

struct LoadStats {
  std::size_t skipped_items = 0;  // items left without any relation
  std::size_t skipped_pairs = 0;  // pairs whose label list was empty
};

/// Sorted, unique relation names used anywhere in a DialogRE-style file.
std::vector<std::string> collect_dialogre_labels(const std::filesystem::path& path, const DialogreSchema& schema = {});
std::vector<DialogueExample> load_dialogre(const std::filesystem::path& path, const LabelMap& labels,
                                           const DialogreSchema& schema = {}, LoadStats* stats = nullptr);
/// Parses DialogRE-style JSON text (same contract as load_dialogre).
std::vector<DialogueExample> parse_dialogre(const std::string& text, const LabelMap& labels,
                                            const DialogreSchema& schema = {}, LoadStats* stats = nullptr);
std::string format_dialogre(std::span<const DialogueExample> dialogues, const LabelMap& labels,
                            const DialogreSchema& schema = {});
void write_dialogre(const std::filesystem::path& path, std::span<const DialogueExample> dialogues,
                    const LabelMap& labels, const DialogreSchema& schema = {});

/// Each sentence becomes a one-utterance example with exactly one relation.
/// Spans are inclusive token indices.
std::vector<std::string> collect_tacred_labels(const std::filesystem::path& path, const TacredSchema& schema = {});
std::vector<DialogueExample> load_tacred(const std::filesystem::path& path, const LabelMap& labels,
                                         const TacredSchema& schema = {});
std::vector<DialogueExample> parse_tacred(const std::string& text, const LabelMap& labels,
                                          const TacredSchema& schema = {});

/// Line-delimited JSON corpus cache: a header line with the label map, then one line per dialogue.
std::string format_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& text);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
Corpus read_corpus(const std::filesystem::path& path);

/// Throws DataError (with the dialogue index) when an entity is empty after
/// tokenization, a dialogue has no utterances or relations, or a label is out of range.
void validate_corpus(std::span<const DialogueExample> dialogues, std::size_t num_labels);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace relgate
