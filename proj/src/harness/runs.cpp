#include "relgate/harness/runs.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "relgate/core/errors.hpp"
#include "relgate/core/ops.hpp"
#include "relgate/data/synthetic.hpp"
#include "relgate/harness/model_io.hpp"
#include "relgate/harness/pipeline.hpp"

namespace relgate {

LabelMap resolve_label_map(const RunConfig& config, const std::filesystem::path& path) {
  std::vector<std::string> names;
  if (!config.labels_path.empty()) {
    names = read_label_file(config.labels_path);
  } else if (config.data_format == DataFormat::Tacred) {
    names = collect_tacred_labels(path, config.tacred);
  } else {
    names = collect_dialogre_labels(path, config.dialogre);
  }
  std::optional<std::string> no_relation;
  if (!config.no_relation_label.empty()) {
    no_relation = config.no_relation_label;
  } else {
    const std::string fallback = config.task == Task::DialogueMultiLabel ? "unanswerable" : "no_relation";
    if (std::find(names.begin(), names.end(), fallback) != names.end()) no_relation = fallback;
  }
  return LabelMap(std::move(names), no_relation);
}

Corpus load_split(const RunConfig& config, const std::filesystem::path& path, const LabelMap* labels) {
  if (!std::filesystem::exists(path)) throw ConfigError("data file " + path.string() + " does not exist");
  Corpus corpus;
  switch (config.data_format) {
    case DataFormat::Corpus:
      corpus = read_corpus(path);
      if (labels && !(corpus.labels == *labels)) {
        throw ConfigError("label-map mismatch: " + path.string() + " does not carry the expected relations");
      }
      return corpus;
    case DataFormat::Dialogre: {
      corpus.labels = labels ? *labels : resolve_label_map(config, path);
      LoadStats stats;
      corpus.dialogues = load_dialogre(path, corpus.labels, config.dialogre, &stats);
      if (stats.skipped_items || stats.skipped_pairs) {
        std::fprintf(stderr, "warning: %s: skipped %zu items and %zu pairs without relations\n",
                     path.string().c_str(), stats.skipped_items, stats.skipped_pairs);
      }
      return corpus;
    }
    case DataFormat::Tacred:
      corpus.labels = labels ? *labels : resolve_label_map(config, path);
      corpus.dialogues = load_tacred(path, corpus.labels, config.tacred);
      return corpus;
  }
  return corpus;
}

GradcheckReport run_gradcheck_suite(const RunConfig& config, const GradcheckSuiteOptions& options) {
  RunConfig tiny = config;
  tiny.encoder.hidden = 8;
  tiny.encoder.layers = 1;
  tiny.encoder.heads = 2;
  tiny.encoder.ffn_dim = 32;
  tiny.encoder.max_seq_len = 64;
  tiny.encoder.dropout = 0.0;
  tiny.gate.tau = 1.0;
  tiny.gate.rrg_enabled = true;
  tiny.task = Task::DialogueMultiLabel;
  if (tiny.variant == BrsVariant::SingleRelation) tiny.variant = BrsVariant::Standard;

  const Corpus corpus = generate_synthetic({config.synthetic.seed, 2, 4, 2});
  ModelBundle bundle = make_bundle(tiny, build_corpus_vocab(corpus.dialogues, tiny.max_vocab), corpus.labels);
  const PreparedData data =
      prepare_data(corpus.dialogues, bundle.vocab, bundle.config.variant, bundle.config.encoder.max_seq_len);
  std::vector<std::size_t> all(data.sequences.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const PaddedBatch batch = collate(data, all);
  std::vector<std::vector<std::size_t>> gold;
  for (const auto& s : data.sequences)
    for (const auto& g : s.gold) gold.push_back(g);

  const auto params = bundle.model.parameters();
  return check_gradients(
      params,
      [&] {
        auto logits = bundle.model.forward(batch, nullptr).logits;
        if (options.logits_hook) logits = options.logits_hook(std::move(logits));
        return relation_loss(logits, gold, bundle.config.gate);
      },
      options.check);
}

std::string format_gradcheck_report(const GradcheckReport& report) {
  std::string out;
  char line[256];
  for (const auto& p : report.params) {
    std::snprintf(line, sizeof line, "%-48s %-10s max_rel %.3e max_abs %.3e %s\n", p.name.c_str(),
                  shape_to_string(p.shape).c_str(), p.max_rel_error, p.max_abs_error, p.passed ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "max relative error %.3e (tolerance %.1e): %s\n", report.max_rel_error,
                report.tolerance, report.passed ? "PASS" : "FAIL");
  out += line;
  return out;
}

std::vector<std::string> dump_brs_lines(const Corpus& corpus, const RunConfig& config) {
  const Vocab vocab = build_corpus_vocab(corpus.dialogues, config.max_vocab);
  const PreparedData data = prepare_data(corpus.dialogues, vocab, config.variant, config.encoder.max_seq_len);
  std::vector<std::string> lines;
  for (const auto& s : data.sequences) {
    nlohmann::ordered_json j;
    j["dialogue"] = s.dialogue;
    j["pairs"] = s.pairs;
    j["variant"] = std::string(to_string(s.sequence.variant));
    j["tokens"] = s.sequence.tokens;
    j["relation_cls_pos"] = s.sequence.relation_cls_pos;
    j["truncated"] = s.sequence.truncated;
    lines.push_back(j.dump());
  }
  return lines;
}

}  // namespace relgate
