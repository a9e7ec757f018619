// relgate command line: train, eval, sweep-tau, dump-brs, gradcheck, gen-synthetic.
//
// Every config key can be given in a key=value file (--config) and overridden
// with --key value or --key=value (dashes and underscores are interchangeable).
// Exit codes: 0 success, 1 failed check or runtime error, 2 usage/config error.

#include <cstdlib>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "relgate/core/errors.hpp"
#include "relgate/data/synthetic.hpp"
#include "relgate/harness/evaluate.hpp"
#include "relgate/harness/runs.hpp"
#include "relgate/harness/train.hpp"

using namespace relgate;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Invocation {
  RunConfig config;
  std::set<std::string> explicit_keys;  // set by file or flag
  std::string output;                   // -o for dump-brs / gen-synthetic
};

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() == 2) throw ConfigError("unexpected argument '" + a + "'");
    std::string key = a.substr(2), value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " needs a value");
      value = args[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    out.emplace_back(key, value);
  }
  return out;
}

Invocation resolve(const std::string& config_file, const std::vector<std::string>& extras) {
  Invocation inv;
  std::map<std::string, std::string> file;
  if (!config_file.empty()) {
    if (!std::filesystem::exists(config_file)) throw ConfigError("config file not found: " + config_file);
    file = parse_config_text(read_text_file(config_file));
  }
  const auto overrides = parse_overrides(extras);
  inv.config = resolve_config(file, std::getenv("RELGATE_SEED"), overrides);
  for (const auto& [k, v] : file) inv.explicit_keys.insert(k);
  for (const auto& [k, v] : overrides) inv.explicit_keys.insert(k);
  return inv;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
    std::cerr << "wrote " << path << '\n';
  }
}

std::filesystem::path require_path(const std::string& path, const std::string& key) {
  if (path.empty()) throw ConfigError(key + " is not set");
  return path;
}

// The split to score: test_path, else dev_path.
std::filesystem::path eval_split(const RunConfig& c) {
  if (!c.test_path.empty()) return c.test_path;
  return require_path(c.dev_path, "test_path (or dev_path)");
}

// Gate settings stored with the checkpoint, with explicitly given keys on top.
GateConfig eval_gate(const ModelBundle& bundle, const Invocation& inv) {
  RunConfig merged = bundle.config;
  for (const char* key : {"tau", "max_refinements", "decision_threshold", "rrg_enabled"}) {
    if (inv.explicit_keys.count(key)) merged.set(key, inv.config.get(key));
  }
  merged.gate.validate();
  return merged.gate;
}

int cmd_train(const Invocation& inv) {
  const RunConfig& c = inv.config;
  const auto train_corpus = load_split(c, require_path(c.train_path, "train_path"));
  std::optional<Corpus> dev;
  if (!c.dev_path.empty()) dev = load_split(c, c.dev_path, &train_corpus.labels);
  if (!c.output_dir.empty()) write_text_file(std::filesystem::path(c.output_dir) / "config.txt", c.to_text());
  auto result = train(c, train_corpus, dev ? &*dev : nullptr, [](const EpochMetrics& m) {
    std::cerr << format_epoch_metrics(m) << '\n';
    return true;
  });
  std::cerr << "best epoch " << result.best_epoch << '\n';
  return 0;
}

int cmd_eval(const Invocation& inv) {
  const RunConfig& c = inv.config;
  const auto bundle = load_bundle(c.checkpoint_path());
  const auto split = load_split(c, eval_split(c), &bundle.labels);
  const auto report = evaluate(bundle, split.dialogues, eval_gate(bundle, inv), c.threads);
  emit(c.report_path, format_eval_report(report, bundle));
  std::cerr << "P " << report.f1.total.precision() << " R " << report.f1.total.recall() << " F1 "
            << report.f1.total.f1() << '\n';
  return 0;
}

int cmd_sweep(const Invocation& inv) {
  const RunConfig& c = inv.config;
  const auto bundle = load_bundle(c.checkpoint_path());
  const auto split = load_split(c, eval_split(c), &bundle.labels);
  // Only tau varies; the other gate keys may still be overridden.
  ModelBundle view{bundle.config, bundle.vocab, bundle.labels, bundle.model};
  view.config.gate = eval_gate(bundle, inv);
  const auto rows = sweep_tau(view, split.dialogues, c.sweep_values, c.threads);
  emit(c.sweep_output, format_sweep_csv(rows));
  return 0;
}

int cmd_dump_brs(const Invocation& inv) {
  const RunConfig& c = inv.config;
  const auto corpus = load_split(c, require_path(c.train_path, "train_path"));
  std::string text;
  for (const auto& line : dump_brs_lines(corpus, c)) text += line + '\n';
  emit(inv.output, text);
  return 0;
}

int cmd_gradcheck(const Invocation& inv) {
  const auto report = run_gradcheck_suite(inv.config);
  std::cout << format_gradcheck_report(report);
  return report.passed ? 0 : kExitFailure;
}

int cmd_gen_synthetic(const Invocation& inv) {
  emit(inv.output, format_corpus(generate_synthetic(inv.config.synthetic)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relgate: relation extraction with multi-[CLS] sequences and a refinement gate"};
  app.require_subcommand(1);
  std::string config_file, output;

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Invocation&);
    bool has_output;
  };
  const Sub subs[] = {
      {"train", "train a model on train_path (and track dev_path)", cmd_train, false},
      {"eval", "evaluate a checkpoint on test_path (or dev_path)", cmd_eval, false},
      {"sweep-tau", "re-evaluate a checkpoint for each tau in sweep_values", cmd_sweep, false},
      {"dump-brs", "print the built input sequences for train_path", cmd_dump_brs, true},
      {"gradcheck", "finite-difference check of every parameter gradient", cmd_gradcheck, false},
      {"gen-synthetic", "write a synthetic corpus", cmd_gen_synthetic, true},
  };
  std::vector<CLI::App*> handles;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("-c,--config", config_file, "flat key=value config file");
    if (s.has_output) sub->add_option("-o,--out", output, "output file (default stdout)");
    sub->allow_extras();
    sub->footer("Any config key may be passed as --key value.");
    handles.push_back(sub);
  }
  app.add_flag_callback(
      "--list-keys",
      [] {
        std::cout << RunConfig{}.to_text();
        std::exit(0);
      },
      "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  for (std::size_t i = 0; i < handles.size(); ++i) {
    if (!handles[i]->parsed()) continue;
    try {
      Invocation inv = resolve(config_file, handles[i]->remaining());
      inv.output = output;
      return subs[i].run(inv);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitFailure;
    }
  }
  return kExitUsage;
}
