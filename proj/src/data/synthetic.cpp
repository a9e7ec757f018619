#include "relgate/data/synthetic.hpp"

#include <array>
#include <string>
#include <vector>

#include "relgate/core/errors.hpp"
#include "relgate/core/rng.hpp"

namespace relgate {

namespace {

struct RelationTemplates {
  const char* name;
  std::array<const char*, kTemplatesPerRelation> text;  // {s} subject, {o} object
};

const std::array<RelationTemplates, 12> kRelations{{
    {"per:friends", {"{s} and {o} have been friends since school", "{s} hangs out with {o} every weekend"}},
    {"per:spouse", {"{s} is married to {o}", "{s} and {o} just celebrated their wedding anniversary"}},
    {"per:boss", {"{s} works for {o} at the office", "{o} is the manager of {s}"}},
    {"per:siblings", {"{s} is the brother of {o}", "{s} and {o} grew up in the same family as siblings"}},
    {"per:roommate", {"{s} shares an apartment with {o}", "{s} and {o} split the rent every month"}},
    {"per:neighbor", {"{s} lives next door to {o}", "{o} can hear {s} through the wall"}},
    {"per:girl/boyfriend", {"{s} is dating {o}", "{s} kissed {o} last night"}},
    {"per:parent", {"{s} is the mother of {o}", "{o} called {s} mom again"}},
    {"per:pet", {"{s} walks the dog {o} twice a day", "{o} is the cat that {s} feeds"}},
    {"per:alumni", {"{s} and {o} graduated from the same college", "{s} met {o} at the alumni dinner"}},
    {"per:client", {"{s} hired {o} as a lawyer", "{o} sends invoices to {s}"}},
    {"per:positive_impression", {"{s} thinks {o} is wonderful", "{s} really admires {o}"}},
}};

const std::array<const char*, 32> kNames{
    "alice", "bruno", "carla", "diego", "elena", "felix", "greta", "hugo",  "irene", "jonas", "karin",
    "lars",  "maria", "nils",  "olga",  "pedro", "quinn", "rosa",  "sven",  "tanja", "ugo",   "vera",
    "walt",  "xenia", "yusuf", "zora",  "amir",  "bella", "cyril", "dora",  "emil",  "fiona"};

const std::array<const char*, 10> kFillers{
    "where the hell is the coffee ?",
    "i can not believe it is raining again",
    "did anyone see my keys ?",
    "this sandwich is amazing",
    "we should leave in ten minutes",
    "oh my god , look at the time !",
    "could you pass the salt please ?",
    "i have a meeting tomorrow morning",
    "that movie was way too long",
    "let us order pizza tonight"};

std::string relation_name(std::size_t r) {
  if (r < kRelations.size()) return kRelations[r].name;
  return "rel:" + std::to_string(r);
}

std::string fill(std::size_t template_id, const std::string& s, const std::string& o) {
  const std::size_t r = synthetic_label_of_template(template_id);
  const std::size_t j = template_id % kTemplatesPerRelation;
  std::string text = r < kRelations.size()
                         ? kRelations[r].text[j]
                         : (j == 0 ? "{s} kw" + std::to_string(r) + " {o}" : "{o} kw" + std::to_string(r) + " by {s}");
  for (const auto& [key, value] : {std::pair<std::string, std::string>{"{s}", s}, {"{o}", o}}) {
    const auto pos = text.find(key);
    text.replace(pos, key.size(), value);
  }
  return text;
}

}  // namespace

Corpus generate_synthetic(const SyntheticOptions& options) {
  if (options.num_dialogues == 0 || options.num_relation_types == 0 || options.max_pairs == 0) {
    throw ConfigError("synthetic corpus parameters must be positive");
  }
  Rng rng(options.seed);
  std::vector<std::string> names;
  for (std::size_t r = 0; r < options.num_relation_types; ++r) names.push_back(relation_name(r));

  Corpus corpus;
  corpus.labels = LabelMap(names);
  // Labels come from a reshuffled deck so every run of R instances covers each relation once.
  std::vector<std::size_t> deck;
  auto draw_label = [&] {
    if (deck.empty()) {
      for (std::size_t r = 0; r < options.num_relation_types; ++r) deck.push_back(r);
      rng.shuffle(deck);
    }
    const std::size_t label = deck.back();
    deck.pop_back();
    return label;
  };
  for (std::size_t d = 0; d < options.num_dialogues; ++d) {
    const std::size_t pairs = 1 + rng.uniform_index(options.max_pairs);
    std::vector<std::size_t> pool(kNames.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    rng.shuffle(pool);
    std::size_t next_name = 0;
    auto take_name = [&]() -> std::string {
      // Pools are recycled once exhausted; only happens with very large max_pairs.
      return kNames[pool[next_name++ % pool.size()]];
    };

    DialogueExample ex;
    std::vector<std::string> lines;
    for (std::size_t p = 0; p < pairs; ++p) {
      RelationInstance inst;
      inst.subject = rng.uniform() < 0.3 ? "S" + std::to_string(p + 1) : take_name();
      inst.object = take_name();
      const std::size_t label = draw_label();
      const std::size_t template_id = label * kTemplatesPerRelation + rng.uniform_index(kTemplatesPerRelation);
      inst.labels = {synthetic_label_of_template(template_id)};
      inst.template_id = template_id;
      lines.push_back(fill(template_id, inst.subject, inst.object));
      ex.relations.push_back(std::move(inst));
    }
    const std::size_t fillers = 1 + rng.uniform_index(3);
    for (std::size_t f = 0; f < fillers; ++f) lines.push_back(kFillers[rng.uniform_index(kFillers.size())]);
    rng.shuffle(lines);
    for (std::size_t u = 0; u < lines.size(); ++u) {
      ex.utterances.push_back("S" + std::to_string(1 + rng.uniform_index(3)) + ": " + lines[u]);
    }
    corpus.dialogues.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace relgate
