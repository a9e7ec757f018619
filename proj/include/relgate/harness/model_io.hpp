#pragma once

#include <filesystem>
#include <vector>

#include "relgate/core/checkpoint.hpp"
#include "relgate/data/dataset.hpp"
#include "relgate/harness/config.hpp"
#include "relgate/model/relation_model.hpp"
#include "relgate/text/vocab.hpp"

namespace relgate {

/// A trained model together with what is needed to feed it.
struct ModelBundle {
  RunConfig config;  // encoder.vocab_size and gate.num_relations are filled in
  Vocab vocab;
  LabelMap labels;
  RelationModel model;
};

/// Builds a fresh model for `config` over `vocab` and `labels`, initialized from config.seed.
ModelBundle make_bundle(RunConfig config, Vocab vocab, LabelMap labels);

/// Parameters plus "hparam.*" scalar records, in parameter order.
std::vector<NamedTensor> bundle_records(const ModelBundle& bundle);

/// Writes the checkpoint at `path` and the vocabulary, labels and config to
/// `<path>.meta.json`.
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
/// Throws FormatError when the checkpoint and its metadata disagree.
ModelBundle load_bundle(const std::filesystem::path& path);

std::filesystem::path meta_path(const std::filesystem::path& checkpoint);

}  // namespace relgate
