#include "relgate/model/relation_model.hpp"

#include <algorithm>
#include <string>

#include "relgate/core/errors.hpp"
#include "relgate/core/ops.hpp"

namespace relgate {

RelationModel::RelationModel(ModelConfig config, std::uint64_t seed)
    : RelationModel(config, [&] {
        config.gate.validate();
        Rng rng(seed);
        Encoder enc(config.encoder, rng);
        GateParams gate = GateParams::init(config.encoder.hidden, config.gate.num_relations,
                                           config.gate.share_confidence_head, config.encoder.init_stddev, rng);
        return std::pair<Encoder, GateParams>(std::move(enc), std::move(gate));
      }()) {}

RelationModel::RelationModel(ModelConfig config, std::pair<Encoder, GateParams> parts)
    : config_(config), encoder_(std::move(parts.first)), gate_(std::move(parts.second)) {}

std::vector<NamedParam> RelationModel::parameters() const {
  auto out = encoder_.parameters();
  for (auto& p : gate_.parameters()) out.push_back(std::move(p));
  return out;
}

RelationModel RelationModel::clone() const {
  return RelationModel(config_, std::pair<Encoder, GateParams>(encoder_.clone(), gate_.clone()));
}

EncoderOutput RelationModel::encode(const PaddedBatch& batch, Rng* dropout_rng) const {
  return encoder_.encode(batch, dropout_rng);
}

GateOutput RelationModel::run_gate(const EncoderOutput& encoded, std::size_t sequence, std::size_t count,
                                   const GateConfig& gate_config) const {
  const std::size_t n = std::max<std::size_t>(encoded.max_relations, 1);
  if (sequence >= encoded.h0.dim(0) || count > encoded.max_relations) {
    throw DimensionError("run_gate: sequence " + std::to_string(sequence) + " slot count " + std::to_string(count) +
                         " outside encoded batch");
  }
  const std::int64_t row0 = static_cast<std::int64_t>(sequence);
  Tensor h0 = gather_rows(encoded.h0, {&row0, 1}, {});
  std::vector<Tensor> h_r;
  for (std::size_t r = 0; r < count; ++r) {
    const std::int64_t row = static_cast<std::int64_t>(sequence * n + r);
    h_r.push_back(gather_rows(encoded.h_r, {&row, 1}, {}));
  }
  return gate_forward(h0, h_r, gate_config, gate_);
}

ModelOutput RelationModel::gate_batch(const PaddedBatch& batch, const EncoderOutput& encoded,
                                      const GateConfig& gate_config) const {
  ModelOutput out;
  for (std::size_t i = 0; i < batch.batch; ++i) {
    auto g = run_gate(encoded, i, batch.relation_positions[i].size(), gate_config);
    for (auto& t : g.logits) out.logits.push_back(std::move(t));
    for (auto& t : g.traces) out.traces.push_back(std::move(t));
  }
  return out;
}

ModelOutput RelationModel::forward(const PaddedBatch& batch, Rng* dropout_rng) const {
  return gate_batch(batch, encode(batch, dropout_rng), config_.gate);
}

}  // namespace relgate
