#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "relgate/model/encoder.hpp"
#include "relgate/model/gate.hpp"

namespace relgate {

struct ModelConfig {
  EncoderConfig encoder;
  GateConfig gate;
};

/// Encoder plus gate. Logits and traces are flattened in (sequence, slot) order.
struct ModelOutput {
  std::vector<Tensor> logits;
  std::vector<GateTrace> traces;
};

class RelationModel {
 public:
  /// Parameters are drawn from an Rng seeded with `seed`.
  RelationModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Encoder& encoder() const { return encoder_; }
  const GateParams& gate_params() const { return gate_; }

  std::vector<NamedParam> parameters() const;
  RelationModel clone() const;

  EncoderOutput encode(const PaddedBatch& batch, Rng* dropout_rng) const;
  /// Runs the gate on the first `count` relation slots of sequence `sequence`.
  GateOutput run_gate(const EncoderOutput& encoded, std::size_t sequence, std::size_t count,
                      const GateConfig& gate_config) const;
  ModelOutput forward(const PaddedBatch& batch, Rng* dropout_rng) const;
  /// Re-runs only the gate over an already encoded batch.
  ModelOutput gate_batch(const PaddedBatch& batch, const EncoderOutput& encoded, const GateConfig& gate_config) const;

 private:
  RelationModel(ModelConfig config, std::pair<Encoder, GateParams> parts);

  ModelConfig config_;
  Encoder encoder_;
  GateParams gate_;
};

}  // namespace relgate
