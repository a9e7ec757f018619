#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relgate/core/parameter.hpp"
#include "relgate/core/rng.hpp"
#include "relgate/core/tensor.hpp"

namespace relgate {

enum class Task { DialogueMultiLabel, SentenceSingleLabel };

struct GateConfig {
  double tau = 0.6;
  std::size_t max_refinements = 3;
  std::size_t num_relations = 0;
  Task task = Task::DialogueMultiLabel;
  double decision_threshold = 0.5;
  bool rrg_enabled = true;
  bool share_confidence_head = false;

  /// Throws ConfigError for tau outside [0, 1], zero relations or a bad threshold.
  void validate() const;
};

/// Confidence head f, refinement g and classifier, all over [h0; h_r].
struct GateParams {
  Tensor confidence_weight, confidence_bias;  // [2d × R], [R]; undefined when shared
  Tensor refine_weight, refine_bias;          // [d × d], [d]
  Tensor classifier_weight, classifier_bias;  // [2d × R], [R]

  static GateParams init(std::size_t hidden, std::size_t num_relations, bool share_confidence_head,
                         double stddev, Rng& rng);

  bool shares_confidence_head() const { return !confidence_weight.defined(); }
  const Tensor& f_weight() const { return shares_confidence_head() ? classifier_weight : confidence_weight; }
  const Tensor& f_bias() const { return shares_confidence_head() ? classifier_bias : confidence_bias; }
  std::size_t hidden() const { return refine_weight.dim(0); }
  std::size_t num_relations() const { return classifier_weight.dim(1); }

  std::vector<NamedParam> parameters() const;
  GateParams clone() const;
};

struct GateTrace {
  std::size_t iterations_used = 0;
  std::vector<double> confidences;  // one per visited iteration
  bool exited_early = false;        // stopped before the refinement bound
  std::vector<double> logits;
  std::vector<std::vector<double>> h0_states;  // h0 before each iteration
};

struct GateOutput {
  std::vector<Tensor> logits;  // one [R] tensor per relation
  std::vector<GateTrace> traces;
};

/// max_r sigmoid(f(c)_r), clamped into the open interval (0, 1). Not differentiated.
double confidence(const Tensor& c, const GateParams& params);

/// relu(g(h_r)) + h0.
Tensor refine(const Tensor& h0, const Tensor& h_r, const GateParams& params);

/// Runs the gate for every relation slot. `h0` and each `h_r[i]` are [d].
GateOutput gate_forward(const Tensor& h0, std::span<const Tensor> h_r, const GateConfig& config,
                        const GateParams& params);

/// Multi-label: every r with sigmoid(logit) > threshold. Single-label: argmax, lowest index on ties.
std::vector<std::size_t> predict(std::span<const double> logits, const GateConfig& config);

/// Mean BCE over stacked [n × R] logits, or mean cross-entropy for single-label
/// (each gold set must then hold exactly one id).
Tensor relation_loss(std::span<const Tensor> logits, std::span<const std::vector<std::size_t>> gold,
                     const GateConfig& config);

}  // namespace relgate
