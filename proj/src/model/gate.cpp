#include "relgate/model/gate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "relgate/core/errors.hpp"
#include "relgate/core/ops.hpp"

namespace relgate {

void GateConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (num_relations == 0) throw ConfigError("num_relations must be positive");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ConfigError("decision_threshold must lie in (0, 1)");
  }
}

GateParams GateParams::init(std::size_t hidden, std::size_t num_relations, bool share_confidence_head,
                            double stddev, Rng& rng) {
  if (hidden == 0 || num_relations == 0) throw ConfigError("gate dimensions must be positive");
  GateParams p;
  if (!share_confidence_head) {
    p.confidence_weight = normal_param({2 * hidden, num_relations}, stddev, rng);
    p.confidence_bias = zero_param({num_relations});
  }
  p.refine_weight = normal_param({hidden, hidden}, stddev, rng);
  p.refine_bias = zero_param({hidden});
  p.classifier_weight = normal_param({2 * hidden, num_relations}, stddev, rng);
  p.classifier_bias = zero_param({num_relations});
  return p;
}

std::vector<NamedParam> GateParams::parameters() const {
  std::vector<NamedParam> out;
  if (!shares_confidence_head()) {
    out.push_back({"gate.confidence.weight", confidence_weight});
    out.push_back({"gate.confidence.bias", confidence_bias});
  }
  out.push_back({"gate.refine.weight", refine_weight});
  out.push_back({"gate.refine.bias", refine_bias});
  out.push_back({"gate.classifier.weight", classifier_weight});
  out.push_back({"gate.classifier.bias", classifier_bias});
  return out;
}

GateParams GateParams::clone() const {
  GateParams p;
  if (!shares_confidence_head()) {
    p.confidence_weight = confidence_weight.clone();
    p.confidence_bias = confidence_bias.clone();
  }
  p.refine_weight = refine_weight.clone();
  p.refine_bias = refine_bias.clone();
  p.classifier_weight = classifier_weight.clone();
  p.classifier_bias = classifier_bias.clone();
  return p;
}

double confidence(const Tensor& c, const GateParams& params) {
  const Tensor& w = params.f_weight();
  const Tensor& b = params.f_bias();
  const std::size_t k = w.dim(0), r = w.dim(1);
  if (c.shape() != Shape{k}) {
    throw DimensionError("confidence: input " + shape_to_string(c.shape()) + " does not match weight " +
                         shape_to_string(w.shape()));
  }
  const auto cv = c.data(), wv = w.data(), bv = b.data();
  double best = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    double z = bv[j];
    for (std::size_t i = 0; i < k; ++i) z += cv[i] * wv[i * r + j];
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    best = std::max(best, s);
  }
  return std::clamp(best, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

Tensor refine(const Tensor& h0, const Tensor& h_r, const GateParams& params) {
  return add(relu(linear(h_r, params.refine_weight, params.refine_bias)), h0);
}

GateOutput gate_forward(const Tensor& h0, std::span<const Tensor> h_r, const GateConfig& config,
                        const GateParams& params) {
  const std::size_t d = params.hidden();
  if (h0.shape() != Shape{d}) {
    throw DimensionError("gate: h0 " + shape_to_string(h0.shape()) + " expected [" + std::to_string(d) + "]");
  }
  if (h_r.empty()) throw ContractError("gate: no relations");
  GateOutput out;
  for (const auto& hr : h_r) {
    if (hr.shape() != Shape{d}) {
      throw DimensionError("gate: h_r " + shape_to_string(hr.shape()) + " expected [" + std::to_string(d) + "]");
    }
    GateTrace trace;
    Tensor h = h0;
    for (std::size_t k = 0;; ++k) {
      trace.h0_states.push_back(h.to_vector());
      Tensor c = concat(h, hr, 0);
      const double s = confidence(c, params);
      trace.confidences.push_back(s);
      if (!config.rrg_enabled || s > config.tau || k >= config.max_refinements) {
        Tensor logits = linear(c, params.classifier_weight, params.classifier_bias);
        trace.iterations_used = k;
        trace.exited_early = k < config.max_refinements;
        trace.logits = logits.to_vector();
        out.logits.push_back(logits);
        break;
      }
      h = refine(h, hr, params);
    }
    out.traces.push_back(std::move(trace));
  }
  return out;
}

std::vector<std::size_t> predict(std::span<const double> logits, const GateConfig& config) {
  std::vector<std::size_t> out;
  if (logits.empty()) return out;
  if (config.task == Task::SentenceSingleLabel) {
    out.push_back(static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin()));
    return out;
  }
  for (std::size_t r = 0; r < logits.size(); ++r) {
    const double z = logits[r];
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    if (p > config.decision_threshold) out.push_back(r);
  }
  return out;
}

Tensor relation_loss(std::span<const Tensor> logits, std::span<const std::vector<std::size_t>> gold,
                     const GateConfig& config) {
  if (logits.empty()) throw ContractError("relation_loss: no relations");
  if (logits.size() != gold.size()) {
    throw DimensionError("relation_loss: " + std::to_string(logits.size()) + " logits for " +
                         std::to_string(gold.size()) + " gold sets");
  }
  const std::size_t r = logits.front().numel();
  Tensor stacked = stack(logits);
  if (config.task == Task::SentenceSingleLabel) {
    std::vector<std::size_t> labels;
    for (const auto& g : gold) {
      if (g.size() != 1) throw ContractError("relation_loss: single-label task needs exactly one gold id");
      labels.push_back(g.front());
    }
    return cross_entropy(stacked, labels);
  }
  std::vector<double> targets(logits.size() * r, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (auto id : gold[i]) {
      if (id >= r) throw ContractError("relation_loss: gold id " + std::to_string(id) + " out of range");
      targets[i * r + id] = 1.0;
    }
  return bce_with_logits(stacked, targets);
}

}  // namespace relgate
