#include "relgate/core/adam.hpp"

#include <cmath>
#include <string>

#include "relgate/core/errors.hpp"

namespace relgate {

AdamState::AdamState(AdamOptions opts, std::span<const Tensor> params) : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.numel(), 0.0);
    second_moment.emplace_back(p.numel(), 0.0);
  }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but state tracks " +
                         std::to_string(state.first_moment.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].numel() != state.first_moment[i].size() || params[i].numel() != state.second_moment[i].size()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " of shape " +
                           shape_to_string(params[i].shape()) + " does not match its moment buffers");
    }
  }
  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto grad = params[i].grad();
    auto data = params[i].mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      data[j] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace relgate
