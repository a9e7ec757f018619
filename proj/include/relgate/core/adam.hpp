#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relgate/core/tensor.hpp"

namespace relgate {

struct AdamOptions {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers, one per parameter, plus the step counter.
struct AdamState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamOptions opts, std::span<const Tensor> params);
};

/// One bias-corrected Adam update using each parameter's accumulated
/// gradient (a missing gradient counts as zero). Parameters are updated in
/// place through their handles.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace relgate
