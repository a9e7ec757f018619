#pragma once

#include <string>
#include <vector>

#include "relgate/core/checkpoint.hpp"
#include "relgate/core/tensor.hpp"

namespace relgate {

/// A trainable tensor with its stable checkpoint name.
struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Fresh trainable tensor drawn from normal(0, stddev).
Tensor normal_param(Shape shape, double stddev, class Rng& rng);
Tensor zero_param(Shape shape);
Tensor constant_param(Shape shape, double value);

std::vector<NamedTensor> snapshot(const std::vector<NamedParam>& params);

/// Copies values from `records` into `params` by name; every parameter must
/// be present with a matching shape.
void restore(const std::vector<NamedParam>& params, const std::vector<NamedTensor>& records);

}  // namespace relgate
