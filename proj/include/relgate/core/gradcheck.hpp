#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "relgate/core/parameter.hpp"

namespace relgate {

struct GradcheckOptions {
  double step = 1e-5;  // near the cube root of machine epsilon for central differences
  double tolerance = 1e-5;
  /// Denominator floor for the relative error, so that gradients that are
  /// zero analytically and numerically (up to round-off) compare as equal.
  double denominator_floor = 1e-4;
};

struct ParamGradcheck {
  std::string name;
  Shape shape;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<ParamGradcheck> params;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double gradient_relative_error(double analytic, double numeric, double floor);

/// Compares the tape gradient of `loss_fn()` against central finite
/// differences for every element of every parameter. `loss_fn` must be a
/// deterministic function of the parameter values.
GradcheckReport check_gradients(std::span<const NamedParam> params, const std::function<Tensor()>& loss_fn,
                                const GradcheckOptions& options = {});

}  // namespace relgate
