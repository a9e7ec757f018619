#include "relgate/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "relgate/core/autograd.hpp"

namespace relgate {

double gradient_relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport check_gradients(std::span<const NamedParam> params, const std::function<Tensor()>& loss_fn,
                                const GradcheckOptions& options) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
  Tape::current().clear();
  backward(loss_fn());

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    auto g = p.tensor.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(p.tensor.numel(), 0.0);
  }

  GradcheckReport report;
  report.tolerance = options.tolerance;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    auto values = t.mutable_data();
    ParamGradcheck entry{params[k].name, t.shape()};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + options.step;
      const double plus = loss_fn().item();
      values[i] = original - options.step;
      const double minus = loss_fn().item();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double rel = gradient_relative_error(analytic[k][i], numeric, options.denominator_floor);
      const double abs_err = std::abs(analytic[k][i] - numeric);
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
      }
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
    }
    entry.passed = entry.max_rel_error < options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.passed = report.passed && entry.passed;
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace relgate
