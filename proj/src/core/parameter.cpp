#include "relgate/core/parameter.hpp"

#include <algorithm>
#include <unordered_map>

#include "relgate/core/errors.hpp"
#include "relgate/core/rng.hpp"

namespace relgate {

Tensor normal_param(Shape shape, double stddev, Rng& rng) {
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = rng.normal(0.0, stddev);
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

Tensor zero_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Tensor constant_param(Shape shape, double value) { return Tensor::full(std::move(shape), value, true); }

std::vector<NamedTensor> snapshot(const std::vector<NamedParam>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({p.name, p.tensor.shape(), p.tensor.to_vector()});
  return out;
}

void restore(const std::vector<NamedParam>& params, const std::vector<NamedTensor>& records) {
  std::unordered_map<std::string, const NamedTensor*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing parameter '" + p.name + "'");
    if (it->second->shape != p.tensor.shape()) {
      throw FormatError("checkpoint parameter '" + p.name + "' has shape " + shape_to_string(it->second->shape) +
                        ", model expects " + shape_to_string(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    std::copy(it->second->data.begin(), it->second->data.end(), t.mutable_data().begin());
  }
}

}  // namespace relgate
