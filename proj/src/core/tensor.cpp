#include "relgate/core/tensor.hpp"

#include <atomic>
#include <sstream>

#include "relgate/core/errors.hpp"

namespace relgate {

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::uint64_t id = 0;
};

}  // namespace detail

namespace {

std::uint64_t next_tensor_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_numel(shape), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor shape " + shape_to_string(shape) + " has a zero dimension");
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_to_string(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  impl->id = next_tensor_id();
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_data({}, {value}, requires_grad); }

detail::TensorImpl& Tensor::impl() const {
  if (!impl_) throw ContractError("use of an undefined tensor");
  return *impl_;
}

std::uint64_t Tensor::id() const { return impl().id; }
const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }
std::span<const double> Tensor::data() const { return impl().data; }
std::span<double> Tensor::mutable_data() { return impl().data; }
std::vector<double> Tensor::to_vector() const { return impl().data; }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_to_string(shape()));
  return impl().data[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool value) { impl().requires_grad = value; }
bool Tensor::has_grad() const { return !impl().grad.empty(); }
std::span<const double> Tensor::grad() const { return impl().grad; }

std::span<double> Tensor::mutable_grad() {
  auto& m = impl();
  if (m.grad.empty()) m.grad.assign(m.data.size(), 0.0);
  return m.grad;
}

void Tensor::accumulate_grad(std::span<const double> delta) const {
  auto& m = impl();
  if (delta.size() != m.data.size()) {
    throw DimensionError("gradient of size " + std::to_string(delta.size()) + " for tensor " +
                         shape_to_string(m.shape));
  }
  if (m.grad.empty()) {
    m.grad.assign(delta.begin(), delta.end());
    return;
  }
  for (std::size_t i = 0; i < delta.size(); ++i) m.grad[i] += delta[i];
}

void Tensor::zero_grad() const { impl().grad.clear(); }

Tensor Tensor::detach() const { return from_data(shape(), impl().data, false); }

Tensor Tensor::clone() const { return from_data(shape(), impl().data, impl().requires_grad); }

}  // namespace relgate
