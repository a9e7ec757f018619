#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace relgate {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {
struct TensorImpl;
}

/// Dense row-major array of doubles that can take part in a gradient graph.
///
/// `Tensor` is a shared handle: copying it aliases the same storage, the way
/// graph frameworks pass tensors around. Use `clone()` for an independent copy.
/// Operations never write into their inputs.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  std::uint64_t id() const;

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  std::vector<double> to_vector() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  /// Empty span when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  // Gradient buffers are shared through the handle, like the values.
  void accumulate_grad(std::span<const double> delta) const;
  void zero_grad() const;

  /// Same values, no gradient history.
  Tensor detach() const;
  /// Independent copy of values (and requires_grad flag), no gradient history.
  Tensor clone() const;

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  detail::TensorImpl& impl() const;

  std::shared_ptr<detail::TensorImpl> impl_;
};

}  // namespace relgate
