#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "relgate/core/tensor.hpp"

namespace relgate {

class Rng;

// Differentiable tensor operations. Every function records itself on the
// current thread's tape when gradients are enabled and an input requires one.
// Shape mismatches throw DimensionError naming the offending shapes.

/// [m×k] · [k×n] -> [m×n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Batched [B×m×k] · [B×k×n] -> [B×m×n].
Tensor bmm(const Tensor& a, const Tensor& b);
/// Affine map over the last axis: x[..., k] · W[k×n] + b[n]. `bias` may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

enum class ElementwiseOp { add, mul, relu, sigmoid, gelu };

/// Dispatches to the binary (add, mul) or unary (relu, sigmoid, gelu) kernels.
Tensor elementwise(ElementwiseOp op, std::span<const Tensor> inputs);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Exact (erf) GELU.
Tensor gelu(const Tensor& x);

/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
/// Normalizes over the last axis, then applies `gain` and `bias` (both [n]).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, std::span<const std::size_t> order);
Tensor permute(const Tensor& x, std::initializer_list<std::size_t> order);

/// Looks up rows of `table` [V×d]; output shape is `index_shape` + [d].
Tensor embedding(const Tensor& table, std::span<const std::int64_t> ids, const Shape& index_shape);
/// Treats `x` as rows of its last axis and gathers `rows` into shape
/// `out_prefix` + [last]. A row index of -1 yields a zero row.
Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> rows, const Shape& out_prefix);

/// Inverted dropout with drop probability `p`; identity when p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean binary cross-entropy over all elements, computed from logits.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets);
/// Mean softmax cross-entropy over the rows of logits [n×C].
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace relgate
