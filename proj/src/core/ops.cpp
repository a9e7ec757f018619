#include "relgate/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "relgate/core/autograd.hpp"
#include "relgate/core/errors.hpp"
#include "relgate/core/rng.hpp"

namespace relgate {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw DimensionError(op + ": incompatible shapes " + shape_to_string(a) + " and " + shape_to_string(b));
}

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const std::string& why) {
  throw DimensionError(op + ": shape " + shape_to_string(a) + " " + why);
}

void require_same_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

void check_axis(const std::string& op, const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) shape_error(op, x.shape(), "has no axis " + std::to_string(axis));
}

std::size_t prod(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= s[i];
  return n;
}

// C[m×n] += A[m×k] · B[k×n]
void gemm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[i * k + p];
      if (a == 0.0) continue;
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  }
}

// C[m×k] += A[m×n] · B[k×n]ᵀ
void gemm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = A + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b = B + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += a[j] * b[j];
      C[i * k + p] += acc;
    }
  }
}

// C[k×n] += A[m×k]ᵀ · B[m×n]
void gemm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* b = B + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[i * k + p];
      if (a == 0.0) continue;
      double* c = C + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Unary elementwise op with derivative expressed in terms of input and output.
template <typename Fwd, typename Deriv>
Tensor unary(const std::string& name, const Tensor& x, Fwd fwd, Deriv deriv) {
  auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fwd(xs[i]);
  Tensor y = Tensor::from_data(x.shape(), std::move(out));
  record_op(name, {x}, y, [x, y, deriv]() mutable {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto xv = x.data();
    auto yv = y.data();
    std::vector<double> dx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] = g[i] * deriv(xv[i], yv[i]);
    x.accumulate_grad(dx);
  });
  return y;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  Tensor c = Tensor::from_data({m, n}, std::move(out));
  record_op("matmul", {a, b}, c, [a, b, c, m, k, n]() mutable {
    auto g = c.grad();
    if (a.requires_grad()) {
      std::vector<double> da(m * k, 0.0);
      gemm_nt(g.data(), b.data().data(), da.data(), m, n, k);
      a.accumulate_grad(da);
    }
    if (b.requires_grad()) {
      std::vector<double> db(k * n, 0.0);
      gemm_tn(a.data().data(), g.data(), db.data(), m, k, n);
      b.accumulate_grad(db);
    }
  });
  return c;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    shape_error("bmm", a.shape(), b.shape());
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<double> out(batch * m * n, 0.0);
  for (std::size_t s = 0; s < batch; ++s) {
    gemm_nn(a.data().data() + s * m * k, b.data().data() + s * k * n, out.data() + s * m * n, m, k, n);
  }
  Tensor c = Tensor::from_data({batch, m, n}, std::move(out));
  record_op("bmm", {a, b}, c, [a, b, c, batch, m, k, n]() mutable {
    auto g = c.grad();
    if (a.requires_grad()) {
      std::vector<double> da(batch * m * k, 0.0);
      for (std::size_t s = 0; s < batch; ++s) {
        gemm_nt(g.data() + s * m * n, b.data().data() + s * k * n, da.data() + s * m * k, m, n, k);
      }
      a.accumulate_grad(da);
    }
    if (b.requires_grad()) {
      std::vector<double> db(batch * k * n, 0.0);
      for (std::size_t s = 0; s < batch; ++s) {
        gemm_tn(a.data().data() + s * m * k, g.data() + s * m * n, db.data() + s * k * n, m, k, n);
      }
      b.accumulate_grad(db);
    }
  });
  return c;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() < 1 || weight.rank() != 2 || x.shape().back() != weight.dim(0)) {
    shape_error("linear", x.shape(), weight.shape());
  }
  const std::size_t k = weight.dim(0), n = weight.dim(1);
  const std::size_t rows = x.numel() / k;
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != n)) shape_error("linear", weight.shape(), bias.shape());

  std::vector<double> out(rows * n, 0.0);
  if (has_bias) {
    auto bv = bias.data();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bv.begin(), bv.end(), out.begin() + r * n);
  }
  gemm_nn(x.data().data(), weight.data().data(), out.data(), rows, k, n);
  Shape out_shape = x.shape();
  out_shape.back() = n;
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));

  auto backward = [x, weight, bias, y, rows, k, n, has_bias]() mutable {
    auto g = y.grad();
    if (x.requires_grad()) {
      std::vector<double> dx(rows * k, 0.0);
      gemm_nt(g.data(), weight.data().data(), dx.data(), rows, n, k);
      x.accumulate_grad(dx);
    }
    if (weight.requires_grad()) {
      std::vector<double> dw(k * n, 0.0);
      gemm_tn(x.data().data(), g.data(), dw.data(), rows, k, n);
      weight.accumulate_grad(dw);
    }
    if (has_bias && bias.requires_grad()) {
      std::vector<double> db(n, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) db[j] += g[r * n + j];
      }
      bias.accumulate_grad(db);
    }
  };
  if (has_bias) {
    record_op("linear", {x, weight, bias}, y, std::move(backward));
  } else {
    record_op("linear", {x, weight}, y, std::move(backward));
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  auto av = a.data(), bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Tensor c = Tensor::from_data(a.shape(), std::move(out));
  record_op("add", {a, b}, c, [a, b, c]() mutable {
    auto g = c.grad();
    if (a.requires_grad()) a.accumulate_grad(g);
    if (b.requires_grad()) b.accumulate_grad(g);
  });
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  auto av = a.data(), bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  Tensor c = Tensor::from_data(a.shape(), std::move(out));
  record_op("sub", {a, b}, c, [a, b, c]() mutable {
    auto g = c.grad();
    if (a.requires_grad()) a.accumulate_grad(g);
    if (b.requires_grad()) {
      std::vector<double> neg(g.begin(), g.end());
      for (auto& v : neg) v = -v;
      b.accumulate_grad(neg);
    }
  });
  return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  auto av = a.data(), bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tensor c = Tensor::from_data(a.shape(), std::move(out));
  record_op("mul", {a, b}, c, [a, b, c]() mutable {
    auto g = c.grad();
    if (a.requires_grad()) {
      auto bv = b.data();
      std::vector<double> da(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * bv[i];
      a.accumulate_grad(da);
    }
    if (b.requires_grad()) {
      auto av = a.data();
      std::vector<double> db(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) db[i] = g[i] * av[i];
      b.accumulate_grad(db);
    }
  });
  return c;
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x, [](double v) { return sigmoid_scalar(v); }, [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [inv_sqrt_2pi](double v, double) {
        return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor elementwise(ElementwiseOp op, std::span<const Tensor> inputs) {
  const bool binary = op == ElementwiseOp::add || op == ElementwiseOp::mul;
  const std::size_t expected = binary ? 2 : 1;
  if (inputs.size() != expected) {
    throw ContractError("elementwise: expected " + std::to_string(expected) + " inputs, got " +
                        std::to_string(inputs.size()));
  }
  switch (op) {
    case ElementwiseOp::add: return add(inputs[0], inputs[1]);
    case ElementwiseOp::mul: return mul(inputs[0], inputs[1]);
    case ElementwiseOp::relu: return relu(inputs[0]);
    case ElementwiseOp::sigmoid: return sigmoid(inputs[0]);
    case ElementwiseOp::gelu: return gelu(inputs[0]);
  }
  throw ContractError("elementwise: unknown op");
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  check_axis("softmax", x, axis);
  const auto& s = x.shape();
  const std::size_t outer = prod(s, 0, axis), len = s[axis], inner = prod(s, axis + 1, s.size());
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double mx = xv[base];
      for (std::size_t a = 1; a < len; ++a) mx = std::max(mx, xv[base + a * inner]);
      double total = 0.0;
      for (std::size_t a = 0; a < len; ++a) {
        const double e = std::exp(xv[base + a * inner] - mx);
        out[base + a * inner] = e;
        total += e;
      }
      for (std::size_t a = 0; a < len; ++a) out[base + a * inner] /= total;
    }
  }
  Tensor y = Tensor::from_data(s, std::move(out));
  record_op("softmax", {x}, y, [x, y, outer, len, inner]() mutable {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto yv = y.data();
    std::vector<double> dx(g.size());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        double dot = 0.0;
        for (std::size_t a = 0; a < len; ++a) dot += g[base + a * inner] * yv[base + a * inner];
        for (std::size_t a = 0; a < len; ++a) {
          const std::size_t idx = base + a * inner;
          dx[idx] = yv[idx] * (g[idx] - dot);
        }
      }
    }
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() < 1) shape_error("layer_norm", x.shape(), "has no feature axis");
  const std::size_t n = x.shape().back();
  if (gain.shape() != Shape{n}) shape_error("layer_norm", x.shape(), gain.shape());
  if (bias.shape() != Shape{n}) shape_error("layer_norm", x.shape(), bias.shape());
  const std::size_t rows = x.numel() / n;
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  std::vector<double> xhat(xv.size());
  std::vector<double> rstd(rows);
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mu) * rstd[r];
      xhat[r * n + j] = h;
      out[r * n + j] = h * gv[j] + bv[j];
    }
  }
  Tensor y = Tensor::from_data(x.shape(), std::move(out));
  record_op("layer_norm", {x, gain, bias}, y,
            [x, gain, bias, y, xhat = std::move(xhat), rstd = std::move(rstd), rows, n]() mutable {
              auto g = y.grad();
              if (x.requires_grad()) {
                auto gv = gain.data();
                std::vector<double> dx(rows * n);
                for (std::size_t r = 0; r < rows; ++r) {
                  double mean_d = 0.0, mean_dx = 0.0;
                  for (std::size_t j = 0; j < n; ++j) {
                    const double d = g[r * n + j] * gv[j];
                    mean_d += d;
                    mean_dx += d * xhat[r * n + j];
                  }
                  mean_d /= static_cast<double>(n);
                  mean_dx /= static_cast<double>(n);
                  for (std::size_t j = 0; j < n; ++j) {
                    const double d = g[r * n + j] * gv[j];
                    dx[r * n + j] = rstd[r] * (d - mean_d - xhat[r * n + j] * mean_dx);
                  }
                }
                x.accumulate_grad(dx);
              }
              if (gain.requires_grad()) {
                std::vector<double> dg(n, 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                  for (std::size_t j = 0; j < n; ++j) dg[j] += g[r * n + j] * xhat[r * n + j];
                }
                gain.accumulate_grad(dg);
              }
              if (bias.requires_grad()) {
                std::vector<double> db(n, 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                  for (std::size_t j = 0; j < n; ++j) db[j] += g[r * n + j];
                }
                bias.accumulate_grad(db);
              }
            });
  return y;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& first = parts[0].shape();
  check_axis("concat", parts[0], axis);
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_error("concat", first, s);
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) shape_error("concat", first, s);
    }
    out_shape[axis] += s[axis];
  }
  const std::size_t outer = prod(first, 0, axis), inner = prod(first, axis + 1, first.size());
  const std::size_t out_chunk = out_shape[axis] * inner;
  std::vector<double> out(outer * out_chunk);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t chunk = p.shape()[axis] * inner;
    auto pv = p.data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * chunk, chunk, out.begin() + o * out_chunk + offset);
    }
    offsets.push_back(offset);
    offset += chunk;
  }
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  record_op("concat", parts, y, [inputs, offsets, y, outer, out_chunk, inner, axis]() mutable {
    auto g = y.grad();
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (!inputs[k].requires_grad()) continue;
      const std::size_t chunk = inputs[k].shape()[axis] * inner;
      std::vector<double> d(outer * chunk);
      for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(g.begin() + o * out_chunk + offsets[k], chunk, d.begin() + o * chunk);
      }
      inputs[k].accumulate_grad(d);
    }
  });
  return y;
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  const Tensor parts[] = {a, b};
  return concat(std::span<const Tensor>(parts), axis);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  check_axis("slice", x, axis);
  const Shape& s = x.shape();
  if (length == 0 || start + length > s[axis]) {
    shape_error("slice", s, "cannot take [" + std::to_string(start) + ", " + std::to_string(start + length) +
                                ") on axis " + std::to_string(axis));
  }
  const std::size_t outer = prod(s, 0, axis), inner = prod(s, axis + 1, s.size());
  const std::size_t in_chunk = s[axis] * inner, out_chunk = length * inner, skip = start * inner;
  auto xv = x.data();
  std::vector<double> out(outer * out_chunk);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(xv.begin() + o * in_chunk + skip, out_chunk, out.begin() + o * out_chunk);
  }
  Shape out_shape = s;
  out_shape[axis] = length;
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
  record_op("slice", {x}, y, [x, y, outer, in_chunk, out_chunk, skip]() mutable {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    std::vector<double> dx(x.numel(), 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(g.begin() + o * out_chunk, out_chunk, dx.begin() + o * in_chunk + skip);
    }
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("stack: no inputs");
  const Shape& s = parts[0].shape();
  std::vector<double> out;
  out.reserve(parts.size() * parts[0].numel());
  for (const auto& p : parts) {
    if (p.shape() != s) shape_error("stack", s, p.shape());
    auto pv = p.data();
    out.insert(out.end(), pv.begin(), pv.end());
  }
  Shape out_shape;
  out_shape.push_back(parts.size());
  out_shape.insert(out_shape.end(), s.begin(), s.end());
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  record_op("stack", parts, y, [inputs, y]() mutable {
    auto g = y.grad();
    const std::size_t chunk = inputs[0].numel();
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (inputs[k].requires_grad()) inputs[k].accumulate_grad(g.subspan(k * chunk, chunk));
    }
  });
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  Tensor y = Tensor::from_data(std::move(shape), x.to_vector());
  record_op("reshape", {x}, y, [x, y]() mutable {
    if (x.requires_grad()) x.accumulate_grad(y.grad());
  });
  return y;
}

Tensor permute(const Tensor& x, std::span<const std::size_t> order) {
  const Shape& s = x.shape();
  const std::size_t rank = s.size();
  if (order.size() != rank) shape_error("permute", s, "does not match permutation of length " + std::to_string(order.size()));
  std::vector<bool> seen(rank, false);
  for (auto o : order) {
    if (o >= rank || seen[o]) shape_error("permute", s, "given an invalid axis permutation");
    seen[o] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t d = rank; d-- > 1;) in_strides[d - 1] = in_strides[d] * s[d];
  Shape out_shape(rank);
  std::vector<std::size_t> stride_of_out(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    out_shape[d] = s[order[d]];
    stride_of_out[d] = in_strides[order[d]];
  }
  // source[i] = input offset feeding output element i
  const std::size_t total = x.numel();
  std::vector<std::size_t> source(total);
  std::vector<std::size_t> index(rank, 0);
  std::size_t in_offset = 0;
  for (std::size_t i = 0; i < total; ++i) {
    source[i] = in_offset;
    for (std::size_t d = rank; d-- > 0;) {
      ++index[d];
      in_offset += stride_of_out[d];
      if (index[d] < out_shape[d]) break;
      in_offset -= stride_of_out[d] * out_shape[d];
      index[d] = 0;
    }
  }
  auto xv = x.data();
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) out[i] = xv[source[i]];
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
  record_op("permute", {x}, y, [x, y, source = std::move(source)]() mutable {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    std::vector<double> dx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dx[source[i]] = g[i];
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor permute(const Tensor& x, std::initializer_list<std::size_t> order) {
  return permute(x, std::span<const std::size_t>(order.begin(), order.size()));
}

Tensor embedding(const Tensor& table, std::span<const std::int64_t> ids, const Shape& index_shape) {
  if (table.rank() != 2) shape_error("embedding", table.shape(), "is not a [vocab × dim] table");
  if (shape_numel(index_shape) != ids.size()) {
    shape_error("embedding", index_shape, "does not hold " + std::to_string(ids.size()) + " ids");
  }
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  auto tv = table.data();
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("embedding: id " + std::to_string(ids[i]) + " out of range for table of " +
                           std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.begin() + ids[i] * d, d, out.begin() + i * d);
  }
  Shape out_shape = index_shape;
  out_shape.push_back(d);
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
  std::vector<std::int64_t> id_copy(ids.begin(), ids.end());
  record_op("embedding", {table}, y, [table, y, id_copy = std::move(id_copy), d]() mutable {
    auto g = y.grad();
    std::vector<double> dt(table.numel(), 0.0);
    for (std::size_t i = 0; i < id_copy.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) dt[id_copy[i] * d + j] += g[i * d + j];
    }
    table.accumulate_grad(dt);
  });
  return y;
}

Tensor gather_rows(const Tensor& x, std::span<const std::int64_t> rows, const Shape& out_prefix) {
  if (x.rank() < 1) shape_error("gather_rows", x.shape(), "has no row axis");
  if (shape_numel(out_prefix) != rows.size()) {
    shape_error("gather_rows", out_prefix, "does not hold " + std::to_string(rows.size()) + " rows");
  }
  const std::size_t w = x.shape().back();
  const std::size_t num_rows = x.numel() / w;
  auto xv = x.data();
  std::vector<double> out(rows.size() * w, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == -1) continue;
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= num_rows) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) + " out of range for shape " +
                           shape_to_string(x.shape()));
    }
    std::copy_n(xv.begin() + rows[i] * w, w, out.begin() + i * w);
  }
  Shape out_shape = out_prefix;
  out_shape.push_back(w);
  Tensor y = Tensor::from_data(std::move(out_shape), std::move(out));
  std::vector<std::int64_t> row_copy(rows.begin(), rows.end());
  record_op("gather_rows", {x}, y, [x, y, row_copy = std::move(row_copy), w]() mutable {
    auto g = y.grad();
    std::vector<double> dx(x.numel(), 0.0);
    for (std::size_t i = 0; i < row_copy.size(); ++i) {
      if (row_copy[i] < 0) continue;
      for (std::size_t j = 0; j < w; ++j) dx[row_copy[i] * w + j] += g[i * w + j];
    }
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto xv = x.data();
  std::vector<double> mask(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < p ? 0.0 : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  Tensor y = Tensor::from_data(x.shape(), std::move(out));
  record_op("dropout", {x}, y, [x, y, mask = std::move(mask)]() mutable {
    auto g = y.grad();
    std::vector<double> dx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] = g[i] * mask[i];
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor y = Tensor::scalar(total);
  record_op("sum", {x}, y, [x, y]() mutable {
    std::vector<double> dx(x.numel(), y.grad()[0]);
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor mean(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double n = static_cast<double>(x.numel());
  Tensor y = Tensor::scalar(total / n);
  record_op("mean", {x}, y, [x, y, n]() mutable {
    std::vector<double> dx(x.numel(), y.grad()[0] / n);
    x.accumulate_grad(dx);
  });
  return y;
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets) {
  if (targets.size() != logits.numel()) {
    shape_error("bce_with_logits", logits.shape(), "does not match " + std::to_string(targets.size()) + " targets");
  }
  auto z = logits.data();
  const double n = static_cast<double>(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    // max(z, 0) - z t + log(1 + e^{-|z|})
    total += std::max(z[i], 0.0) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  Tensor y = Tensor::scalar(total / n);
  std::vector<double> t(targets.begin(), targets.end());
  record_op("bce_with_logits", {logits}, y, [logits, y, t = std::move(t), n]() mutable {
    const double g = y.grad()[0];
    auto z = logits.data();
    std::vector<double> dz(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) dz[i] = g * (sigmoid_scalar(z[i]) - t[i]) / n;
    logits.accumulate_grad(dz);
  });
  return y;
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    shape_error("cross_entropy", logits.shape(), "does not match " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  auto z = logits.data();
  std::vector<double> probs(z.size());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= classes) {
      throw ContractError("cross_entropy: label " + std::to_string(labels[r]) + " out of range for " +
                          std::to_string(classes) + " classes");
    }
    const double* row = z.data() + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double se = 0.0;
    for (std::size_t c = 0; c < classes; ++c) se += std::exp(row[c] - mx);
    const double lse = mx + std::log(se);
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row[c] - lse);
    total += lse - row[labels[r]];
  }
  const double n = static_cast<double>(rows);
  Tensor y = Tensor::scalar(total / n);
  std::vector<std::size_t> label_copy(labels.begin(), labels.end());
  record_op("cross_entropy", {logits}, y,
            [logits, y, probs = std::move(probs), label_copy = std::move(label_copy), classes, n]() mutable {
              const double g = y.grad()[0];
              std::vector<double> dz(probs.size());
              for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = g * probs[i] / n;
              for (std::size_t r = 0; r < label_copy.size(); ++r) dz[r * classes + label_copy[r]] -= g / n;
              logits.accumulate_grad(dz);
            });
  return y;
}

}  // namespace relgate
