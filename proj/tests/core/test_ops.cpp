#include <cmath>
#include <numeric>

#include "doctest.h"
#include "relgate/core/autograd.hpp"
#include "relgate/core/errors.hpp"
#include "relgate/core/ops.hpp"
#include "relgate/core/rng.hpp"
#include "support/oracles.hpp"

using namespace relgate;

namespace {

std::vector<double> vec(const Tensor& t) { return t.to_vector(); }

// Weighted sum with fixed random weights, so every output element gets a
// distinct upstream gradient.
Tensor probe_loss(const Tensor& y, const std::vector<double>& weights) {
  return sum(mul(y, Tensor::from_data(y.shape(), weights)));
}

double probe_value(const Tensor& y, const std::vector<double>& weights) {
  double acc = 0.0;
  auto v = y.data();
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * weights[i];
  return acc;
}

template <typename Fn>
double op_gradient_error(std::vector<Tensor> inputs, Fn op, oracle::Gen& gen) {
  Tape::current().clear();
  for (auto& t : inputs) t.zero_grad();
  Tensor y = op(inputs);
  auto weights = gen.values(y.numel());
  backward(probe_loss(y, weights));
  double worst = 0.0;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    auto numeric = oracle::numeric_gradient(t, [&] { return probe_value(op(inputs), weights); });
    worst = std::max(worst, oracle::max_relative_error(t.grad(), numeric));
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul hand cases") {
  auto eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  auto col = Tensor::from_data({2, 1}, {3, 4});
  CHECK(vec(matmul(eye, col)) == std::vector<double>{3, 4});

  auto row = Tensor::from_data({1, 2}, {1, 2});
  CHECK(vec(matmul(row, col)) == std::vector<double>{11});
}

TEST_CASE("matmul forward and backward match triple-loop oracle") {
  oracle::Gen gen(11);
  auto a = gen.tensor({3, 4});
  auto b = gen.tensor({4, 2});
  auto c = matmul(a, b);
  auto expected = oracle::triple_loop_matmul(a.to_vector(), b.to_vector(), 3, 4, 2);
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(c.data()[i] == doctest::Approx(expected[i]).epsilon(1e-12));

  auto w = gen.values(6);
  backward(probe_loss(c, w));
  // dA = dC·Bᵀ, dB = Aᵀ·dC with dC = w
  auto da = oracle::triple_loop_matmul(w, oracle::transpose(b.to_vector(), 4, 2), 3, 2, 4);
  auto db = oracle::triple_loop_matmul(oracle::transpose(a.to_vector(), 3, 4), w, 4, 3, 2);
  for (std::size_t i = 0; i < da.size(); ++i) CHECK(std::abs(a.grad()[i] - da[i]) < 1e-12);
  for (std::size_t i = 0; i < db.size(); ++i) CHECK(std::abs(b.grad()[i] - db[i]) < 1e-12);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({4, 5});
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
}

TEST_CASE("elementwise definitions") {
  CHECK(vec(relu(Tensor::from_data({3}, {-1, 0, 2}))) == std::vector<double>{0, 0, 2});
  CHECK(sigmoid(Tensor::from_data({1}, {0})).item() == 0.5);

  auto x = Tensor::from_data({1}, {0.0}, true);
  backward(sum(sigmoid(x)));
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
  auto numeric = oracle::numeric_gradient(x, [&] { return sigmoid(x).item(); });
  CHECK(std::abs(numeric[0] - 0.25) < 1e-9);

  const Tensor pair[] = {Tensor::from_data({2}, {1, 2}), Tensor::from_data({2}, {3, 4})};
  CHECK(vec(elementwise(ElementwiseOp::add, pair)) == std::vector<double>{4, 6});
  CHECK(vec(elementwise(ElementwiseOp::mul, pair)) == std::vector<double>{3, 8});
  CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
  CHECK_THROWS_AS(elementwise(ElementwiseOp::relu, pair), ContractError);
}

TEST_CASE("sigmoid is stable for large magnitudes") {
  auto y = sigmoid(Tensor::from_data({2}, {-800, 800}));
  CHECK(y.data()[0] >= 0.0);
  CHECK(y.data()[1] == 1.0);
}

TEST_CASE("softmax cases") {
  auto u = softmax(Tensor::from_data({3}, {0, 0, 0}), 0);
  for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  auto s = softmax(Tensor::from_data({2}, {1000, 0}), 0);
  CHECK(std::isfinite(s.data()[0]));
  CHECK(s.data()[0] == doctest::Approx(1.0));
  CHECK(s.data()[1] < 1e-300);

  oracle::Gen gen(5);
  auto r = softmax(gen.tensor({5}, false, -3, 3), 0);
  double total = 0.0;
  for (double v : r.data()) {
    CHECK(v > 0.0);
    total += v;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);

  CHECK_THROWS_AS(softmax(Tensor::zeros({2, 2}), 2), DimensionError);
}

TEST_CASE("softmax along a middle axis sums to one per fiber") {
  oracle::Gen gen(6);
  auto x = gen.tensor({2, 3, 4}, false, -5, 5);
  auto y = softmax(x, 1);
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t i = 0; i < 4; ++i) {
      double total = 0.0;
      for (std::size_t a = 0; a < 3; ++a) total += y.data()[(o * 3 + a) * 4 + i];
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("layer_norm cases") {
  auto ones = Tensor::full({3}, 1.0);
  auto zeros = Tensor::zeros({3});
  auto c = layer_norm(Tensor::from_data({1, 3}, {5, 5, 5}), ones, zeros);
  CHECK(vec(c) == std::vector<double>{0, 0, 0});

  auto y = layer_norm(Tensor::from_data({1, 3}, {1, 2, 3}), ones, zeros, 0.0);
  double mu = 0.0, var = 0.0;
  for (double v : y.data()) mu += v / 3.0;
  for (double v : y.data()) var += (v - mu) * (v - mu) / 3.0;
  CHECK(std::abs(mu) < 1e-10);
  CHECK(std::abs(var - 1.0) < 1e-10);

  oracle::Gen gen(9);
  std::vector<Tensor> in{gen.tensor({4, 5}), gen.tensor({5}), gen.tensor({5})};
  auto err = op_gradient_error(in, [](std::vector<Tensor>& t) { return layer_norm(t[0], t[1], t[2]); }, gen);
  CHECK(err < 1e-5);

  CHECK_THROWS_AS(layer_norm(Tensor::zeros({2, 3}), Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
}

TEST_CASE("concat and slice") {
  auto a = Tensor::from_data({2}, {1, 2});
  auto b = Tensor::from_data({1}, {3});
  auto c = concat(a, b, 0);
  CHECK(vec(c) == std::vector<double>{1, 2, 3});
  CHECK(vec(slice(c, 0, 0, 2)) == vec(a));
  CHECK(vec(slice(c, 0, 2, 1)) == vec(b));

  oracle::Gen gen(3);
  std::vector<Tensor> in{gen.tensor({2, 3}), gen.tensor({2, 2})};
  auto err = op_gradient_error(in, [](std::vector<Tensor>& t) { return concat(t[0], t[1], 1); }, gen);
  CHECK(err < 1e-5);

  CHECK_THROWS_AS(concat(Tensor::zeros({2, 3}), Tensor::zeros({3, 3}), 1), DimensionError);
  CHECK_THROWS_AS(slice(Tensor::zeros({2}), 0, 1, 2), DimensionError);
}

TEST_CASE("concat then slice restores 2d inputs exactly") {
  oracle::Gen gen(4);
  auto a = gen.tensor({3, 2}, false);
  auto b = gen.tensor({3, 5}, false);
  auto c = concat(a, b, 1);
  CHECK(vec(slice(c, 1, 0, 2)) == vec(a));
  CHECK(vec(slice(c, 1, 2, 5)) == vec(b));
}

TEST_CASE("backward basic cases") {
  auto p = Tensor::from_data({2, 3}, {1, -2, 3, 0.5, 7, -1}, true);
  backward(sum(p));
  for (double g : p.grad()) CHECK(g == 1.0);

  p.zero_grad();
  backward(scale(sum(mul(p, p)), 0.5));
  for (std::size_t i = 0; i < p.numel(); ++i) CHECK(p.grad()[i] == p.data()[i]);

  CHECK_THROWS_AS(backward(p), ContractError);
  CHECK_THROWS_AS(backward(Tensor::scalar(1.0)), ContractError);
  CHECK(Tape::current().size() == 0);
}

TEST_CASE("no-grad guard records nothing") {
  auto p = Tensor::from_data({2}, {1, 2}, true);
  {
    NoGradGuard guard;
    auto y = sum(mul(p, p));
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(Tape::current().size() == 0);
  auto y = sum(p);
  CHECK(y.requires_grad());
  Tape::current().clear();
}

TEST_CASE("tape is topologically ordered") {
  auto p = Tensor::from_data({2}, {1, 2}, true);
  auto y = sum(relu(add(p, p)));
  auto entries = Tape::current().entries();
  REQUIRE(entries.size() == 3);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    bool found = false;
    for (auto id : entries[i].input_ids) found = found || id == entries[i - 1].output_id;
    CHECK(found);
  }
  backward(y);
}

TEST_CASE("two-layer MLP gradients match finite differences") {
  oracle::Gen gen(21);
  auto x = gen.tensor({4, 3}, false);
  auto w1 = gen.tensor({3, 5});
  auto b1 = gen.tensor({5});
  auto w2 = gen.tensor({5, 2});
  auto b2 = gen.tensor({2});
  auto loss_fn = [&] { return mean(sigmoid(linear(gelu(linear(x, w1, b1)), w2, b2))); };
  backward(loss_fn());
  for (auto* t : {&w1, &b1, &w2, &b2}) {
    auto numeric = oracle::numeric_gradient(*t, [&] { return loss_fn().item(); });
    CHECK(oracle::max_relative_error(t->grad(), numeric) < 1e-5);
  }
}

TEST_CASE("every differentiable op passes finite differences over 100 random shapes") {
  oracle::Gen gen(1234);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = gen.index(1, 4), k = gen.index(1, 4), n = gen.index(1, 4);
    std::vector<std::pair<const char*, double>> errors;
    {
      std::vector<Tensor> in{gen.tensor({m, k}), gen.tensor({k, n})};
      errors.emplace_back("matmul", op_gradient_error(in, [](auto& t) { return matmul(t[0], t[1]); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({2, m, k}), gen.tensor({2, k, n})};
      errors.emplace_back("bmm", op_gradient_error(in, [](auto& t) { return bmm(t[0], t[1]); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, 2, k}), gen.tensor({k, n}), gen.tensor({n})};
      errors.emplace_back("linear",
                          op_gradient_error(in, [](auto& t) { return linear(t[0], t[1], t[2]); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, n}), gen.tensor({m, n})};
      errors.emplace_back("add", op_gradient_error(in, [](auto& t) { return add(t[0], t[1]); }, gen));
      errors.emplace_back("sub", op_gradient_error(in, [](auto& t) { return sub(t[0], t[1]); }, gen));
      errors.emplace_back("mul", op_gradient_error(in, [](auto& t) { return mul(t[0], t[1]); }, gen));
    }
    {
      // keep relu inputs away from the kink
      auto vals = gen.values(m * n, 0.05, 1.0);
      for (auto& v : vals) v = gen.uniform() < 0 ? -v : v;
      std::vector<Tensor> in{Tensor::from_data({m, n}, vals, true)};
      errors.emplace_back("relu", op_gradient_error(in, [](auto& t) { return relu(t[0]); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, n}, true, -3, 3)};
      errors.emplace_back("sigmoid", op_gradient_error(in, [](auto& t) { return sigmoid(t[0]); }, gen));
      errors.emplace_back("gelu", op_gradient_error(in, [](auto& t) { return gelu(t[0]); }, gen));
      errors.emplace_back("scale", op_gradient_error(in, [](auto& t) { return scale(t[0], -1.7); }, gen));
      const std::size_t axis = gen.index(0, 1);
      errors.emplace_back("softmax", op_gradient_error(in, [axis](auto& t) { return softmax(t[0], axis); }, gen));
      errors.emplace_back("reshape", op_gradient_error(in, [m, n](auto& t) { return reshape(t[0], {n, m}); }, gen));
      errors.emplace_back("slice", op_gradient_error(in, [n](auto& t) { return slice(t[0], 1, n - 1, 1); }, gen));
      errors.emplace_back("sum", op_gradient_error(in, [](auto& t) { return sum(t[0]); }, gen));
      errors.emplace_back("mean", op_gradient_error(in, [](auto& t) { return mean(t[0]); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, k, n})};
      errors.emplace_back("permute", op_gradient_error(in, [](auto& t) { return permute(t[0], {2, 0, 1}); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, k + 1}), gen.tensor({k + 1}), gen.tensor({k + 1})};
      errors.emplace_back("layer_norm",
                          op_gradient_error(in, [](auto& t) { return layer_norm(t[0], t[1], t[2]); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, k}), gen.tensor({n, k})};
      errors.emplace_back("concat", op_gradient_error(in, [](auto& t) { return concat(t[0], t[1], 0); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({k, n}), gen.tensor({k, n})};
      errors.emplace_back("stack", op_gradient_error(in, [](auto& t) { return stack(t); }, gen));
    }
    {
      std::vector<std::int64_t> ids{0, static_cast<std::int64_t>(k), 0, 1};
      std::vector<Tensor> in{gen.tensor({k + 1, n})};
      errors.emplace_back("embedding",
                          op_gradient_error(in, [&ids](auto& t) { return embedding(t[0], ids, {2, 2}); }, gen));
      std::vector<std::int64_t> rows{1, -1, 0};
      errors.emplace_back("gather_rows",
                          op_gradient_error(in, [&rows](auto& t) { return gather_rows(t[0], rows, {3}); }, gen));
    }
    {
      std::vector<Tensor> in{gen.tensor({m, n}, true, -3, 3)};
      auto targets = gen.values(m * n, 0.0, 1.0);
      errors.emplace_back("bce",
                          op_gradient_error(in, [&](auto& t) { return bce_with_logits(t[0], targets); }, gen));
      std::vector<std::size_t> labels(m);
      for (auto& l : labels) l = gen.index(0, n - 1);
      errors.emplace_back("cross_entropy",
                          op_gradient_error(in, [&](auto& t) { return cross_entropy(t[0], labels); }, gen));
    }
    for (auto& [name, err] : errors) {
      INFO(name << " trial " << trial);
      CHECK(err < 1e-5);
      worst = std::max(worst, err);
    }
  }
  MESSAGE("worst op gradient relative error: " << worst);
}

TEST_CASE("relu-plus-residual output never falls below the residual") {
  oracle::Gen gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto h = gen.tensor({6}, false, -2, 2);
    auto z = gen.tensor({6}, false, -2, 2);
    auto out = add(relu(z), h);
    for (std::size_t i = 0; i < 6; ++i) CHECK(out.data()[i] - h.data()[i] >= 0.0);
  }
}

TEST_CASE("loss functions analytic values") {
  auto uniform = Tensor::zeros({1, 4});
  std::size_t label = 2;
  CHECK(cross_entropy(uniform, std::span(&label, 1)).item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  std::vector<double> gold{1, 0};
  CHECK(bce_with_logits(Tensor::zeros({2}), gold).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<std::size_t> bad{7};
  CHECK_THROWS_AS(cross_entropy(uniform, bad), ContractError);
}

TEST_CASE("embedding and gather reject out-of-range indices") {
  auto table = Tensor::zeros({3, 2});
  std::vector<std::int64_t> ids{3};
  CHECK_THROWS_AS(embedding(table, ids, {1}), DimensionError);
  std::vector<std::int64_t> rows{5};
  CHECK_THROWS_AS(gather_rows(table, rows, {1}), DimensionError);
}

TEST_CASE("dropout is seeded and scales kept units") {
  auto x = Tensor::full({1000}, 1.0);
  Rng r1(3), r2(3);
  auto a = dropout(x, 0.1, r1);
  auto b = dropout(x, 0.1, r2);
  CHECK(vec(a) == vec(b));
  std::size_t dropped = 0;
  for (double v : a.data()) {
    if (v == 0.0) {
      ++dropped;
    } else {
      CHECK(v == doctest::Approx(1.0 / 0.9));
    }
  }
  CHECK(dropped > 50);
  CHECK(dropped < 150);
  Rng r3(3);
  CHECK(vec(dropout(x, 0.0, r3)) == vec(x));
  CHECK_THROWS_AS(dropout(x, 1.0, r3), ConfigError);
}
