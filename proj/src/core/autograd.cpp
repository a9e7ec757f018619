#include "relgate/core/autograd.hpp"

#include <cmath>

#include "relgate/core/errors.hpp"

namespace relgate {

namespace {

thread_local bool g_grad_enabled = true;

#ifndef NDEBUG
bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}
#endif

}  // namespace

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void record_op(std::string op, std::initializer_list<Tensor> inputs, Tensor& output,
               std::function<void()> backward) {
  record_op(std::move(op), std::span<const Tensor>(inputs.begin(), inputs.size()), output, std::move(backward));
}

void record_op(std::string op, std::span<const Tensor> inputs, Tensor& output, std::function<void()> backward) {
#ifndef NDEBUG
  bool inputs_finite = true;
  for (const auto& t : inputs) inputs_finite = inputs_finite && all_finite(t.data());
  if (inputs_finite && !all_finite(output.data())) {
    throw ContractError(op + ": produced a non-finite value from finite inputs");
  }
#endif
  if (!g_grad_enabled) return;
  bool needs_grad = false;
  for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
  if (!needs_grad) return;

  output.set_requires_grad(true);
  TapeEntry entry;
  entry.op = std::move(op);
  entry.input_ids.reserve(inputs.size());
  for (const auto& t : inputs) entry.input_ids.push_back(t.id());
  entry.output_id = output.id();
  entry.backward = [out = output, fn = std::move(backward)]() {
    if (!out.has_grad()) return;
    fn();
  };
  Tape::current().push(std::move(entry));
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward() on a loss with no recorded graph");
  }
  Tensor seed = loss;
  seed.zero_grad();
  seed.mutable_grad()[0] = 1.0;

  auto& tape = Tape::current();
  auto entries = tape.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) it->backward();
  tape.clear();
}

}  // namespace relgate
