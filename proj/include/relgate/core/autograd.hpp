#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "relgate/core/tensor.hpp"

namespace relgate {

/// One recorded forward operation. `backward` reads the output gradient and
/// accumulates into the inputs that require gradients.
struct TapeEntry {
  std::string op;
  std::vector<std::uint64_t> input_ids;
  std::uint64_t output_id = 0;
  std::function<void()> backward;
};

/// Per-thread operation tape. Entries are appended in execution order, so the
/// tape is always topologically sorted.
class Tape {
 public:
  static Tape& current();

  void push(TapeEntry entry) { entries_.push_back(std::move(entry)); }
  std::span<const TapeEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::vector<TapeEntry> entries_;
};

bool grad_enabled();

/// Disables recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Records `output` as produced by `op` from `inputs`. Does nothing unless
/// recording is enabled and at least one input requires a gradient; in that
/// case `output` is marked as requiring a gradient too. The backward closure
/// may assume `output.grad()` is populated when it runs.
void record_op(std::string op, std::initializer_list<Tensor> inputs, Tensor& output,
               std::function<void()> backward);
void record_op(std::string op, std::span<const Tensor> inputs, Tensor& output,
               std::function<void()> backward);

/// Replays the tape in reverse from a scalar `loss`, accumulating gradients
/// into every reachable tensor that requires one, then clears the tape.
void backward(const Tensor& loss);

}  // namespace relgate
