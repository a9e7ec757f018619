#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace relgate {

/// Tuple counts for micro-F1. A tuple is (instance index, relation id); each
/// instance's predictions and gold labels are treated as sets.
struct F1Counts {
  std::size_t true_positive = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  double precision() const;
  double recall() const;
  /// 2PR/(P+R), or 0 when P+R is 0.
  double f1() const;
  F1Counts& operator+=(const F1Counts& other);
  bool operator==(const F1Counts&) const = default;
};

struct MicroF1 {
  F1Counts total;
  std::map<std::size_t, F1Counts> per_relation;
};

/// `excluded` (the no-relation id) never counts as a predicted or gold tuple.
MicroF1 micro_f1(std::span<const std::vector<std::size_t>> predicted, std::span<const std::vector<std::size_t>> gold,
                 std::optional<std::size_t> excluded = std::nullopt);

}  // namespace relgate
