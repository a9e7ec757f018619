#include "relgate/harness/metrics.hpp"

#include <algorithm>
#include <string>

#include "relgate/core/errors.hpp"

namespace relgate {

double F1Counts::precision() const {
  return predicted == 0 ? 0.0 : static_cast<double>(true_positive) / static_cast<double>(predicted);
}

double F1Counts::recall() const {
  return gold == 0 ? 0.0 : static_cast<double>(true_positive) / static_cast<double>(gold);
}

double F1Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

F1Counts& F1Counts::operator+=(const F1Counts& other) {
  true_positive += other.true_positive;
  predicted += other.predicted;
  gold += other.gold;
  return *this;
}

MicroF1 micro_f1(std::span<const std::vector<std::size_t>> predicted, std::span<const std::vector<std::size_t>> gold,
                 std::optional<std::size_t> excluded) {
  if (predicted.size() != gold.size()) {
    throw DimensionError("micro_f1: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(gold.size()) + " gold sets");
  }
  auto normalize = [&](const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> out;
    for (auto id : ids)
      if (!excluded || id != *excluded) out.push_back(id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  MicroF1 result;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto p = normalize(predicted[i]);
    const auto g = normalize(gold[i]);
    for (auto id : p) ++result.per_relation[id].predicted;
    for (auto id : g) ++result.per_relation[id].gold;
    std::size_t a = 0, b = 0;
    while (a < p.size() && b < g.size()) {
      if (p[a] < g[b]) {
        ++a;
      } else if (g[b] < p[a]) {
        ++b;
      } else {
        ++result.per_relation[p[a]].true_positive;
        ++a;
        ++b;
      }
    }
  }
  for (const auto& [id, c] : result.per_relation) result.total += c;
  return result;
}

}  // namespace relgate
