#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "unipo/engine.hpp"
#include "unipo/kinds.hpp"
#include "unipo/schema.hpp"

namespace unipo {

/// Values aligned with a step's tokens: [group][response][token].
template <typename T>
using TokenGrid = std::vector<std::vector<std::vector<T>>>;

using WeightGrid = TokenGrid<double>;
using ObjectiveGrid = TokenGrid<TokenObjective>;

struct StepObjective {
  double value = 0.0;
  WeightGrid token_weights;
  std::vector<std::size_t> included_groups;

  bool operator==(const StepObjective&) const = default;
};

/// Weight of every token in the step. Tokens of groups not listed in
/// `included` get weight 0; each included group is normalized by its kind
/// and then scaled by 1/N with N = included.size(). BatchTokenMean instead
/// normalizes once over every included token. Throws LengthExceedsLmax
/// under ConstantNorm when a response is longer than max_len_L.
WeightGrid token_weights(const Step& step, AggregationKind kind, const AlgorithmParams& params,
                         std::span<const std::size_t> included);

/// Sum of weight * objective, reduced left-to-right over groups, responses
/// and tokens with Kahan compensation.
StepObjective aggregate_step(const Step& step, const ObjectiveGrid& objectives, AggregationKind kind,
                             const AlgorithmParams& params, std::span<const std::size_t> included);

/// Kahan-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace unipo
