#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "unipo/registry.hpp"
#include "unipo/schema.hpp"

namespace unipo {

/// True keeps the group. A group whose reward std is below `std_floor`
/// (all-correct or all-wrong with binary rewards) is dropped.
bool dynamic_sampling_filter(const ResponseGroup& group, double std_floor = kDefaultStdFloor);

struct ConstraintOutcome {
  std::vector<std::size_t> included;
  double beta_effective = 0.0;
};

ConstraintOutcome apply_constraints(const Step& step, std::span<const ConstraintSpec> specs,
                                    const AlgorithmParams& params);

}  // namespace unipo
