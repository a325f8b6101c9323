#pragma once

// Full evaluation of one step under one algorithm: constraints, advantages,
// per-token objectives and aggregation.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "unipo/aggregation.hpp"
#include "unipo/registry.hpp"
#include "unipo/schema.hpp"

namespace unipo {

struct TokenPath {
  std::size_t group = 0;
  std::size_t response = 0;
  std::size_t token = 0;
};

struct StepEvaluation {
  std::int64_t step_index = 0;
  std::vector<bool> group_included;
  double beta_effective = 0.0;
  ObjectiveGrid tokens;  // computed for every group, included or not
  StepObjective objective;

  const TokenObjective& at(const TokenPath& p) const { return tokens[p.group][p.response][p.token]; }
  double weight(const TokenPath& p) const {
    return objective.token_weights[p.group][p.response][p.token];
  }
};

/// Per-response advantage vector (one entry per token) for one group.
std::vector<std::vector<double>> response_advantages(const ResponseGroup& group,
                                                     const AlgorithmDefinition& algo,
                                                     const AlgorithmParams& params);

StepEvaluation evaluate_step(const Step& step, const AlgorithmDefinition& algo,
                             const AlgorithmParams& params);

/// Position of the step whose `index` field equals `step_index`. Throws NotFound.
std::size_t find_step(const TrainingRun& run, std::int64_t step_index);

/// Bounds-checked token lookup. Throws NotFound.
const Token& token_at(const Step& step, const TokenPath& path);

}  // namespace unipo
