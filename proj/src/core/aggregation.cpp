#include "unipo/aggregation.hpp"

#include "unipo/error.hpp"

namespace unipo {

namespace {

WeightGrid zero_grid(const Step& step) {
  WeightGrid w(step.groups.size());
  for (std::size_t g = 0; g < step.groups.size(); ++g) {
    const auto& responses = step.groups[g].responses;
    w[g].resize(responses.size());
    for (std::size_t r = 0; r < responses.size(); ++r) w[g][r].assign(responses[r].tokens.size(), 0.0);
  }
  return w;
}

std::size_t group_tokens(const ResponseGroup& group) {
  std::size_t n = 0;
  for (const auto& r : group.responses) n += r.tokens.size();
  return n;
}

void check_included(const Step& step, std::span<const std::size_t> included) {
  for (std::size_t g : included)
    if (g >= step.groups.size())
      throw Error(ErrorCode::InvalidArgument, "included group " + std::to_string(g) + " is out of range");
}

}  // namespace

WeightGrid token_weights(const Step& step, AggregationKind kind, const AlgorithmParams& params,
                         std::span<const std::size_t> included) {
  check_included(step, included);
  WeightGrid w = zero_grid(step);
  if (included.empty()) return w;
  const double n_groups = static_cast<double>(included.size());

  if (kind == AggregationKind::BatchTokenMean) {
    std::size_t total = 0;
    for (std::size_t g : included) total += group_tokens(step.groups[g]);
    if (total == 0) return w;
    const double weight = 1.0 / static_cast<double>(total);
    for (std::size_t g : included)
      for (auto& resp : w[g])
        for (double& x : resp) x = weight;
    return w;
  }

  for (std::size_t g : included) {
    const ResponseGroup& group = step.groups[g];
    const double group_size = static_cast<double>(group.responses.size());
    switch (kind) {
      case AggregationKind::SampleMean:
        for (std::size_t r = 0; r < group.responses.size(); ++r) {
          const double len = static_cast<double>(group.responses[r].tokens.size());
          const double weight = 1.0 / (n_groups * group_size * len);
          for (double& x : w[g][r]) x = weight;
        }
        break;
      case AggregationKind::GlobalTokenMean: {
        const std::size_t tokens = group_tokens(group);
        if (tokens == 0) break;
        const double weight = 1.0 / (n_groups * static_cast<double>(tokens));
        for (auto& resp : w[g])
          for (double& x : resp) x = weight;
        break;
      }
      case AggregationKind::ConstantNorm: {
        for (std::size_t r = 0; r < group.responses.size(); ++r) {
          if (static_cast<std::int64_t>(group.responses[r].tokens.size()) > params.max_len)
            throw Error(ErrorCode::LengthExceedsLmax,
                        "response has " + std::to_string(group.responses[r].tokens.size()) +
                            " tokens, max_len_L is " + std::to_string(params.max_len),
                        "groups[" + std::to_string(g) + "].responses[" + std::to_string(r) + "].tokens");
        }
        const double weight = 1.0 / (n_groups * group_size * static_cast<double>(params.max_len));
        for (auto& resp : w[g])
          for (double& x : resp) x = weight;
        break;
      }
      case AggregationKind::BatchTokenMean:
        break;
    }
  }
  return w;
}

StepObjective aggregate_step(const Step& step, const ObjectiveGrid& objectives, AggregationKind kind,
                             const AlgorithmParams& params, std::span<const std::size_t> included) {
  StepObjective out;
  out.token_weights = token_weights(step, kind, params, included);
  out.included_groups.assign(included.begin(), included.end());
  CompensatedSum sum;
  for (std::size_t g = 0; g < step.groups.size(); ++g) {
    for (std::size_t r = 0; r < step.groups[g].responses.size(); ++r) {
      const auto& weights = out.token_weights[g][r];
      for (std::size_t t = 0; t < weights.size(); ++t) {
        if (weights[t] == 0.0) continue;
        sum.add(weights[t] * objectives.at(g).at(r).at(t).objective);
      }
    }
  }
  out.value = sum.value();
  return out;
}

}  // namespace unipo
