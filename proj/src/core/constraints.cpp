#include "unipo/constraints.hpp"

#include "unipo/engine.hpp"

namespace unipo {

bool dynamic_sampling_filter(const ResponseGroup& group, double std_floor) {
  const std::vector<double> rewards = group_rewards(group);
  if (rewards.empty()) return false;
  return reward_moments(rewards).stddev >= std_floor;
}

ConstraintOutcome apply_constraints(const Step& step, std::span<const ConstraintSpec> specs,
                                    const AlgorithmParams& params) {
  ConstraintOutcome out;
  bool dynamic_sampling = false;
  for (const auto& spec : specs) {
    if (spec.kind == ConstraintKind::DynamicSampling) dynamic_sampling = true;
    if (spec.kind == ConstraintKind::KlPenalty) out.beta_effective = params.kl_coeff;
  }
  for (std::size_t g = 0; g < step.groups.size(); ++g)
    if (!dynamic_sampling || dynamic_sampling_filter(step.groups[g], params.std_floor)) out.included.push_back(g);
  return out;
}

}  // namespace unipo
