#pragma once

// Per-token objective kernels: importance ratio, advantages, clipped
// surrogate, k3 KL estimate, and the per-algorithm token objective.
//
// Sign convention: every value is an objective term to be maximized. A
// trainer's "policy loss" is the negation.

#include <span>
#include <vector>

#include "unipo/kinds.hpp"
#include "unipo/schema.hpp"

namespace unipo {

struct AlgorithmDefinition;

struct TokenObjective {
  double ratio = 1.0;
  double advantage = 0.0;
  double surrogate = 0.0;
  double kl_term = 0.0;
  double objective = 0.0;
  bool clipped = false;

  bool operator==(const TokenObjective&) const = default;
};

struct SurrogateResult {
  double value = 0.0;
  bool clipped = false;
};

/// exp(logprob_policy - logprob_old). Throws NonFiniteInput.
double importance_ratio(const Token& token);

/// Group-relative advantages. `mode` must be GroupStandardized or
/// GroupCentered. Standardized uses the population std; a std below
/// `std_floor` yields exact zeros. Throws EmptyGroup.
std::vector<double> group_advantage(std::span<const double> rewards, AdvantageMode mode,
                                    double std_floor = kDefaultStdFloor);

/// GAE with the reward on the final token and V_T = 0. Throws EmptyResponse.
std::vector<double> gae_advantage(std::span<const double> values, double terminal_reward,
                                  double gamma, double lambda_gae);

/// min(ratio*A, clamp(ratio, 1-eps_low, 1+eps_high)*A); `clipped` is true iff
/// the clamped branch is strictly smaller.
SurrogateResult clipped_surrogate(double ratio, double advantage, double eps_low, double eps_high);

/// k3 estimate exp(d) - d - 1 with d = logprob_ref - logprob_policy.
/// Throws MissingReferenceLogprob.
double kl_k3(const Token& token);

/// Target log pi, strength = reward, no clip and no KL.
TokenObjective reinforce_term(const Token& token, double reward);

/// Dispatches on the definition's target binding and KL constraint.
/// Throws UnknownComponentKind for a target the engine does not implement.
TokenObjective token_objective(const Token& token, double advantage, const AlgorithmParams& params,
                               const AlgorithmDefinition& algo);

/// Population mean and std of a reward list.
struct RewardMoments {
  double mean = 0.0;
  double stddev = 0.0;
};
RewardMoments reward_moments(std::span<const double> rewards);

std::vector<double> group_rewards(const ResponseGroup& group);

}  // namespace unipo
