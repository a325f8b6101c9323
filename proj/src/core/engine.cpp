#include "unipo/engine.hpp"

#include <algorithm>
#include <cmath>

#include "unipo/aggregation.hpp"
#include "unipo/error.hpp"
#include "unipo/registry.hpp"

namespace unipo {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " is not finite");
}

}  // namespace

double importance_ratio(const Token& token) {
  require_finite(token.logprob_policy, "logprob_policy");
  require_finite(token.logprob_old, "logprob_old");
  return std::exp(token.logprob_policy - token.logprob_old);
}

RewardMoments reward_moments(std::span<const double> rewards) {
  RewardMoments m;
  if (rewards.empty()) return m;
  CompensatedSum sum;
  for (double r : rewards) sum.add(r);
  m.mean = sum.value() / static_cast<double>(rewards.size());
  CompensatedSum sq;
  for (double r : rewards) sq.add((r - m.mean) * (r - m.mean));
  m.stddev = std::sqrt(sq.value() / static_cast<double>(rewards.size()));
  return m;
}

std::vector<double> group_rewards(const ResponseGroup& group) {
  std::vector<double> out;
  out.reserve(group.responses.size());
  for (const auto& r : group.responses) out.push_back(r.reward);
  return out;
}

std::vector<double> group_advantage(std::span<const double> rewards, AdvantageMode mode, double std_floor) {
  if (rewards.empty()) throw Error(ErrorCode::EmptyGroup, "group has no responses");
  for (double r : rewards) require_finite(r, "reward");
  if (mode != AdvantageMode::GroupStandardized && mode != AdvantageMode::GroupCentered)
    throw Error(ErrorCode::InvalidArgument,
                "group_advantage needs a group-relative mode, got " + std::string(advantage_mode_name(mode)));

  const RewardMoments m = reward_moments(rewards);
  std::vector<double> out(rewards.size(), 0.0);
  if (mode == AdvantageMode::GroupStandardized) {
    if (m.stddev < std_floor) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - m.mean) / m.stddev;
  } else {
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = rewards[i] - m.mean;
  }
  // An exact tie with the mean would otherwise print as -0.
  for (double& a : out)
    if (a == 0.0) a = 0.0;
  return out;
}

std::vector<double> gae_advantage(std::span<const double> values, double terminal_reward, double gamma,
                                  double lambda_gae) {
  if (values.empty()) throw Error(ErrorCode::EmptyResponse, "GAE needs at least one value estimate");
  require_finite(terminal_reward, "terminal_reward");
  for (double v : values) require_finite(v, "value_estimate");
  const std::size_t n = values.size();
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double reward = (k + 1 == n) ? terminal_reward : 0.0;
    const double next_value = (k + 1 == n) ? 0.0 : values[k + 1];
    const double delta = reward + gamma * next_value - values[k];
    running = delta + gamma * lambda_gae * running;
    adv[k] = running;
  }
  return adv;
}

SurrogateResult clipped_surrogate(double ratio, double advantage, double eps_low, double eps_high) {
  require_finite(ratio, "ratio");
  require_finite(advantage, "advantage");
  require_finite(eps_low, "eps_low");
  require_finite(eps_high, "eps_high");
  const double unclipped = ratio * advantage;
  const double clamped = std::clamp(ratio, 1.0 - eps_low, 1.0 + eps_high) * advantage;
  if (clamped < unclipped) return {clamped, true};
  return {unclipped, false};
}

double kl_k3(const Token& token) {
  if (!token.logprob_ref) throw Error(ErrorCode::MissingReferenceLogprob, "token has no logprob_ref");
  require_finite(*token.logprob_ref, "logprob_ref");
  require_finite(token.logprob_policy, "logprob_policy");
  const double d = *token.logprob_ref - token.logprob_policy;
  // expm1 keeps precision for small d; the clamp guards the last-ulp case.
  return std::max(0.0, std::expm1(d) - d);
}

TokenObjective reinforce_term(const Token& token, double reward) {
  require_finite(token.logprob_policy, "logprob_policy");
  require_finite(reward, "reward");
  TokenObjective t;
  t.ratio = 1.0;
  t.advantage = reward;
  t.surrogate = reward * token.logprob_policy;
  t.kl_term = 0.0;
  t.objective = t.surrogate;
  t.clipped = false;
  return t;
}

TokenObjective token_objective(const Token& token, double advantage, const AlgorithmParams& params,
                               const AlgorithmDefinition& algo) {
  TokenObjective t;
  switch (algo.target().binding) {
    case Binding::ClippedRatio: {
      t.ratio = importance_ratio(token);
      t.advantage = advantage;
      const SurrogateResult s = clipped_surrogate(t.ratio, advantage, params.eps_low, params.eps_high);
      t.surrogate = s.value;
      t.clipped = s.clipped;
      break;
    }
    case Binding::LogProb:
      t = reinforce_term(token, advantage);
      break;
    default:
      throw Error(ErrorCode::UnknownComponentKind,
                  "target binding " + std::string(binding_name(algo.target().binding)) + " has no kernel");
  }
  if (algo.has_kl()) {
    t.kl_term = kl_k3(token);
    t.objective = t.surrogate - params.kl_coeff * t.kl_term;
  } else {
    t.kl_term = 0.0;
    t.objective = t.surrogate;
  }
  return t;
}

}  // namespace unipo
