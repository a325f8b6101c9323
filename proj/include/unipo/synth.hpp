#pragma once

// Deterministic synthetic training runs at desk scale.

#include <cstdint>
#include <string>

#include "unipo/registry.hpp"
#include "unipo/schema.hpp"

namespace unipo {

enum class RewardScheme { Binary, Continuous };

struct SynthConfig {
  std::uint64_t seed = 0;
  std::int64_t n_steps = 10;
  std::int64_t groups_per_step = 2;
  std::int64_t group_size = 4;
  std::int64_t len_min = 3;
  std::int64_t len_max = 10;
  RewardScheme reward_scheme = RewardScheme::Binary;
  // Binary: p_correct moves linearly from start to end across the steps.
  double p_correct_start = 0.5;
  double p_correct_end = 0.5;
  // Continuous: rewards uniform in [reward_low, reward_high].
  double reward_low = -1.0;
  double reward_high = 1.0;
  // Half-width of the uniform spread of logprob_policy - logprob_old.
  double drift = 0.1;
  std::string algorithm_id = "grpo";
};

/// Throws InvalidConfig. The algorithm decides which optional token fields
/// (reference log-probs, value estimates) are emitted.
TrainingRun generate_run(const SynthConfig& config, const AlgorithmRegistry& registry);

/// splitmix64 finalizer; per-step generators are seeded with
/// mix_seed(seed ^ mix_seed(step + 1)).
std::uint64_t mix_seed(std::uint64_t x) noexcept;

}  // namespace unipo
