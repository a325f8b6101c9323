#include "unipo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "unipo/error.hpp"

namespace unipo {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace {

// mt19937_64 output is fixed by the standard; the transforms below are
// spelled out so runs are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

constexpr const char* kVocabulary[] = {"the", "sum", "is", "so", "we", "get", "x", "=", "+", "3", "7", "then", "answer", "."};

}  // namespace

TrainingRun generate_run(const SynthConfig& c, const AlgorithmRegistry& registry) {
  check(c.n_steps > 0, "n_steps must be positive");
  check(c.groups_per_step > 0, "groups_per_step must be positive");
  check(c.group_size > 0, "group_size_G must be positive");
  check(c.len_min >= 1 && c.len_min <= c.len_max, "len_range must satisfy 1 <= min <= max");
  check(c.p_correct_start >= 0.0 && c.p_correct_start <= 1.0, "p_correct_start must lie in [0, 1]");
  check(c.p_correct_end >= 0.0 && c.p_correct_end <= 1.0, "p_correct_end must lie in [0, 1]");
  check(std::isfinite(c.reward_low) && std::isfinite(c.reward_high) && c.reward_low <= c.reward_high,
        "reward range must be finite with low <= high");
  check(std::isfinite(c.drift) && c.drift >= 0.0, "drift must be finite and non-negative");
  const auto algo = registry.find(c.algorithm_id);
  check(algo != nullptr, "unknown algorithm '" + c.algorithm_id + "'");

  const bool with_ref = algo->has_kl();
  const AdvantageMode mode = algo->advantage_mode();

  TrainingRun run;
  run.run_id = "synth-" + c.algorithm_id + "-" + std::to_string(c.seed);
  run.algorithm_id = c.algorithm_id;
  run.model_name = "synthetic";
  run.task_name = "synthetic";
  run.params = algo->default_params;
  run.params.group_size = c.group_size;
  run.params.max_len = c.len_max;
  run.params.extra = Json::object();

  run.steps.reserve(static_cast<std::size_t>(c.n_steps));
  for (std::int64_t s = 0; s < c.n_steps; ++s) {
    Rng rng(mix_seed(c.seed ^ mix_seed(static_cast<std::uint64_t>(s) + 1)));
    const double progress = c.n_steps > 1 ? static_cast<double>(s) / static_cast<double>(c.n_steps - 1) : 0.0;
    const double p_correct = c.p_correct_start + (c.p_correct_end - c.p_correct_start) * progress;

    Step step;
    step.index = s;
    for (std::int64_t g = 0; g < c.groups_per_step; ++g) {
      ResponseGroup group;
      group.prompt_text = "synthetic prompt " + std::to_string(s) + "." + std::to_string(g);
      // Continuous rewards almost never tie; force some zero-variance groups.
      const bool tie = c.reward_scheme == RewardScheme::Continuous && rng.bernoulli(0.15);
      const double tied_reward = rng.uniform(c.reward_low, c.reward_high);
      for (std::int64_t i = 0; i < c.group_size; ++i) {
        Response resp;
        if (c.reward_scheme == RewardScheme::Binary)
          resp.reward = rng.bernoulli(p_correct) ? 1.0 : 0.0;
        else
          resp.reward = tie ? tied_reward : rng.uniform(c.reward_low, c.reward_high);

        bool precomputed = false;
        if (mode == AdvantageMode::Precomputed) precomputed = true;
        if (mode == AdvantageMode::Gae) precomputed = rng.bernoulli(0.25);
        if (precomputed) resp.precomputed_advantage = rng.uniform(-1.0, 1.0);

        const std::int64_t len = rng.integer(c.len_min, c.len_max);
        resp.tokens.reserve(static_cast<std::size_t>(len));
        for (std::int64_t t = 0; t < len; ++t) {
          Token tok;
          tok.text = kVocabulary[rng.integer(0, static_cast<std::int64_t>(std::size(kVocabulary)) - 1)];
          tok.logprob_old = -rng.exponential();
          tok.logprob_policy = std::min(0.0, tok.logprob_old + c.drift * (2.0 * rng.uniform() - 1.0));
          if (with_ref) tok.logprob_ref = std::min(0.0, tok.logprob_policy + c.drift * (2.0 * rng.uniform() - 1.0));
          if (mode == AdvantageMode::Gae && !precomputed) tok.value_estimate = rng.uniform();
          resp.tokens.push_back(std::move(tok));
        }
        group.responses.push_back(std::move(resp));
      }
      step.groups.push_back(std::move(group));
    }
    run.steps.push_back(std::move(step));
  }
  return run;
}

}  // namespace unipo
