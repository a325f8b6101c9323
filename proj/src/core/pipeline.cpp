#include "unipo/pipeline.hpp"

#include "unipo/constraints.hpp"
#include "unipo/engine.hpp"
#include "unipo/error.hpp"

namespace unipo {

std::vector<std::vector<double>> response_advantages(const ResponseGroup& group, const AlgorithmDefinition& algo,
                                                     const AlgorithmParams& params) {
  std::vector<std::vector<double>> out(group.responses.size());
  const AdvantageMode mode = algo.advantage_mode();
  switch (mode) {
    case AdvantageMode::GroupStandardized:
    case AdvantageMode::GroupCentered: {
      const std::vector<double> adv = group_advantage(group_rewards(group), mode, params.std_floor);
      for (std::size_t r = 0; r < out.size(); ++r) out[r].assign(group.responses[r].tokens.size(), adv[r]);
      break;
    }
    case AdvantageMode::RawReward:
      for (std::size_t r = 0; r < out.size(); ++r)
        out[r].assign(group.responses[r].tokens.size(), group.responses[r].reward);
      break;
    case AdvantageMode::Precomputed:
      for (std::size_t r = 0; r < out.size(); ++r) {
        const Response& resp = group.responses[r];
        if (!resp.precomputed_advantage)
          throw Error(ErrorCode::MissingPrecomputedAdvantage, "response has no precomputed_advantage",
                      "responses[" + std::to_string(r) + "].precomputed_advantage");
        out[r].assign(resp.tokens.size(), *resp.precomputed_advantage);
      }
      break;
    case AdvantageMode::Gae:
      for (std::size_t r = 0; r < out.size(); ++r) {
        const Response& resp = group.responses[r];
        if (resp.precomputed_advantage) {
          out[r].assign(resp.tokens.size(), *resp.precomputed_advantage);
          continue;
        }
        std::vector<double> values;
        values.reserve(resp.tokens.size());
        for (std::size_t t = 0; t < resp.tokens.size(); ++t) {
          if (!resp.tokens[t].value_estimate)
            throw Error(ErrorCode::InvalidArgument, "GAE needs value_estimate on every token",
                        "responses[" + std::to_string(r) + "].tokens[" + std::to_string(t) + "].value_estimate");
          values.push_back(*resp.tokens[t].value_estimate);
        }
        out[r] = gae_advantage(values, resp.reward, params.gamma, params.lambda_gae);
      }
      break;
  }
  return out;
}

StepEvaluation evaluate_step(const Step& step, const AlgorithmDefinition& algo, const AlgorithmParams& params) {
  StepEvaluation eval;
  eval.step_index = step.index;
  const ConstraintOutcome constraints = apply_constraints(step, algo.constraint_specs(), params);
  eval.beta_effective = constraints.beta_effective;
  eval.group_included.assign(step.groups.size(), false);
  for (std::size_t g : constraints.included) eval.group_included[g] = true;

  eval.tokens.resize(step.groups.size());
  for (std::size_t g = 0; g < step.groups.size(); ++g) {
    const ResponseGroup& group = step.groups[g];
    const auto advantages = response_advantages(group, algo, params);
    auto& grid = eval.tokens[g];
    grid.resize(group.responses.size());
    for (std::size_t r = 0; r < group.responses.size(); ++r) {
      const auto& tokens = group.responses[r].tokens;
      grid[r].reserve(tokens.size());
      for (std::size_t t = 0; t < tokens.size(); ++t)
        grid[r].push_back(token_objective(tokens[t], advantages[r][t], params, algo));
    }
  }
  eval.objective = aggregate_step(step, eval.tokens, algo.aggregation_kind(), params, constraints.included);
  return eval;
}

std::size_t find_step(const TrainingRun& run, std::int64_t step_index) {
  for (std::size_t i = 0; i < run.steps.size(); ++i)
    if (run.steps[i].index == step_index) return i;
  throw Error(ErrorCode::NotFound, "run '" + run.run_id + "' has no step " + std::to_string(step_index));
}

const Token& token_at(const Step& step, const TokenPath& p) {
  if (p.group >= step.groups.size() || p.response >= step.groups[p.group].responses.size() ||
      p.token >= step.groups[p.group].responses[p.response].tokens.size())
    throw Error(ErrorCode::NotFound, "no token at " + std::to_string(p.group) + "/" + std::to_string(p.response) +
                                         "/" + std::to_string(p.token) + " in step " + std::to_string(step.index));
  return step.groups[p.group].responses[p.response].tokens[p.token];
}

}  // namespace unipo
