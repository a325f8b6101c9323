#include "unipo/payloads.hpp"

#include <algorithm>
#include <cmath>

#include "unipo/engine.hpp"

namespace unipo {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string dump_canonical(const Json& j) { return j.dump(); }

Json report_to_json(const ValidationReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations)
    violations.push_back(Json{{"invariant", v.invariant}, {"path", v.path}, {"message", v.message}});
  return Json{{"valid", report.ok()}, {"violations", std::move(violations)}};
}

Json step_objective_to_json(const StepObjective& o) {
  Json j = Json::object();
  j["value"] = o.value;
  j["included_groups"] = o.included_groups;
  Json weights = Json::array();
  for (const auto& g : o.token_weights) {
    Json gj = Json::array();
    for (const auto& r : g) gj.push_back(r);
    weights.push_back(std::move(gj));
  }
  j["token_weights"] = std::move(weights);
  return j;
}

Json token_objective_to_json(const TokenObjective& t) {
  Json j = Json::object();
  j["ratio"] = t.ratio;
  j["advantage"] = t.advantage;
  j["surrogate"] = t.surrogate;
  j["kl_term"] = t.kl_term;
  j["objective"] = t.objective;
  j["clipped"] = t.clipped;
  return j;
}

Json run_summary_json(const TrainingRun& run) {
  Json indices = Json::array();
  std::size_t responses = 0;
  for (const auto& s : run.steps) {
    indices.push_back(s.index);
    for (const auto& g : s.groups) responses += g.responses.size();
  }
  Json j = Json::object();
  j["run_id"] = run.run_id;
  j["algorithm_id"] = run.algorithm_id;
  j["model_name"] = run.model_name;
  j["task_name"] = run.task_name;
  j["n_steps"] = run.steps.size();
  j["n_responses"] = responses;
  j["step_indices"] = std::move(indices);
  j["params"] = params_to_json(run.params);
  return j;
}

Json step_payload(const TrainingRun& run, std::size_t pos, const StepEvaluation& eval, const AlgorithmDefinition& algo) {
  const Step& step = run.steps.at(pos);
  double max_abs = 0.0;
  Json groups = Json::array();
  for (std::size_t g = 0; g < step.groups.size(); ++g) {
    const ResponseGroup& group = step.groups[g];
    Json responses = Json::array();
    for (std::size_t r = 0; r < group.responses.size(); ++r) {
      const Response& resp = group.responses[r];
      Json tokens = Json::array();
      for (std::size_t t = 0; t < resp.tokens.size(); ++t) {
        const TokenObjective& obj = eval.tokens[g][r][t];
        max_abs = std::max(max_abs, std::abs(obj.objective));
        Json tj = Json::object();
        tj["text"] = resp.tokens[t].text;
        const Json fields = token_objective_to_json(obj);
        for (auto it = fields.begin(); it != fields.end(); ++it) tj[it.key()] = *it;
        tj["weight"] = eval.objective.token_weights[g][r][t];
        tokens.push_back(std::move(tj));
      }
      Json rj = Json::object();
      rj["reward"] = resp.reward;
      rj["length"] = resp.tokens.size();
      rj["tokens"] = std::move(tokens);
      responses.push_back(std::move(rj));
    }
    Json gj = Json::object();
    gj["prompt_text"] = group.prompt_text;
    gj["included"] = static_cast<bool>(eval.group_included[g]);
    gj["filtered"] = group.filtered ? Json(*group.filtered) : Json(nullptr);
    gj["responses"] = std::move(responses);
    groups.push_back(std::move(gj));
  }
  Json j = Json::object();
  j["run_id"] = run.run_id;
  j["step"] = step.index;
  j["algorithm_id"] = algo.algorithm_id;
  j["beta_effective"] = eval.beta_effective;
  j["step_objective"] = step_objective_to_json(eval.objective);
  j["max_abs_objective"] = max_abs;
  j["groups"] = std::move(groups);
  return j;
}

Json token_payload(const TrainingRun& run, std::size_t pos, const StepEvaluation& eval, const AlgorithmDefinition& algo,
                   const TokenPath& path) {
  const Step& step = run.steps.at(pos);
  const Token& tok = token_at(step, path);
  const Response& resp = step.groups[path.group].responses[path.response];
  const TokenObjective& obj = eval.at(path);
  const double weight = eval.weight(path);
  const AlgorithmParams& p = run.params;

  Json j = Json::object();
  j["run_id"] = run.run_id;
  j["step"] = step.index;
  j["algorithm_id"] = algo.algorithm_id;
  j["path"] = Json{{"group", path.group}, {"response", path.response}, {"token", path.token}};
  j["text"] = tok.text;
  j["inputs"] = Json{{"logprob_policy", tok.logprob_policy},
                     {"logprob_old", tok.logprob_old},
                     {"logprob_ref", optional_number(tok.logprob_ref)},
                     {"value_estimate", optional_number(tok.value_estimate)}};
  j["reward"] = resp.reward;
  j["group_included"] = static_cast<bool>(eval.group_included[path.group]);
  j["target_binding"] = binding_name(algo.target().binding);
  j["advantage_mode"] = advantage_mode_name(algo.advantage_mode());
  j["aggregation_kind"] = aggregation_kind_name(algo.aggregation_kind());
  j["ratio"] = obj.ratio;
  j["advantage"] = obj.advantage;
  if (algo.target().binding == Binding::ClippedRatio) {
    const double lower = 1.0 - p.eps_low, upper = 1.0 + p.eps_high;
    j["clip"] = Json{{"eps_low", p.eps_low},
                     {"eps_high", p.eps_high},
                     {"lower", lower},
                     {"upper", upper},
                     {"unclipped", obj.ratio * obj.advantage},
                     {"clamped", std::clamp(obj.ratio, lower, upper) * obj.advantage},
                     {"branch", obj.clipped ? "clipped" : "unclipped"}};
  } else {
    j["clip"] = nullptr;
  }
  j["surrogate"] = obj.surrogate;
  j["clipped"] = obj.clipped;
  j["kl_term"] = obj.kl_term;
  j["beta"] = eval.beta_effective;
  j["objective"] = obj.objective;
  j["weight"] = weight;
  j["contribution"] = weight * obj.objective + 0.0;  // + 0.0 folds -0 to 0
  return j;
}

Json error_to_json(const Error& e) {
  Json j = Json::object();
  j["code"] = error_code_name(e.code());
  j["message"] = e.what();
  j["path"] = e.path();
  if (e.offset()) j["offset"] = *e.offset();
  return j;
}

}  // namespace unipo
