#include "unipo/schema.hpp"

#include <cmath>
#include <initializer_list>
#include <set>

#include "unipo/error.hpp"
#include "unipo/registry.hpp"

namespace unipo {

std::string path_field(const std::string& base, std::string_view field) {
  if (base.empty()) return std::string(field);
  std::string out = base;
  out += '.';
  out += field;
  return out;
}

std::string path_index(const std::string& base, std::string_view field, std::size_t i) {
  return path_field(base, field) + "[" + std::to_string(i) + "]";
}

std::size_t total_tokens(const Step& step) {
  std::size_t n = 0;
  for (const auto& g : step.groups)
    for (const auto& r : g.responses) n += r.tokens.size();
  return n;
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Schema, path + ": " + what, path);
}

const char* type_name(const Json& j) { return j.type_name(); }

// Reads fields of one object, tracking which keys were consumed so the rest
// can be kept as extension fields.
class ObjectReader {
 public:
  ObjectReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object())
      schema_error(path_.empty() ? "$" : path_, std::string("expected object, got ") + type_name(node_));
  }

  const std::string& path() const { return path_; }

  const Json* optional(std::string_view key) {
    consumed_.emplace(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const Json& required(std::string_view key) {
    const Json* j = optional(key);
    if (!j) schema_error(path_field(path_, key), "missing required field");
    return *j;
  }

  std::string string(std::string_view key) {
    const Json& j = required(key);
    if (!j.is_string()) ill_typed(key, "string", j);
    return j.get<std::string>();
  }

  double number(std::string_view key) { return as_number(key, required(key)); }

  std::optional<double> optional_number(std::string_view key) {
    const Json* j = optional(key);
    if (!j) return std::nullopt;
    return as_number(key, *j);
  }

  std::int64_t integer(std::string_view key) {
    const Json& j = required(key);
    if (!j.is_number_integer()) ill_typed(key, "integer", j);
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
      schema_error(path_field(path_, key), "integer out of range");
    return j.get<std::int64_t>();
  }

  const Json& array(std::string_view key) {
    const Json& j = required(key);
    if (!j.is_array()) ill_typed(key, "array", j);
    return j;
  }

  Json extras() const {
    Json out = Json::object();
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!consumed_.count(it.key())) out[it.key()] = it.value();
    return out;
  }

  [[noreturn]] void ill_typed(std::string_view key, const char* expected, const Json& got) const {
    schema_error(path_field(path_, key), std::string("expected ") + expected + ", got " + type_name(got));
  }

 private:
  double as_number(std::string_view key, const Json& j) const {
    if (!j.is_number()) ill_typed(key, "number", j);
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema_error(path_field(path_, key), "value is not finite");
    return v;
  }

  const Json& node_;
  std::string path_;
  std::set<std::string, std::less<>> consumed_;
};

double logprob(ObjectReader& r, std::string_view key) {
  const double v = r.number(key);
  if (v > 0.0) schema_error(path_field(r.path(), key), "log-probability must be <= 0");
  return v;
}

std::optional<double> optional_logprob(ObjectReader& r, std::string_view key) {
  auto v = r.optional_number(key);
  if (v && *v > 0.0) schema_error(path_field(r.path(), key), "log-probability must be <= 0");
  return v;
}

Token token_from_json(const Json& node, const std::string& path) {
  ObjectReader r(node, path);
  Token t;
  t.text = r.string("text");
  t.logprob_policy = logprob(r, "logprob_policy");
  t.logprob_old = logprob(r, "logprob_old");
  t.logprob_ref = optional_logprob(r, "logprob_ref");
  t.value_estimate = r.optional_number("value_estimate");
  t.extra = r.extras();
  return t;
}

Response response_from_json(const Json& node, const std::string& path) {
  ObjectReader r(node, path);
  Response resp;
  const Json& tokens = r.array("tokens");
  resp.reward = r.number("reward");
  resp.precomputed_advantage = r.optional_number("precomputed_advantage");
  resp.tokens.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    resp.tokens.push_back(token_from_json(tokens[i], path_index(path, "tokens", i)));
  resp.extra = r.extras();
  return resp;
}

ResponseGroup group_from_json(const Json& node, const std::string& path) {
  ObjectReader r(node, path);
  ResponseGroup g;
  g.prompt_text = r.string("prompt_text");
  const Json& responses = r.array("responses");
  if (const Json* f = r.optional("filtered")) {
    if (!f->is_boolean()) r.ill_typed("filtered", "boolean", *f);
    g.filtered = f->get<bool>();
  }
  for (std::size_t i = 0; i < responses.size(); ++i)
    g.responses.push_back(response_from_json(responses[i], path_index(path, "responses", i)));
  g.extra = r.extras();
  return g;
}

Step step_from_json(const Json& node, const std::string& path) {
  ObjectReader r(node, path);
  Step s;
  s.index = r.integer("index");
  if (s.index < 0) schema_error(path_field(path, "index"), "step index must be non-negative");
  const Json& groups = r.array("groups");
  for (std::size_t i = 0; i < groups.size(); ++i)
    s.groups.push_back(group_from_json(groups[i], path_index(path, "groups", i)));
  if (const Json* m = r.optional("precomputed_metrics")) {
    const std::string mpath = path_field(path, "precomputed_metrics");
    if (!m->is_object()) r.ill_typed("precomputed_metrics", "object", *m);
    std::vector<std::pair<std::string, double>> metrics;
    for (auto it = m->begin(); it != m->end(); ++it) {
      if (!it.value().is_number())
        schema_error(path_field(mpath, it.key()), std::string("expected number, got ") + type_name(it.value()));
      metrics.emplace_back(it.key(), it.value().get<double>());
    }
    s.precomputed_metrics = std::move(metrics);
  }
  s.extra = r.extras();
  return s;
}

void put_extras(Json& out, const Json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it)
    if (!out.contains(it.key())) out[it.key()] = it.value();
}

Json token_to_json(const Token& t) {
  Json j = Json::object();
  j["text"] = t.text;
  j["logprob_policy"] = t.logprob_policy;
  j["logprob_old"] = t.logprob_old;
  if (t.logprob_ref) j["logprob_ref"] = *t.logprob_ref;
  if (t.value_estimate) j["value_estimate"] = *t.value_estimate;
  put_extras(j, t.extra);
  return j;
}

Json response_to_json(const Response& r) {
  Json j = Json::object();
  Json tokens = Json::array();
  for (const auto& t : r.tokens) tokens.push_back(token_to_json(t));
  j["tokens"] = std::move(tokens);
  j["reward"] = r.reward;
  if (r.precomputed_advantage) j["precomputed_advantage"] = *r.precomputed_advantage;
  put_extras(j, r.extra);
  return j;
}

Json group_to_json(const ResponseGroup& g) {
  Json j = Json::object();
  j["prompt_text"] = g.prompt_text;
  Json responses = Json::array();
  for (const auto& r : g.responses) responses.push_back(response_to_json(r));
  j["responses"] = std::move(responses);
  if (g.filtered) j["filtered"] = *g.filtered;
  put_extras(j, g.extra);
  return j;
}

Json step_to_json(const Step& s) {
  Json j = Json::object();
  j["index"] = s.index;
  Json groups = Json::array();
  for (const auto& g : s.groups) groups.push_back(group_to_json(g));
  j["groups"] = std::move(groups);
  if (s.precomputed_metrics) {
    Json m = Json::object();
    for (const auto& [k, v] : *s.precomputed_metrics) m[k] = v;
    j["precomputed_metrics"] = std::move(m);
  }
  put_extras(j, s.extra);
  return j;
}

}  // namespace

AlgorithmParams params_from_json(const Json& node, const std::string& path) {
  ObjectReader r(node, path);
  AlgorithmParams p;
  p.group_size = r.integer("group_size_G");
  p.eps_low = r.number("eps_low");
  p.eps_high = r.number("eps_high");
  p.kl_coeff = r.number("kl_coeff_beta");
  p.max_len = r.integer("max_len_L");
  if (auto v = r.optional_number("gamma")) p.gamma = *v;
  if (auto v = r.optional_number("lambda_gae")) p.lambda_gae = *v;
  if (auto v = r.optional_number("std_floor")) p.std_floor = *v;

  if (p.group_size < 1) schema_error(path_field(path, "group_size_G"), "must be a positive integer");
  if (!(p.eps_low > 0.0)) schema_error(path_field(path, "eps_low"), "must be > 0");
  if (!(p.eps_high > 0.0)) schema_error(path_field(path, "eps_high"), "must be > 0");
  if (p.kl_coeff < 0.0) schema_error(path_field(path, "kl_coeff_beta"), "must be >= 0");
  if (p.max_len < 1) schema_error(path_field(path, "max_len_L"), "must be a positive integer");
  if (p.gamma < 0.0 || p.gamma > 1.0) schema_error(path_field(path, "gamma"), "must lie in [0, 1]");
  if (p.lambda_gae < 0.0 || p.lambda_gae > 1.0)
    schema_error(path_field(path, "lambda_gae"), "must lie in [0, 1]");
  if (!(p.std_floor > 0.0)) schema_error(path_field(path, "std_floor"), "must be > 0");
  p.extra = r.extras();
  return p;
}

Json params_to_json(const AlgorithmParams& p) {
  Json j = Json::object();
  j["group_size_G"] = p.group_size;
  j["eps_low"] = p.eps_low;
  j["eps_high"] = p.eps_high;
  j["kl_coeff_beta"] = p.kl_coeff;
  j["max_len_L"] = p.max_len;
  j["gamma"] = p.gamma;
  j["lambda_gae"] = p.lambda_gae;
  j["std_floor"] = p.std_floor;
  put_extras(j, p.extra);
  return j;
}

TrainingRun run_from_json(const Json& doc) {
  ObjectReader r(doc, "");
  const std::int64_t version = r.integer("schema_version");
  if (version != kSchemaVersion)
    schema_error("schema_version", "unsupported schema version " + std::to_string(version));
  TrainingRun run;
  run.run_id = r.string("run_id");
  run.algorithm_id = r.string("algorithm_id");
  run.model_name = r.string("model_name");
  run.task_name = r.string("task_name");
  run.params = params_from_json(r.required("params"), "params");
  const Json& steps = r.array("steps");
  run.steps.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i)
    run.steps.push_back(step_from_json(steps[i], path_index("", "steps", i)));
  run.extra = r.extras();
  return run;
}

TrainingRun parse_run(std::string_view raw) {
  Json doc;
  try {
    doc = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Syntax, e.what(), {}, e.byte);
  }
  return run_from_json(doc);
}

Json run_to_json(const TrainingRun& run) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["run_id"] = run.run_id;
  j["algorithm_id"] = run.algorithm_id;
  j["model_name"] = run.model_name;
  j["task_name"] = run.task_name;
  j["params"] = params_to_json(run.params);
  Json steps = Json::array();
  for (const auto& s : run.steps) steps.push_back(step_to_json(s));
  j["steps"] = std::move(steps);
  put_extras(j, run.extra);
  return j;
}

std::string serialize_run(const TrainingRun& run) {
  std::string out = run_to_json(run).dump(2);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Reporter {
 public:
  void add(std::string invariant, std::string path, std::string message) {
    report.violations.push_back({std::move(invariant), std::move(path), std::move(message)});
  }
  ValidationReport report;
};

void check_logprob(Reporter& rep, double v, const std::string& path) {
  if (!std::isfinite(v) || v > 0.0) rep.add("logprob-range", path, "log-probability must be finite and <= 0");
}

void check_params(Reporter& rep, const AlgorithmParams& p) {
  auto range = [&](bool ok, const char* field, const char* what) {
    if (!ok) rep.add("param-range", path_field("params", field), what);
  };
  range(p.group_size >= 1, "group_size_G", "must be a positive integer");
  range(std::isfinite(p.eps_low) && p.eps_low > 0.0, "eps_low", "must be > 0");
  range(std::isfinite(p.eps_high) && p.eps_high > 0.0, "eps_high", "must be > 0");
  range(std::isfinite(p.kl_coeff) && p.kl_coeff >= 0.0, "kl_coeff_beta", "must be >= 0");
  range(p.max_len >= 1, "max_len_L", "must be a positive integer");
  range(p.gamma >= 0.0 && p.gamma <= 1.0, "gamma", "must lie in [0, 1]");
  range(p.lambda_gae >= 0.0 && p.lambda_gae <= 1.0, "lambda_gae", "must lie in [0, 1]");
  range(std::isfinite(p.std_floor) && p.std_floor > 0.0, "std_floor", "must be > 0");
  if (p.eps_low > p.eps_high) rep.add("eps-order", "params.eps_low", "eps_low must not exceed eps_high");
}

}  // namespace

ValidationReport validate_run(const TrainingRun& run, const AlgorithmRegistry& registry) {
  Reporter rep;
  const auto algo = registry.find(run.algorithm_id);
  if (!algo) rep.add("unknown-algorithm", "algorithm_id", "algorithm '" + run.algorithm_id + "' is not registered");
  check_params(rep, run.params);

  const bool group_relative = algo && algo->group_relative();
  const bool needs_ref = algo && algo->has_kl();
  const AdvantageMode mode = algo ? algo->advantage_mode() : AdvantageMode::RawReward;

  std::size_t longest = 0;
  std::string longest_path;
  std::optional<std::int64_t> previous_index;
  for (std::size_t si = 0; si < run.steps.size(); ++si) {
    const Step& step = run.steps[si];
    const std::string spath = path_index("", "steps", si);
    if (previous_index && step.index <= *previous_index)
      rep.add("step-index-order", path_field(spath, "index"), "step indices must be strictly increasing");
    if (step.index < 0) rep.add("step-index-order", path_field(spath, "index"), "step index must be non-negative");
    previous_index = step.index;
    if (step.groups.empty()) rep.add("empty-step", path_field(spath, "groups"), "a step needs at least one group");

    for (std::size_t gi = 0; gi < step.groups.size(); ++gi) {
      const ResponseGroup& group = step.groups[gi];
      const std::string gpath = path_index(spath, "groups", gi);
      if (group.responses.empty())
        rep.add("empty-group", path_field(gpath, "responses"), "a group needs at least one response");
      else if (group_relative && static_cast<std::int64_t>(group.responses.size()) != run.params.group_size)
        rep.add("group-size-mismatch", path_field(gpath, "responses"),
                "group has " + std::to_string(group.responses.size()) + " responses, params declare G = " +
                    std::to_string(run.params.group_size));

      for (std::size_t ri = 0; ri < group.responses.size(); ++ri) {
        const Response& resp = group.responses[ri];
        const std::string rpath = path_index(gpath, "responses", ri);
        if (!std::isfinite(resp.reward)) rep.add("non-finite-reward", path_field(rpath, "reward"), "reward must be finite");
        if (resp.tokens.empty()) rep.add("empty-response", path_field(rpath, "tokens"), "a response needs at least one token");
        if (resp.tokens.size() > longest) {
          longest = resp.tokens.size();
          longest_path = path_field(rpath, "tokens");
        }
        if (resp.precomputed_advantage && !std::isfinite(*resp.precomputed_advantage))
          rep.add("non-finite-advantage", path_field(rpath, "precomputed_advantage"), "advantage must be finite");
        if (algo && mode == AdvantageMode::Precomputed && !resp.precomputed_advantage)
          rep.add("precomputed-advantage-missing", path_field(rpath, "precomputed_advantage"),
                  "algorithm reads advantages from the log");
        const bool needs_values = algo && mode == AdvantageMode::Gae && !resp.precomputed_advantage;

        for (std::size_t ti = 0; ti < resp.tokens.size(); ++ti) {
          const Token& tok = resp.tokens[ti];
          const std::string tpath = path_index(rpath, "tokens", ti);
          check_logprob(rep, tok.logprob_policy, path_field(tpath, "logprob_policy"));
          check_logprob(rep, tok.logprob_old, path_field(tpath, "logprob_old"));
          if (tok.logprob_ref) check_logprob(rep, *tok.logprob_ref, path_field(tpath, "logprob_ref"));
          if (algo) {
            if (needs_ref && !tok.logprob_ref)
              rep.add("kl-input-missing", path_field(tpath, "logprob_ref"), "algorithm has a KL component");
            else if (!needs_ref && tok.logprob_ref)
              rep.add("kl-input-unexpected", path_field(tpath, "logprob_ref"), "algorithm has no KL component");
            if (needs_values && !tok.value_estimate)
              rep.add("value-estimate-missing", path_field(tpath, "value_estimate"),
                      "GAE needs a value estimate when no precomputed advantage is given");
            else if (!needs_values && tok.value_estimate)
              rep.add("value-estimate-unexpected", path_field(tpath, "value_estimate"),
                      "value estimates are only read by GAE without a precomputed advantage");
          }
          if (tok.value_estimate && !std::isfinite(*tok.value_estimate))
            rep.add("non-finite-value", path_field(tpath, "value_estimate"), "value estimate must be finite");
        }
      }
    }
  }
  if (run.params.max_len >= 1 && static_cast<std::int64_t>(longest) > run.params.max_len)
    rep.add("max-len-exceeded", "params.max_len_L",
            "longest response (" + longest_path + ") has " + std::to_string(longest) + " tokens");
  return std::move(rep.report);
}

}  // namespace unipo
