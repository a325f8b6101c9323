#include "unipo/unipo.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "unipo/error.hpp"
#include "unipo/metrics.hpp"
#include "unipo/payloads.hpp"
#include "unipo/pipeline.hpp"
#include "unipo/registry.hpp"
#include "unipo/schema.hpp"
#include "unipo/service.hpp"
#include "unipo/synth.hpp"

struct unipo_registry {
  std::shared_ptr<unipo::AlgorithmRegistry> impl;
};

struct unipo_run {
  unipo::TrainingRun impl;
};

struct unipo_service {
  std::unique_ptr<unipo::ServiceState> impl;
};

namespace {

struct LastError {
  std::string message;
  std::string path;
  std::int64_t offset = -1;
};

thread_local LastError g_last_error;

unipo_status to_status(unipo::ErrorCode code) {
  using unipo::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return UNIPO_ERR_INVALID_ARGUMENT;
    case ErrorCode::Syntax: return UNIPO_ERR_SYNTAX;
    case ErrorCode::Schema: return UNIPO_ERR_SCHEMA;
    case ErrorCode::Validation: return UNIPO_ERR_VALIDATION;
    case ErrorCode::NotFound: return UNIPO_ERR_NOT_FOUND;
    case ErrorCode::NonFiniteInput: return UNIPO_ERR_NON_FINITE_INPUT;
    case ErrorCode::EmptyGroup: return UNIPO_ERR_EMPTY_GROUP;
    case ErrorCode::EmptyResponse: return UNIPO_ERR_EMPTY_RESPONSE;
    case ErrorCode::MissingReferenceLogprob: return UNIPO_ERR_MISSING_REFERENCE_LOGPROB;
    case ErrorCode::MissingPrecomputedAdvantage: return UNIPO_ERR_MISSING_PRECOMPUTED_ADVANTAGE;
    case ErrorCode::UnknownComponentKind: return UNIPO_ERR_UNKNOWN_COMPONENT_KIND;
    case ErrorCode::LengthExceedsLmax: return UNIPO_ERR_LENGTH_EXCEEDS_LMAX;
    case ErrorCode::ThresholdTooSmall: return UNIPO_ERR_THRESHOLD_TOO_SMALL;
    case ErrorCode::UnknownMetric: return UNIPO_ERR_UNKNOWN_METRIC;
    case ErrorCode::UnknownBinding: return UNIPO_ERR_UNKNOWN_BINDING;
    case ErrorCode::DuplicateAlgorithm: return UNIPO_ERR_DUPLICATE_ALGORITHM;
    case ErrorCode::InvalidConfig: return UNIPO_ERR_INVALID_CONFIG;
    case ErrorCode::Io: return UNIPO_ERR_IO;
  }
  return UNIPO_ERR_INTERNAL;
}

unipo_status fail(unipo_status status, std::string message, std::string path = {}, std::int64_t offset = -1) {
  g_last_error = {std::move(message), std::move(path), offset};
  return status;
}

// Runs `body`, translating exceptions into status codes and last-error state.
template <typename F>
unipo_status guarded(F&& body) {
  try {
    body();
    return UNIPO_OK;
  } catch (const unipo::Error& e) {
    return fail(to_status(e.code()), e.what(), e.path(), e.offset() ? static_cast<std::int64_t>(*e.offset()) : -1);
  } catch (const std::bad_alloc&) {
    return fail(UNIPO_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UNIPO_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

#define UNIPO_REQUIRE(cond, what) \
  do {                            \
    if (!(cond)) return fail(UNIPO_ERR_INVALID_ARGUMENT, what); \
  } while (0)

std::shared_ptr<const unipo::AlgorithmDefinition> resolve(const unipo_run* run, const unipo_registry* reg,
                                                         const char* algorithm_id) {
  return reg->impl->get(algorithm_id ? std::string_view(algorithm_id) : std::string_view(run->impl.algorithm_id));
}

}  // namespace

extern "C" {

const char* unipo_version(void) { return "1.0.0"; }

const char* unipo_status_name(unipo_status status) {
  switch (status) {
    case UNIPO_OK: return "ok";
    case UNIPO_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case UNIPO_ERR_SYNTAX: return "syntax-error";
    case UNIPO_ERR_SCHEMA: return "schema-error";
    case UNIPO_ERR_VALIDATION: return "validation-error";
    case UNIPO_ERR_NOT_FOUND: return "not-found";
    case UNIPO_ERR_NON_FINITE_INPUT: return "non-finite-input";
    case UNIPO_ERR_EMPTY_GROUP: return "empty-group";
    case UNIPO_ERR_EMPTY_RESPONSE: return "empty-response";
    case UNIPO_ERR_MISSING_REFERENCE_LOGPROB: return "missing-reference-logprob";
    case UNIPO_ERR_MISSING_PRECOMPUTED_ADVANTAGE: return "missing-precomputed-advantage";
    case UNIPO_ERR_UNKNOWN_COMPONENT_KIND: return "unknown-component-kind";
    case UNIPO_ERR_LENGTH_EXCEEDS_LMAX: return "length-exceeds-lmax";
    case UNIPO_ERR_THRESHOLD_TOO_SMALL: return "threshold-too-small";
    case UNIPO_ERR_UNKNOWN_METRIC: return "unknown-metric";
    case UNIPO_ERR_UNKNOWN_BINDING: return "unknown-binding";
    case UNIPO_ERR_DUPLICATE_ALGORITHM: return "duplicate-algorithm";
    case UNIPO_ERR_INVALID_CONFIG: return "invalid-config";
    case UNIPO_ERR_IO: return "io-error";
    case UNIPO_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* unipo_last_error_message(void) { return g_last_error.message.c_str(); }
const char* unipo_last_error_path(void) { return g_last_error.path.c_str(); }
int64_t unipo_last_error_offset(void) { return g_last_error.offset; }

void unipo_string_free(char* s) { std::free(s); }

// ---- registry --------------------------------------------------------------

unipo_status unipo_registry_new(unipo_registry** out) {
  UNIPO_REQUIRE(out, "out is null");
  return guarded([&] { *out = new unipo_registry{unipo::AlgorithmRegistry::with_builtins()}; });
}

void unipo_registry_free(unipo_registry* reg) { delete reg; }

unipo_status unipo_registry_register(unipo_registry* reg, const char* data, size_t len, char** out_id) {
  UNIPO_REQUIRE(reg && (data || len == 0), "null argument");
  return guarded([&] {
    const auto def = unipo::register_algorithm(std::string_view(data ? data : "", len), *reg->impl);
    put(out_id, def.algorithm_id);
  });
}

unipo_status unipo_registry_list(const unipo_registry* reg, char** out_json) {
  UNIPO_REQUIRE(reg && out_json, "null argument");
  return guarded([&] {
    unipo::Json list = unipo::Json::array();
    for (const auto& def : reg->impl->list()) list.push_back(unipo::definition_to_json(*def));
    put(out_json, unipo::dump_canonical(list));
  });
}

unipo_status unipo_registry_get(const unipo_registry* reg, const char* algorithm_id, char** out_json) {
  UNIPO_REQUIRE(reg && algorithm_id && out_json, "null argument");
  return guarded([&] { put(out_json, unipo::dump_canonical(unipo::definition_to_json(*reg->impl->get(algorithm_id)))); });
}

unipo_status unipo_diff(const unipo_registry* reg, const char* a, const char* b, char** out_json) {
  UNIPO_REQUIRE(reg && a && b && out_json, "null argument");
  return guarded([&] {
    const auto diff = unipo::diff_algorithms(*reg->impl->get(a), *reg->impl->get(b));
    put(out_json, unipo::dump_canonical(unipo::diff_to_json(diff)));
  });
}

// ---- runs ------------------------------------------------------------------

unipo_status unipo_run_parse(const char* data, size_t len, unipo_run** out) {
  UNIPO_REQUIRE(out && (data || len == 0), "null argument");
  return guarded([&] { *out = new unipo_run{unipo::parse_run(std::string_view(data ? data : "", len))}; });
}

void unipo_run_free(unipo_run* run) { delete run; }

unipo_status unipo_run_serialize(const unipo_run* run, char** out_text) {
  UNIPO_REQUIRE(run && out_text, "null argument");
  return guarded([&] { put(out_text, unipo::serialize_run(run->impl)); });
}

unipo_status unipo_run_summary(const unipo_run* run, char** out_json) {
  UNIPO_REQUIRE(run && out_json, "null argument");
  return guarded([&] { put(out_json, unipo::dump_canonical(unipo::run_summary_json(run->impl))); });
}

unipo_status unipo_run_validate(const unipo_run* run, const unipo_registry* reg, int* out_valid, char** out_json) {
  UNIPO_REQUIRE(run && reg, "null argument");
  return guarded([&] {
    const auto report = unipo::validate_run(run->impl, *reg->impl);
    if (out_valid) *out_valid = report.ok() ? 1 : 0;
    put(out_json, unipo::dump_canonical(unipo::report_to_json(report)));
  });
}

unipo_status unipo_compute_step(const unipo_run* run, const unipo_registry* reg, const char* algorithm_id,
                                int64_t step_index, char** out_json) {
  UNIPO_REQUIRE(run && reg && out_json, "null argument");
  return guarded([&] {
    const auto algo = resolve(run, reg, algorithm_id);
    const std::size_t pos = unipo::find_step(run->impl, step_index);
    const auto eval = unipo::evaluate_step(run->impl.steps[pos], *algo, run->impl.params);
    unipo::Json j = unipo::Json::object();
    j["run_id"] = run->impl.run_id;
    j["step"] = step_index;
    j["algorithm_id"] = algo->algorithm_id;
    j["step_objective"] = unipo::step_objective_to_json(eval.objective);
    put(out_json, unipo::dump_canonical(j));
  });
}

unipo_status unipo_step_payload(const unipo_run* run, const unipo_registry* reg, const char* algorithm_id,
                                int64_t step_index, char** out_json) {
  UNIPO_REQUIRE(run && reg && out_json, "null argument");
  return guarded([&] {
    const auto algo = resolve(run, reg, algorithm_id);
    const std::size_t pos = unipo::find_step(run->impl, step_index);
    const auto eval = unipo::evaluate_step(run->impl.steps[pos], *algo, run->impl.params);
    put(out_json, unipo::dump_canonical(unipo::step_payload(run->impl, pos, eval, *algo)));
  });
}

unipo_status unipo_token_payload(const unipo_run* run, const unipo_registry* reg, const char* algorithm_id,
                                 int64_t step_index, size_t group, size_t response, size_t token, char** out_json) {
  UNIPO_REQUIRE(run && reg && out_json, "null argument");
  return guarded([&] {
    const auto algo = resolve(run, reg, algorithm_id);
    const std::size_t pos = unipo::find_step(run->impl, step_index);
    const unipo::TokenPath path{group, response, token};
    unipo::token_at(run->impl.steps[pos], path);
    const auto eval = unipo::evaluate_step(run->impl.steps[pos], *algo, run->impl.params);
    put(out_json, unipo::dump_canonical(unipo::token_payload(run->impl, pos, eval, *algo, path)));
  });
}

unipo_status unipo_metric_series(const unipo_run* run, const unipo_registry* reg, const char* metric,
                                 size_t threshold, char** out_json) {
  UNIPO_REQUIRE(run && reg && metric && out_json, "null argument");
  return guarded([&] {
    const auto algo = reg->impl->get(run->impl.algorithm_id);
    auto series = unipo::extract_metric_series(run->impl, unipo::MetricName::parse(metric), *algo);
    if (threshold != 0) series = unipo::lttb_downsample(series, threshold);
    put(out_json, unipo::dump_canonical(unipo::series_to_json(series)));
  });
}

// ---- synth -----------------------------------------------------------------

void unipo_synth_config_init(unipo_synth_config* cfg) {
  if (!cfg) return;
  const unipo::SynthConfig d;
  cfg->seed = d.seed;
  cfg->n_steps = d.n_steps;
  cfg->groups_per_step = d.groups_per_step;
  cfg->group_size = d.group_size;
  cfg->len_min = d.len_min;
  cfg->len_max = d.len_max;
  cfg->reward_scheme = UNIPO_REWARD_BINARY;
  cfg->p_correct_start = d.p_correct_start;
  cfg->p_correct_end = d.p_correct_end;
  cfg->reward_low = d.reward_low;
  cfg->reward_high = d.reward_high;
  cfg->drift = d.drift;
  cfg->algorithm_id = "grpo";
}

unipo_status unipo_synth(const unipo_registry* reg, const unipo_synth_config* cfg, unipo_run** out) {
  UNIPO_REQUIRE(reg && cfg && out, "null argument");
  return guarded([&] {
    unipo::SynthConfig c;
    c.seed = cfg->seed;
    c.n_steps = cfg->n_steps;
    c.groups_per_step = cfg->groups_per_step;
    c.group_size = cfg->group_size;
    c.len_min = cfg->len_min;
    c.len_max = cfg->len_max;
    if (cfg->reward_scheme != UNIPO_REWARD_BINARY && cfg->reward_scheme != UNIPO_REWARD_CONTINUOUS)
      throw unipo::Error(unipo::ErrorCode::InvalidConfig, "unknown reward scheme");
    c.reward_scheme =
        cfg->reward_scheme == UNIPO_REWARD_CONTINUOUS ? unipo::RewardScheme::Continuous : unipo::RewardScheme::Binary;
    c.p_correct_start = cfg->p_correct_start;
    c.p_correct_end = cfg->p_correct_end;
    c.reward_low = cfg->reward_low;
    c.reward_high = cfg->reward_high;
    c.drift = cfg->drift;
    c.algorithm_id = cfg->algorithm_id ? cfg->algorithm_id : "grpo";
    *out = new unipo_run{unipo::generate_run(c, *reg->impl)};
  });
}

// ---- service ---------------------------------------------------------------

unipo_status unipo_service_new(unipo_registry* reg, unipo_service** out) {
  UNIPO_REQUIRE(reg && out, "null argument");
  return guarded([&] { *out = new unipo_service{std::make_unique<unipo::ServiceState>(reg->impl)}; });
}

void unipo_service_free(unipo_service* svc) { delete svc; }

unipo_status unipo_service_load_dir(unipo_service* svc, const char* dir, char** out_json) {
  UNIPO_REQUIRE(svc && dir, "null argument");
  return guarded([&] {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
      throw unipo::Error(unipo::ErrorCode::Io, std::string("not a directory: ") + dir);
    const auto summary = svc->impl->load_directory(dir);
    unipo::Json skipped = unipo::Json::array();
    for (const auto& [file, reason] : summary.skipped) skipped.push_back({{"file", file}, {"reason", reason}});
    put(out_json, unipo::dump_canonical({{"loaded", summary.loaded}, {"skipped", skipped}}));
  });
}

unipo_status unipo_service_add_run(unipo_service* svc, const unipo_run* run) {
  UNIPO_REQUIRE(svc && run, "null argument");
  return guarded([&] { svc->impl->load_run(run->impl); });
}

unipo_status unipo_service_precompute(unipo_service* svc) {
  UNIPO_REQUIRE(svc, "null argument");
  return guarded([&] { svc->impl->precompute_all(); });
}

unipo_status unipo_service_request(unipo_service* svc, const char* method, const char* target, const char* body,
                                   size_t body_len, int* out_http_status, char** out_json) {
  UNIPO_REQUIRE(svc && method && target && out_http_status && out_json, "null argument");
  return guarded([&] {
    const auto r = svc->impl->handle(method, target, std::string_view(body ? body : "", body ? body_len : 0));
    *out_json = dup_string(r.body);
    *out_http_status = r.status;
  });
}

unipo_status unipo_service_export(unipo_service* svc, const char* out_dir, size_t threshold, int include_tokens,
                                  size_t* out_files) {
  UNIPO_REQUIRE(svc && out_dir, "null argument");
  return guarded([&] {
    const std::size_t n = svc->impl->export_static(out_dir, threshold ? threshold : unipo::kDefaultMetricThreshold,
                                                   include_tokens != 0);
    if (out_files) *out_files = n;
  });
}

}  // extern "C"
