#pragma once

// Canonical training-log data model.
//
// A run is a list of steps (one gradient update each); a step holds one or
// more prompt groups; a group holds G sampled responses; a response is a
// token sequence with a scalar reward. Every object keeps the fields it did
// not recognise in `extra` so user telemetry survives a round-trip.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace unipo {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultStdFloor = 1e-8;

struct AlgorithmParams {
  std::int64_t group_size = 1;  // group_size_G
  double eps_low = 0.2;
  double eps_high = 0.2;
  double kl_coeff = 0.0;        // kl_coeff_beta
  std::int64_t max_len = 1024;  // max_len_L
  double gamma = 1.0;
  double lambda_gae = 1.0;
  double std_floor = kDefaultStdFloor;
  Json extra = Json::object();

  bool operator==(const AlgorithmParams&) const = default;
};

struct Token {
  std::string text;
  double logprob_policy = 0.0;
  double logprob_old = 0.0;
  std::optional<double> logprob_ref;
  std::optional<double> value_estimate;
  Json extra = Json::object();

  bool operator==(const Token&) const = default;
};

struct Response {
  std::vector<Token> tokens;
  double reward = 0.0;
  std::optional<double> precomputed_advantage;
  Json extra = Json::object();

  bool operator==(const Response&) const = default;
};

struct ResponseGroup {
  std::string prompt_text;
  std::vector<Response> responses;
  // Trainer-side filter flag, passed through untouched.
  std::optional<bool> filtered;
  Json extra = Json::object();

  bool operator==(const ResponseGroup&) const = default;
};

struct Step {
  std::int64_t index = 0;
  std::vector<ResponseGroup> groups;
  std::optional<std::vector<std::pair<std::string, double>>> precomputed_metrics;
  Json extra = Json::object();

  bool operator==(const Step&) const = default;
};

struct TrainingRun {
  std::string run_id;
  std::string algorithm_id;
  std::string model_name;
  std::string task_name;
  std::vector<Step> steps;
  AlgorithmParams params;
  Json extra = Json::object();

  bool operator==(const TrainingRun&) const = default;
};

struct Violation {
  std::string invariant;
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

class AlgorithmRegistry;

/// Parses a canonical run document. Throws Error{Syntax} with a byte offset
/// or Error{Schema} with the path of the missing/ill-typed/out-of-range value.
TrainingRun parse_run(std::string_view raw);

/// Canonical text form (2-space indented JSON, known fields first in schema
/// order, then unknown fields in their original order).
std::string serialize_run(const TrainingRun& run);

Json run_to_json(const TrainingRun& run);
TrainingRun run_from_json(const Json& doc);

/// Parses an AlgorithmParams object; `path` prefixes error paths.
AlgorithmParams params_from_json(const Json& node, const std::string& path);
Json params_to_json(const AlgorithmParams& params);

/// Cross-field invariants. Never throws; violations are data.
ValidationReport validate_run(const TrainingRun& run, const AlgorithmRegistry& registry);

/// `steps[2].groups[0]` style path helpers.
std::string path_index(const std::string& base, std::string_view field, std::size_t i);
std::string path_field(const std::string& base, std::string_view field);

std::size_t total_tokens(const Step& step);

}  // namespace unipo
