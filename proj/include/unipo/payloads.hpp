#pragma once

// Canonical JSON payloads shared by the CLI, the HTTP API and the static
// export. One builder per payload so every surface emits identical bytes.

#include <cstddef>
#include <string>

#include "unipo/error.hpp"
#include "unipo/metrics.hpp"
#include "unipo/pipeline.hpp"
#include "unipo/registry.hpp"
#include "unipo/schema.hpp"

namespace unipo {

Json report_to_json(const ValidationReport& report);
Json step_objective_to_json(const StepObjective& objective);
Json token_objective_to_json(const TokenObjective& t);
Json run_summary_json(const TrainingRun& run);

/// Groups, token texts, token objectives, step objective and inclusion flags.
Json step_payload(const TrainingRun& run, std::size_t step_position, const StepEvaluation& eval,
                  const AlgorithmDefinition& algo);

/// One token's full computation breakdown.
Json token_payload(const TrainingRun& run, std::size_t step_position, const StepEvaluation& eval,
                   const AlgorithmDefinition& algo, const TokenPath& path);

/// `{code, message, path}`.
Json error_to_json(const Error& error);

/// Compact, deterministic text form used for all API responses.
std::string dump_canonical(const Json& j);

}  // namespace unipo
