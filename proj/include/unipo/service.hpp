#pragma once

// Service state behind the HTTP API: loaded runs, the algorithm registry and
// a lazily filled per-step evaluation cache. Transport-agnostic: `handle`
// maps a method/target/body triple to a status and JSON body.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unipo/pipeline.hpp"
#include "unipo/registry.hpp"
#include "unipo/schema.hpp"

namespace unipo {

struct HttpResponse {
  int status = 200;
  std::string body;
};

inline constexpr std::size_t kDefaultMetricThreshold = 500;

struct LoadSummary {
  std::vector<std::string> loaded;
  std::vector<std::pair<std::string, std::string>> skipped;  // file, reason
};

class ServiceState {
 public:
  explicit ServiceState(std::shared_ptr<AlgorithmRegistry> registry);

  /// Validates and installs (or replaces) a run; a replacement drops the
  /// run's cached evaluations. Throws Error{Validation} with the first
  /// violation's path when the run is invalid.
  void load_run(TrainingRun run);

  /// Loads every *.json file in `dir`, skipping invalid ones.
  LoadSummary load_directory(const std::filesystem::path& dir);

  std::shared_ptr<const TrainingRun> find_run(std::string_view run_id) const;
  std::vector<std::shared_ptr<const TrainingRun>> runs() const;

  std::shared_ptr<const StepEvaluation> evaluation(std::string_view run_id, std::size_t step_position);
  void precompute(std::string_view run_id);
  void precompute_all();

  HttpResponse handle(std::string_view method, std::string_view target, std::string_view body = {});

  /// Writes every GET payload to a file tree mirroring the API (see docs/api.md).
  std::size_t export_static(const std::filesystem::path& out_dir,
                            std::size_t threshold = kDefaultMetricThreshold, bool include_tokens = true);

  const AlgorithmRegistry& registry() const { return *registry_; }
  std::size_t cached_steps() const;

 private:
  struct Entry {
    std::shared_ptr<const TrainingRun> run;
    std::shared_ptr<const AlgorithmDefinition> algo;
    std::uint64_t generation = 0;
    std::shared_ptr<std::map<std::size_t, std::shared_ptr<const StepEvaluation>>> cache;
  };

  Entry entry(std::string_view run_id) const;

  std::shared_ptr<AlgorithmRegistry> registry_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> runs_;
  std::uint64_t next_generation_ = 1;
};

}  // namespace unipo
