#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "unipo/pipeline.hpp"
#include "unipo/registry.hpp"
#include "unipo/schema.hpp"

namespace unipo {

enum class MetricKind { Reward, StepObjective, KlMean, ClipRatio, ResponseLengthMean, Passthrough };

struct MetricName {
  MetricKind kind = MetricKind::Reward;
  std::string passthrough;  // key into precomputed_metrics when kind == Passthrough

  /// "reward", "step_objective", "kl_mean", "clip_ratio",
  /// "response_length_mean" or "passthrough:<key>". Throws UnknownMetric.
  static MetricName parse(std::string_view text);
  std::string str() const;

  bool operator==(const MetricName&) const = default;
};

struct MetricPoint {
  std::int64_t step = 0;
  double value = 0.0;

  bool operator==(const MetricPoint&) const = default;
};

struct MetricSeries {
  MetricName name;
  std::vector<MetricPoint> points;
  std::size_t dropped_non_finite = 0;

  bool operator==(const MetricSeries&) const = default;
};

/// Per-step evaluation source; defaults to evaluate_step.
using StepEvaluator = std::function<StepEvaluation(std::size_t step_position)>;

MetricSeries extract_metric_series(const TrainingRun& run, const MetricName& name,
                                   const AlgorithmDefinition& algo);
MetricSeries extract_metric_series(const TrainingRun& run, const MetricName& name,
                                   const StepEvaluator& evaluate);

/// Largest-Triangle-Three-Buckets. Interior points 1..n-2 are split into
/// threshold-2 buckets with boundaries b(k) = 1 + floor(k*(n-2)/(threshold-2));
/// bucket k selects the point maximizing the triangle spanned with the
/// previously selected point and the mean of bucket k+1 (the last point for
/// the final bucket). Ties go to the earliest point. Throws ThresholdTooSmall.
MetricSeries lttb_downsample(const MetricSeries& series, std::size_t threshold);

Json series_to_json(const MetricSeries& series);

}  // namespace unipo
