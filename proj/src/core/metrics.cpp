#include "unipo/metrics.hpp"

#include <cmath>
#include <limits>

#include "unipo/error.hpp"

namespace unipo {

namespace {

constexpr std::string_view kPassthroughPrefix = "passthrough:";

struct NamedKind {
  std::string_view name;
  MetricKind kind;
};

constexpr NamedKind kBuiltinMetrics[] = {
    {"reward", MetricKind::Reward},
    {"step_objective", MetricKind::StepObjective},
    {"kl_mean", MetricKind::KlMean},
    {"clip_ratio", MetricKind::ClipRatio},
    {"response_length_mean", MetricKind::ResponseLengthMean},
};

double mean_reward(const Step& step) {
  CompensatedSum sum;
  std::size_t n = 0;
  for (const auto& g : step.groups)
    for (const auto& r : g.responses) {
      sum.add(r.reward);
      ++n;
    }
  return n ? sum.value() / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double mean_length(const Step& step) {
  std::size_t tokens = 0, n = 0;
  for (const auto& g : step.groups)
    for (const auto& r : g.responses) {
      tokens += r.tokens.size();
      ++n;
    }
  return n ? static_cast<double>(tokens) / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double weighted_kl(const StepEvaluation& eval) {
  CompensatedSum num, den;
  for (std::size_t g = 0; g < eval.tokens.size(); ++g)
    for (std::size_t r = 0; r < eval.tokens[g].size(); ++r)
      for (std::size_t t = 0; t < eval.tokens[g][r].size(); ++t) {
        const double w = eval.objective.token_weights[g][r][t];
        if (w == 0.0) continue;
        num.add(w * eval.tokens[g][r][t].kl_term);
        den.add(w);
      }
  return den.value() > 0.0 ? num.value() / den.value() : 0.0;
}

double clip_ratio(const StepEvaluation& eval) {
  std::size_t clipped = 0, total = 0;
  for (std::size_t g = 0; g < eval.tokens.size(); ++g) {
    if (!eval.group_included[g]) continue;
    for (const auto& resp : eval.tokens[g])
      for (const auto& t : resp) {
        ++total;
        if (t.clipped) ++clipped;
      }
  }
  return total ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
}

double triangle_area2(const MetricPoint& a, double bx, double by, double cx, double cy) {
  const double ax = static_cast<double>(a.step);
  return std::abs((ax - cx) * (by - a.value) - (ax - bx) * (cy - a.value));
}

}  // namespace

MetricName MetricName::parse(std::string_view text) {
  for (const auto& m : kBuiltinMetrics)
    if (m.name == text) return {m.kind, {}};
  if (text.starts_with(kPassthroughPrefix) && text.size() > kPassthroughPrefix.size())
    return {MetricKind::Passthrough, std::string(text.substr(kPassthroughPrefix.size()))};
  throw Error(ErrorCode::UnknownMetric, "unknown metric '" + std::string(text) + "'", "name");
}

std::string MetricName::str() const {
  if (kind == MetricKind::Passthrough) return std::string(kPassthroughPrefix) + passthrough;
  for (const auto& m : kBuiltinMetrics)
    if (m.kind == kind) return std::string(m.name);
  return "?";
}

MetricSeries extract_metric_series(const TrainingRun& run, const MetricName& name, const AlgorithmDefinition& algo) {
  return extract_metric_series(run, name, [&](std::size_t pos) { return evaluate_step(run.steps[pos], algo, run.params); });
}

MetricSeries extract_metric_series(const TrainingRun& run, const MetricName& name, const StepEvaluator& evaluate) {
  MetricSeries series;
  series.name = name;
  bool seen_key = false;
  for (std::size_t pos = 0; pos < run.steps.size(); ++pos) {
    const Step& step = run.steps[pos];
    double value = 0.0;
    switch (name.kind) {
      case MetricKind::Reward: value = mean_reward(step); break;
      case MetricKind::ResponseLengthMean: value = mean_length(step); break;
      case MetricKind::StepObjective: value = evaluate(pos).objective.value; break;
      case MetricKind::KlMean: value = weighted_kl(evaluate(pos)); break;
      case MetricKind::ClipRatio: value = clip_ratio(evaluate(pos)); break;
      case MetricKind::Passthrough: {
        if (!step.precomputed_metrics) continue;
        bool found = false;
        for (const auto& [k, v] : *step.precomputed_metrics)
          if (k == name.passthrough) {
            value = v;
            found = true;
          }
        if (!found) continue;
        seen_key = true;
        break;
      }
    }
    if (!std::isfinite(value)) {
      ++series.dropped_non_finite;
      continue;
    }
    series.points.push_back({step.index, value});
  }
  if (name.kind == MetricKind::Passthrough && !seen_key)
    throw Error(ErrorCode::UnknownMetric, "no step carries precomputed metric '" + name.passthrough + "'", "name");
  return series;
}

MetricSeries lttb_downsample(const MetricSeries& series, std::size_t threshold) {
  if (threshold < 3)
    throw Error(ErrorCode::ThresholdTooSmall, "LTTB threshold must be at least 3, got " + std::to_string(threshold));
  const auto& in = series.points;
  const std::size_t n = in.size();
  if (n <= threshold) return series;

  MetricSeries out;
  out.name = series.name;
  out.dropped_non_finite = series.dropped_non_finite;
  out.points.reserve(threshold);
  out.points.push_back(in.front());

  const std::size_t buckets = threshold - 2;
  const std::size_t interior = n - 2;
  auto bound = [&](std::size_t k) { return 1 + (k * interior) / buckets; };

  std::size_t anchor = 0;
  for (std::size_t k = 0; k < buckets; ++k) {
    double next_x = 0.0, next_y = 0.0;
    if (k + 1 < buckets) {
      const std::size_t lo = bound(k + 1), hi = bound(k + 2);
      for (std::size_t j = lo; j < hi; ++j) {
        next_x += static_cast<double>(in[j].step);
        next_y += in[j].value;
      }
      next_x /= static_cast<double>(hi - lo);
      next_y /= static_cast<double>(hi - lo);
    } else {
      next_x = static_cast<double>(in.back().step);
      next_y = in.back().value;
    }

    std::size_t best = bound(k);
    double best_area = -1.0;
    for (std::size_t j = bound(k); j < bound(k + 1); ++j) {
      const double area = triangle_area2(in[anchor], static_cast<double>(in[j].step), in[j].value, next_x, next_y);
      if (area > best_area) {
        best_area = area;
        best = j;
      }
    }
    out.points.push_back(in[best]);
    anchor = best;
  }
  out.points.push_back(in.back());
  return out;
}

Json series_to_json(const MetricSeries& series) {
  Json points = Json::array();
  for (const auto& p : series.points) points.push_back(Json::array({p.step, p.value}));
  Json j = Json::object();
  j["name"] = series.name.str();
  j["points"] = std::move(points);
  return j;
}

}  // namespace unipo
