#pragma once

#include <optional>
#include <string_view>

namespace unipo {

/// How the optimization strength of each token is derived.
enum class AdvantageMode {
  GroupStandardized,  // (r_i - mean) / std over the group, population std
  GroupCentered,      // r_i - mean
  Gae,                // precomputed_advantage when present, else GAE over value estimates
  RawReward,          // the response reward itself
  Precomputed,        // precomputed_advantage, required
};

/// How per-token objectives are pooled into one step scalar.
enum class AggregationKind {
  SampleMean,       // (1/G) sum_i (1/|o_i|) sum_t, per group
  GlobalTokenMean,  // (1 / sum_i |o_i|) sum_i sum_t, per group
  ConstantNorm,     // (1 / (G * L_max)) sum_i sum_t, per group
  BatchTokenMean,   // one token mean over every included response of the step
};

enum class ConstraintKind { None, DynamicSampling, KlPenalty };

/// Every engine kernel a component may bind to.
enum class Binding {
  SampleMean,
  GlobalTokenMean,
  ConstantNorm,
  BatchTokenMean,
  ClippedRatio,
  LogProb,
  GroupStandardized,
  GroupCentered,
  Gae,
  RawReward,
  Precomputed,
  DynamicSampling,
  KlPenalty,
};

enum class ComponentKind { Aggregation, Target, Strength, Constraint };

std::string_view binding_name(Binding b) noexcept;
std::optional<Binding> binding_from_name(std::string_view name) noexcept;
std::string_view component_kind_name(ComponentKind k) noexcept;
std::optional<ComponentKind> component_kind_from_name(std::string_view name) noexcept;

/// The component kind a binding is allowed to appear under.
ComponentKind binding_slot(Binding b) noexcept;

std::string_view advantage_mode_name(AdvantageMode m) noexcept;
std::string_view aggregation_kind_name(AggregationKind k) noexcept;
std::string_view constraint_kind_name(ConstraintKind k) noexcept;

}  // namespace unipo
