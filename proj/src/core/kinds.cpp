#include "unipo/kinds.hpp"

#include <array>
#include <utility>

#include "unipo/error.hpp"

namespace unipo {

namespace {

constexpr std::array<std::pair<Binding, std::string_view>, 13> kBindingNames{{
    {Binding::SampleMean, "SampleMean"},
    {Binding::GlobalTokenMean, "GlobalTokenMean"},
    {Binding::ConstantNorm, "ConstantNorm"},
    {Binding::BatchTokenMean, "BatchTokenMean"},
    {Binding::ClippedRatio, "ClippedRatio"},
    {Binding::LogProb, "LogProb"},
    {Binding::GroupStandardized, "GroupStandardized"},
    {Binding::GroupCentered, "GroupCentered"},
    {Binding::Gae, "GAE"},
    {Binding::RawReward, "RawReward"},
    {Binding::Precomputed, "Precomputed"},
    {Binding::DynamicSampling, "DynamicSampling"},
    {Binding::KlPenalty, "KlPenalty"},
}};

constexpr std::array<std::pair<ComponentKind, std::string_view>, 4> kKindNames{{
    {ComponentKind::Aggregation, "aggregation"},
    {ComponentKind::Target, "target"},
    {ComponentKind::Strength, "strength"},
    {ComponentKind::Constraint, "constraint"},
}};

}  // namespace

std::string_view binding_name(Binding b) noexcept {
  for (const auto& [v, n] : kBindingNames)
    if (v == b) return n;
  return "?";
}

std::optional<Binding> binding_from_name(std::string_view name) noexcept {
  for (const auto& [v, n] : kBindingNames)
    if (n == name) return v;
  return std::nullopt;
}

std::string_view component_kind_name(ComponentKind k) noexcept {
  for (const auto& [v, n] : kKindNames)
    if (v == k) return n;
  return "?";
}

std::optional<ComponentKind> component_kind_from_name(std::string_view name) noexcept {
  for (const auto& [v, n] : kKindNames)
    if (n == name) return v;
  return std::nullopt;
}

ComponentKind binding_slot(Binding b) noexcept {
  switch (b) {
    case Binding::SampleMean:
    case Binding::GlobalTokenMean:
    case Binding::ConstantNorm:
    case Binding::BatchTokenMean:
      return ComponentKind::Aggregation;
    case Binding::ClippedRatio:
    case Binding::LogProb:
      return ComponentKind::Target;
    case Binding::GroupStandardized:
    case Binding::GroupCentered:
    case Binding::Gae:
    case Binding::RawReward:
    case Binding::Precomputed:
      return ComponentKind::Strength;
    case Binding::DynamicSampling:
    case Binding::KlPenalty:
      return ComponentKind::Constraint;
  }
  return ComponentKind::Constraint;
}

std::string_view advantage_mode_name(AdvantageMode m) noexcept {
  switch (m) {
    case AdvantageMode::GroupStandardized: return "GroupStandardized";
    case AdvantageMode::GroupCentered: return "GroupCentered";
    case AdvantageMode::Gae: return "GAE";
    case AdvantageMode::RawReward: return "RawReward";
    case AdvantageMode::Precomputed: return "Precomputed";
  }
  return "?";
}

std::string_view aggregation_kind_name(AggregationKind k) noexcept {
  switch (k) {
    case AggregationKind::SampleMean: return "SampleMean";
    case AggregationKind::GlobalTokenMean: return "GlobalTokenMean";
    case AggregationKind::ConstantNorm: return "ConstantNorm";
    case AggregationKind::BatchTokenMean: return "BatchTokenMean";
  }
  return "?";
}

std::string_view constraint_kind_name(ConstraintKind k) noexcept {
  switch (k) {
    case ConstraintKind::None: return "None";
    case ConstraintKind::DynamicSampling: return "DynamicSampling";
    case ConstraintKind::KlPenalty: return "KlPenalty";
  }
  return "?";
}

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Syntax: return "syntax-error";
    case ErrorCode::Schema: return "schema-error";
    case ErrorCode::Validation: return "validation-error";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::NonFiniteInput: return "non-finite-input";
    case ErrorCode::EmptyGroup: return "empty-group";
    case ErrorCode::EmptyResponse: return "empty-response";
    case ErrorCode::MissingReferenceLogprob: return "missing-reference-logprob";
    case ErrorCode::MissingPrecomputedAdvantage: return "missing-precomputed-advantage";
    case ErrorCode::UnknownComponentKind: return "unknown-component-kind";
    case ErrorCode::LengthExceedsLmax: return "length-exceeds-lmax";
    case ErrorCode::ThresholdTooSmall: return "threshold-too-small";
    case ErrorCode::UnknownMetric: return "unknown-metric";
    case ErrorCode::UnknownBinding: return "unknown-binding";
    case ErrorCode::DuplicateAlgorithm: return "duplicate-algorithm";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

}  // namespace unipo
