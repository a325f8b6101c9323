#pragma once

// Algorithm definitions decomposed into ID'd components, the registry that
// holds them, and the component-level diff used by comparison mode.

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "unipo/kinds.hpp"
#include "unipo/schema.hpp"

namespace unipo {

struct Component {
  std::string component_id;
  ComponentKind kind = ComponentKind::Aggregation;
  std::string formula_markup;
  std::string prose;
  Binding binding = Binding::SampleMean;
  // Display parameters (e.g. the clip band of a target). Computation reads
  // AlgorithmParams, never these.
  std::map<std::string, double> params;

  bool operator==(const Component&) const = default;
};

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::None;
  std::map<std::string, double> params;
};

struct AlgorithmDefinition {
  std::string algorithm_id;
  std::string display_name;
  std::optional<std::string> lineage_parent;
  std::vector<Component> components;
  AlgorithmParams default_params;

  bool operator==(const AlgorithmDefinition&) const = default;

  const Component& aggregation() const;
  const Component& target() const;
  const Component& strength() const;
  std::vector<const Component*> constraints() const;
  const Component* find_component(std::string_view id) const;

  AggregationKind aggregation_kind() const;
  AdvantageMode advantage_mode() const;
  std::vector<ConstraintSpec> constraint_specs() const;
  bool has_constraint(ConstraintKind kind) const;
  bool has_kl() const { return has_constraint(ConstraintKind::KlPenalty); }
  bool group_relative() const;
};

/// Parses and structurally checks one definition document (cardinalities,
/// unique IDs, binding/kind agreement). Throws Error{Schema} or
/// Error{UnknownBinding}.
AlgorithmDefinition parse_definition(std::string_view raw);
AlgorithmDefinition definition_from_json(const Json& doc);
Json definition_to_json(const AlgorithmDefinition& def);

/// Raw text of the shipped preset definition files, in lineage order.
const std::vector<std::string_view>& builtin_definition_sources();

/// The five presets: reinforce, ppo, grpo, dapo, dr_grpo.
std::vector<AlgorithmDefinition> builtin_definitions();

/// Concurrent readers, single writer. Definitions are immutable once added.
class AlgorithmRegistry {
 public:
  AlgorithmRegistry() = default;
  AlgorithmRegistry(const AlgorithmRegistry&) = delete;
  AlgorithmRegistry& operator=(const AlgorithmRegistry&) = delete;

  static std::shared_ptr<AlgorithmRegistry> with_builtins();

  /// Throws Error{DuplicateAlgorithm} or Error{Schema} (unknown lineage parent).
  std::shared_ptr<const AlgorithmDefinition> add(AlgorithmDefinition def);

  std::shared_ptr<const AlgorithmDefinition> find(std::string_view id) const;
  std::shared_ptr<const AlgorithmDefinition> get(std::string_view id) const;  // throws NotFound
  std::vector<std::shared_ptr<const AlgorithmDefinition>> list() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<std::shared_ptr<const AlgorithmDefinition>> ordered_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

AlgorithmDefinition register_algorithm(std::string_view raw, AlgorithmRegistry& registry);

enum class MatchStatus { Identical, Modified };

struct FieldDelta {
  std::string field;  // "formula_markup", "prose", "binding", "kind", "params.<name>"
  Json a;
  Json b;

  bool operator==(const FieldDelta&) const = default;
};

struct ComponentMatch {
  std::string component_id;
  MatchStatus status = MatchStatus::Identical;
  std::vector<FieldDelta> field_deltas;

  bool operator==(const ComponentMatch&) const = default;
};

struct DiffResult {
  std::string a;
  std::string b;
  std::vector<ComponentMatch> matched;  // in a's component order
  std::vector<std::string> added;       // in b, not a; b's order
  std::vector<std::string> removed;     // in a, not b; a's order

  const ComponentMatch* match(std::string_view id) const;
};

DiffResult diff_algorithms(const AlgorithmDefinition& a, const AlgorithmDefinition& b);
Json diff_to_json(const DiffResult& diff);

}  // namespace unipo
