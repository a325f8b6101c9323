#include "unipo/registry.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "unipo/error.hpp"

namespace unipo {

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Schema, path + ": " + what, path);
}

const Json& required(const Json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) schema_error(path_field(path, key), "missing required field");
  return *it;
}

std::string required_string(const Json& obj, const std::string& path, const char* key) {
  const Json& j = required(obj, path, key);
  if (!j.is_string()) schema_error(path_field(path, key), std::string("expected string, got ") + j.type_name());
  return j.get<std::string>();
}

Component component_from_json(const Json& node, const std::string& path) {
  if (!node.is_object()) schema_error(path, "expected object");
  Component c;
  c.component_id = required_string(node, path, "component_id");
  if (c.component_id.empty()) schema_error(path_field(path, "component_id"), "must not be empty");
  const std::string kind = required_string(node, path, "kind");
  const auto k = component_kind_from_name(kind);
  if (!k) schema_error(path_field(path, "kind"), "unknown component kind '" + kind + "'");
  c.kind = *k;
  const std::string binding = required_string(node, path, "binding");
  const auto b = binding_from_name(binding);
  if (!b)
    throw Error(ErrorCode::UnknownBinding, "no engine kernel named '" + binding + "'", path_field(path, "binding"));
  c.binding = *b;
  if (binding_slot(c.binding) != c.kind)
    schema_error(path_field(path, "binding"), "binding '" + binding + "' cannot fill a " + kind + " component");
  c.formula_markup = required_string(node, path, "formula_markup");
  if (c.formula_markup.empty()) schema_error(path_field(path, "formula_markup"), "must not be empty");
  if (auto it = node.find("prose"); it != node.end() && !it->is_null()) {
    if (!it->is_string()) schema_error(path_field(path, "prose"), "expected string");
    c.prose = it->get<std::string>();
  }
  if (auto it = node.find("params"); it != node.end() && !it->is_null()) {
    if (!it->is_object()) schema_error(path_field(path, "params"), "expected object");
    for (auto p = it->begin(); p != it->end(); ++p) {
      if (!p.value().is_number()) schema_error(path_field(path_field(path, "params"), p.key()), "expected number");
      c.params[p.key()] = p.value().get<double>();
    }
  }
  return c;
}

void check_structure(const AlgorithmDefinition& def) {
  std::set<std::string> ids;
  int aggregation = 0, target = 0, strength = 0;
  std::set<Binding> constraint_bindings;
  for (std::size_t i = 0; i < def.components.size(); ++i) {
    const Component& c = def.components[i];
    const std::string path = path_index("", "components", i);
    if (!ids.insert(c.component_id).second)
      schema_error(path_field(path, "component_id"), "duplicate component id '" + c.component_id + "'");
    if (binding_slot(c.binding) != c.kind)
      schema_error(path_field(path, "binding"), "binding does not match component kind");
    if (c.formula_markup.empty()) schema_error(path_field(path, "formula_markup"), "must not be empty");
    switch (c.kind) {
      case ComponentKind::Aggregation: ++aggregation; break;
      case ComponentKind::Target: ++target; break;
      case ComponentKind::Strength: ++strength; break;
      case ComponentKind::Constraint:
        if (!constraint_bindings.insert(c.binding).second)
          schema_error(path_field(path, "binding"), "at most one constraint of each kind");
        break;
    }
  }
  auto exactly_one = [](int n, const char* what) {
    if (n != 1)
      schema_error("components", std::string("expected exactly one ") + what + " component, found " + std::to_string(n));
  };
  exactly_one(aggregation, "aggregation");
  exactly_one(target, "target");
  exactly_one(strength, "strength");
}

const Component& only(const AlgorithmDefinition& def, ComponentKind kind) {
  for (const auto& c : def.components)
    if (c.kind == kind) return c;
  throw Error(ErrorCode::Schema, "definition '" + def.algorithm_id + "' has no " +
                                     std::string(component_kind_name(kind)) + " component");
}

}  // namespace

const Component& AlgorithmDefinition::aggregation() const { return only(*this, ComponentKind::Aggregation); }
const Component& AlgorithmDefinition::target() const { return only(*this, ComponentKind::Target); }
const Component& AlgorithmDefinition::strength() const { return only(*this, ComponentKind::Strength); }

std::vector<const Component*> AlgorithmDefinition::constraints() const {
  std::vector<const Component*> out;
  for (const auto& c : components)
    if (c.kind == ComponentKind::Constraint) out.push_back(&c);
  return out;
}

const Component* AlgorithmDefinition::find_component(std::string_view id) const {
  for (const auto& c : components)
    if (c.component_id == id) return &c;
  return nullptr;
}

AggregationKind AlgorithmDefinition::aggregation_kind() const {
  switch (aggregation().binding) {
    case Binding::SampleMean: return AggregationKind::SampleMean;
    case Binding::GlobalTokenMean: return AggregationKind::GlobalTokenMean;
    case Binding::ConstantNorm: return AggregationKind::ConstantNorm;
    case Binding::BatchTokenMean: return AggregationKind::BatchTokenMean;
    default: break;
  }
  throw Error(ErrorCode::UnknownComponentKind, "aggregation binding has no kernel");
}

AdvantageMode AlgorithmDefinition::advantage_mode() const {
  switch (strength().binding) {
    case Binding::GroupStandardized: return AdvantageMode::GroupStandardized;
    case Binding::GroupCentered: return AdvantageMode::GroupCentered;
    case Binding::Gae: return AdvantageMode::Gae;
    case Binding::RawReward: return AdvantageMode::RawReward;
    case Binding::Precomputed: return AdvantageMode::Precomputed;
    default: break;
  }
  throw Error(ErrorCode::UnknownComponentKind, "strength binding has no kernel");
}

std::vector<ConstraintSpec> AlgorithmDefinition::constraint_specs() const {
  std::vector<ConstraintSpec> out;
  for (const Component* c : constraints()) {
    ConstraintSpec spec;
    spec.kind = c->binding == Binding::DynamicSampling ? ConstraintKind::DynamicSampling
              : c->binding == Binding::KlPenalty       ? ConstraintKind::KlPenalty
                                                       : ConstraintKind::None;
    spec.params = c->params;
    out.push_back(std::move(spec));
  }
  return out;
}

bool AlgorithmDefinition::has_constraint(ConstraintKind kind) const {
  const Binding wanted = kind == ConstraintKind::KlPenalty ? Binding::KlPenalty : Binding::DynamicSampling;
  if (kind == ConstraintKind::None) return false;
  return std::any_of(components.begin(), components.end(), [&](const Component& c) {
    return c.kind == ComponentKind::Constraint && c.binding == wanted;
  });
}

bool AlgorithmDefinition::group_relative() const {
  const AdvantageMode m = advantage_mode();
  return m == AdvantageMode::GroupStandardized || m == AdvantageMode::GroupCentered;
}

AlgorithmDefinition definition_from_json(const Json& doc) {
  if (!doc.is_object()) schema_error("$", "expected object");
  const Json& version = required(doc, "", "schema_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kSchemaVersion)
    schema_error("schema_version", "unsupported schema version");
  AlgorithmDefinition def;
  def.algorithm_id = required_string(doc, "", "algorithm_id");
  if (def.algorithm_id.empty()) schema_error("algorithm_id", "must not be empty");
  def.display_name = required_string(doc, "", "display_name");
  if (auto it = doc.find("lineage_parent"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) schema_error("lineage_parent", "expected string");
    def.lineage_parent = it->get<std::string>();
  }
  def.default_params = params_from_json(required(doc, "", "default_params"), "default_params");
  const Json& components = required(doc, "", "components");
  if (!components.is_array()) schema_error("components", "expected array");
  for (std::size_t i = 0; i < components.size(); ++i)
    def.components.push_back(component_from_json(components[i], path_index("", "components", i)));
  check_structure(def);
  return def;
}

AlgorithmDefinition parse_definition(std::string_view raw) {
  Json doc;
  try {
    doc = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Syntax, e.what(), {}, e.byte);
  }
  return definition_from_json(doc);
}

Json definition_to_json(const AlgorithmDefinition& def) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["algorithm_id"] = def.algorithm_id;
  j["display_name"] = def.display_name;
  j["lineage_parent"] = def.lineage_parent ? Json(*def.lineage_parent) : Json(nullptr);
  j["default_params"] = params_to_json(def.default_params);
  Json comps = Json::array();
  for (const auto& c : def.components) {
    Json cj = Json::object();
    cj["component_id"] = c.component_id;
    cj["kind"] = component_kind_name(c.kind);
    cj["binding"] = binding_name(c.binding);
    cj["formula_markup"] = c.formula_markup;
    cj["prose"] = c.prose;
    Json params = Json::object();
    for (const auto& [k, v] : c.params) params[k] = v;
    cj["params"] = std::move(params);
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  return j;
}

std::vector<AlgorithmDefinition> builtin_definitions() {
  std::vector<AlgorithmDefinition> out;
  for (std::string_view src : builtin_definition_sources()) out.push_back(parse_definition(src));
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<AlgorithmRegistry> AlgorithmRegistry::with_builtins() {
  auto reg = std::make_shared<AlgorithmRegistry>();
  for (auto& def : builtin_definitions()) reg->add(std::move(def));
  return reg;
}

std::shared_ptr<const AlgorithmDefinition> AlgorithmRegistry::add(AlgorithmDefinition def) {
  check_structure(def);
  std::unique_lock lock(mutex_);
  if (by_id_.count(def.algorithm_id))
    throw Error(ErrorCode::DuplicateAlgorithm, "algorithm '" + def.algorithm_id + "' is already registered",
                "algorithm_id");
  // Parents must already be registered, so the lineage graph stays acyclic.
  if (def.lineage_parent && !by_id_.count(*def.lineage_parent))
    schema_error("lineage_parent", "unknown lineage parent '" + *def.lineage_parent + "'");
  auto ptr = std::make_shared<const AlgorithmDefinition>(std::move(def));
  by_id_.emplace(ptr->algorithm_id, ordered_.size());
  ordered_.push_back(ptr);
  return ptr;
}

std::shared_ptr<const AlgorithmDefinition> AlgorithmRegistry::find(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : ordered_[it->second];
}

std::shared_ptr<const AlgorithmDefinition> AlgorithmRegistry::get(std::string_view id) const {
  auto def = find(id);
  if (!def) throw Error(ErrorCode::NotFound, "unknown algorithm '" + std::string(id) + "'");
  return def;
}

std::vector<std::shared_ptr<const AlgorithmDefinition>> AlgorithmRegistry::list() const {
  std::shared_lock lock(mutex_);
  return ordered_;
}

AlgorithmDefinition register_algorithm(std::string_view raw, AlgorithmRegistry& registry) {
  AlgorithmDefinition def = parse_definition(raw);
  return *registry.add(def);
}

// ---------------------------------------------------------------------------
// Diff

const ComponentMatch* DiffResult::match(std::string_view id) const {
  for (const auto& m : matched)
    if (m.component_id == id) return &m;
  return nullptr;
}

DiffResult diff_algorithms(const AlgorithmDefinition& a, const AlgorithmDefinition& b) {
  DiffResult out;
  out.a = a.algorithm_id;
  out.b = b.algorithm_id;
  for (const auto& ca : a.components) {
    const Component* cb = b.find_component(ca.component_id);
    if (!cb) {
      out.removed.push_back(ca.component_id);
      continue;
    }
    ComponentMatch m;
    m.component_id = ca.component_id;
    auto field = [&](const char* name, Json va, Json vb) {
      if (va != vb) m.field_deltas.push_back({name, std::move(va), std::move(vb)});
    };
    field("kind", component_kind_name(ca.kind), component_kind_name(cb->kind));
    field("binding", binding_name(ca.binding), binding_name(cb->binding));
    field("formula_markup", ca.formula_markup, cb->formula_markup);
    field("prose", ca.prose, cb->prose);
    std::set<std::string> keys;
    for (const auto& [k, v] : ca.params) keys.insert(k);
    for (const auto& [k, v] : cb->params) keys.insert(k);
    for (const auto& k : keys) {
      auto ia = ca.params.find(k);
      auto ib = cb->params.find(k);
      Json va = ia == ca.params.end() ? Json(nullptr) : Json(ia->second);
      Json vb = ib == cb->params.end() ? Json(nullptr) : Json(ib->second);
      if (va != vb) m.field_deltas.push_back({"params." + k, std::move(va), std::move(vb)});
    }
    m.status = m.field_deltas.empty() ? MatchStatus::Identical : MatchStatus::Modified;
    out.matched.push_back(std::move(m));
  }
  for (const auto& cb : b.components)
    if (!a.find_component(cb.component_id)) out.added.push_back(cb.component_id);
  return out;
}

Json diff_to_json(const DiffResult& diff) {
  Json j = Json::object();
  j["a"] = diff.a;
  j["b"] = diff.b;
  Json matched = Json::array();
  for (const auto& m : diff.matched) {
    Json mj = Json::object();
    mj["component_id"] = m.component_id;
    mj["status"] = m.status == MatchStatus::Identical ? "identical" : "modified";
    Json deltas = Json::array();
    for (const auto& d : m.field_deltas) deltas.push_back(Json{{"field", d.field}, {"a", d.a}, {"b", d.b}});
    mj["field_deltas"] = std::move(deltas);
    matched.push_back(std::move(mj));
  }
  j["matched"] = std::move(matched);
  j["added"] = diff.added;
  j["removed"] = diff.removed;
  return j;
}

}  // namespace unipo
