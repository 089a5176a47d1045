#include "ruleplan/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace ruleplan {

Value Value::number(double n) {
  if (!std::isfinite(n)) {
    throw ValidationError("kind-mismatch", "numbers must be finite");
  }
  return Value(Data(n));
}

Value Value::symbol(std::string s) {
  if (s.empty()) {
    throw ValidationError("kind-mismatch", "symbols must be non-empty");
  }
  return Value(Data(std::move(s)));
}

Value::Kind Value::kind() const {
  switch (data_.index()) {
    case 1: return Kind::Boolean;
    case 2: return Kind::Number;
    case 3: return Kind::Symbol;
    default: return Kind::Undefined;
  }
}

std::strong_ordering Value::operator<=>(const Value& other) const {
  if (auto c = data_.index() <=> other.data_.index(); c != 0) return c;
  switch (data_.index()) {
    case 1: return as_boolean() <=> other.as_boolean();
    case 2: {
      double a = as_number(), b = other.as_number();
      if (a < b) return std::strong_ordering::less;
      if (a > b) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    case 3: return as_symbol() <=> other.as_symbol();
    default: return std::strong_ordering::equal;
  }
}

std::string format_number(double n) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), n);
  return std::string(buf, end);
}

std::string Value::to_string() const {
  switch (kind()) {
    case Kind::Undefined: return "undefined";
    case Kind::Boolean: return as_boolean() ? "true" : "false";
    case Kind::Number: return format_number(as_number());
    case Kind::Symbol: return "\"" + as_symbol() + "\"";
  }
  return {};
}

const char* to_string(Value::Kind kind) {
  switch (kind) {
    case Value::Kind::Undefined: return "undefined";
    case Value::Kind::Boolean: return "boolean";
    case Value::Kind::Number: return "number";
    case Value::Kind::Symbol: return "symbol";
  }
  return "";
}

Feature::Feature(std::string obj, std::string attr)
    : object(std::move(obj)), attribute(std::move(attr)) {
  if (object.empty() || attribute.empty()) {
    throw ValidationError("unknown-feature",
                          "feature components must be non-empty");
  }
}

const char* to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Number: return "number";
    case ValueKind::Symbol: return "symbol";
    case ValueKind::Any: return "any";
  }
  return "";
}

std::optional<ValueKind> value_kind_from_string(const std::string& s) {
  if (s == "boolean") return ValueKind::Boolean;
  if (s == "number") return ValueKind::Number;
  if (s == "symbol") return ValueKind::Symbol;
  if (s == "any") return ValueKind::Any;
  return std::nullopt;
}

bool conforms(const Value& value, ValueKind kind) {
  switch (value.kind()) {
    case Value::Kind::Undefined: return true;
    case Value::Kind::Boolean:
      return kind == ValueKind::Boolean || kind == ValueKind::Any;
    case Value::Kind::Number:
      return kind == ValueKind::Number || kind == ValueKind::Any;
    case Value::Kind::Symbol:
      return kind == ValueKind::Symbol || kind == ValueKind::Any;
  }
  return false;
}

const char* to_string(LayerId layer) {
  return layer == LayerId::Maneuver ? "maneuver" : "parameter";
}

LayerSchema::LayerSchema(LayerId layer, std::map<Feature, ValueKind> features)
    : layer_(layer), features_(std::move(features)) {
  if (features_.empty()) {
    throw ValidationError("schema", "a layer schema needs at least one feature");
  }
}

ValueKind LayerSchema::kind_of(const Feature& f) const {
  auto it = features_.find(f);
  if (it == features_.end()) {
    throw ValidationError("unknown-feature",
                          "feature " + f.to_string() + " is not in the schema");
  }
  return it->second;
}

ValidationResult validate_assignment(const Assignment& assignment,
                                     const LayerSchema& schema) {
  ValidationResult result;
  for (const auto& [feature, kind] : schema.features()) {
    auto it = assignment.find(feature);
    if (it == assignment.end()) {
      result.violations.push_back({Violation::Code::MissingFeature, feature,
                                   "missing feature " + feature.to_string()});
    } else if (!conforms(it->second, kind)) {
      result.violations.push_back(
          {Violation::Code::KindMismatch, feature,
           "feature " + feature.to_string() + " expects " + to_string(kind) +
               " but got " + to_string(it->second.kind())});
    }
  }
  for (const auto& [feature, value] : assignment) {
    if (!schema.contains(feature)) {
      result.violations.push_back(
          {Violation::Code::UnknownFeature, feature,
           "feature " + feature.to_string() + " is not in the schema"});
    }
  }
  return result;
}

namespace {

const char* violation_kind(Violation::Code code) {
  switch (code) {
    case Violation::Code::MissingFeature: return "totality";
    case Violation::Code::UnknownFeature: return "unknown-feature";
    case Violation::Code::KindMismatch: return "kind-mismatch";
  }
  return "totality";
}

}  // namespace

Scene::Scene(SchemaPtr schema, Assignment assignment)
    : schema_(std::move(schema)), assignment_(std::move(assignment)) {
  auto result = validate_assignment(assignment_, *schema_);
  if (!result.ok()) {
    const Violation& v = result.violations.front();
    throw ValidationError(violation_kind(v.code), v.message);
  }
}

const Value& Scene::value_of(const Feature& f) const {
  auto it = assignment_.find(f);
  if (it == assignment_.end()) {
    throw EngineError("unknown-feature",
                      "feature " + f.to_string() + " is not in the scene");
  }
  return it->second;
}

ValidationResult validate_scene(const Scene& scene, const LayerSchema& schema) {
  return validate_assignment(scene.assignment(), schema);
}

Scene complete_scene(const Assignment& partial, SchemaPtr schema) {
  for (const auto& [feature, value] : partial) {
    if (!schema->contains(feature)) {
      throw ValidationError("unknown-feature", "feature " + feature.to_string() +
                                                   " is not in the schema");
    }
  }
  Assignment full;
  for (const auto& [feature, kind] : schema->features()) {
    auto it = partial.find(feature);
    full.emplace(feature,
                 it == partial.end() ? Value::undefined() : it->second);
  }
  return Scene(std::move(schema), std::move(full));
}

const char* to_string(Maneuver m) {
  switch (m) {
    case Maneuver::EmergencyStop: return "Emergency-Stop";
    case Maneuver::Stop: return "Stop";
    case Maneuver::Yield: return "Yield";
    case Maneuver::DecelerateToHalt: return "Decelerate-To-Halt";
    case Maneuver::PassObstacle: return "Pass-Obstacle";
    case Maneuver::FollowLeader: return "Follow-Leader";
    case Maneuver::TrackSpeed: return "Track-Speed";
  }
  return "";
}

std::optional<Maneuver> maneuver_from_string(const std::string& s) {
  for (Maneuver m : kAllManeuvers) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

Feature maneuver_feature(Maneuver m) {
  return Feature("Maneuver", to_string(m));
}

const char* to_string(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::Eq: return "=";
    case ConstraintOp::Le: return "<=";
    case ConstraintOp::Ge: return ">=";
  }
  return "";
}

Constraint Constraint::truth() { return Constraint(); }

Constraint Constraint::feature_value(Feature lhs, ConstraintOp op, Value rhs) {
  if (rhs.is_undefined() && op != ConstraintOp::Eq) {
    throw ValidationError(
        "constraint", "undefined may only be compared with =, got " +
                          std::string(to_string(op)) + " on " + lhs.to_string());
  }
  Constraint c;
  c.kind_ = Kind::FeatureValue;
  c.op_ = op;
  c.lhs_ = std::move(lhs);
  c.rhs_value_ = std::move(rhs);
  return c;
}

Constraint Constraint::feature_feature(Feature lhs, ConstraintOp op,
                                       Feature rhs) {
  Constraint c;
  c.kind_ = Kind::FeatureFeature;
  c.op_ = op;
  c.lhs_ = std::move(lhs);
  c.rhs_feature_ = std::move(rhs);
  return c;
}

Antecedent::Antecedent(std::vector<Constraint> constraints)
    : constraints_(std::move(constraints)) {
  if (constraints_.empty()) {
    throw ValidationError("antecedent", "antecedents must not be empty");
  }
  std::sort(constraints_.begin(), constraints_.end());
  constraints_.erase(std::unique(constraints_.begin(), constraints_.end()),
                     constraints_.end());
}

bool Antecedent::contains(const Constraint& c) const {
  return std::binary_search(constraints_.begin(), constraints_.end(), c);
}

Antecedent Antecedent::with(const Constraint& c) const {
  auto copy = constraints_;
  copy.push_back(c);
  return Antecedent(std::move(copy));
}

Theory::Theory(LayerId layer, SchemaPtr schema, SchemaPtr output_schema,
               std::vector<Rule> rules)
    : layer_(layer),
      schema_(std::move(schema)),
      output_schema_(std::move(output_schema)),
      rules_(std::move(rules)) {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    check_rule(rules_[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (rules_[j].id == rules_[i].id) {
        throw ValidationError("duplicate-id",
                              "duplicate rule id '" + rules_[i].id + "'");
      }
      if (rules_[j].same_logic(rules_[i])) {
        throw ValidationError("duplicate-rule",
                              "rules '" + rules_[j].id + "' and '" +
                                  rules_[i].id +
                                  "' have identical antecedent and consequent");
      }
    }
  }
}

void Theory::check_rule(const Rule& r) const {
  if (r.id.empty()) {
    throw ValidationError("duplicate-id", "rule ids must be non-empty");
  }
  auto require = [&](const LayerSchema& schema, const Feature& f,
                     const char* where) {
    if (!schema.contains(f)) {
      throw ValidationError("unknown-feature",
                            "rule '" + r.id + "': " + where + " feature " +
                                f.to_string() + " is not in the schema");
    }
  };
  for (const Constraint& c : r.antecedent.constraints()) {
    if (c.kind() == Constraint::Kind::True) continue;
    require(*schema_, c.lhs(), "antecedent");
    if (c.kind() == Constraint::Kind::FeatureFeature) {
      require(*schema_, c.rhs_feature(), "antecedent");
    }
  }
  for (const auto& [feature, value] : r.consequent.parameter) {
    if (!output_schema_) {
      throw ValidationError("unknown-feature",
                            "rule '" + r.id +
                                "': consequent has parameters but the theory "
                                "declares no output schema");
    }
    require(*output_schema_, feature, "consequent");
  }
}

const Rule* Theory::find(const std::string& id) const {
  for (const Rule& r : rules_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

bool Theory::contains_logic(const Rule& r) const {
  return std::any_of(rules_.begin(), rules_.end(),
                     [&](const Rule& other) { return other.same_logic(r); });
}

Theory Theory::with_rule(Rule r) const {
  if (contains_logic(r)) return *this;
  auto rules = rules_;
  rules.push_back(std::move(r));
  return Theory(layer_, schema_, output_schema_, std::move(rules));
}

Theory Theory::without_rule(const std::string& id) const {
  std::vector<Rule> rules;
  rules.reserve(rules_.size());
  for (const Rule& r : rules_) {
    if (r.id != id) rules.push_back(r);
  }
  return Theory(layer_, schema_, output_schema_, std::move(rules));
}

ConservativenessOrder::ConservativenessOrder() : ordering_(kAllManeuvers) {}

ConservativenessOrder::ConservativenessOrder(std::array<Maneuver, 7> ordering)
    : ordering_(ordering) {
  for (Maneuver m : kAllManeuvers) {
    if (std::find(ordering_.begin(), ordering_.end(), m) == ordering_.end()) {
      throw ValidationError("order", "conservativeness order must mention " +
                                         std::string(to_string(m)));
    }
  }
}

std::size_t ConservativenessOrder::rank(Maneuver m) const {
  return static_cast<std::size_t>(
      std::find(ordering_.begin(), ordering_.end(), m) - ordering_.begin());
}

}  // namespace ruleplan
