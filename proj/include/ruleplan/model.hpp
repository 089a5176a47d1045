#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ruleplan/errors.hpp"

namespace ruleplan {

/// Scalar a feature may take: boolean, unit-free real, symbolic token, or
/// the special "undefined" marker that any feature may carry.
class Value {
public:
  enum class Kind { Undefined, Boolean, Number, Symbol };

  Value() : data_(std::monostate{}) {}

  static Value undefined() { return Value(); }
  static Value boolean(bool b) { return Value(Data(b)); }
  static Value number(double n);
  static Value symbol(std::string s);

  Kind kind() const;
  bool is_undefined() const { return kind() == Kind::Undefined; }
  bool is_number() const { return kind() == Kind::Number; }

  bool as_boolean() const { return std::get<bool>(data_); }
  double as_number() const { return std::get<double>(data_); }
  const std::string& as_symbol() const { return std::get<std::string>(data_); }

  // Equality is total; undefined equals only undefined.
  friend bool operator==(const Value&, const Value&) = default;
  // Canonical order (by kind, then payload); used for stable storage, not
  // for constraint semantics.
  std::strong_ordering operator<=>(const Value& other) const;

  std::string to_string() const;

private:
  using Data = std::variant<std::monostate, bool, double, std::string>;
  explicit Value(Data d) : data_(std::move(d)) {}
  Data data_;
};

const char* to_string(Value::Kind kind);

/// Shortest round-tripping decimal form, e.g. 35 -> "35", 0.5 -> "0.5".
std::string format_number(double n);

/// An (object, attribute) pair. The pair is the identity.
struct Feature {
  std::string object;
  std::string attribute;

  Feature(std::string obj, std::string attr);

  auto operator<=>(const Feature&) const = default;
  std::string to_string() const { return object + "." + attribute; }
};

struct Property {
  Feature feature;
  Value value;

  auto operator<=>(const Property&) const = default;
};

/// Declared kind of a feature's values; Undefined is admissible everywhere.
enum class ValueKind { Boolean, Number, Symbol, Any };

const char* to_string(ValueKind kind);
std::optional<ValueKind> value_kind_from_string(const std::string& s);

bool conforms(const Value& value, ValueKind kind);

enum class LayerId { Maneuver, Parameter };

const char* to_string(LayerId layer);

/// Finite feature set of one layer together with each feature's declared
/// value kind. Scenes are total over this set.
class LayerSchema {
public:
  LayerSchema(LayerId layer, std::map<Feature, ValueKind> features);

  LayerId layer() const { return layer_; }
  const std::map<Feature, ValueKind>& features() const { return features_; }
  bool contains(const Feature& f) const { return features_.count(f) != 0; }
  ValueKind kind_of(const Feature& f) const;
  std::size_t size() const { return features_.size(); }

  bool operator==(const LayerSchema&) const = default;

private:
  LayerId layer_;
  std::map<Feature, ValueKind> features_;
};

using SchemaPtr = std::shared_ptr<const LayerSchema>;

struct Violation {
  enum class Code { MissingFeature, UnknownFeature, KindMismatch };
  Code code;
  Feature feature;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

using Assignment = std::map<Feature, Value>;

ValidationResult validate_assignment(const Assignment& assignment,
                                     const LayerSchema& schema);

/// Total function from the schema's features to values.
class Scene {
public:
  // Throws ValidationError unless `assignment` is total over `schema` and
  // every value conforms to its declared kind (or is undefined).
  Scene(SchemaPtr schema, Assignment assignment);

  const LayerSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const Assignment& assignment() const { return assignment_; }

  // Total over the schema by construction; throws EngineError for features
  // outside it.
  const Value& value_of(const Feature& f) const;

  bool operator==(const Scene& other) const {
    return assignment_ == other.assignment_;
  }

private:
  SchemaPtr schema_;
  Assignment assignment_;
};

ValidationResult validate_scene(const Scene& scene, const LayerSchema& schema);

// Fills every schema feature absent from `partial` with undefined.
// Throws ValidationError("unknown-feature") for keys outside the schema.
Scene complete_scene(const Assignment& partial, SchemaPtr schema);

enum class Maneuver {
  EmergencyStop,
  Stop,
  Yield,
  DecelerateToHalt,
  PassObstacle,
  FollowLeader,
  TrackSpeed,
};

inline constexpr std::array<Maneuver, 7> kAllManeuvers = {
    Maneuver::EmergencyStop,   Maneuver::Stop,         Maneuver::Yield,
    Maneuver::DecelerateToHalt, Maneuver::PassObstacle, Maneuver::FollowLeader,
    Maneuver::TrackSpeed,
};

const char* to_string(Maneuver m);
std::optional<Maneuver> maneuver_from_string(const std::string& s);

/// Scene feature that encodes a chosen maneuver in the parameter layer,
/// e.g. Maneuver.Decelerate-To-Halt.
Feature maneuver_feature(Maneuver m);

enum class ConstraintOp { Eq, Le, Ge };

const char* to_string(ConstraintOp op);

/// Atomic predicate over features: the trivial True, feature-vs-literal, or
/// feature-vs-feature, with operators =, <=, >=.
class Constraint {
public:
  enum class Kind { True, FeatureValue, FeatureFeature };

  static Constraint truth();
  // Undefined literals are only comparable with Eq.
  static Constraint feature_value(Feature lhs, ConstraintOp op, Value rhs);
  static Constraint feature_feature(Feature lhs, ConstraintOp op, Feature rhs);

  Kind kind() const { return kind_; }
  ConstraintOp op() const { return op_; }
  const Feature& lhs() const { return *lhs_; }
  const Value& rhs_value() const { return *rhs_value_; }
  const Feature& rhs_feature() const { return *rhs_feature_; }

  bool operator==(const Constraint&) const = default;
  std::strong_ordering operator<=>(const Constraint&) const = default;

private:
  Constraint() = default;
  Kind kind_ = Kind::True;
  ConstraintOp op_ = ConstraintOp::Eq;
  std::optional<Feature> lhs_;
  std::optional<Value> rhs_value_;
  std::optional<Feature> rhs_feature_;
};

/// Conjunction of constraints, stored deduplicated in canonical order.
/// Never empty: the most general antecedent is the single True constraint.
class Antecedent {
public:
  explicit Antecedent(std::vector<Constraint> constraints);

  static Antecedent most_general() {
    return Antecedent({Constraint::truth()});
  }

  const std::vector<Constraint>& constraints() const { return constraints_; }
  std::size_t size() const { return constraints_.size(); }
  bool contains(const Constraint& c) const;

  // New antecedent with `c` appended (set semantics).
  Antecedent with(const Constraint& c) const;

  bool operator==(const Antecedent&) const = default;

private:
  std::vector<Constraint> constraints_;
};

/// High-level maneuver plus its parameter properties (at most one per
/// feature). Equality ignores parameter order.
struct Behaviour {
  Maneuver maneuver = Maneuver::TrackSpeed;
  std::map<Feature, Value> parameter;

  auto operator<=>(const Behaviour&) const = default;
};

struct Rule {
  std::string id;
  Antecedent antecedent;
  Behaviour consequent;

  bool same_logic(const Rule& other) const {
    return antecedent == other.antecedent && consequent == other.consequent;
  }
};

/// Unordered rule set of one layer. Rules are kept in insertion order for
/// deterministic iteration; ids and (antecedent, consequent) pairs are
/// unique within the theory.
class Theory {
public:
  // `output_schema` scopes the features consequent parameters may use; it
  // may be null for theories whose consequents carry no parameters.
  Theory(LayerId layer, SchemaPtr schema, SchemaPtr output_schema,
         std::vector<Rule> rules);

  LayerId layer() const { return layer_; }
  const LayerSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const LayerSchema& output_schema() const { return *output_schema_; }
  const SchemaPtr& output_schema_ptr() const { return output_schema_; }
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }

  const Rule* find(const std::string& id) const;
  bool contains_logic(const Rule& r) const;

  // Value-semantic updates used by the learner.
  Theory with_rule(Rule r) const;
  Theory without_rule(const std::string& id) const;

private:
  void check_rule(const Rule& r) const;

  LayerId layer_;
  SchemaPtr schema_;
  SchemaPtr output_schema_;
  std::vector<Rule> rules_;
};

/// Total order over maneuver conservativeness, most conservative first.
class ConservativenessOrder {
public:
  // Defaults to EmergencyStop > Stop > Yield > DecelerateToHalt >
  // PassObstacle > FollowLeader > TrackSpeed.
  ConservativenessOrder();
  explicit ConservativenessOrder(std::array<Maneuver, 7> ordering);

  const std::array<Maneuver, 7>& ordering() const { return ordering_; }

  // True iff a is strictly more conservative than b.
  bool more_conservative(Maneuver a, Maneuver b) const {
    return rank(a) < rank(b);
  }
  std::size_t rank(Maneuver m) const;

  bool operator==(const ConservativenessOrder&) const = default;

private:
  std::array<Maneuver, 7> ordering_;
};

}  // namespace ruleplan
