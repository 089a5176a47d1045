#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruleplan/engine.hpp"
#include "ruleplan/learning.hpp"
#include "ruleplan/model.hpp"

namespace ruleplan::dsl {

using json = nlohmann::json;

/// Constraint text grammar (whitespace-insensitive):
///
///   constraint  := 'TRUE' | feature op rhs
///   feature     := ident '.' ident
///   op          := '=' | '<=' | '>='
///   rhs         := literal | feature
///   literal     := 'true' | 'false' | 'undefined' | number | '"' chars '"'
///   ident       := [A-Za-z_][A-Za-z0-9_-]*
///
/// An identifier followed by '.' is a feature reference; the words true,
/// false and undefined are literals otherwise. Failures raise ParseError
/// with the byte offset and the tokens expected there.
Constraint parse_constraint(const std::string& text);

std::string format_constraint(const Constraint& c);

// "Object.Attribute" with exactly one dot; both halves are identifiers.
Feature parse_feature_key(const std::string& key);

// JSON literal <-> value: null is undefined, strings are symbols.
Value value_from_json(const json& j);
json value_to_json(const Value& v);

Behaviour behaviour_from_json(const json& j);
json behaviour_to_json(const Behaviour& b);

json scene_to_json(const Scene& scene);

enum class SceneMode { Strict, Completing };

std::optional<SceneMode> scene_mode_from_string(const std::string& s);

/// Scene document: a flat object mapping "Object.Attribute" keys to
/// literals. Strict mode demands totality; completing mode fills absent
/// features with undefined.
Scene parse_scene(const json& j, SchemaPtr schema, SceneMode mode);
Scene parse_scene_text(const std::string& text, SchemaPtr schema,
                       SceneMode mode);

/// Persistent form of a full engine configuration.
struct RuleDocument {
  int version = 1;
  SchemaPtr maneuver_schema;
  SchemaPtr parameter_schema;
  ConservativenessOrder order;
  std::vector<Rule> maneuver_rules;
  std::vector<Rule> parameter_rules;

  bool operator==(const RuleDocument& other) const;
};

RuleDocument parse_rule_document(const std::string& text);
std::string serialize_rule_document(const RuleDocument& doc);

/// Builds the runnable engine; the parameter layer's output vocabulary is
/// collected from the parameter rules' consequents.
EngineConfig to_engine_config(const RuleDocument& doc);
RuleDocument document_from(const EngineConfig& cfg);

/// Dataset document: either a bare array of records (schemas supplied by
/// the caller) or an object {"version", "schemas", "order"?, "scenes"}
/// carrying its own schema declarations. Each record is {"scene",
/// "maneuver_label", "final_label"}. Scenes are strict; identical scenes
/// with different labels are rejected naming both record indices.
struct ParsedDataset {
  learning::Dataset records;
  SchemaPtr maneuver_schema;
  SchemaPtr parameter_schema;
  SchemaPtr output_schema;  // from final labels; null when they carry no params
  std::optional<ConservativenessOrder> order;
};

ParsedDataset parse_dataset(const std::string& text,
                            SchemaPtr maneuver_schema = nullptr,
                            SchemaPtr parameter_schema = nullptr);

std::string serialize_dataset(const learning::Dataset& records,
                              const LayerSchema& maneuver_schema,
                              const LayerSchema& parameter_schema,
                              const std::optional<ConservativenessOrder>& order =
                                  std::nullopt);

json schema_to_json(const LayerSchema& schema);

json trace_to_json(const InferenceTrace& trace);

}  // namespace ruleplan::dsl
