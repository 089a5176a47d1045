#include "ruleplan/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace ruleplan::dsl {

namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

bool valid_identifier(const std::string& s) {
  if (s.empty() || !ident_start(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), ident_char);
}

// Recursive-descent scanner over one constraint line.
class ConstraintParser {
public:
  explicit ConstraintParser(const std::string& text) : text_(text) {}

  Constraint parse() {
    skip_ws();
    if (at_end()) fail("constraint", {"TRUE", "feature"});
    std::string word = lex_identifier({"TRUE", "feature"});
    skip_ws();
    if (word == "TRUE" && !peek_is('.')) {
      expect_end();
      return Constraint::truth();
    }
    Feature lhs = finish_feature(std::move(word));
    ConstraintOp op = lex_op();
    skip_ws();
    if (at_end()) fail("right-hand side", rhs_expected());

    char c = text_[pos_];
    if (c == '"') {
      Value v = Value::symbol(lex_quoted());
      expect_end();
      return Constraint::feature_value(std::move(lhs), op, std::move(v));
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      Value v = lex_number();
      expect_end();
      return Constraint::feature_value(std::move(lhs), op, std::move(v));
    }
    if (ident_start(c)) {
      std::size_t word_pos = pos_;
      std::string rhs_word = lex_identifier(rhs_expected());
      skip_ws();
      if (peek_is('.')) {
        Feature rhs = finish_feature(std::move(rhs_word));
        expect_end();
        return Constraint::feature_feature(std::move(lhs), op, std::move(rhs));
      }
      expect_end();
      if (rhs_word == "true" || rhs_word == "false") {
        return Constraint::feature_value(std::move(lhs), op,
                                         Value::boolean(rhs_word == "true"));
      }
      if (rhs_word == "undefined") {
        if (op != ConstraintOp::Eq) {
          throw ParseError("undefined may only be compared with =", word_pos,
                           {"number", "quoted symbol", "feature"});
        }
        return Constraint::feature_value(std::move(lhs), op, Value::undefined());
      }
      throw ParseError("unquoted symbol '" + rhs_word + "'", word_pos,
                       rhs_expected());
    }
    fail("right-hand side", rhs_expected());
    return Constraint::truth();  // unreachable
  }

private:
  static std::vector<std::string> rhs_expected() {
    return {"number", "quoted symbol", "true", "false", "undefined", "feature"};
  }

  [[noreturn]] void fail(const std::string& what,
                         std::vector<std::string> expected) {
    throw ParseError("expected " + what, pos_, std::move(expected));
  }

  bool at_end() const { return pos_ >= text_.size(); }
  bool peek_is(char c) const { return !at_end() && text_[pos_] == c; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect_end() {
    skip_ws();
    if (!at_end()) fail("end of constraint", {"end of input"});
  }

  std::string lex_identifier(std::vector<std::string> expected) {
    if (at_end() || !ident_start(text_[pos_])) {
      fail("identifier", std::move(expected));
    }
    std::size_t start = pos_;
    while (!at_end() && ident_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  Feature finish_feature(std::string object) {
    skip_ws();
    if (!peek_is('.')) fail("'.'", {"."});
    ++pos_;
    skip_ws();
    std::string attribute = lex_identifier({"attribute"});
    return Feature(std::move(object), std::move(attribute));
  }

  ConstraintOp lex_op() {
    skip_ws();
    if (peek_is('=')) {
      ++pos_;
      return ConstraintOp::Eq;
    }
    if (peek_is('<') || peek_is('>')) {
      char first = text_[pos_];
      ++pos_;
      if (peek_is('=')) {
        ++pos_;
        return first == '<' ? ConstraintOp::Le : ConstraintOp::Ge;
      }
      --pos_;
    }
    fail("operator", {"=", "<=", ">="});
  }

  std::string lex_quoted() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (at_end()) fail("closing '\"'", {"\""});
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("escape character", {"\\\"", "\\\\"});
        char esc = text_[pos_++];
        if (esc != '"' && esc != '\\') {
          throw ParseError("unknown escape sequence", pos_ - 2,
                           {"\\\"", "\\\\"});
        }
        out.push_back(esc);
      } else {
        out.push_back(c);
      }
    }
    if (out.empty()) {
      throw ParseError("symbols must be non-empty", pos_ - 1, {"symbol"});
    }
    return out;
  }

  Value lex_number() {
    std::size_t start = pos_;
    if (peek_is('-')) ++pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (peek_is('.')) {
      ++pos_;
      while (!at_end() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
    }
    if (peek_is('e') || peek_is('E')) {
      ++pos_;
      if (peek_is('+') || peek_is('-')) ++pos_;
      while (!at_end() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
    }
    double parsed = 0;
    auto [end, ec] = std::from_chars(text_.data() + start, text_.data() + pos_,
                                     parsed);
    if (ec != std::errc() || end != text_.data() + pos_) {
      throw ParseError("malformed number", start, {"number"});
    }
    return Value::number(parsed);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

std::string quote_symbol(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_value(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Undefined: return "undefined";
    case Value::Kind::Boolean: return v.as_boolean() ? "true" : "false";
    case Value::Kind::Number: return format_number(v.as_number());
    case Value::Kind::Symbol: return quote_symbol(v.as_symbol());
  }
  return {};
}

}  // namespace

Constraint parse_constraint(const std::string& text) {
  return ConstraintParser(text).parse();
}

std::string format_constraint(const Constraint& c) {
  switch (c.kind()) {
    case Constraint::Kind::True:
      return "TRUE";
    case Constraint::Kind::FeatureValue:
      return c.lhs().to_string() + " " + to_string(c.op()) + " " +
             format_value(c.rhs_value());
    case Constraint::Kind::FeatureFeature:
      return c.lhs().to_string() + " " + to_string(c.op()) + " " +
             c.rhs_feature().to_string();
  }
  return {};
}

Feature parse_feature_key(const std::string& key) {
  auto dot = key.find('.');
  if (dot == std::string::npos || key.find('.', dot + 1) != std::string::npos) {
    throw ValidationError("unknown-feature",
                          "feature key '" + key +
                              "' must be Object.Attribute with a single dot");
  }
  std::string object = key.substr(0, dot);
  std::string attribute = key.substr(dot + 1);
  if (!valid_identifier(object) || !valid_identifier(attribute)) {
    throw ValidationError("unknown-feature",
                          "feature key '" + key +
                              "' must use identifier components");
  }
  return Feature(std::move(object), std::move(attribute));
}

Value value_from_json(const json& j) {
  if (j.is_null()) return Value::undefined();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number()) return Value::number(j.get<double>());
  if (j.is_string()) return Value::symbol(j.get<std::string>());
  throw ValidationError("kind-mismatch",
                        "literals must be null, boolean, number or string");
}

json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Undefined: return nullptr;
    case Value::Kind::Boolean: return v.as_boolean();
    case Value::Kind::Number: {
      double n = v.as_number();
      if (n == std::floor(n) && std::abs(n) < 9.0e15) {
        return static_cast<std::int64_t>(n);
      }
      return n;
    }
    case Value::Kind::Symbol: return v.as_symbol();
  }
  return nullptr;
}

Behaviour behaviour_from_json(const json& j) {
  if (!j.is_object() || !j.contains("maneuver")) {
    throw ValidationError("behaviour",
                          "behaviours are {\"maneuver\", \"params\"} objects");
  }
  Behaviour b;
  auto name = j.at("maneuver").get<std::string>();
  auto maneuver = maneuver_from_string(name);
  if (!maneuver) {
    throw ValidationError("unknown-maneuver",
                          "unknown maneuver '" + name + "'");
  }
  b.maneuver = *maneuver;
  if (j.contains("params")) {
    for (const auto& [key, literal] : j.at("params").items()) {
      b.parameter.emplace(parse_feature_key(key), value_from_json(literal));
    }
  }
  return b;
}

json behaviour_to_json(const Behaviour& b) {
  json params = json::object();
  for (const auto& [feature, value] : b.parameter) {
    params[feature.to_string()] = value_to_json(value);
  }
  return json{{"maneuver", to_string(b.maneuver)}, {"params", params}};
}

json scene_to_json(const Scene& scene) {
  json out = json::object();
  for (const auto& [feature, value] : scene.assignment()) {
    out[feature.to_string()] = value_to_json(value);
  }
  return out;
}

std::optional<SceneMode> scene_mode_from_string(const std::string& s) {
  if (s == "strict") return SceneMode::Strict;
  if (s == "completing") return SceneMode::Completing;
  return std::nullopt;
}

Scene parse_scene(const json& j, SchemaPtr schema, SceneMode mode) {
  if (!j.is_object()) {
    throw ValidationError("scene", "scene documents must be JSON objects");
  }
  Assignment assignment;
  for (const auto& [key, literal] : j.items()) {
    Feature feature = parse_feature_key(key);
    if (!schema->contains(feature)) {
      throw ValidationError("unknown-feature",
                            "feature " + feature.to_string() +
                                " is not in the schema");
    }
    assignment.emplace(std::move(feature), value_from_json(literal));
  }
  if (mode == SceneMode::Completing) {
    return complete_scene(assignment, std::move(schema));
  }
  for (const auto& [feature, kind] : schema->features()) {
    if (assignment.find(feature) == assignment.end()) {
      throw ValidationError("totality",
                            "missing feature " + feature.to_string());
    }
  }
  return Scene(std::move(schema), std::move(assignment));
}

Scene parse_scene_text(const std::string& text, SchemaPtr schema,
                       SceneMode mode) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte, {"JSON"});
  }
  return parse_scene(j, std::move(schema), mode);
}

namespace {

SchemaPtr schema_from_json(const json& j, LayerId layer) {
  if (!j.is_object() || !j.contains("features")) {
    throw ValidationError("schema", std::string(to_string(layer)) +
                                        " schema needs a \"features\" object");
  }
  std::map<Feature, ValueKind> features;
  for (const auto& [key, kind_name] : j.at("features").items()) {
    auto kind = value_kind_from_string(kind_name.get<std::string>());
    if (!kind) {
      throw ValidationError("schema", "unknown value kind '" +
                                          kind_name.get<std::string>() +
                                          "' for feature " + key);
    }
    features.emplace(parse_feature_key(key), *kind);
  }
  return std::make_shared<const LayerSchema>(layer, std::move(features));
}

ConservativenessOrder order_from_json(const json& j) {
  if (!j.is_array() || j.size() != kAllManeuvers.size()) {
    throw ValidationError("order",
                          "the conservativeness order must list all " +
                              std::to_string(kAllManeuvers.size()) +
                              " maneuvers");
  }
  std::array<Maneuver, 7> ordering{};
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    auto name = j.at(i).get<std::string>();
    auto m = maneuver_from_string(name);
    if (!m) {
      throw ValidationError("unknown-maneuver",
                            "unknown maneuver '" + name + "'");
    }
    ordering[i] = *m;
  }
  return ConservativenessOrder(ordering);
}

json order_to_json(const ConservativenessOrder& order) {
  json out = json::array();
  for (Maneuver m : order.ordering()) out.push_back(to_string(m));
  return out;
}

Rule rule_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("id") || !j.contains("if") ||
      !j.contains("then")) {
    throw ValidationError(
        "rule", where + ": rules are {\"id\", \"if\", \"then\"} objects");
  }
  Rule rule{j.at("id").get<std::string>(), Antecedent::most_general(), {}};
  const json& conds = j.at("if");
  if (!conds.is_array() || conds.empty()) {
    throw ValidationError("rule", where + " (id '" + rule.id +
                                      "'): \"if\" must be a non-empty array "
                                      "of constraint strings");
  }
  std::vector<Constraint> constraints;
  for (const auto& text : conds) {
    try {
      constraints.push_back(parse_constraint(text.get<std::string>()));
    } catch (const ParseError& e) {
      throw ParseError(where + " (id '" + rule.id + "'): " + e.what() +
                           " in \"" + text.get<std::string>() + "\"",
                       e.offset(), e.expected());
    }
  }
  rule.antecedent = Antecedent(std::move(constraints));
  rule.consequent = behaviour_from_json(j.at("then"));
  return rule;
}

json rule_to_json(const Rule& r) {
  json conds = json::array();
  for (const Constraint& c : r.antecedent.constraints()) {
    conds.push_back(format_constraint(c));
  }
  return json{{"id", r.id}, {"if", conds}, {"then", behaviour_to_json(r.consequent)}};
}

json parse_json_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte, {"JSON"});
  }
}

void check_version(const json& j) {
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != 1) {
    throw ValidationError("version", "unsupported document version; expected 1");
  }
}

// Output vocabulary of the parameter layer, collected from consequents.
SchemaPtr derive_output_schema(const std::vector<Rule>& parameter_rules) {
  std::map<Feature, ValueKind> features;
  for (const Rule& r : parameter_rules) {
    for (const auto& [feature, value] : r.consequent.parameter) {
      features.emplace(feature, ValueKind::Any);
    }
  }
  if (features.empty()) return nullptr;
  return std::make_shared<const LayerSchema>(LayerId::Parameter,
                                             std::move(features));
}

}  // namespace

bool RuleDocument::operator==(const RuleDocument& other) const {
  auto schema_eq = [](const SchemaPtr& a, const SchemaPtr& b) {
    if (!a || !b) return !a && !b;
    return *a == *b;
  };
  auto rules_eq = [](const std::vector<Rule>& a, const std::vector<Rule>& b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                      [](const Rule& x, const Rule& y) {
                        return x.id == y.id && x.same_logic(y);
                      });
  };
  return version == other.version &&
         schema_eq(maneuver_schema, other.maneuver_schema) &&
         schema_eq(parameter_schema, other.parameter_schema) &&
         order == other.order && maneuver_rules.size() == other.maneuver_rules.size() &&
         parameter_rules.size() == other.parameter_rules.size() &&
         rules_eq(maneuver_rules, other.maneuver_rules) &&
         rules_eq(parameter_rules, other.parameter_rules);
}

RuleDocument parse_rule_document(const std::string& text) {
  json j = parse_json_document(text);
  if (!j.is_object()) {
    throw ValidationError("rule-document", "rule documents are JSON objects");
  }
  check_version(j);
  if (!j.contains("schemas") || !j.at("schemas").is_object()) {
    throw ValidationError("schema", "missing \"schemas\" object");
  }
  RuleDocument doc;
  doc.maneuver_schema =
      schema_from_json(j.at("schemas").at("maneuver"), LayerId::Maneuver);
  doc.parameter_schema =
      schema_from_json(j.at("schemas").at("parameter"), LayerId::Parameter);
  if (j.contains("order")) {
    doc.order = order_from_json(j.at("order"));
  }
  for (const char* key : {"maneuver_rules", "parameter_rules"}) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw ValidationError("rule-document",
                            std::string("missing \"") + key + "\" array");
    }
    auto& target = key == std::string("maneuver_rules") ? doc.maneuver_rules
                                                        : doc.parameter_rules;
    std::size_t index = 0;
    for (const auto& rule_json : j.at(key)) {
      target.push_back(
          rule_from_json(rule_json, std::string(key) + "[" +
                                        std::to_string(index) + "]"));
      ++index;
    }
  }
  return doc;
}

std::string serialize_rule_document(const RuleDocument& doc) {
  json man_rules = json::array();
  for (const Rule& r : doc.maneuver_rules) man_rules.push_back(rule_to_json(r));
  json par_rules = json::array();
  for (const Rule& r : doc.parameter_rules) par_rules.push_back(rule_to_json(r));
  json j{{"version", doc.version},
         {"schemas",
          {{"maneuver", schema_to_json(*doc.maneuver_schema)},
           {"parameter", schema_to_json(*doc.parameter_schema)}}},
         {"order", order_to_json(doc.order)},
         {"maneuver_rules", man_rules},
         {"parameter_rules", par_rules}};
  return j.dump(2) + "\n";
}

EngineConfig to_engine_config(const RuleDocument& doc) {
  Theory maneuver(LayerId::Maneuver, doc.maneuver_schema, doc.parameter_schema,
                  doc.maneuver_rules);
  Theory parameter(LayerId::Parameter, doc.parameter_schema,
                   derive_output_schema(doc.parameter_rules),
                   doc.parameter_rules);
  return EngineConfig(std::move(maneuver), std::move(parameter), doc.order);
}

RuleDocument document_from(const EngineConfig& cfg) {
  RuleDocument doc;
  doc.maneuver_schema = cfg.maneuver_theory().schema_ptr();
  doc.parameter_schema = cfg.parameter_theory().schema_ptr();
  doc.order = cfg.order();
  doc.maneuver_rules = cfg.maneuver_theory().rules();
  doc.parameter_rules = cfg.parameter_theory().rules();
  return doc;
}

json schema_to_json(const LayerSchema& schema) {
  json features = json::object();
  for (const auto& [feature, kind] : schema.features()) {
    features[feature.to_string()] = to_string(kind);
  }
  return json{{"features", features}};
}

namespace {

learning::LabelledScene record_from_json(const json& j, std::size_t index,
                                         const SchemaPtr& maneuver_schema) {
  std::string where = "scenes[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("scene") ||
      !j.contains("maneuver_label") || !j.contains("final_label")) {
    throw ValidationError("dataset",
                          where +
                              ": records are {\"scene\", \"maneuver_label\", "
                              "\"final_label\"} objects");
  }
  learning::LabelledScene entry{
      parse_scene(j.at("scene"), maneuver_schema, SceneMode::Strict),
      behaviour_from_json(j.at("maneuver_label")),
      behaviour_from_json(j.at("final_label"))};
  if (entry.maneuver_label.maneuver != entry.final_label.maneuver) {
    throw ValidationError(
        "label", where + ": maneuver and final labels use different maneuvers");
  }
  return entry;
}

}  // namespace

ParsedDataset parse_dataset(const std::string& text, SchemaPtr maneuver_schema,
                            SchemaPtr parameter_schema) {
  json j = parse_json_document(text);
  ParsedDataset out;
  out.maneuver_schema = std::move(maneuver_schema);
  out.parameter_schema = std::move(parameter_schema);

  const json* records = nullptr;
  if (j.is_array()) {
    if (!out.maneuver_schema || !out.parameter_schema) {
      throw ValidationError(
          "dataset",
          "bare dataset arrays need external schemas; embed a \"schemas\" "
          "object or load rules alongside");
    }
    records = &j;
  } else if (j.is_object()) {
    check_version(j);
    if (!j.contains("schemas") || !j.contains("scenes")) {
      throw ValidationError(
          "dataset", "dataset objects need \"schemas\" and \"scenes\"");
    }
    SchemaPtr man =
        schema_from_json(j.at("schemas").at("maneuver"), LayerId::Maneuver);
    SchemaPtr par =
        schema_from_json(j.at("schemas").at("parameter"), LayerId::Parameter);
    if (out.maneuver_schema && !(*out.maneuver_schema == *man)) {
      throw ValidationError("schema",
                            "dataset maneuver schema differs from the rules "
                            "document's");
    }
    if (out.parameter_schema && !(*out.parameter_schema == *par)) {
      throw ValidationError("schema",
                            "dataset parameter schema differs from the rules "
                            "document's");
    }
    out.maneuver_schema = std::move(man);
    out.parameter_schema = std::move(par);
    if (j.contains("order")) out.order = order_from_json(j.at("order"));
    records = &j.at("scenes");
    if (!records->is_array()) {
      throw ValidationError("dataset", "\"scenes\" must be an array");
    }
  } else {
    throw ValidationError("dataset",
                          "dataset documents are arrays or objects");
  }

  std::map<Assignment, std::size_t> seen;
  std::map<Feature, ValueKind> output_features;
  for (std::size_t i = 0; i < records->size(); ++i) {
    auto entry = record_from_json(records->at(i), i, out.maneuver_schema);
    for (const auto& [feature, value] : entry.maneuver_label.parameter) {
      if (!out.parameter_schema->contains(feature)) {
        throw ValidationError("unknown-feature",
                              "scenes[" + std::to_string(i) +
                                  "]: maneuver label parameter " +
                                  feature.to_string() +
                                  " is not in the parameter schema");
      }
    }
    for (const auto& [feature, value] : entry.final_label.parameter) {
      output_features.emplace(feature, ValueKind::Any);
    }
    auto [it, inserted] = seen.emplace(entry.scene.assignment(), i);
    if (!inserted) {
      const auto& prior = out.records[it->second];
      if (prior.maneuver_label != entry.maneuver_label ||
          prior.final_label != entry.final_label) {
        throw ValidationError("label-conflict",
                              "scenes " + std::to_string(it->second) + " and " +
                                  std::to_string(i) +
                                  " are identical but labelled differently");
      }
    }
    out.records.push_back(std::move(entry));
  }
  if (!output_features.empty()) {
    out.output_schema = std::make_shared<const LayerSchema>(
        LayerId::Parameter, std::move(output_features));
  }
  return out;
}

std::string serialize_dataset(
    const learning::Dataset& records, const LayerSchema& maneuver_schema,
    const LayerSchema& parameter_schema,
    const std::optional<ConservativenessOrder>& order) {
  json scenes = json::array();
  for (const auto& entry : records) {
    scenes.push_back(json{{"scene", scene_to_json(entry.scene)},
                          {"maneuver_label", behaviour_to_json(entry.maneuver_label)},
                          {"final_label", behaviour_to_json(entry.final_label)}});
  }
  json j{{"version", 1},
         {"schemas",
          {{"maneuver", schema_to_json(maneuver_schema)},
           {"parameter", schema_to_json(parameter_schema)}}},
         {"scenes", scenes}};
  if (order) j["order"] = order_to_json(*order);
  return j.dump(2) + "\n";
}

namespace {

json behaviours_to_json(const std::vector<Behaviour>& bs) {
  json out = json::array();
  for (const Behaviour& b : bs) out.push_back(behaviour_to_json(b));
  return out;
}

json layer_trace_to_json(const LayerTrace& trace) {
  json fired = json::object();
  for (const auto& [id, did] : trace.fired) fired[id] = did;
  return json{{"input", scene_to_json(trace.input)},
              {"fired", fired},
              {"output", behaviours_to_json(trace.output)},
              {"resolved", behaviours_to_json(trace.resolved)}};
}

}  // namespace

json trace_to_json(const InferenceTrace& trace) {
  json out = json::object();
  if (trace.maneuver) out["maneuver"] = layer_trace_to_json(*trace.maneuver);
  if (trace.transformed) out["transformed"] = scene_to_json(*trace.transformed);
  if (trace.parameter) out["parameter"] = layer_trace_to_json(*trace.parameter);
  if (trace.behaviour) out["behaviour"] = behaviour_to_json(*trace.behaviour);
  return out;
}

}  // namespace ruleplan::dsl
