#include "ruleplan/engine.hpp"

#include <algorithm>

namespace ruleplan {

namespace {

bool numeric_compare(const Value& lhs, const Value& rhs, ConstraintOp op) {
  if (!lhs.is_number() || !rhs.is_number()) return false;
  double a = lhs.as_number(), b = rhs.as_number();
  return op == ConstraintOp::Le ? a <= b : a >= b;
}

}  // namespace

bool eval_constraint(const Constraint& c, const Scene& scene) {
  switch (c.kind()) {
    case Constraint::Kind::True:
      return true;
    case Constraint::Kind::FeatureValue: {
      const Value& lhs = scene.value_of(c.lhs());
      if (c.op() == ConstraintOp::Eq) return lhs == c.rhs_value();
      return numeric_compare(lhs, c.rhs_value(), c.op());
    }
    case Constraint::Kind::FeatureFeature: {
      const Value& lhs = scene.value_of(c.lhs());
      const Value& rhs = scene.value_of(c.rhs_feature());
      if (c.op() == ConstraintOp::Eq) return lhs == rhs;
      return numeric_compare(lhs, rhs, c.op());
    }
  }
  return false;
}

bool eval_antecedent(const Antecedent& a, const Scene& scene) {
  for (const Constraint& c : a.constraints()) {
    if (!eval_constraint(c, scene)) return false;
  }
  return true;
}

std::optional<Behaviour> apply_rule(const Rule& r, const Scene& scene) {
  if (eval_antecedent(r.antecedent, scene)) return r.consequent;
  return std::nullopt;
}

std::vector<Behaviour> apply_theory(const Theory& t, const Scene& scene) {
  std::vector<Behaviour> out;
  for (const Rule& r : t.rules()) {
    if (!eval_antecedent(r.antecedent, scene)) continue;
    if (std::find(out.begin(), out.end(), r.consequent) == out.end()) {
      out.push_back(r.consequent);
    }
  }
  return out;
}

TheoryApplication apply_theory_traced(const Theory& t, const Scene& scene) {
  TheoryApplication app;
  for (const Rule& r : t.rules()) {
    bool fired = eval_antecedent(r.antecedent, scene);
    app.fired.emplace(r.id, fired);
    if (fired && std::find(app.output.begin(), app.output.end(),
                           r.consequent) == app.output.end()) {
      app.output.push_back(r.consequent);
    }
  }
  return app;
}

std::vector<Behaviour> resolve_maneuver(const std::vector<Behaviour>& bs,
                                        const ConservativenessOrder& order) {
  if (bs.empty()) return {};
  std::size_t best = order.rank(bs.front().maneuver);
  for (const Behaviour& b : bs) {
    best = std::min(best, order.rank(b.maneuver));
  }
  std::vector<Behaviour> out;
  for (const Behaviour& b : bs) {
    if (order.rank(b.maneuver) == best) out.push_back(b);
  }
  return out;
}

Scene transform_maneuver(const Scene& scene) { return scene; }

namespace {

// Unites parameter properties; a defined value beats undefined, and two
// distinct defined values for one feature are a conflict.
void merge_parameter(std::map<Feature, Value>& into, const Feature& feature,
                     const Value& value) {
  auto [it, inserted] = into.emplace(feature, value);
  if (inserted) return;
  if (it->second.is_undefined()) {
    it->second = value;
  } else if (!value.is_undefined() && it->second != value) {
    throw EngineError("parameter-conflict",
                      "feature " + feature.to_string() +
                          " resolved to both " + it->second.to_string() +
                          " and " + value.to_string());
  }
}

Maneuver shared_maneuver(const std::vector<Behaviour>& bs) {
  if (bs.empty()) {
    throw EngineError("empty-resolution", "no behaviour resolved");
  }
  Maneuver m = bs.front().maneuver;
  for (const Behaviour& b : bs) {
    if (b.maneuver != m) {
      throw EngineError("mixed-maneuver",
                        std::string("behaviours mix maneuvers ") +
                            to_string(m) + " and " + to_string(b.maneuver));
    }
  }
  return m;
}

}  // namespace

Scene transform_parameter(const std::vector<Behaviour>& resolved,
                          SchemaPtr par_schema) {
  Maneuver m = shared_maneuver(resolved);

  std::map<Feature, Value> merged;
  for (const Behaviour& b : resolved) {
    for (const auto& [feature, value] : b.parameter) {
      merge_parameter(merged, feature, value);
    }
  }
  merge_parameter(merged, maneuver_feature(m), Value::boolean(true));

  Assignment assignment;
  for (const auto& [feature, value] : merged) {
    if (!par_schema->contains(feature)) {
      throw EngineError("schema-mismatch",
                        "feature " + feature.to_string() +
                            " is not in the parameter schema");
    }
    assignment.emplace(feature, value);
  }
  for (const auto& [feature, kind] : par_schema->features()) {
    assignment.emplace(feature, Value::undefined());
  }
  return Scene(std::move(par_schema), std::move(assignment));
}

Behaviour resolve_parameter(const std::vector<Behaviour>& bs) {
  Behaviour out;
  out.maneuver = shared_maneuver(bs);
  for (const Behaviour& b : bs) {
    for (const auto& [feature, value] : b.parameter) {
      merge_parameter(out.parameter, feature, value);
    }
  }
  return out;
}

EngineConfig::EngineConfig(Theory maneuver_theory, Theory parameter_theory,
                           ConservativenessOrder order)
    : maneuver_theory_(std::move(maneuver_theory)),
      parameter_theory_(std::move(parameter_theory)),
      order_(order) {
  const LayerSchema& par = parameter_theory_.schema();
  for (const Rule& r : maneuver_theory_.rules()) {
    for (const auto& [feature, value] : r.consequent.parameter) {
      if (!par.contains(feature)) {
        throw ValidationError("unknown-feature",
                              "maneuver rule '" + r.id +
                                  "' emits parameter feature " +
                                  feature.to_string() +
                                  " missing from the parameter schema");
      }
    }
    Feature marker = maneuver_feature(r.consequent.maneuver);
    if (!par.contains(marker)) {
      throw ValidationError(
          "unknown-feature",
          "parameter schema lacks the maneuver marker " + marker.to_string() +
              " required by rule '" + r.id + "'");
    }
  }
}

InferResult infer_result(const EngineConfig& cfg, const Scene& scene) {
  auto validity = validate_scene(scene, cfg.maneuver_theory().schema());
  if (!validity.ok()) {
    throw ValidationError("schema", validity.violations.front().message);
  }
  InferResult result;
  try {
    auto man = apply_theory_traced(cfg.maneuver_theory(), scene);
    auto resolved_man = resolve_maneuver(man.output, cfg.order());
    result.trace.maneuver =
        LayerTrace{scene, std::move(man.fired), man.output, resolved_man};
    if (resolved_man.empty()) {
      throw EngineError("no-behaviour", "no maneuver rule fired on the scene");
    }

    Scene par_input = transform_parameter(
        resolved_man, cfg.parameter_theory().schema_ptr());
    result.trace.transformed = par_input;

    auto par = apply_theory_traced(cfg.parameter_theory(), par_input);
    result.trace.parameter =
        LayerTrace{par_input, std::move(par.fired), par.output, {}};

    Behaviour behaviour = resolve_parameter(par.output);
    result.trace.parameter->resolved = {behaviour};
    result.trace.behaviour = behaviour;
    result.behaviour = std::move(behaviour);
  } catch (const EngineError& e) {
    result.error = EngineErrorInfo{e.kind(), e.what()};
  }
  return result;
}

std::pair<Behaviour, InferenceTrace> infer(const EngineConfig& cfg,
                                           const Scene& scene) {
  InferResult result = infer_result(cfg, scene);
  if (!result.ok()) {
    throw EngineError(result.error->kind, result.error->detail);
  }
  return {*result.behaviour, std::move(result.trace)};
}

}  // namespace ruleplan
