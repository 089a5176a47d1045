#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ruleplan/model.hpp"

namespace ruleplan {

/// Evaluates one constraint against a scene.
///
/// True is always true. Equality is value equality, where undefined equals
/// only undefined. The order operators <=, >= compare numbers and are false
/// whenever either side is undefined or not a number.
///
/// Throws EngineError("unknown-feature") if the constraint mentions a
/// feature outside the scene's schema.
bool eval_constraint(const Constraint& c, const Scene& scene);

/// Conjunction of the member constraints.
bool eval_antecedent(const Antecedent& a, const Scene& scene);

/// The rule's consequent when its antecedent holds, otherwise nothing.
std::optional<Behaviour> apply_rule(const Rule& r, const Scene& scene);

/// Distinct consequents of the rules that fire on the scene, in rule order.
std::vector<Behaviour> apply_theory(const Theory& t, const Scene& scene);

struct TheoryApplication {
  std::map<std::string, bool> fired;  // one entry per rule id
  std::vector<Behaviour> output;      // deduplicated, rule order
};

TheoryApplication apply_theory_traced(const Theory& t, const Scene& scene);

/// Keeps the behaviours whose maneuver is maximal under the conservativeness
/// order among the maneuvers present. Empty in, empty out.
std::vector<Behaviour> resolve_maneuver(const std::vector<Behaviour>& bs,
                                        const ConservativenessOrder& order);

/// The maneuver layer consumes environment scenes directly.
Scene transform_maneuver(const Scene& scene);

/// Builds the parameter-layer input scene from the resolved maneuver-layer
/// behaviours: their parameter properties, a Maneuver.<name> := true marker
/// for the shared maneuver, and undefined for every remaining feature.
///
/// Throws EngineError: "parameter-conflict" when two behaviours assign
/// different defined values to one feature, "schema-mismatch" when a
/// parameter feature or the maneuver marker is absent from `par_schema`,
/// "empty-resolution" / "mixed-maneuver" on precondition violations.
Scene transform_parameter(const std::vector<Behaviour>& resolved,
                          SchemaPtr par_schema);

/// Folds same-maneuver behaviours into one by uniting their parameters.
/// Throws EngineError: "empty-resolution" when no behaviour was produced,
/// "mixed-maneuver" when maneuvers differ, "parameter-conflict" when the
/// union would assign two defined values to one feature.
Behaviour resolve_parameter(const std::vector<Behaviour>& bs);

struct LayerTrace {
  Scene input;
  std::map<std::string, bool> fired;
  std::vector<Behaviour> output;
  std::vector<Behaviour> resolved;
};

/// Stage-by-stage record of one inference, as far as it progressed.
struct InferenceTrace {
  std::optional<LayerTrace> maneuver;
  std::optional<Scene> transformed;
  std::optional<LayerTrace> parameter;
  std::optional<Behaviour> behaviour;
};

struct EngineErrorInfo {
  std::string kind;
  std::string detail;
};

struct InferResult {
  std::optional<Behaviour> behaviour;
  std::optional<EngineErrorInfo> error;
  InferenceTrace trace;

  bool ok() const { return behaviour.has_value(); }
};

/// The full two-layer engine: both theories plus the conservativeness order
/// used to resolve the maneuver layer. Immutable once constructed; safe to
/// share across concurrent inference calls.
class EngineConfig {
public:
  // Validates that the parameter schema can absorb every maneuver-layer
  // consequent: all consequent parameter features plus one maneuver marker
  // feature per maneuver used by a consequent.
  EngineConfig(Theory maneuver_theory, Theory parameter_theory,
               ConservativenessOrder order = ConservativenessOrder());

  const Theory& maneuver_theory() const { return maneuver_theory_; }
  const Theory& parameter_theory() const { return parameter_theory_; }
  const ConservativenessOrder& order() const { return order_; }

  const Theory& theory(LayerId layer) const {
    return layer == LayerId::Maneuver ? maneuver_theory_ : parameter_theory_;
  }

private:
  Theory maneuver_theory_;
  Theory parameter_theory_;
  ConservativenessOrder order_;
};

/// Runs the composed policy: maneuver theory, conservativeness resolution,
/// property transformation, parameter theory, parameter resolution.
/// Engine-level failures are reported in the result, never thrown; the
/// trace always covers the stages that ran.
InferResult infer_result(const EngineConfig& cfg, const Scene& scene);

/// Same composition, throwing EngineError instead of reporting it.
std::pair<Behaviour, InferenceTrace> infer(const EngineConfig& cfg,
                                           const Scene& scene);

}  // namespace ruleplan
