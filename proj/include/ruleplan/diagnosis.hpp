#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruleplan/engine.hpp"
#include "ruleplan/learning.hpp"
#include "ruleplan/model.hpp"

namespace ruleplan::diagnosis {

/// Expected outcome per layer. The maneuver-layer label is optional; when
/// absent, maneuver-layer failure is judged by the chosen maneuver alone.
struct DesiredLabels {
  std::optional<Behaviour> maneuver_label;
  Behaviour final_label;
};

DesiredLabels desired_from_json(const nlohmann::json& j);

struct DiscrepancyCheck {
  bool discrepancy = false;
  InferResult result;
};

/// True when inference errors or yields anything but the desired behaviour.
/// Engine failures are captured in the result, never thrown.
DiscrepancyCheck detect_discrepancy(const EngineConfig& cfg, const Scene& scene,
                                    const Behaviour& desired);

struct ConflictEntry {
  std::size_t scene_index;
  Behaviour label;  // that scene's label for the failing layer
};

/// Which rules misdrive the discrepancy scene and which training scenes
/// caused those rules to exist: for every rule of the first failing layer
/// that fired and survived resolution with an undesired consequent, the
/// training scenes it triggers.
struct DiscrepancyReport {
  bool discrepancy = false;
  Scene scene;
  std::optional<Behaviour> actual;
  std::optional<EngineErrorInfo> actual_error;
  DesiredLabels desired;
  std::optional<LayerId> failing_layer;
  std::vector<std::string> fired_maneuver;
  std::vector<std::string> fired_parameter;
  bool no_producing_rule = false;  // nothing fires the desired consequent
  std::map<std::string, std::vector<ConflictEntry>> conflicting;
  InferenceTrace trace;
};

DiscrepancyReport find_conflicting_scenes(const EngineConfig& cfg,
                                          const learning::Dataset& data,
                                          const Scene& scene,
                                          const DesiredLabels& desired);

nlohmann::json report_to_json(const DiscrepancyReport& report);

/// Keeps the given features' values and sets every other feature undefined.
/// Throws ValidationError("unknown-feature") for features outside the schema.
Scene sanitize_scene(const Scene& scene, const std::set<Feature>& relevant);

struct EngineeringReport {
  bool cured = false;          // original discrepancy no longer reproduces
  bool prior_intact = false;   // previous records still classify cleanly
  DiscrepancyCheck recheck;
  learning::UpdateLog maneuver_log;
  learning::UpdateLog parameter_log;
};

/// One turn of the knowledge engineering cycle: append the sanitized scene
/// to the training set, update both theories from the current ones, and
/// re-check the discrepancy that started the cycle. `original_scene` and
/// `original_desired` identify that discrepancy; they default to the
/// sanitized scene and its final label.
std::pair<EngineConfig, EngineeringReport> engineering_step(
    const EngineConfig& cfg, const learning::Dataset& data,
    const learning::LabelledScene& sanitized, std::uint64_t seed,
    const std::optional<Scene>& original_scene = std::nullopt,
    const std::optional<Behaviour>& original_desired = std::nullopt);

}  // namespace ruleplan::diagnosis
