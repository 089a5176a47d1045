#include "ruleplan/diagnosis.hpp"

#include <algorithm>

#include "ruleplan/dsl.hpp"

namespace ruleplan::diagnosis {

using nlohmann::json;

DesiredLabels desired_from_json(const json& j) {
  if (!j.is_object()) {
    throw ValidationError("behaviour", "desired documents are JSON objects");
  }
  DesiredLabels desired;
  if (j.contains("final_label")) {
    desired.final_label = dsl::behaviour_from_json(j.at("final_label"));
    if (j.contains("maneuver_label")) {
      desired.maneuver_label = dsl::behaviour_from_json(j.at("maneuver_label"));
      if (desired.maneuver_label->maneuver != desired.final_label.maneuver) {
        throw ValidationError(
            "label", "maneuver and final labels use different maneuvers");
      }
    }
    return desired;
  }
  desired.final_label = dsl::behaviour_from_json(j);
  return desired;
}

DiscrepancyCheck detect_discrepancy(const EngineConfig& cfg, const Scene& scene,
                                    const Behaviour& desired) {
  DiscrepancyCheck check{false, infer_result(cfg, scene)};
  check.discrepancy =
      !check.result.ok() || *check.result.behaviour != desired;
  return check;
}

namespace {

std::vector<std::string> fired_ids(const LayerTrace& trace) {
  std::vector<std::string> out;
  for (const auto& [id, fired] : trace.fired) {
    if (fired) out.push_back(id);
  }
  return out;
}

// Does any rule of the layer fire on `input` with the desired consequent?
bool produced_on(const Theory& t, const Scene& input, const Behaviour& want) {
  return std::any_of(t.rules().begin(), t.rules().end(), [&](const Rule& r) {
    return r.consequent == want && eval_antecedent(r.antecedent, input);
  });
}

}  // namespace

DiscrepancyReport find_conflicting_scenes(const EngineConfig& cfg,
                                          const learning::Dataset& data,
                                          const Scene& scene,
                                          const DesiredLabels& desired) {
  DiscrepancyCheck check = detect_discrepancy(cfg, scene, desired.final_label);
  DiscrepancyReport report{check.discrepancy,
                           scene,
                           check.result.behaviour,
                           check.result.error,
                           desired,
                           std::nullopt,
                           {},
                           {},
                           false,
                           {},
                           check.result.trace};
  if (report.trace.maneuver) {
    report.fired_maneuver = fired_ids(*report.trace.maneuver);
  }
  if (report.trace.parameter) {
    report.fired_parameter = fired_ids(*report.trace.parameter);
  }
  if (!report.discrepancy) return report;

  // First failing layer: the maneuver layer when its resolved output misses
  // the desired label (or maneuver), otherwise the parameter layer.
  const auto& man_trace = report.trace.maneuver;
  bool maneuver_failed = true;
  if (man_trace) {
    if (desired.maneuver_label) {
      maneuver_failed = std::find(man_trace->resolved.begin(),
                                  man_trace->resolved.end(),
                                  *desired.maneuver_label) ==
                        man_trace->resolved.end();
    } else {
      maneuver_failed =
          man_trace->resolved.empty() ||
          man_trace->resolved.front().maneuver != desired.final_label.maneuver;
    }
  }
  report.failing_layer =
      maneuver_failed ? LayerId::Maneuver : LayerId::Parameter;

  const Theory& theory = cfg.theory(*report.failing_layer);
  const auto& layer_trace = maneuver_failed ? report.trace.maneuver
                                            : report.trace.parameter;
  const Behaviour* desired_label = nullptr;
  if (maneuver_failed) {
    desired_label =
        desired.maneuver_label ? &*desired.maneuver_label : nullptr;
  } else {
    desired_label = &desired.final_label;
  }

  if (!layer_trace) return report;
  const Scene& layer_input = layer_trace->input;

  auto undesired = [&](const Behaviour& b) {
    if (desired_label != nullptr) return b != *desired_label;
    return b.maneuver != desired.final_label.maneuver;
  };

  report.no_producing_rule =
      desired_label != nullptr && !produced_on(theory, layer_input, *desired_label);

  for (const Rule& r : theory.rules()) {
    if (!eval_antecedent(r.antecedent, layer_input)) continue;
    bool resolved_here =
        std::find(layer_trace->resolved.begin(), layer_trace->resolved.end(),
                  r.consequent) != layer_trace->resolved.end();
    if (!resolved_here || !undesired(r.consequent)) continue;
    std::vector<ConflictEntry> entries;
    for (std::size_t i :
         learning::coverage(r, theory, *report.failing_layer, cfg, data)) {
      entries.push_back({i, data[i].label(*report.failing_layer)});
    }
    report.conflicting.emplace(r.id, std::move(entries));
  }
  return report;
}

json report_to_json(const DiscrepancyReport& report) {
  json desired;
  if (report.desired.maneuver_label) {
    desired = json{
        {"maneuver_label", dsl::behaviour_to_json(*report.desired.maneuver_label)},
        {"final_label", dsl::behaviour_to_json(report.desired.final_label)}};
  } else {
    desired = dsl::behaviour_to_json(report.desired.final_label);
  }
  json conflicting = json::object();
  for (const auto& [rule_id, entries] : report.conflicting) {
    json list = json::array();
    for (const ConflictEntry& entry : entries) {
      list.push_back(json{{"scene_index", entry.scene_index},
                          {"label", dsl::behaviour_to_json(entry.label)}});
    }
    conflicting[rule_id] = list;
  }
  json out{{"discrepancy", report.discrepancy},
           {"scene", dsl::scene_to_json(report.scene)},
           {"desired", desired},
           {"fired",
            {{"maneuver", report.fired_maneuver},
             {"parameter", report.fired_parameter}}},
           {"no_producing_rule", report.no_producing_rule},
           {"conflicting", conflicting},
           {"trace", dsl::trace_to_json(report.trace)}};
  out["actual"] =
      report.actual ? dsl::behaviour_to_json(*report.actual) : json(nullptr);
  if (report.actual_error) {
    out["actual_error"] = json{{"kind", report.actual_error->kind},
                               {"detail", report.actual_error->detail}};
  }
  if (report.failing_layer) {
    out["failing_layer"] = to_string(*report.failing_layer);
  }
  return out;
}

Scene sanitize_scene(const Scene& scene, const std::set<Feature>& relevant) {
  for (const Feature& f : relevant) {
    if (!scene.schema().contains(f)) {
      throw ValidationError("unknown-feature",
                            "feature " + f.to_string() +
                                " is not in the scene's schema");
    }
  }
  Assignment assignment;
  for (const auto& [feature, value] : scene.assignment()) {
    assignment.emplace(feature, relevant.count(feature) != 0
                                    ? value
                                    : Value::undefined());
  }
  return Scene(scene.schema_ptr(), std::move(assignment));
}

std::pair<EngineConfig, EngineeringReport> engineering_step(
    const EngineConfig& cfg, const learning::Dataset& data,
    const learning::LabelledScene& sanitized, std::uint64_t seed,
    const std::optional<Scene>& original_scene,
    const std::optional<Behaviour>& original_desired) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& prior = data[i];
    if (prior.scene == sanitized.scene &&
        (prior.maneuver_label != sanitized.maneuver_label ||
         prior.final_label != sanitized.final_label)) {
      throw ValidationError("label-conflict",
                            "the sanitized scene duplicates scene " +
                                std::to_string(i) +
                                " with a different label");
    }
  }

  learning::Dataset extended = data;
  extended.push_back(sanitized);

  learning::LearnerOptions options;
  options.seed = seed;
  auto updated = learning::rule_engine_update(extended, cfg, options);

  EngineeringReport report;
  report.maneuver_log = std::move(updated.maneuver_log);
  report.parameter_log = std::move(updated.parameter_log);
  const Scene& check_scene =
      original_scene ? *original_scene : sanitized.scene;
  const Behaviour& check_desired =
      original_desired ? *original_desired : sanitized.final_label;
  report.recheck =
      detect_discrepancy(updated.config, check_scene, check_desired);
  report.cured = !report.recheck.discrepancy;
  report.prior_intact =
      learning::misclassified(updated.config.maneuver_theory(),
                              LayerId::Maneuver, updated.config, data)
          .empty() &&
      learning::misclassified(updated.config.parameter_theory(),
                              LayerId::Parameter, updated.config, data)
          .empty();
  return {std::move(updated.config), std::move(report)};
}

}  // namespace ruleplan::diagnosis
