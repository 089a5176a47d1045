#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include <json.hpp>

#include "ruleplan/diagnosis.hpp"
#include "ruleplan/dsl.hpp"
#include "ruleplan/learning.hpp"

namespace py = pybind11;

namespace {

using namespace ruleplan;
using nlohmann::json;

learning::Heuristic heuristic_or_throw(const std::string& name) {
  auto parsed = learning::heuristic_from_string(name);
  if (!parsed) {
    throw ValidationError("heuristic", "unknown heuristic '" + name + "'");
  }
  return *parsed;
}

dsl::SceneMode mode_or_throw(const std::string& name) {
  auto parsed = dsl::scene_mode_from_string(name);
  if (!parsed) {
    throw ValidationError("mode", "mode must be strict or completing");
  }
  return *parsed;
}

/// JSON-text front of the engine: one loaded configuration serving any
/// number of inference calls.
class Engine {
public:
  explicit Engine(const std::string& rules_json)
      : doc_(dsl::parse_rule_document(rules_json)),
        cfg_(dsl::to_engine_config(doc_)) {}

  std::string rules_json() const {
    return dsl::serialize_rule_document(doc_);
  }

  std::size_t maneuver_rule_count() const {
    return cfg_.maneuver_theory().size();
  }
  std::size_t parameter_rule_count() const {
    return cfg_.parameter_theory().size();
  }

  // Returns a response document: {"behaviour": ...} or {"error": {...}},
  // plus "trace" when requested. Input problems raise ValueError; engine
  // outcomes are data.
  std::string infer_json(const std::string& scene_json, bool trace,
                         const std::string& mode) const {
    Scene scene =
        dsl::parse_scene_text(scene_json, cfg_.maneuver_theory().schema_ptr(),
                              mode_or_throw(mode));
    InferResult result = infer_result(cfg_, scene);
    json response;
    if (result.ok()) {
      response["behaviour"] = dsl::behaviour_to_json(*result.behaviour);
    } else {
      response["error"] = {{"kind", result.error->kind},
                           {"detail", result.error->detail}};
    }
    if (trace) response["trace"] = dsl::trace_to_json(result.trace);
    return response.dump();
  }

  std::string check_json(const std::string& dataset_json) const {
    auto parsed =
        dsl::parse_dataset(dataset_json, cfg_.maneuver_theory().schema_ptr(),
                           cfg_.parameter_theory().schema_ptr());
    auto man = learning::misclassified(cfg_.maneuver_theory(),
                                       LayerId::Maneuver, cfg_, parsed.records);
    auto par =
        learning::misclassified(cfg_.parameter_theory(), LayerId::Parameter,
                                cfg_, parsed.records);
    json report{{"scenes", parsed.records.size()},
                {"misclassified",
                 {{"maneuver", json(man)}, {"parameter", json(par)}}}};
    return report.dump();
  }

  const EngineConfig& config() const { return cfg_; }

private:
  dsl::RuleDocument doc_;
  EngineConfig cfg_;
};

std::string learn_json(const std::string& dataset_json,
                       const std::optional<std::string>& base_rules_json,
                       std::uint64_t seed, const std::string& heuristic,
                       std::uint64_t max_iterations) {
  learning::LearnerOptions options;
  options.seed = seed;
  options.heuristic = heuristic_or_throw(heuristic);
  options.max_outer_iterations = max_iterations;

  std::optional<EngineConfig> base;
  dsl::ParsedDataset parsed;
  if (base_rules_json) {
    dsl::RuleDocument doc = dsl::parse_rule_document(*base_rules_json);
    EngineConfig from_doc = dsl::to_engine_config(doc);
    parsed = dsl::parse_dataset(dataset_json, doc.maneuver_schema,
                                doc.parameter_schema);
    SchemaPtr output = from_doc.parameter_theory().output_schema_ptr();
    if (parsed.output_schema) {
      std::map<Feature, ValueKind> merged =
          output ? output->features() : std::map<Feature, ValueKind>{};
      for (const auto& [feature, kind] : parsed.output_schema->features()) {
        merged.emplace(feature, kind);
      }
      output = std::make_shared<const LayerSchema>(LayerId::Parameter,
                                                   std::move(merged));
    }
    Theory par(LayerId::Parameter, doc.parameter_schema, output,
               doc.parameter_rules);
    base.emplace(from_doc.maneuver_theory(), std::move(par),
                 parsed.order.value_or(doc.order));
  } else {
    parsed = dsl::parse_dataset(dataset_json);
    Theory man(LayerId::Maneuver, parsed.maneuver_schema,
               parsed.parameter_schema, {});
    Theory par(LayerId::Parameter, parsed.parameter_schema,
               parsed.output_schema, {});
    base.emplace(std::move(man), std::move(par),
                 parsed.order.value_or(ConservativenessOrder()));
  }

  auto result = learning::rule_engine_update(parsed.records, *base, options);
  json out{
      {"rules", json::parse(dsl::serialize_rule_document(
                    dsl::document_from(result.config)))},
      {"summary",
       {{"maneuver_rules", result.config.maneuver_theory().size()},
        {"parameter_rules", result.config.parameter_theory().size()},
        {"outer_iterations", result.maneuver_log.outer_iterations +
                                 result.parameter_log.outer_iterations},
        {"bad_rules", result.maneuver_log.bad_rule_count +
                          result.parameter_log.bad_rule_count}}}};
  return out.dump();
}

std::string parse_constraint_text(const std::string& text) {
  return dsl::format_constraint(dsl::parse_constraint(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-layer rule engine for behaviour planning";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Engine>(m, "Engine")
      .def(py::init<const std::string&>(), py::arg("rules_json"))
      .def("rules_json", &Engine::rules_json)
      .def("infer_json", &Engine::infer_json, py::arg("scene_json"),
           py::arg("trace") = false, py::arg("mode") = "strict")
      .def("check_json", &Engine::check_json, py::arg("dataset_json"))
      .def_property_readonly("maneuver_rule_count",
                             &Engine::maneuver_rule_count)
      .def_property_readonly("parameter_rule_count",
                             &Engine::parameter_rule_count);

  m.def("learn_json", &learn_json, py::arg("dataset_json"),
        py::arg("base_rules_json") = std::nullopt, py::arg("seed") = 0,
        py::arg("heuristic") = "laplace",
        py::arg("max_iterations") = 1'000'000,
        py::call_guard<py::gil_scoped_release>());
  m.def("parse_constraint", &parse_constraint_text, py::arg("text"),
        "Parse one constraint line and return its canonical form");

#ifdef RULEPLAN_VERSION
  m.attr("__version__") = RULEPLAN_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
