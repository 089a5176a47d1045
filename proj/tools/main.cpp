#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "ruleplan/diagnosis.hpp"
#include "ruleplan/dsl.hpp"
#include "ruleplan/learning.hpp"
#include "serve.hpp"

namespace {

using nlohmann::json;
using namespace ruleplan;

constexpr int kExitOk = 0;
constexpr int kExitEngine = 1;
constexpr int kExitInput = 2;
constexpr int kExitBadBaseRules = 3;
constexpr int kExitBudget = 4;
constexpr int kExitDiscrepancy = 5;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("io", "cannot read " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("io", "cannot write " + path);
  }
  out << content;
}

void print_error(const json& body) { std::cerr << body.dump() << "\n"; }

json error_json(const std::string& kind, const std::string& detail) {
  return json{{"error", {{"kind", kind}, {"detail", detail}}}};
}

dsl::SceneMode parse_mode(const std::string& mode) {
  auto parsed = dsl::scene_mode_from_string(mode);
  if (!parsed) {
    throw ValidationError("mode", "mode must be strict or completing");
  }
  return *parsed;
}

learning::Heuristic parse_heuristic(const std::string& name) {
  auto parsed = learning::heuristic_from_string(name);
  if (!parsed) {
    throw ValidationError(
        "heuristic",
        "heuristic must be one of laplace, precision, coverage_difference, "
        "rate_difference");
  }
  return *parsed;
}

EngineConfig load_engine(const std::string& rules_path) {
  return dsl::to_engine_config(dsl::parse_rule_document(read_file(rules_path)));
}

// Completing mode silently tolerates partial scenes; surface that fact as a
// machine-readable warning so operators notice quietly degraded inputs.
Scene load_scene(const std::string& text, const SchemaPtr& schema,
                 dsl::SceneMode mode) {
  Scene scene = dsl::parse_scene_text(text, schema, mode);
  if (mode == dsl::SceneMode::Completing) {
    json provided = json::parse(text);
    if (provided.is_object() && provided.size() < schema->size()) {
      print_error(json{
          {"warning",
           {{"kind", "completed-scene"},
            {"detail", std::to_string(schema->size() - provided.size()) +
                           " feature(s) filled with undefined"}}}});
    }
  }
  return scene;
}

int cmd_infer(const std::string& rules_path, const std::string& scene_path,
              bool trace, const std::string& mode) {
  EngineConfig cfg = load_engine(rules_path);
  Scene scene = load_scene(read_file(scene_path),
                           cfg.maneuver_theory().schema_ptr(),
                           parse_mode(mode));
  InferResult result = infer_result(cfg, scene);
  json response;
  if (result.ok()) {
    response["behaviour"] = dsl::behaviour_to_json(*result.behaviour);
  } else {
    response = error_json(result.error->kind, result.error->detail);
  }
  if (trace) response["trace"] = dsl::trace_to_json(result.trace);
  std::cout << response.dump() << "\n";
  if (!result.ok()) {
    print_error(error_json(result.error->kind, result.error->detail));
    return kExitEngine;
  }
  return kExitOk;
}

// Widens an output schema so learned consequents may carry every parameter
// feature seen in the dataset's final labels.
SchemaPtr merge_output_schema(const SchemaPtr& base, const SchemaPtr& extra) {
  if (!base) return extra;
  if (!extra) return base;
  std::map<Feature, ValueKind> features = base->features();
  for (const auto& [feature, kind] : extra->features()) {
    features.emplace(feature, kind);
  }
  return std::make_shared<const LayerSchema>(base->layer(), std::move(features));
}

int cmd_learn(const std::string& dataset_path, const std::string& base_path,
              const std::string& out_path, std::uint64_t seed,
              const std::string& heuristic, std::uint64_t budget) {
  learning::LearnerOptions options;
  options.seed = seed;
  options.heuristic = parse_heuristic(heuristic);
  options.max_outer_iterations = budget;

  std::optional<EngineConfig> base;
  dsl::ParsedDataset parsed;
  ConservativenessOrder order;
  if (!base_path.empty()) {
    dsl::RuleDocument doc = dsl::parse_rule_document(read_file(base_path));
    EngineConfig from_doc = dsl::to_engine_config(doc);
    parsed = dsl::parse_dataset(read_file(dataset_path), doc.maneuver_schema,
                                doc.parameter_schema);
    order = parsed.order.value_or(doc.order);
    Theory par(LayerId::Parameter, doc.parameter_schema,
               merge_output_schema(
                   from_doc.parameter_theory().output_schema_ptr(),
                   parsed.output_schema),
               doc.parameter_rules);
    base.emplace(from_doc.maneuver_theory(), std::move(par), order);
  } else {
    parsed = dsl::parse_dataset(read_file(dataset_path));
    order = parsed.order.value_or(ConservativenessOrder());
    Theory man(LayerId::Maneuver, parsed.maneuver_schema,
               parsed.parameter_schema, {});
    Theory par(LayerId::Parameter, parsed.parameter_schema,
               parsed.output_schema, {});
    base.emplace(std::move(man), std::move(par), order);
  }

  auto result = learning::rule_engine_update(parsed.records, *base, options);
  write_file(out_path,
             dsl::serialize_rule_document(dsl::document_from(result.config)));

  json summary{
      {"maneuver_rules", result.config.maneuver_theory().size()},
      {"parameter_rules", result.config.parameter_theory().size()},
      {"outer_iterations", result.maneuver_log.outer_iterations +
                               result.parameter_log.outer_iterations},
      {"bad_rules", result.maneuver_log.bad_rule_count +
                        result.parameter_log.bad_rule_count},
      {"per_layer",
       {{"maneuver",
         {{"outer_iterations", result.maneuver_log.outer_iterations},
          {"bad_rules", result.maneuver_log.bad_rule_count}}},
        {"parameter",
         {{"outer_iterations", result.parameter_log.outer_iterations},
          {"bad_rules", result.parameter_log.bad_rule_count}}}}}};
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_check(const std::string& rules_path, const std::string& dataset_path) {
  dsl::RuleDocument doc = dsl::parse_rule_document(read_file(rules_path));
  EngineConfig cfg = dsl::to_engine_config(doc);
  dsl::ParsedDataset parsed = dsl::parse_dataset(
      read_file(dataset_path), doc.maneuver_schema, doc.parameter_schema);

  auto man = learning::misclassified(cfg.maneuver_theory(), LayerId::Maneuver,
                                     cfg, parsed.records);
  auto par = learning::misclassified(cfg.parameter_theory(), LayerId::Parameter,
                                     cfg, parsed.records);
  json report{{"scenes", parsed.records.size()},
              {"misclassified",
               {{"maneuver", json(man)}, {"parameter", json(par)}}}};
  std::cout << report.dump(2) << "\n";
  return man.empty() && par.empty() ? kExitOk : kExitEngine;
}

int cmd_diagnose(const std::string& rules_path, const std::string& dataset_path,
                 const std::string& scene_path, const std::string& desired_path,
                 const std::string& mode) {
  dsl::RuleDocument doc = dsl::parse_rule_document(read_file(rules_path));
  EngineConfig cfg = dsl::to_engine_config(doc);
  dsl::ParsedDataset parsed = dsl::parse_dataset(
      read_file(dataset_path), doc.maneuver_schema, doc.parameter_schema);
  Scene scene =
      load_scene(read_file(scene_path), doc.maneuver_schema, parse_mode(mode));
  json desired_doc;
  try {
    desired_doc = json::parse(read_file(desired_path));
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte, {"JSON"});
  }
  auto desired = diagnosis::desired_from_json(desired_doc);

  auto report =
      diagnosis::find_conflicting_scenes(cfg, parsed.records, scene, desired);
  std::cout << diagnosis::report_to_json(report).dump(2) << "\n";
  return report.discrepancy ? kExitDiscrepancy : kExitOk;
}

int cmd_bench(const std::string& rules_path, const std::string& scenes_path,
              std::uint64_t iterations, unsigned threads) {
  if (iterations < 1) {
    throw ValidationError("bench", "--iterations must be at least 1");
  }
  EngineConfig cfg = load_engine(rules_path);
  json doc;
  try {
    doc = json::parse(read_file(scenes_path));
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte, {"JSON"});
  }
  std::vector<Scene> scenes;
  SchemaPtr schema = cfg.maneuver_theory().schema_ptr();
  if (doc.is_array()) {
    for (const auto& entry : doc) {
      scenes.push_back(dsl::parse_scene(entry, schema, dsl::SceneMode::Strict));
    }
  } else {
    scenes.push_back(dsl::parse_scene(doc, schema, dsl::SceneMode::Strict));
  }
  std::cout << cli::run_bench(cfg, scenes, iterations, threads).dump(2) << "\n";
  return kExitOk;
}

int cmd_serve(const std::string& rules_path, const std::string& listen,
              bool stdio) {
  EngineConfig cfg = load_engine(rules_path);
  if (stdio) return cli::serve_stdio(cfg);
  return cli::serve_http(cfg, listen);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-layer rule engine for behaviour planning"};
  app.require_subcommand(1);

  std::string rules_path, scene_path, dataset_path, desired_path, out_path;
  std::string scenes_path, listen, mode = "strict", heuristic = "laplace";
  bool trace = false, stdio = false;
  std::uint64_t seed = 0, iterations = 0, budget = 1'000'000;
  unsigned threads = 1;

  auto* infer = app.add_subcommand("infer", "Run one inference");
  infer->add_option("--rules", rules_path)->required();
  infer->add_option("--scene", scene_path)->required();
  infer->add_flag("--trace", trace, "Attach the stage-by-stage trace");
  infer->add_option("--mode", mode, "strict or completing");

  auto* learn = app.add_subcommand("learn", "Learn theories from a dataset");
  learn->add_option("--dataset", dataset_path)->required();
  learn->add_option("--base-rules", rules_path);
  learn->add_option("--out", out_path)->required();
  learn->add_option("--seed", seed)->required();
  learn->add_option("--heuristic", heuristic,
                    "laplace, precision, coverage_difference or "
                    "rate_difference");
  learn->add_option("--max-iterations", budget,
                    "Outer-loop budget per layer");

  auto* check = app.add_subcommand("check", "Report misclassified scenes");
  check->add_option("--rules", rules_path)->required();
  check->add_option("--dataset", dataset_path)->required();

  auto* diagnose =
      app.add_subcommand("diagnose", "Explain a behaviour discrepancy");
  diagnose->add_option("--rules", rules_path)->required();
  diagnose->add_option("--dataset", dataset_path)->required();
  diagnose->add_option("--scene", scene_path)->required();
  diagnose->add_option("--desired", desired_path)->required();
  diagnose->add_option("--mode", mode, "strict or completing");

  auto* bench = app.add_subcommand("bench", "Measure inference throughput");
  bench->add_option("--rules", rules_path)->required();
  bench->add_option("--scenes", scenes_path)->required();
  bench->add_option("--iterations", iterations)->required();
  bench->add_option("--threads", threads);

  auto* serve = app.add_subcommand("serve", "Serve inference requests");
  serve->add_option("--rules", rules_path)->required();
  auto* listen_opt = serve->add_option("--listen", listen, "host:port");
  auto* stdio_opt =
      serve->add_flag("--stdio", stdio, "Newline-delimited JSON on stdio");
  listen_opt->excludes(stdio_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(error_json("usage", e.what()));
    return kExitInput;
  }

  try {
    if (app.got_subcommand(infer)) {
      return cmd_infer(rules_path, scene_path, trace, mode);
    }
    if (app.got_subcommand(learn)) {
      return cmd_learn(dataset_path, rules_path, out_path, seed, heuristic,
                       budget);
    }
    if (app.got_subcommand(check)) {
      return cmd_check(rules_path, dataset_path);
    }
    if (app.got_subcommand(diagnose)) {
      return cmd_diagnose(rules_path, dataset_path, scene_path, desired_path,
                          mode);
    }
    if (app.got_subcommand(bench)) {
      return cmd_bench(rules_path, scenes_path, iterations, threads);
    }
    if (app.got_subcommand(serve)) {
      if (!stdio && listen.empty()) {
        throw ValidationError("usage", "serve needs --listen or --stdio");
      }
      return cmd_serve(rules_path, listen, stdio);
    }
  } catch (const ParseError& e) {
    json body = error_json(e.kind(), e.what());
    body["error"]["offset"] = e.offset();
    body["error"]["expected"] = e.expected();
    print_error(body);
    return kExitInput;
  } catch (const BadBaseRulesError& e) {
    json body = error_json(e.kind(), e.what());
    body["error"]["layer"] = e.layer();
    body["error"]["rule_id"] = e.rule_id();
    print_error(body);
    return kExitBadBaseRules;
  } catch (const BudgetExceededError& e) {
    json body = error_json(e.kind(), e.what());
    body["error"]["layer"] = e.layer();
    print_error(body);
    return kExitBudget;
  } catch (const ValidationError& e) {
    print_error(error_json(e.kind(), e.what()));
    return kExitInput;
  } catch (const EngineError& e) {
    print_error(error_json(e.kind(), e.what()));
    return kExitEngine;
  } catch (const std::exception& e) {
    print_error(error_json("internal", e.what()));
    return kExitInput;
  }
  return kExitOk;
}
