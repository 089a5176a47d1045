#include "serve.hpp"

#include <iostream>

#include <httplib.h>

#include "ruleplan/dsl.hpp"

namespace ruleplan::cli {

using nlohmann::json;

namespace {

json error_body(const std::string& kind, const std::string& detail) {
  return json{{"error", {{"kind", kind}, {"detail", detail}}}};
}

}  // namespace

ServeOutcome handle_request(const EngineConfig& cfg, const json& request) {
  if (!request.is_object() || !request.contains("scene")) {
    return {error_body("request", "requests are {\"scene\", \"trace\"?} objects"),
            400};
  }
  dsl::SceneMode mode = dsl::SceneMode::Strict;
  if (request.contains("mode")) {
    auto parsed = dsl::scene_mode_from_string(
        request.at("mode").is_string() ? request.at("mode").get<std::string>()
                                       : std::string());
    if (!parsed) {
      return {error_body("request", "mode must be \"strict\" or \"completing\""),
              400};
    }
    mode = *parsed;
  }
  bool want_trace =
      request.contains("trace") && request.at("trace").is_boolean() &&
      request.at("trace").get<bool>();

  InferResult result;
  try {
    Scene scene = dsl::parse_scene(request.at("scene"),
                                   cfg.maneuver_theory().schema_ptr(), mode);
    result = infer_result(cfg, scene);
  } catch (const ValidationError& e) {
    return {error_body(e.kind(), e.what()), 400};
  }

  json body;
  int status;
  if (result.ok()) {
    body["behaviour"] = dsl::behaviour_to_json(*result.behaviour);
    status = 200;
  } else {
    body = error_body(result.error->kind, result.error->detail);
    status = 422;
  }
  if (want_trace) body["trace"] = dsl::trace_to_json(result.trace);
  return {std::move(body), status};
}

int serve_stdio(const EngineConfig& cfg) {
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    json response;
    try {
      response = handle_request(cfg, json::parse(line)).body;
    } catch (const json::parse_error& e) {
      response = error_body("parse", e.what());
    }
    std::cout << response.dump() << "\n" << std::flush;
  }
  return 0;
}

int serve_http(const EngineConfig& cfg, const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    throw ValidationError("listen", "listen addresses are host:port");
  }
  std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("listen", "malformed port in '" + listen + "'");
  }

  httplib::Server server;
  server.Post("/infer", [&cfg](const httplib::Request& req,
                               httplib::Response& res) {
    ServeOutcome outcome;
    try {
      outcome = handle_request(cfg, json::parse(req.body));
    } catch (const json::parse_error& e) {
      outcome = {error_body("parse", e.what()), 400};
    }
    res.status = outcome.status;
    res.set_content(outcome.body.dump(), "application/json");
  });
  server.Get("/health", [&cfg](const httplib::Request&, httplib::Response& res) {
    json body{{"status", "ok"},
              {"rules",
               {{"maneuver", cfg.maneuver_theory().size()},
                {"parameter", cfg.parameter_theory().size()}}}};
    res.set_content(body.dump(), "application/json");
  });

  if (!server.listen(host, port)) {
    throw ValidationError("listen", "could not bind " + listen);
  }
  return 0;
}

}  // namespace ruleplan::cli
