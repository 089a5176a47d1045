#pragma once

#include <string>

#include <json.hpp>

#include "ruleplan/engine.hpp"

namespace ruleplan::cli {

struct ServeOutcome {
  nlohmann::json body;
  int status = 200;  // 200 ok, 400 malformed request, 422 engine error
};

/// Answers one inference request {"scene": {...}, "trace"?: bool,
/// "mode"?: "strict" | "completing"} with a response carrying exactly one
/// of "behaviour" or "error".
ServeOutcome handle_request(const EngineConfig& cfg,
                            const nlohmann::json& request);

/// Newline-delimited JSON transport: one response line per request line, in
/// order, on standard output. Returns the process exit code.
int serve_stdio(const EngineConfig& cfg);

/// HTTP transport: POST /infer and GET /health on host:port.
int serve_http(const EngineConfig& cfg, const std::string& listen);

}  // namespace ruleplan::cli
