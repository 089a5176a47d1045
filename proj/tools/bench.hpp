#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ruleplan/engine.hpp"

namespace ruleplan::cli {

/// Runs `iterations` inferences cycling over the scene set, split across
/// `threads`, and reports wall time, latency percentiles, the sustained
/// rate and one response per distinct scene.
nlohmann::json run_bench(const EngineConfig& cfg,
                         const std::vector<Scene>& scenes,
                         std::uint64_t iterations, unsigned threads);

}  // namespace ruleplan::cli
