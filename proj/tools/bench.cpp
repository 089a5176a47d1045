#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "ruleplan/dsl.hpp"

namespace ruleplan::cli {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

json run_bench(const EngineConfig& cfg, const std::vector<Scene>& scenes,
               std::uint64_t iterations, unsigned threads) {
  if (scenes.empty()) {
    throw ValidationError("bench", "the scene set must not be empty");
  }
  if (iterations < 1) {
    throw ValidationError("bench", "iterations must be at least 1");
  }
  if (threads < 1) {
    throw ValidationError("bench", "threads must be at least 1");
  }

  std::vector<std::vector<double>> latencies(threads);
  auto worker = [&](unsigned index) {
    std::uint64_t share = iterations / threads +
                          (index < iterations % threads ? 1 : 0);
    auto& samples = latencies[index];
    samples.reserve(share);
    for (std::uint64_t i = 0; i < share; ++i) {
      const Scene& scene = scenes[(index + i * threads) % scenes.size()];
      auto begin = Clock::now();
      auto result = infer_result(cfg, scene);
      auto end = Clock::now();
      (void)result;
      samples.push_back(
          std::chrono::duration<double, std::micro>(end - begin).count());
    }
  };

  auto wall_begin = Clock::now();
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }
  auto wall_end = Clock::now();

  std::vector<double> all;
  all.reserve(iterations);
  for (const auto& samples : latencies) {
    all.insert(all.end(), samples.begin(), samples.end());
  }
  std::sort(all.begin(), all.end());
  auto percentile = [&](double q) {
    std::size_t index = static_cast<std::size_t>(q * (all.size() - 1));
    return all[index];
  };
  double mean = 0;
  for (double v : all) mean += v;
  mean /= static_cast<double>(all.size());
  double total_seconds =
      std::chrono::duration<double>(wall_end - wall_begin).count();

  json outputs = json::array();
  for (const Scene& scene : scenes) {
    auto result = infer_result(cfg, scene);
    if (result.ok()) {
      outputs.push_back(json{{"behaviour", dsl::behaviour_to_json(*result.behaviour)}});
    } else {
      outputs.push_back(json{{"error",
                              {{"kind", result.error->kind},
                               {"detail", result.error->detail}}}});
    }
  }

  return json{{"iterations", iterations},
              {"threads", threads},
              {"scenes", scenes.size()},
              {"total_seconds", total_seconds},
              {"per_second", static_cast<double>(iterations) / total_seconds},
              {"latency_us",
               {{"mean", mean},
                {"median", percentile(0.5)},
                {"p99", percentile(0.99)}}},
              {"outputs", outputs}};
}

}  // namespace ruleplan::cli
