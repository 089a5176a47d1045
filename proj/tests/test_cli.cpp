#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <csignal>
#include <cstring>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "ruleplan/dsl.hpp"
#include "test_support.hpp"

using namespace ruleplan;
using namespace ruleplan::testing;
using nlohmann::json;

namespace {

const std::string kRules = fixture_path("intersection.rules.json");
const std::string kScene = fixture_path("intersection.scene.json");
const std::string kDataset = fixture_path("intersection.dataset.json");

}  // namespace

TEST_CASE("infer prints the behaviour and exits 0") {
  auto result = run_cli({"infer", "--rules", kRules, "--scene", kScene});
  CHECK(result.exit_code == 0);
  CHECK(result.out ==
        "{\"behaviour\":{\"maneuver\":\"Decelerate-To-Halt\","
        "\"params\":{\"Ego.StopAt\":\"StopLine\"}}}\n");
  CHECK(result.err.empty());
}

TEST_CASE("infer --trace attaches the stage-by-stage record") {
  auto result =
      run_cli({"infer", "--rules", kRules, "--scene", kScene, "--trace"});
  CHECK(result.exit_code == 0);
  json response = json::parse(result.out);
  REQUIRE(response.contains("trace"));
  CHECK(response["trace"]["maneuver"]["fired"]["stop-line-approaching"] ==
        true);
  CHECK(response["trace"]["maneuver"]["fired"]["stop-line-at"] == false);
  CHECK(response["trace"]["transformed"]["Maneuver.Decelerate-To-Halt"] ==
        true);
  CHECK(response["trace"]["parameter"]["resolved"].size() == 1);
}

TEST_CASE("infer input failures exit 2 with machine-readable errors") {
  SUBCASE("malformed rules file") {
    std::string bad = temp_file("bad-rules");
    write_text(bad, "{ this is not json");
    auto result = run_cli({"infer", "--rules", bad, "--scene", kScene});
    CHECK(result.exit_code == 2);
    json err = json::parse(result.err);
    CHECK(err["error"]["kind"] == "parse");
    CHECK(err["error"].contains("offset"));
  }
  SUBCASE("missing file") {
    auto result = run_cli({"infer", "--rules", "/nope.json", "--scene", kScene});
    CHECK(result.exit_code == 2);
    CHECK(json::parse(result.err)["error"]["kind"] == "io");
  }
  SUBCASE("partial scene in strict mode") {
    std::string partial = temp_file("partial-scene");
    write_text(partial, R"({"Ego.Speed": 35})");
    auto result = run_cli({"infer", "--rules", kRules, "--scene", partial});
    CHECK(result.exit_code == 2);
    CHECK(json::parse(result.err)["error"]["kind"] == "totality");
  }
  SUBCASE("the same scene completes in completing mode, with a warning") {
    std::string partial = temp_file("partial-scene");
    write_text(partial, R"({"Ego.Speed": 35})");
    auto result = run_cli({"infer", "--rules", kRules, "--scene", partial,
                           "--mode", "completing"});
    CHECK(result.exit_code == 0);
    json response = json::parse(result.out);
    CHECK(response["behaviour"]["maneuver"] == "Track-Speed");
    CHECK(json::parse(result.err)["warning"]["kind"] == "completed-scene");
  }
  SUBCASE("usage errors also exit 2") {
    auto result = run_cli({"infer", "--rules", kRules});
    CHECK(result.exit_code == 2);
    CHECK(json::parse(result.err)["error"]["kind"] == "usage");
  }
}

TEST_CASE("infer on a silent theory exits 1 with a no-behaviour error") {
  dsl::RuleDocument doc =
      dsl::parse_rule_document(read_text(kRules));
  doc.maneuver_rules.clear();
  doc.parameter_rules.clear();
  std::string silent = temp_file("silent-rules");
  write_text(silent, dsl::serialize_rule_document(doc));

  auto result = run_cli({"infer", "--rules", silent, "--scene", kScene});
  CHECK(result.exit_code == 1);
  json response = json::parse(result.out);
  CHECK(response["error"]["kind"] == "no-behaviour");
  CHECK(json::parse(result.err)["error"]["kind"] == "no-behaviour");
}

TEST_CASE("learn writes a theory that reproduces the dataset") {
  std::string out = temp_file("learned") + ".rules.json";
  auto result = run_cli({"learn", "--dataset", kDataset, "--out", out,
                         "--seed", "42"});
  CHECK(result.exit_code == 0);
  json summary = json::parse(result.out);
  CHECK(summary["maneuver_rules"] == 1);
  CHECK(summary["parameter_rules"] == 1);
  CHECK(summary["bad_rules"] == 0);

  auto inferred = run_cli({"infer", "--rules", out, "--scene", kScene});
  CHECK(inferred.exit_code == 0);
  CHECK(json::parse(inferred.out)["behaviour"]["params"]["Ego.StopAt"] ==
        "StopLine");

  SUBCASE("reruns with one seed are byte-identical") {
    std::string again = temp_file("learned-again") + ".rules.json";
    run_cli({"learn", "--dataset", kDataset, "--out", again, "--seed", "42"});
    CHECK(read_text(out) == read_text(again));
  }
  SUBCASE("the learned file checks clean") {
    auto checked = run_cli({"check", "--rules", out, "--dataset", kDataset});
    CHECK(checked.exit_code == 0);
  }
  SUBCASE("alternative heuristics are accepted") {
    for (const char* name : {"precision", "coverage_difference",
                             "rate_difference"}) {
      std::string file = temp_file(std::string("learned-") + name);
      auto run = run_cli({"learn", "--dataset", kDataset, "--out", file,
                          "--seed", "42", "--heuristic", name});
      CHECK(run.exit_code == 0);
    }
    auto bad = run_cli({"learn", "--dataset", kDataset, "--out",
                        temp_file("x"), "--seed", "1", "--heuristic", "gini"});
    CHECK(bad.exit_code == 2);
  }
}

TEST_CASE("learn rejects conflicting duplicate scenes with exit 2") {
  json doc = json::parse(read_text(kDataset));
  json copy = doc["scenes"][0];
  copy["final_label"]["params"]["Ego.StopAt"] = "EndOfLane";
  doc["scenes"].push_back(copy);
  std::string conflicted = temp_file("conflicted-dataset");
  write_text(conflicted, doc.dump());

  std::string out = temp_file("wont-happen");
  auto result =
      run_cli({"learn", "--dataset", conflicted, "--out", out, "--seed", "1"});
  CHECK(result.exit_code == 2);
  CHECK(json::parse(result.err)["error"]["kind"] == "label-conflict");
}

TEST_CASE("learn surfaces BadBaseRules as exit 3 naming the rule") {
  // Base rule already contains every constraint derivable from the one
  // covering scene, and misdrives it.
  json rules = json::parse(read_text(kRules));
  rules["maneuver_rules"] = json::array(
      {json{{"id", "aberrant"},
            {"if", json::array({"Ego.Speed = 35", "Ego.Speed <= 35",
                                "Ego.Speed >= 35", "Ego.At = undefined",
                                "Ego.Approaching = \"Intersection\"",
                                "Road.SpeedLimit = 50", "Road.SpeedLimit <= 50",
                                "Road.SpeedLimit >= 50",
                                "Road.HasStopLine = true",
                                "Crosswalk.Obstructed = true"})},
            {"then", json{{"maneuver", "Emergency-Stop"},
                          {"params", json::object()}}}},
       json{{"id", "producer"},
            {"if", json::array({"TRUE"})},
            {"then", json{{"maneuver", "Decelerate-To-Halt"},
                          {"params", json{{"Stop.AtStopLine", true}}}}}}});
  // The aberrant rule needs its marker feature in the parameter schema.
  rules["schemas"]["parameter"]["features"]["Maneuver.Emergency-Stop"] =
      "boolean";
  std::string base = temp_file("aberrant-rules");
  write_text(base, rules.dump());

  // Bare-array dataset so the (extended) rules schemas apply.
  std::string dataset = temp_file("bare-dataset");
  write_text(dataset, json::parse(read_text(kDataset))["scenes"].dump());

  std::string out = temp_file("never-written");
  auto result = run_cli({"learn", "--dataset", dataset, "--base-rules", base,
                         "--out", out, "--seed", "3"});
  CHECK(result.exit_code == 3);
  json err = json::parse(result.err);
  CHECK(err["error"]["kind"] == "bad-base-rules");
  CHECK(err["error"]["rule_id"] == "aberrant");
  CHECK(err["error"]["layer"] == "maneuver");
}

TEST_CASE("learn reports an exceeded iteration budget as exit 4") {
  json dataset{
      {"version", 1},
      {"schemas",
       {{"maneuver", {{"features", {{"A.X", "boolean"}}}}},
        {"parameter", {{"features", {{"Maneuver.Stop", "boolean"}}}}}}},
      {"scenes",
       json::array(
           {json{{"scene", {{"A.X", true}}},
                 {"maneuver_label",
                  {{"maneuver", "Stop"}, {"params", json::object()}}},
                 {"final_label",
                  {{"maneuver", "Stop"}, {"params", {{"Out.P", 1}}}}}},
            json{{"scene", {{"A.X", false}}},
                 {"maneuver_label",
                  {{"maneuver", "Stop"}, {"params", json::object()}}},
                 {"final_label",
                  {{"maneuver", "Stop"}, {"params", {{"Out.P", 2}}}}}}})}};
  std::string path = temp_file("unrealizable-dataset");
  write_text(path, dataset.dump());

  std::string out = temp_file("never-written");
  auto result = run_cli({"learn", "--dataset", path, "--out", out, "--seed",
                         "1", "--max-iterations", "200"});
  CHECK(result.exit_code == 4);
  CHECK(json::parse(result.err)["error"]["kind"] == "iteration-budget");
}

TEST_CASE("check flags flipped labels with a per-layer report") {
  json doc = json::parse(read_text(kDataset));
  doc["scenes"][0]["final_label"]["params"]["Ego.StopAt"] = "EndOfLane";
  std::string flipped = temp_file("flipped-dataset");
  write_text(flipped, doc.dump());

  auto result = run_cli({"check", "--rules", kRules, "--dataset", flipped});
  CHECK(result.exit_code == 1);
  json report = json::parse(result.out);
  CHECK(report["misclassified"]["maneuver"].empty());
  CHECK(report["misclassified"]["parameter"] == json::array({0}));

  SUBCASE("an empty dataset checks clean") {
    doc["scenes"] = json::array();
    std::string empty = temp_file("empty-dataset");
    write_text(empty, doc.dump());
    auto ok = run_cli({"check", "--rules", kRules, "--dataset", empty});
    CHECK(ok.exit_code == 0);
  }
}

TEST_CASE("diagnose distinguishes agreement from discrepancy") {
  SUBCASE("agreement exits 0") {
    auto result = run_cli({"diagnose", "--rules", kRules, "--dataset", kDataset,
                           "--scene", kScene, "--desired",
                           fixture_path("desired-stop-line.json")});
    CHECK(result.exit_code == 0);
    CHECK(json::parse(result.out)["discrepancy"] == false);
  }
  SUBCASE("a different desired behaviour exits 5 with a report") {
    auto result = run_cli({"diagnose", "--rules", kRules, "--dataset", kDataset,
                           "--scene", kScene, "--desired",
                           fixture_path("desired-end-of-lane.json")});
    CHECK(result.exit_code == 5);
    json report = json::parse(result.out);
    CHECK(report["discrepancy"] == true);
    CHECK(report["failing_layer"] == "parameter");
    CHECK(report["actual"]["params"]["Ego.StopAt"] == "StopLine");
    CHECK(report["conflicting"].contains("halt-stop-line"));
    CHECK(report["conflicting"]["halt-stop-line"][0]["scene_index"] == 0);
  }
  SUBCASE("an unparseable desired document exits 2") {
    std::string bad = temp_file("bad-desired");
    write_text(bad, "{");
    auto result = run_cli({"diagnose", "--rules", kRules, "--dataset", kDataset,
                           "--scene", kScene, "--desired", bad});
    CHECK(result.exit_code == 2);
  }
}

TEST_CASE("bench reports latency and throughput") {
  auto result = run_cli({"bench", "--rules", kRules, "--scenes", kScene,
                         "--iterations", "2000"});
  CHECK(result.exit_code == 0);
  json report = json::parse(result.out);
  CHECK(report["iterations"] == 2000);
  CHECK(report["per_second"].get<double>() > 300.0);
  CHECK(report["latency_us"].contains("p99"));
  CHECK(report["outputs"][0]["behaviour"]["maneuver"] == "Decelerate-To-Halt");

  SUBCASE("zero iterations exit 2") {
    auto bad = run_cli({"bench", "--rules", kRules, "--scenes", kScene,
                        "--iterations", "0"});
    CHECK(bad.exit_code == 2);
  }
  SUBCASE("thread counts do not change per-scene outputs") {
    auto one = run_cli({"bench", "--rules", kRules, "--scenes", kScene,
                        "--iterations", "400", "--threads", "1"});
    auto four = run_cli({"bench", "--rules", kRules, "--scenes", kScene,
                         "--iterations", "400", "--threads", "4"});
    CHECK(json::parse(one.out)["outputs"] == json::parse(four.out)["outputs"]);
  }
}

TEST_CASE("serve --stdio answers pipelined requests in order") {
  json scene = json::parse(read_text(kScene));
  json blank;
  for (auto& [key, value] : scene.items()) blank[key] = nullptr;
  std::string input;
  input += json{{"scene", scene}}.dump() + "\n";
  input += "this is not json\n";
  input += json{{"scene", blank}}.dump() + "\n";
  input += json{{"scene", json{{"Ego.Speed", 1}}},
                {"mode", "completing"}}.dump() + "\n";
  input += json{{"scene", json{{"Ego.Speed", 1}}}}.dump() + "\n";

  auto result = run_cli({"serve", "--rules", kRules, "--stdio"}, input);
  CHECK(result.exit_code == 0);

  std::vector<json> responses;
  std::istringstream lines(result.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) responses.push_back(json::parse(line));
  }
  REQUIRE(responses.size() == 5);
  CHECK(responses[0]["behaviour"]["params"]["Ego.StopAt"] == "StopLine");
  CHECK(responses[1]["error"]["kind"] == "parse");
  CHECK(responses[2]["behaviour"]["maneuver"] == "Track-Speed");
  CHECK(responses[3]["behaviour"]["maneuver"] == "Track-Speed");
  CHECK(responses[4]["error"]["kind"] == "totality");
}

namespace {

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;

  static ServerProcess start(const std::string& rules) {
    static int next_port = 18000 + static_cast<int>(getpid() % 2000);
    ServerProcess server;
    server.port = next_port++;
    std::string listen = "127.0.0.1:" + std::to_string(server.port);
    server.pid = fork();
    if (server.pid == 0) {
      execl(RULEPLAN_CLI_PATH, RULEPLAN_CLI_PATH, "serve", "--rules",
            rules.c_str(), "--listen", listen.c_str(),
            static_cast<char*>(nullptr));
      _exit(127);
    }
    return server;
  }

  bool wait_ready() const {
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(0, 200000);
    for (int attempt = 0; attempt < 50; ++attempt) {
      if (auto res = client.Get("/health")) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    return false;
  }

  ~ServerProcess() {
    if (pid > 0) {
      kill(pid, SIGKILL);
      waitpid(pid, nullptr, 0);
    }
  }
};

}  // namespace

TEST_CASE("serve --listen exposes /infer and /health") {
  ServerProcess server = ServerProcess::start(kRules);
  REQUIRE(server.wait_ready());
  httplib::Client client("127.0.0.1", server.port);

  SUBCASE("health reports the rule counts") {
    auto res = client.Get("/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    json body = json::parse(res->body);
    CHECK(body["status"] == "ok");
    CHECK(body["rules"]["maneuver"] == 5);
    CHECK(body["rules"]["parameter"] == 3);
  }
  SUBCASE("a valid scene returns the behaviour") {
    json request{{"scene", json::parse(read_text(kScene))}};
    auto res = client.Post("/infer", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    json body = json::parse(res->body);
    CHECK(body["behaviour"]["params"]["Ego.StopAt"] == "StopLine");
    CHECK_FALSE(body.contains("error"));
  }
  SUBCASE("non-total scenes in strict mode are a 400") {
    json request{{"scene", json{{"Ego.Speed", 35}}}};
    auto res = client.Post("/infer", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    json body = json::parse(res->body);
    CHECK(body["error"]["kind"] == "totality");
    CHECK(std::string(body["error"]["detail"]).find("missing feature") !=
          std::string::npos);
  }
  SUBCASE("engine failures are a 422") {
    json full_scene = json::parse(read_text(kScene));
    json blank;
    for (const auto& [key, value] : full_scene.items()) {
      blank[key] = nullptr;
    }
    dsl::RuleDocument doc = dsl::parse_rule_document(read_text(kRules));
    doc.maneuver_rules.clear();
    doc.parameter_rules.clear();
    std::string silent = temp_file("silent-serve-rules");
    write_text(silent, dsl::serialize_rule_document(doc));
    ServerProcess silent_server = ServerProcess::start(silent);
    REQUIRE(silent_server.wait_ready());
    httplib::Client silent_client("127.0.0.1", silent_server.port);
    json request{{"scene", blank}};
    auto res = silent_client.Post("/infer", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["error"]["kind"] == "no-behaviour");
  }
  SUBCASE("malformed request bodies are a 400") {
    auto res = client.Post("/infer", "{{{", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }
  SUBCASE("infer and serve agree on identical scenes") {
    json request{{"scene", json::parse(read_text(kScene))}};
    auto res = client.Post("/infer", request.dump(), "application/json");
    REQUIRE(res);
    auto local = run_cli({"infer", "--rules", kRules, "--scene", kScene});
    CHECK(json::parse(res->body)["behaviour"] ==
          json::parse(local.out)["behaviour"]);
  }
}

TEST_CASE("serve on an unbindable address fails cleanly") {
  // 203.0.113.0/24 is reserved for documentation; binding it cannot work.
  auto result =
      run_cli({"serve", "--rules", kRules, "--listen", "203.0.113.7:18080"});
  CHECK(result.exit_code == 2);
  CHECK(json::parse(result.err)["error"]["kind"] == "listen");

  SUBCASE("malformed listen addresses are also input errors") {
    auto bad = run_cli({"serve", "--rules", kRules, "--listen", "nonsense"});
    CHECK(bad.exit_code == 2);
  }
}
