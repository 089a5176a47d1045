#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <thread>

#include "ruleplan/engine.hpp"
#include "test_support.hpp"

using namespace ruleplan;
using namespace ruleplan::testing;

namespace {

bool same_behaviour_set(std::vector<Behaviour> a, std::vector<Behaviour> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace

TEST_CASE("constraint evaluation on the intersection scene") {
  Scene s = intersection_scene();

  CHECK(eval_constraint(Constraint::truth(), s));
  CHECK(eval_constraint(eq("Ego.Approaching", Value::symbol("Intersection")), s));
  CHECK_FALSE(eval_constraint(eq("Ego.At", Value::symbol("Intersection")), s));
  CHECK(eval_constraint(eq("Ego.At", Value::undefined()), s));
  CHECK_FALSE(eval_constraint(
      Constraint::feature_value(F("Ego.At"), ConstraintOp::Le, Value::number(5)),
      s));
  // 35 >= 50 is false.
  CHECK_FALSE(eval_constraint(
      Constraint::feature_feature(F("Ego.Speed"), ConstraintOp::Ge,
                                  F("Road.SpeedLimit")),
      s));
  CHECK(eval_constraint(
      Constraint::feature_feature(F("Ego.Speed"), ConstraintOp::Le,
                                  F("Road.SpeedLimit")),
      s));

  CHECK_THROWS_AS(eval_constraint(eq("Unknown.X", Value::number(1)), s),
                  EngineError);
}

TEST_CASE("order operators are false around undefined and non-numbers") {
  auto schema = std::make_shared<const LayerSchema>(
      LayerId::Maneuver, std::map<Feature, ValueKind>{
                             {F("A.Num"), ValueKind::Number},
                             {F("A.Und"), ValueKind::Number},
                             {F("A.Sym"), ValueKind::Symbol},
                             {F("A.Bool"), ValueKind::Boolean},
                         });
  Scene s(schema, Assignment{
                      {F("A.Num"), Value::number(3)},
                      {F("A.Und"), Value::undefined()},
                      {F("A.Sym"), Value::symbol("three")},
                      {F("A.Bool"), Value::boolean(true)},
                  });

  // Exhaustive over operators and left/right definedness.
  for (ConstraintOp op : {ConstraintOp::Le, ConstraintOp::Ge}) {
    CHECK_FALSE(eval_constraint(
        Constraint::feature_feature(F("A.Und"), op, F("A.Num")), s));
    CHECK_FALSE(eval_constraint(
        Constraint::feature_feature(F("A.Num"), op, F("A.Und")), s));
    CHECK_FALSE(eval_constraint(
        Constraint::feature_feature(F("A.Und"), op, F("A.Und")), s));
    CHECK(eval_constraint(
        Constraint::feature_feature(F("A.Num"), op, F("A.Num")), s));
    CHECK_FALSE(eval_constraint(
        Constraint::feature_value(F("A.Und"), op, Value::number(3)), s));
    CHECK_FALSE(eval_constraint(
        Constraint::feature_value(F("A.Sym"), op, Value::number(3)), s));
    CHECK_FALSE(eval_constraint(
        Constraint::feature_value(F("A.Bool"), op, Value::number(3)), s));
    CHECK_FALSE(eval_constraint(
        Constraint::feature_value(F("A.Num"), op, Value::symbol("x")), s));
  }

  // Equality against the undefined literal matches only undefined values.
  CHECK(eval_constraint(eq("A.Und", Value::undefined()), s));
  CHECK_FALSE(eval_constraint(eq("A.Num", Value::undefined()), s));
  CHECK_FALSE(eval_constraint(eq("A.Sym", Value::undefined()), s));
  CHECK(eval_constraint(
      Constraint::feature_feature(F("A.Und"), ConstraintOp::Eq, F("A.Und")), s));
  CHECK_FALSE(eval_constraint(
      Constraint::feature_feature(F("A.Und"), ConstraintOp::Eq, F("A.Num")), s));
}

TEST_CASE("antecedents conjoin their members") {
  Scene s = intersection_scene();
  CHECK(eval_antecedent(Antecedent::most_general(), s));
  CHECK(eval_antecedent(
      Antecedent({eq("Ego.Approaching", Value::symbol("Intersection")),
                  eq("Road.HasStopLine", Value::boolean(true))}),
      s));
  CHECK_FALSE(eval_antecedent(
      Antecedent({eq("Ego.At", Value::symbol("Intersection")),
                  eq("Road.HasStopLine", Value::boolean(true))}),
      s));
}

TEST_CASE("apply_rule yields the consequent only when the antecedent holds") {
  Scene s = intersection_scene();
  Theory man = intersection_maneuver_theory();

  auto fired = apply_rule(*man.find("track-speed-default"), s);
  REQUIRE(fired.has_value());
  CHECK(*fired == track_speed_candidate());

  CHECK_FALSE(apply_rule(*man.find("crosswalk-at"), s).has_value());
  CHECK_FALSE(apply_rule(*man.find("stop-line-at"), s).has_value());
}

TEST_CASE("the maneuver theory of the intersection example") {
  Scene s = intersection_scene();
  Theory man = intersection_maneuver_theory();

  auto output = apply_theory(man, s);
  CHECK(same_behaviour_set(output, {track_speed_candidate(),
                                    halt_end_of_lane_candidate(),
                                    halt_stop_line_candidate()}));

  SUBCASE("shared consequents appear once") {
    // Both crosswalk rules share one consequent; force both to fire.
    Assignment at = s.assignment();
    at[F("Ego.At")] = Value::symbol("Intersection");
    auto twice = apply_theory(man, Scene(s.schema_ptr(), at));
    CHECK(twice.size() == 3);
  }
  SUBCASE("the empty theory produces nothing") {
    Theory empty(LayerId::Maneuver, s.schema_ptr(),
                 intersection_parameter_schema(), {});
    CHECK(apply_theory(empty, s).empty());
  }
}

TEST_CASE("resolve_maneuver keeps the most conservative maneuver") {
  ConservativenessOrder order;
  auto resolved = resolve_maneuver(
      {track_speed_candidate(), halt_end_of_lane_candidate(),
       halt_stop_line_candidate()},
      order);
  CHECK(same_behaviour_set(resolved, {halt_end_of_lane_candidate(),
                                      halt_stop_line_candidate()}));

  CHECK(resolve_maneuver({}, order).empty());
  CHECK(resolve_maneuver({track_speed_candidate()}, order) ==
        std::vector<Behaviour>{track_speed_candidate()});

  SUBCASE("output is a subset sharing one dominant maneuver") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      learning::Rng rng(seed);
      std::vector<Behaviour> input;
      std::size_t n = rng.bounded(6);
      for (std::size_t i = 0; i < n; ++i) {
        input.push_back({kAllManeuvers[rng.bounded(7)],
                         {{F("P.X"), Value::number(double(rng.bounded(9)))}}});
      }
      auto out = resolve_maneuver(input, order);
      CHECK(out.size() <= input.size());
      for (const Behaviour& b : out) {
        CHECK(std::count(input.begin(), input.end(), b) > 0);
        for (const Behaviour& other : input) {
          CHECK_FALSE(order.more_conservative(other.maneuver, b.maneuver));
        }
      }
      if (!input.empty()) CHECK_FALSE(out.empty());
    }
  }
}

TEST_CASE("transform_maneuver is the identity") {
  Scene s = intersection_scene();
  CHECK(transform_maneuver(s) == s);
  Scene blank = complete_scene({}, intersection_maneuver_schema());
  CHECK(transform_maneuver(blank) == blank);
}

TEST_CASE("transform_parameter builds the parameter-layer scene") {
  auto par_schema = intersection_parameter_schema();

  SUBCASE("the intersection example's transformed scene") {
    Scene t = transform_parameter(
        {halt_end_of_lane_candidate(), halt_stop_line_candidate()}, par_schema);
    CHECK(t.value_of(F("Maneuver.Decelerate-To-Halt")) == Value::boolean(true));
    CHECK(t.value_of(F("Stop.AtEndOfLane")) == Value::boolean(true));
    CHECK(t.value_of(F("Stop.AtStopLine")) == Value::boolean(true));
    CHECK(t.value_of(F("Maneuver.Track-Speed")).is_undefined());
    CHECK(t.value_of(F("Target.Speed")).is_undefined());
    CHECK(t.assignment().size() == 5);
  }
  SUBCASE("a single behaviour keeps its own parameters") {
    Scene t = transform_parameter({track_speed_candidate()}, par_schema);
    CHECK(t.value_of(F("Maneuver.Track-Speed")) == Value::boolean(true));
    CHECK(t.value_of(F("Target.Speed")) == Value::symbol("Road.SpeedLimit"));
    CHECK(t.value_of(F("Maneuver.Decelerate-To-Halt")).is_undefined());
  }
  SUBCASE("conflicting parameters are an error") {
    Behaviour one{Maneuver::Stop, {{F("Stop.AtStopLine"), Value::boolean(true)}}};
    Behaviour two{Maneuver::Stop,
                  {{F("Stop.AtStopLine"), Value::boolean(false)}}};
    auto schema = std::make_shared<const LayerSchema>(
        LayerId::Parameter, std::map<Feature, ValueKind>{
                                {F("Maneuver.Stop"), ValueKind::Boolean},
                                {F("Stop.AtStopLine"), ValueKind::Boolean},
                            });
    CHECK_THROWS_WITH_AS(transform_parameter({one, two}, schema),
                         doctest::Contains("Stop.AtStopLine"), EngineError);
  }
  SUBCASE("precondition violations are reported") {
    CHECK_THROWS_AS(transform_parameter({}, par_schema), EngineError);
    CHECK_THROWS_AS(
        transform_parameter(
            {track_speed_candidate(), halt_stop_line_candidate()}, par_schema),
        EngineError);
  }
  SUBCASE("parameter features missing from the schema are an error") {
    auto tiny = std::make_shared<const LayerSchema>(
        LayerId::Parameter,
        std::map<Feature, ValueKind>{{F("Maneuver.Track-Speed"),
                                      ValueKind::Boolean}});
    CHECK_THROWS_AS(transform_parameter({track_speed_candidate()}, tiny),
                    EngineError);
  }
  SUBCASE("exactly one maneuver marker is true, for arbitrary inputs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      learning::Rng rng(seed);
      Maneuver m = kAllManeuvers[rng.bounded(7)];
      std::vector<Behaviour> resolved;
      std::size_t n = 1 + rng.bounded(3);
      for (std::size_t i = 0; i < n; ++i) {
        Behaviour b{m, {}};
        if (rng.bounded(2) == 0) {
          b.parameter.emplace(F("Stop.AtStopLine"), Value::boolean(true));
        }
        resolved.push_back(b);
      }
      std::map<Feature, ValueKind> features{
          {F("Stop.AtStopLine"), ValueKind::Boolean}};
      for (Maneuver each : kAllManeuvers) {
        features.emplace(maneuver_feature(each), ValueKind::Boolean);
      }
      auto schema = std::make_shared<const LayerSchema>(LayerId::Parameter,
                                                        std::move(features));
      Scene t = transform_parameter(resolved, schema);
      CHECK(t.assignment().size() == schema->size());  // totality
      int true_markers = 0, defined_markers = 0;
      for (Maneuver each : kAllManeuvers) {
        const Value& v = t.value_of(maneuver_feature(each));
        if (!v.is_undefined()) {
          ++defined_markers;
          if (v == Value::boolean(true)) ++true_markers;
        }
      }
      CHECK(true_markers == 1);
      CHECK(defined_markers == 1);
    }
  }
}

TEST_CASE("resolve_parameter unites parameters of one maneuver") {
  CHECK(resolve_parameter({halt_stop_line_final()}) == halt_stop_line_final());

  SUBCASE("disjoint unions merge") {
    Behaviour a{Maneuver::Stop, {{F("A.X"), Value::number(1)}}};
    Behaviour b{Maneuver::Stop, {{F("B.Y"), Value::number(2)}}};
    Behaviour merged = resolve_parameter({a, b});
    CHECK(merged.maneuver == Maneuver::Stop);
    CHECK(merged.parameter ==
          std::map<Feature, Value>{{F("A.X"), Value::number(1)},
                                   {F("B.Y"), Value::number(2)}});
  }
  SUBCASE("empty input") {
    CHECK_THROWS_WITH_AS(resolve_parameter({}),
                         doctest::Contains("no behaviour resolved"),
                         EngineError);
  }
  SUBCASE("mixed maneuvers") {
    CHECK_THROWS_AS(
        resolve_parameter({track_speed_final(), halt_stop_line_final()}),
        EngineError);
  }
  SUBCASE("conflicting parameter values") {
    Behaviour a{Maneuver::Stop, {{F("A.X"), Value::number(1)}}};
    Behaviour b{Maneuver::Stop, {{F("A.X"), Value::number(2)}}};
    CHECK_THROWS_AS(resolve_parameter({a, b}), EngineError);
  }
  SUBCASE("idempotent on singletons") {
    Behaviour b{Maneuver::Yield, {{F("A.X"), Value::symbol("s")}}};
    CHECK(resolve_parameter({resolve_parameter({b})}) == b);
  }
}

TEST_CASE("the engine config validates the layer wiring") {
  CHECK_NOTHROW(intersection_config());

  SUBCASE("missing maneuver marker") {
    auto par_schema = std::make_shared<const LayerSchema>(
        LayerId::Parameter,
        std::map<Feature, ValueKind>{
            {F("Maneuver.Decelerate-To-Halt"), ValueKind::Boolean},
            {F("Stop.AtEndOfLane"), ValueKind::Boolean},
            {F("Stop.AtStopLine"), ValueKind::Boolean},
            {F("Target.Speed"), ValueKind::Symbol},
        });
    Theory man(LayerId::Maneuver, intersection_maneuver_schema(), par_schema,
               intersection_maneuver_theory().rules());
    Theory par(LayerId::Parameter, par_schema, intersection_output_schema(),
               {});
    CHECK_THROWS_WITH_AS(EngineConfig(man, par),
                         doctest::Contains("Maneuver.Track-Speed"),
                         ValidationError);
  }
}

TEST_CASE("infer composes the full pipeline on the intersection example") {
  EngineConfig cfg = intersection_config();
  Scene s = intersection_scene();

  auto [behaviour, trace] = infer(cfg, s);
  CHECK(behaviour == halt_stop_line_final());

  REQUIRE(trace.maneuver.has_value());
  CHECK(trace.maneuver->fired.size() == 5);
  CHECK(trace.maneuver->fired.at("track-speed-default"));
  CHECK(trace.maneuver->fired.at("crosswalk-approaching"));
  CHECK_FALSE(trace.maneuver->fired.at("crosswalk-at"));
  CHECK(trace.maneuver->fired.at("stop-line-approaching"));
  CHECK_FALSE(trace.maneuver->fired.at("stop-line-at"));
  CHECK(same_behaviour_set(trace.maneuver->output,
                           {track_speed_candidate(),
                            halt_end_of_lane_candidate(),
                            halt_stop_line_candidate()}));
  CHECK(same_behaviour_set(trace.maneuver->resolved,
                           {halt_end_of_lane_candidate(),
                            halt_stop_line_candidate()}));

  REQUIRE(trace.transformed.has_value());
  CHECK(trace.transformed->value_of(F("Maneuver.Decelerate-To-Halt")) ==
        Value::boolean(true));

  REQUIRE(trace.parameter.has_value());
  CHECK(trace.parameter->fired.size() == 3);
  CHECK(trace.parameter->output == std::vector<Behaviour>{halt_stop_line_final()});
  CHECK(trace.parameter->resolved ==
        std::vector<Behaviour>{halt_stop_line_final()});
}

TEST_CASE("an all-undefined scene falls through to the default behaviour") {
  EngineConfig cfg = intersection_config();
  Scene blank = complete_scene({}, intersection_maneuver_schema());
  auto [behaviour, trace] = infer(cfg, blank);
  CHECK(behaviour == track_speed_final());
}

TEST_CASE("a silent maneuver layer is a distinct engine error") {
  Theory empty_man(LayerId::Maneuver, intersection_maneuver_schema(),
                   intersection_parameter_schema(), {});
  EngineConfig cfg(empty_man, intersection_parameter_theory());
  auto result = infer_result(cfg, intersection_scene());
  REQUIRE_FALSE(result.ok());
  CHECK(result.error->kind == "no-behaviour");
  CHECK_THROWS_AS(infer(cfg, intersection_scene()), EngineError);
}

TEST_CASE("a silent parameter layer reports empty resolution") {
  Theory man = intersection_maneuver_theory();
  Theory empty_par(LayerId::Parameter, intersection_parameter_schema(),
                   intersection_output_schema(), {});
  EngineConfig cfg(man, empty_par);
  auto result = infer_result(cfg, intersection_scene());
  REQUIRE_FALSE(result.ok());
  CHECK(result.error->kind == "empty-resolution");
  CHECK(result.trace.transformed.has_value());
}

TEST_CASE("scenes outside the maneuver schema are rejected as input") {
  EngineConfig cfg = intersection_config();
  auto other = std::make_shared<const LayerSchema>(
      LayerId::Maneuver,
      std::map<Feature, ValueKind>{{F("X.Y"), ValueKind::Number}});
  Scene scene(other, Assignment{{F("X.Y"), Value::number(1)}});
  CHECK_THROWS_AS(infer_result(cfg, scene), ValidationError);
}

TEST_CASE("inference is deterministic and safe under concurrency") {
  EngineConfig cfg = intersection_config();
  Scene s = intersection_scene();
  auto [expected, expected_trace] = infer(cfg, s);

  std::vector<std::thread> pool;
  std::array<int, 8> failures{};
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < 500; ++i) {
        auto [behaviour, trace] = infer(cfg, s);
        if (!(behaviour == expected) ||
            trace.maneuver->fired != expected_trace.maneuver->fired) {
          ++failures[t];
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (int f : failures) CHECK(f == 0);
}

TEST_CASE("theory application matches independent rule-by-rule evaluation") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto model = random_model(seed);
    auto traced = apply_theory_traced(model.theory, model.scene);
    auto reference = oracle_apply(model.theory, model.scene);
    CHECK(traced.fired == reference.fired);
    CHECK(traced.output == reference.output);
  }
}
