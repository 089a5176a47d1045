import json
import os
import pathlib

import pytest

import ruleplan

FIXTURES = pathlib.Path(
    os.environ.get("RULEPLAN_FIXTURES",
                   pathlib.Path(__file__).resolve().parents[1] / "fixtures"))


def load(name):
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture(scope="module")
def engine():
    return ruleplan.Engine(load("intersection.rules.json"))


@pytest.fixture(scope="module")
def scene():
    return load("intersection.scene.json")


def test_inference_matches_the_fixture(engine, scene):
    response = engine.infer(scene)
    assert response == {
        "behaviour": {
            "maneuver": "Decelerate-To-Halt",
            "params": {"Ego.StopAt": "StopLine"},
        }
    }


def test_rule_counts(engine):
    assert engine.rule_counts == {"maneuver": 5, "parameter": 3}


def test_trace_reports_fired_rules(engine, scene):
    response = engine.infer(scene, trace=True)
    fired = response["trace"]["maneuver"]["fired"]
    assert fired["stop-line-approaching"] is True
    assert fired["stop-line-at"] is False
    assert response["trace"]["transformed"]["Maneuver.Decelerate-To-Halt"] is True


def test_completing_mode_fills_missing_features(engine):
    response = engine.infer({"Ego.Speed": 35}, mode="completing")
    assert response["behaviour"]["maneuver"] == "Track-Speed"
    with pytest.raises(ValueError):
        engine.infer({"Ego.Speed": 35})  # strict needs totality


def test_engine_errors_are_data_not_exceptions(scene):
    rules = load("intersection.rules.json")
    rules["maneuver_rules"] = []
    rules["parameter_rules"] = []
    silent = ruleplan.Engine(rules)
    response = silent.infer(scene)
    assert response["error"]["kind"] == "no-behaviour"


def test_check_reports_clean_dataset(engine):
    report = engine.check(load("intersection.dataset.json"))
    assert report["misclassified"] == {"maneuver": [], "parameter": []}


def test_learning_is_seeded_and_reproducible():
    dataset = load("intersection.dataset.json")
    first = ruleplan.learn(dataset, seed=11)
    second = ruleplan.learn(dataset, seed=11)
    assert first == second
    assert first["summary"]["maneuver_rules"] == 1

    learned = ruleplan.Engine(first["rules"])
    scene = load("intersection.scene.json")
    assert learned.infer(scene)["behaviour"]["params"]["Ego.StopAt"] == "StopLine"


def test_parse_constraint_canonicalizes():
    assert ruleplan.parse_constraint("  Ego.Speed>=35 ") == "Ego.Speed >= 35"
    with pytest.raises(ValueError):
        ruleplan.parse_constraint("Ego.Speed < 35")
