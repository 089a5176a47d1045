"""Two-layer rule engine for behaviour planning.

The extension module works on JSON text; this package adds thin wrappers
that speak plain dictionaries.
"""

import json as _json

from ruleplan._core import Engine as _CoreEngine
from ruleplan._core import __version__, learn_json, parse_constraint

__all__ = ["Engine", "learn", "parse_constraint", "__version__"]


class Engine:
    """A loaded rule configuration ready to answer inference queries."""

    def __init__(self, rules):
        if not isinstance(rules, str):
            rules = _json.dumps(rules)
        self._core = _CoreEngine(rules)

    @property
    def rules(self):
        return _json.loads(self._core.rules_json())

    @property
    def rule_counts(self):
        return {
            "maneuver": self._core.maneuver_rule_count,
            "parameter": self._core.parameter_rule_count,
        }

    def infer(self, scene, trace=False, mode="strict"):
        """Run one inference; returns {"behaviour": ...} or {"error": ...}."""
        response = self._core.infer_json(_json.dumps(scene), trace, mode)
        return _json.loads(response)

    def check(self, dataset):
        """Report misclassified dataset scenes per layer."""
        if not isinstance(dataset, str):
            dataset = _json.dumps(dataset)
        return _json.loads(self._core.check_json(dataset))


def learn(dataset, base_rules=None, seed=0, heuristic="laplace",
          max_iterations=1_000_000):
    """Learn maneuver and parameter theories from a labelled dataset.

    Returns {"rules": <rule document>, "summary": {...}}; feed the rules to
    Engine to serve them.
    """
    if not isinstance(dataset, str):
        dataset = _json.dumps(dataset)
    if base_rules is not None and not isinstance(base_rules, str):
        base_rules = _json.dumps(base_rules)
    result = learn_json(dataset, base_rules, seed, heuristic, max_iterations)
    return _json.loads(result)
