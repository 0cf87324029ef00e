import json
from pathlib import Path

import numpy as np
import pytest

from saddle_field.config.problem_config import load_problem, parse_at, parse_problem
from saddle_field.exceptions import ConfigError, DomainError
from saddle_field.fields.scenario_tree import NodeRef

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = {
    "agents": [{"kind": "exponential", "rate": 1.0}],
    "tree": {"p": [0.5, 0.5], "children": [{"sigma0": 0, "psi": [1]}, {"sigma0": 0, "psi": [-1]}]},
}


def with_changes(**changes):
    data = json.loads(json.dumps(BASE))
    data.update(changes)
    return json.dumps(data)


class TestParseAt:
    def test_components(self):
        point = parse_at("v=1,2; x=0 ;q=0.5")
        np.testing.assert_array_equal(point["v"], [1.0, 2.0])
        np.testing.assert_array_equal(point["x"], [0.0])
        np.testing.assert_array_equal(point["q"], [0.5])

    def test_empty(self):
        assert parse_at("") == {}
        assert parse_at("q=")["q"].size == 0

    @pytest.mark.parametrize("text", ["z=1", "v=1;v=2", "v=a", "x=inf", "x"])
    def test_rejects(self, text):
        with pytest.raises(DomainError):
            parse_at(text)


class TestParseProblem:
    def test_example_files(self):
        problem = load_problem(str(CONFIGS / "example_problem.json"))
        assert problem.agents.size == 2
        assert problem.agents.c_global == 2.0
        assert problem.tree.J == 2
        assert len(problem.tree.leaves) == 4
        assert problem.queries[2].node_ref() == NodeRef(1, 1)
        assert problem.sweep.seed == 7
        assert problem.sweep.points_for("bounds") == 200

        two_leaf = load_problem(str(CONFIGS / "two_leaf.json"))
        assert two_leaf.agents.is_pure_exponential
        assert [q.what for q in two_leaf.queries] == ["r", "conjugate", "invert", "trade"]

    def test_defaults(self):
        problem = parse_problem(json.dumps(BASE))
        assert problem.queries == []
        assert problem.sweep is None
        assert problem.sweep_or_default().points_for("lemma19") == 100

    def test_round_trip(self):
        problem = load_problem(str(CONFIGS / "example_problem.json"))
        assert parse_problem(problem.to_json()).to_dict() == problem.to_dict()

    def test_syntax_error_location(self):
        with pytest.raises(ConfigError) as info:
            parse_problem('{\n  "agents": [\n    {"kind": }\n  ]\n}')
        assert info.value.line == 3
        assert info.value.column is not None
        assert "line 3" in str(info.value)

    @pytest.mark.parametrize("text, path", [
        (with_changes(extra=1), None),
        (with_changes(agents=[]), "agents"),
        (with_changes(agents=[{"kind": "power"}]), "agents[0].kind"),
        (with_changes(agents=[{"kind": "exponential", "rate": -1}]), "agents[0]"),
        (with_changes(agents=[{"kind": "exponential"}]), "agents[0]"),
        (with_changes(agents=[{"kind": "exponential", "rate": "fast"}]), "agents[0].rate"),
        (with_changes(agents=[{"kind": "mixture", "weights": [1], "rates": [1, 2]}]), "agents[0]"),
        (with_changes(agents=[{"kind": "mixture", "weights": [1, True], "rates": [1, 2]}]), "agents[0].weights[1]"),
        (with_changes(tree={"p": [0.5, 0.5], "children": [{"psi": [1]}, {"psi": [1, 2]}]}), "tree.children[1].psi"),
        (with_changes(queries=[{"what": "volume"}]), "queries[0].what"),
        (with_changes(queries=[{"what": "r", "at": "w=1"}]), "queries[0].at"),
        (with_changes(queries=[{"what": "r", "node": "root"}]), "queries[0].node"),
        (with_changes(queries=[{"what": "r", "when": 1}]), "queries[0]"),
        (with_changes(sweep={"seed": "x"}), "sweep.seed"),
    ])
    def test_rejects(self, text, path):
        with pytest.raises(ConfigError) as info:
            parse_problem(text)
        assert info.value.path == path

    def test_missing_tree(self):
        with pytest.raises(ConfigError) as info:
            parse_problem(json.dumps({"agents": BASE["agents"]}))
        assert info.value.path == "tree"

    def test_not_an_object(self):
        with pytest.raises(ConfigError):
            parse_problem("[1, 2]")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_problem(str(tmp_path / "absent.json"))
