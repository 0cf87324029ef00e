import pytest

from saddle_field.fields.scenario_tree import ScenarioTree
from saddle_field.utilities.utility_core import AgentSet, UtilitySpec


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch, tmp_path):
    """Keep CLI runs from writing log files into the working tree"""
    monkeypatch.setenv("SADDLE_FIELD_LOG_TO_FILE", "false")
    monkeypatch.setenv("SADDLE_FIELD_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("SADDLE_FIELD_LOG_LEVEL", "WARNING")


@pytest.fixture
def single_agent():
    return AgentSet((UtilitySpec.exponential(1.0),))


@pytest.fixture
def exp_agents():
    """Exponential agents with risk tolerances 1 and 1/2"""
    return AgentSet((UtilitySpec.exponential(1.0), UtilitySpec.exponential(2.0)))


@pytest.fixture
def mixed_agents():
    return AgentSet((
        UtilitySpec.exponential(1.0),
        UtilitySpec.mixture([1.0, 1.0], [0.5, 2.0]),
    ))


@pytest.fixture
def two_leaf_tree():
    """One period, two equally likely leaves paying +1 and -1 on one stock"""
    return ScenarioTree.from_dict({
        "p": [0.5, 0.5],
        "children": [{"sigma0": 0.0, "psi": [1.0]}, {"sigma0": 0.0, "psi": [-1.0]}],
    })


@pytest.fixture
def two_period_tree():
    return ScenarioTree.from_dict({
        "p": [0.4, 0.6],
        "children": [
            {"p": [0.5, 0.5], "children": [
                {"sigma0": 0.5, "psi": [1.0, 0.5]},
                {"sigma0": -0.25, "psi": [-1.0, 1.0]},
            ]},
            {"p": [0.3, 0.7], "children": [
                {"sigma0": 0.0, "psi": [0.5, -1.0]},
                {"sigma0": -0.5, "psi": [-0.5, 0.2]},
            ]},
        ],
    })


def _ternary(level: int, depth: int, seed: int):
    """Ternary subtree with fixed, uneven probabilities and three-stock payoffs"""
    if level == depth:
        k = seed % 7
        return {"sigma0": 0.25 * (k - 3), "psi": [((k + j) % 5 - 2) / 2.0 for j in range(3)]}
    return {
        "p": [0.2, 0.5, 0.3] if seed % 2 else [0.4, 0.35, 0.25],
        "children": [_ternary(level + 1, depth, 3 * seed + i + 1) for i in range(3)],
    }


@pytest.fixture
def ternary_tree():
    """Three periods of three branches each: 27 leaves, J = 3"""
    return ScenarioTree.from_dict(_ternary(0, 3, 0))


@pytest.fixture
def three_agents():
    return AgentSet((
        UtilitySpec.exponential(1.0),
        UtilitySpec.mixture([1.0, 1.0], [0.5, 2.0]),
        UtilitySpec.exponential(0.5),
    ))
