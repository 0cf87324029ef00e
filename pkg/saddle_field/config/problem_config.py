# saddle_field/config/problem_config.py
"""JSON problem description: agents, scenario tree, queries and sweep settings.

Example:

    {
      "agents": [{"kind": "exponential", "rate": 1.0},
                 {"kind": "mixture", "weights": [1, 1], "rates": [1, 2]}],
      "tree": {"p": [0.5, 0.5], "children": [{"sigma0": 0, "psi": [1]},
                                             {"sigma0": 0, "psi": [-1]}]},
      "queries": [{"what": "field", "at": "v=1,1;x=0;q=0", "node": "0:0"}],
      "sweep": {"seed": 7, "n_points": 10}
    }
"""
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from saddle_field.exceptions import ConfigError, DomainError
from saddle_field.fields.scenario_tree import NodeRef, ScenarioTree
from saddle_field.logging_config import get_logger
from saddle_field.utilities.utility_core import EXPONENTIAL, MIXTURE, AgentSet, UtilitySpec
from saddle_field.verification.reports import SweepConfig

logger = get_logger(__name__)

QUERY_KINDS = ("r", "grad", "hess", "conjugate", "field", "invert", "lemma19", "price", "trade")
AT_KEYS = ("v", "x", "q", "u", "y", "dq")


def parse_at(text: str) -> Dict[str, np.ndarray]:
    """Parse 'v=1,1;x=0;q=0.3' into arrays keyed by coordinate name"""
    values: Dict[str, np.ndarray] = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in AT_KEYS:
            raise DomainError(f"bad point component '{part}'; expected one of {', '.join(AT_KEYS)} as key=value")
        if key in values:
            raise DomainError(f"point component '{key}' given twice")
        raw = raw.strip()
        try:
            numbers = [float(item) for item in raw.split(",")] if raw else []
        except ValueError:
            raise DomainError(f"point component '{key}' must be comma-separated numbers, got '{raw}'")
        if not all(math.isfinite(n) for n in numbers):
            raise DomainError(f"point component '{key}' must be finite")
        values[key] = np.array(numbers, dtype=float)
    return values


@dataclass(frozen=True)
class Query:
    what: str
    at: str = ""
    node: Optional[str] = None

    def node_ref(self) -> Optional[NodeRef]:
        return NodeRef.parse(self.node) if self.node is not None else None

    def to_dict(self) -> Dict:
        data = {"what": self.what, "at": self.at}
        if self.node is not None:
            data["node"] = self.node
        return data


@dataclass(frozen=True)
class ProblemConfig:
    agents: AgentSet
    tree: ScenarioTree
    queries: List[Query] = field(default_factory=list)
    sweep: Optional[SweepConfig] = None

    def to_dict(self) -> Dict:
        data = {"agents": self.agents.to_list(), "tree": self.tree.to_dict()}
        if self.queries:
            data["queries"] = [q.to_dict() for q in self.queries]
        if self.sweep is not None:
            data["sweep"] = self.sweep.to_dict()
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def sweep_or_default(self) -> SweepConfig:
        return self.sweep if self.sweep is not None else SweepConfig()


def _number(raw, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
        raise ConfigError("expected a finite number", path=where)
    return float(raw)


def _numbers(raw, where: str) -> List[float]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a non-empty list of numbers", path=where)
    return [_number(value, f"{where}[{i}]") for i, value in enumerate(raw)]


def parse_utility(raw, where: str) -> UtilitySpec:
    if not isinstance(raw, dict):
        raise ConfigError("utility must be an object", path=where)
    kind = raw.get("kind")
    try:
        if kind == EXPONENTIAL:
            extra = set(raw) - {"kind", "rate"}
            if extra:
                raise ConfigError(f"unexpected keys {sorted(extra)}", path=where)
            if "rate" not in raw:
                raise ConfigError("exponential utility needs a 'rate'", path=where)
            return UtilitySpec.exponential(_number(raw["rate"], f"{where}.rate"))
        if kind == MIXTURE:
            extra = set(raw) - {"kind", "weights", "rates"}
            if extra:
                raise ConfigError(f"unexpected keys {sorted(extra)}", path=where)
            return UtilitySpec.mixture(_numbers(raw.get("weights"), f"{where}.weights"),
                                       _numbers(raw.get("rates"), f"{where}.rates"))
    except ConfigError as e:
        if e.path is not None:
            raise
        raise ConfigError(str(e), path=where) from e
    raise ConfigError(f"unknown utility kind {kind!r}; expected '{EXPONENTIAL}' or '{MIXTURE}'", path=f"{where}.kind")


def _parse_query(raw, where: str) -> Query:
    if not isinstance(raw, dict):
        raise ConfigError("query must be an object", path=where)
    extra = set(raw) - {"what", "at", "node"}
    if extra:
        raise ConfigError(f"unexpected keys {sorted(extra)}", path=where)
    what = raw.get("what")
    if what not in QUERY_KINDS:
        raise ConfigError(f"unknown query {what!r}; expected one of {', '.join(QUERY_KINDS)}", path=f"{where}.what")
    at = raw.get("at", "")
    if not isinstance(at, str):
        raise ConfigError("expected a point string such as 'v=1,1;x=0'", path=f"{where}.at")
    try:
        parse_at(at)
    except DomainError as e:
        raise ConfigError(str(e), path=f"{where}.at") from e
    node = raw.get("node")
    if node is not None:
        if not isinstance(node, str):
            raise ConfigError("node must be a 'level:index' string", path=f"{where}.node")
        try:
            NodeRef.parse(node)
        except DomainError as e:
            raise ConfigError(str(e), path=f"{where}.node") from e
    return Query(what=what, at=at, node=node)


def parse_problem(text: str) -> ProblemConfig:
    """Parse and validate a problem description"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, line=e.lineno, column=e.colno) from e
    if not isinstance(data, dict):
        raise ConfigError("problem description must be a JSON object")
    extra = set(data) - {"agents", "tree", "queries", "sweep"}
    if extra:
        raise ConfigError(f"unexpected top-level keys {sorted(extra)}")

    raw_agents = data.get("agents")
    if not isinstance(raw_agents, list) or not raw_agents:
        raise ConfigError("at least one agent is required", path="agents")
    agents = AgentSet(tuple(parse_utility(raw, f"agents[{i}]") for i, raw in enumerate(raw_agents)))

    if "tree" not in data:
        raise ConfigError("missing scenario tree", path="tree")
    tree = ScenarioTree.from_dict(data["tree"], path="tree")

    raw_queries = data.get("queries", [])
    if not isinstance(raw_queries, list):
        raise ConfigError("queries must be a list", path="queries")
    queries = [_parse_query(raw, f"queries[{i}]") for i, raw in enumerate(raw_queries)]

    sweep = SweepConfig.from_dict(data["sweep"], path="sweep") if "sweep" in data else None
    logger.debug(f"Parsed problem: M={agents.size}, J={tree.J}, {len(tree.leaves)} leaves, {len(queries)} queries")
    return ProblemConfig(agents=agents, tree=tree, queries=queries, sweep=sweep)


def load_problem(path: str) -> ProblemConfig:
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read problem description '{path}': {e.strerror}") from e
    logger.info(f"Loaded problem description from {path}")
    return parse_problem(text)
