# saddle_field/fields/scenario_tree.py
"""Finite filtered probability space stored as a scenario tree.

Time is the tree level. Nodes are numbered left to right within each level.
Leaves carry the random endowment data: sigma0 and the stock payoffs psi, so
that Sigma(x, q) = sigma0 + x + <q, psi> at a leaf.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from saddle_field.exceptions import ConfigError, DomainError
from saddle_field.logging_config import get_logger

logger = get_logger(__name__)

PROBABILITY_TOLERANCE = 1e-12


@dataclass(frozen=True, order=True)
class NodeRef:
    level: int
    index: int

    @classmethod
    def parse(cls, text: str) -> "NodeRef":
        """Parse 'level:index'"""
        try:
            level, index = (int(part) for part in text.split(":"))
        except ValueError:
            raise DomainError(f"node must be given as 'level:index', got '{text}'")
        return cls(level, index)

    def __str__(self) -> str:
        return f"{self.level}:{self.index}"


@dataclass(frozen=True)
class TreeNode:
    ref: NodeRef
    parent: Optional[NodeRef]
    children: Tuple[NodeRef, ...] = ()
    probs: Tuple[float, ...] = ()
    sigma0: Optional[float] = None
    psi: Optional[np.ndarray] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


class ScenarioTree:
    """Immutable scenario tree with exact conditional leaf distributions"""

    def __init__(self, nodes: List[List[TreeNode]], n_assets: int):
        self._nodes = nodes
        self.J = n_assets
        self._leaf_cache: Dict[NodeRef, List[Tuple[float, TreeNode]]] = {}
        for node in self.leaves:
            self._leaf_cache[node.ref] = [(1.0, node)]
        # bottom-up so every child distribution exists before its parent's
        for level in reversed(nodes[:-1]):
            for node in level:
                dist = []
                for p, child in zip(node.probs, node.children):
                    dist.extend((p * q, leaf) for q, leaf in self._leaf_cache[child])
                self._leaf_cache[node.ref] = dist

    @property
    def levels(self) -> int:
        """Number of time steps; leaves sit at this level"""
        return len(self._nodes) - 1

    @property
    def root(self) -> TreeNode:
        return self._nodes[0][0]

    @property
    def leaves(self) -> List[TreeNode]:
        return list(self._nodes[-1])

    @property
    def n_nodes(self) -> int:
        return sum(len(level) for level in self._nodes)

    def nodes_at(self, level: int) -> List[TreeNode]:
        if not 0 <= level <= self.levels:
            raise DomainError(f"level {level} outside 0..{self.levels}")
        return list(self._nodes[level])

    def all_nodes(self) -> List[TreeNode]:
        return [node for level in self._nodes for node in level]

    def node(self, ref: NodeRef) -> TreeNode:
        if not 0 <= ref.level <= self.levels or not 0 <= ref.index < len(self._nodes[ref.level]):
            raise DomainError(f"node {ref} does not exist in this tree")
        return self._nodes[ref.level][ref.index]

    def children_of(self, ref: NodeRef) -> List[Tuple[float, TreeNode]]:
        node = self.node(ref)
        return [(p, self.node(child)) for p, child in zip(node.probs, node.children)]

    def leaf_distribution(self, ref: NodeRef) -> List[Tuple[float, TreeNode]]:
        """Descendant leaves with their probabilities conditional on reaching ref"""
        self.node(ref)
        return list(self._leaf_cache[ref])

    def leaf_probability(self, leaf: NodeRef) -> float:
        """Unconditional probability of a leaf"""
        for p, node in self._leaf_cache[self.root.ref]:
            if node.ref == leaf:
                return p
        raise DomainError(f"node {leaf} is not a leaf")

    @classmethod
    def from_dict(cls, data, path: str = "tree") -> "ScenarioTree":
        """Build from nested {"p": [...], "children": [...]} / {"sigma0": s, "psi": [...]}"""
        nodes: List[List[TreeNode]] = []
        leaf_depths = set()
        n_assets: List[int] = []

        def visit(raw, depth: int, parent: Optional[NodeRef], where: str) -> NodeRef:
            if not isinstance(raw, dict):
                raise ConfigError("tree node must be an object", path=where)
            while len(nodes) <= depth:
                nodes.append([])
            ref = NodeRef(depth, len(nodes[depth]))
            # reserve the slot so siblings are numbered left to right
            nodes[depth].append(None)

            if "children" in raw or "p" in raw:
                extra = set(raw) - {"p", "children"}
                if extra:
                    raise ConfigError(f"unexpected keys {sorted(extra)} in inner node", path=where)
                probs = _probabilities(raw.get("p"), f"{where}.p")
                children_raw = raw.get("children")
                if not isinstance(children_raw, list) or not children_raw:
                    raise ConfigError("inner node needs a non-empty 'children' list", path=f"{where}.children")
                if len(children_raw) != len(probs):
                    raise ConfigError(
                        f"{len(probs)} probabilities for {len(children_raw)} children", path=f"{where}.p"
                    )
                children = tuple(
                    visit(child, depth + 1, ref, f"{where}.children[{i}]")
                    for i, child in enumerate(children_raw)
                )
                nodes[depth][ref.index] = TreeNode(ref, parent, children, probs)
            else:
                extra = set(raw) - {"sigma0", "psi"}
                if extra:
                    raise ConfigError(f"unexpected keys {sorted(extra)} in leaf", path=where)
                sigma0 = raw.get("sigma0", 0.0)
                if isinstance(sigma0, bool) or not isinstance(sigma0, (int, float)) or not math.isfinite(sigma0):
                    raise ConfigError("sigma0 must be a finite number", path=f"{where}.sigma0")
                psi = _reals(raw.get("psi", []), f"{where}.psi")
                n_assets.append(len(psi))
                if n_assets[0] != len(psi):
                    raise ConfigError(
                        f"leaf has {len(psi)} payoffs, expected {n_assets[0]}", path=f"{where}.psi"
                    )
                leaf_depths.add(depth)
                nodes[depth][ref.index] = TreeNode(ref, parent, sigma0=float(sigma0),
                                                   psi=np.array(psi, dtype=float))
                if len(leaf_depths) > 1:
                    raise ConfigError("all leaves must sit at the final level", path=where)
            return ref

        visit(data, 0, None, path)
        tree = cls(nodes, n_assets[0])
        logger.debug(f"Scenario tree with {tree.levels} levels, {len(tree.leaves)} leaves, J={tree.J}")
        return tree

    def to_dict(self) -> Dict:
        def emit(node: TreeNode) -> Dict:
            if node.is_leaf:
                return {"sigma0": node.sigma0, "psi": node.psi.tolist()}
            return {"p": list(node.probs), "children": [emit(self.node(c)) for c in node.children]}

        return emit(self.root)

    @classmethod
    def deterministic(cls, sigma0: float = 0.0, psi=()) -> "ScenarioTree":
        """Single-node tree: time 0 is also the terminal time"""
        return cls.from_dict({"sigma0": sigma0, "psi": list(psi)})


def _reals(raw, where: str) -> List[float]:
    if not isinstance(raw, list):
        raise ConfigError("expected a list of numbers", path=where)
    for i, value in enumerate(raw):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError("expected a finite number", path=f"{where}[{i}]")
    return [float(value) for value in raw]


def _probabilities(raw, where: str) -> Tuple[float, ...]:
    probs = _reals(raw, where)
    for i, p in enumerate(probs):
        if p <= 0:
            raise ConfigError(f"transition probability must be positive, got {p}", path=f"{where}[{i}]")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise ConfigError(f"transition probabilities sum to {total!r}, not 1", path=where)
    return tuple(probs)
