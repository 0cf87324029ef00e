# saddle_field/fields/scenario_field.py
"""Stochastic fields on a scenario tree.

F_t(a) = E[r(v, Sigma(x, q)) | node] for a = (v, x, q). Derivatives at a node
are conditional expectations of the terminal derivatives, so every quantity
is an exact finite sum over the descendant leaves.
"""
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from saddle_field.aggregation.aggregate_utility import (
    AggregateDerivatives,
    r_hessian,
    solve_allocation,
    terminal_derivatives,
)
from saddle_field.conjugacy.points import (
    DualPoint,
    PrimalDerivatives,
    PrimalEvaluator,
    PrimalPoint,
)
from saddle_field.conjugacy.saddle_transform import a_matrix, conjugate_point_from_dual
from saddle_field.exceptions import ContractError, DomainError
from saddle_field.fields.scenario_tree import NodeRef, ScenarioTree, TreeNode
from saddle_field.logging_config import get_logger
from saddle_field.utilities import utility_core as uc
from saddle_field.utilities.utility_core import AgentSet

logger = get_logger(__name__)

SPECTRAL_SLACK = 1e-9


@dataclass(frozen=True)
class FieldEvaluation:
    node: NodeRef
    point: PrimalPoint
    derivatives: PrimalDerivatives

    @property
    def value(self) -> float:
        return self.derivatives.value

    @property
    def gradient(self) -> np.ndarray:
        """Ordered as (v, x, q)"""
        return self.derivatives.gradient

    @property
    def hessian(self) -> np.ndarray:
        return self.derivatives.hessian

    def to_dict(self) -> Dict:
        return {
            "node": str(self.node),
            "value": self.value,
            "gradient": self.gradient.tolist(),
            "hessian": self.hessian.tolist(),
        }


def leaf_sigma(leaf: TreeNode, a: PrimalPoint) -> float:
    """Sigma(x, q) = sigma0 + x + <q, psi> at a leaf"""
    return leaf.sigma0 + a.x + float(np.dot(a.q, leaf.psi))


def _check_point(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint):
    if a.v.size != agents.size:
        raise DomainError(f"expected {agents.size} Pareto weights, got {a.v.size}")
    if a.q.size != tree.J:
        raise DomainError(f"expected {tree.J} quantities q, got {a.q.size}")


def terminal_field(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, leaf: NodeRef) -> FieldEvaluation:
    node = tree.node(leaf)
    if not node.is_leaf:
        raise DomainError(f"node {leaf} is not terminal")
    _check_point(tree, agents, a)
    derivs = terminal_derivatives(agents, a, node.sigma0, node.psi)
    return FieldEvaluation(node=leaf, point=a, derivatives=derivs)


def field_at(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, node: NodeRef) -> FieldEvaluation:
    """Value, gradient and Hessian of F at node as conditional expectations over leaves"""
    if tree.node(node).is_leaf:
        return terminal_field(tree, agents, a, node)
    _check_point(tree, agents, a)
    terms = [
        (p, terminal_derivatives(agents, a, leaf.sigma0, leaf.psi))
        for p, leaf in tree.leaf_distribution(node)
    ]
    return FieldEvaluation(node=node, point=a, derivatives=PrimalDerivatives.expectation(terms))


class NodeFieldEvaluator(PrimalEvaluator):
    """F_node as a saddle function on A"""

    def __init__(self, tree: ScenarioTree, agents: AgentSet, node: Optional[NodeRef] = None):
        self.tree = tree
        self.agents = agents
        self.node = node or tree.root.ref
        tree.node(self.node)

    @property
    def n_agents(self) -> int:
        return self.agents.size

    @property
    def n_assets(self) -> int:
        return self.tree.J

    def tolerance_proxy(self) -> np.ndarray:
        return self.agents.tolerances_at(0.0)

    def derivatives(self, point: PrimalPoint) -> PrimalDerivatives:
        return field_at(self.tree, self.agents, point, self.node).derivatives


def pareto_allocation_field(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, leaf: NodeRef) -> np.ndarray:
    """pi(a) at a leaf: the Pareto allocation of Sigma(x, q)"""
    node = tree.node(leaf)
    if not node.is_leaf:
        raise DomainError(f"node {leaf} is not terminal")
    _check_point(tree, agents, a)
    return solve_allocation(agents, a.v, leaf_sigma(node, a)).x_hat


def expected_utilities(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, node: NodeRef) -> np.ndarray:
    """U^m(a) = E[u_m(pi^m(a)) | node]"""
    total = np.zeros(agents.size)
    for p, leaf in tree.leaf_distribution(node):
        pi = pareto_allocation_field(tree, agents, a, leaf.ref)
        total += p * np.array([uc.eval(spec, xm, 0) for spec, xm in zip(agents.agents, pi)])
    return total


class FieldInverse(NamedTuple):
    X: float
    V: np.ndarray


def invert_field(tree: ScenarioTree, agents: AgentSet, u, q, node: NodeRef,
                 guess: Optional[PrimalPoint] = None) -> FieldInverse:
    """Cash amount X and simplex weights V with U_node(V, X, q) = u"""
    evaluator = NodeFieldEvaluator(tree, agents, node)
    pair = conjugate_point_from_dual(evaluator, DualPoint(u, 1.0, q), guess)
    # y = 1 so X = g(u, 1, q) and v = dg/du
    v = pair.primal.v
    return FieldInverse(X=pair.g_value, V=v / v.sum())


def marginal_prices(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, node: NodeRef) -> np.ndarray:
    """dF/dq^j / dF/dx: cash per unit of stock j at the margin"""
    d = field_at(tree, agents, a, node).derivatives
    return d.d_q / d.d_x


@dataclass(frozen=True)
class IndifferenceTrade:
    x_new: float
    v_new: np.ndarray
    q_new: np.ndarray
    price: float

    def to_dict(self) -> Dict:
        return {
            "x": self.x_new,
            "v": self.v_new.tolist(),
            "q": self.q_new.tolist(),
            "price": self.price,
        }


def indifference_trade(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, delta_q,
                       node: NodeRef) -> IndifferenceTrade:
    """State after buying delta_q that leaves every agent's expected utility unchanged"""
    delta_q = np.asarray(delta_q, dtype=float).reshape(-1)
    if delta_q.size != tree.J:
        raise DomainError(f"expected {tree.J} traded quantities, got {delta_q.size}")
    if not np.any(delta_q):
        return IndifferenceTrade(x_new=a.x, v_new=a.v / a.v.sum(), q_new=a.q, price=0.0)

    u = field_at(tree, agents, a, node).derivatives.d_v
    q_new = a.q + delta_q
    X, V = invert_field(tree, agents, u, q_new, node)
    logger.info(f"Indifference trade of {delta_q.tolist()} at node {node}: price {a.x - X:.6g}")
    return IndifferenceTrade(x_new=X, v_new=V, q_new=q_new, price=a.x - X)


@dataclass(frozen=True)
class RiskToleranceData:
    """Reweighting by F_T'' and the aggregate risk-tolerance process"""

    leaves: Tuple[NodeRef, ...]
    probability: np.ndarray
    density: np.ndarray
    R_process: Dict[NodeRef, float]
    tau: np.ndarray
    d2x_terminal: np.ndarray

    def index_of(self, leaf: NodeRef) -> int:
        return self.leaves.index(leaf)


@dataclass(frozen=True)
class RiskToleranceAssembly:
    node: NodeRef
    matrix: np.ndarray
    direct: np.ndarray
    deviation: float
    data: RiskToleranceData


def lemma19_data(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint) -> RiskToleranceData:
    _check_point(tree, agents, a)
    root = tree.leaf_distribution(tree.root.ref)
    refs = tuple(leaf.ref for _, leaf in root)
    probability = np.array([p for p, _ in root])
    terminal: List[AggregateDerivatives] = [r_hessian(agents, a.v, leaf_sigma(leaf, a)) for _, leaf in root]
    d_x = np.array([d.dr_dx for d in terminal])
    d_xx = np.array([d.d2r_dx2 for d in terminal])
    tau = np.array([d.allocation.tolerances for d in terminal])

    position = {ref: i for i, ref in enumerate(refs)}
    R_process = {}
    for node in tree.all_nodes():
        dist = tree.leaf_distribution(node.ref)
        idx = [position[leaf.ref] for _, leaf in dist]
        p = np.array([q for q, _ in dist])
        R_process[node.ref] = float(-np.dot(p, d_x[idx]) / np.dot(p, d_xx[idx]))

    return RiskToleranceData(
        leaves=refs,
        probability=probability,
        density=d_xx / float(np.dot(probability, d_xx)),
        R_process=R_process,
        tau=tau,
        d2x_terminal=d_xx,
    )


def lemma19_matrix(tree: ScenarioTree, agents: AgentSet, a: PrimalPoint, node: NodeRef,
                   data: Optional[RiskToleranceData] = None) -> RiskToleranceAssembly:
    """A(F_node) assembled from risk tolerances under the reweighted measure.

    A = (1/R_t) E_R[tau^l (delta_lm sum_k tau^k - tau^m)] + (1/R_t) E_R[tau^l] E_R[tau^m],
    cross-checked against the direct assembly from the node Hessian.
    """
    data = data or lemma19_data(tree, agents, a)
    dist = tree.leaf_distribution(node)
    idx = [data.index_of(leaf.ref) for _, leaf in dist]
    weights = np.array([p for p, _ in dist]) * data.d2x_terminal[idx]
    weights = weights / weights.sum()
    tau = data.tau[idx]
    totals = tau.sum(axis=1)

    spread = np.einsum("k,kl,k->l", weights, tau, totals)
    inner = np.diag(spread) - np.einsum("k,kl,km->lm", weights, tau, tau)
    mean = weights @ tau
    matrix = (inner + np.outer(mean, mean)) / data.R_process[node]
    matrix = 0.5 * (matrix + matrix.T)

    direct = a_matrix(field_at(tree, agents, a, node).derivatives, a.v)
    direct = 0.5 * (direct + direct.T)
    deviation = float(np.max(np.abs(matrix - direct)) / max(1.0, float(np.max(np.abs(direct)))))
    logger.debug(f"Risk-tolerance assembly of A(F) at node {node}: deviation {deviation:.3e}")
    return RiskToleranceAssembly(node=node, matrix=matrix, direct=direct, deviation=deviation, data=data)


@dataclass(frozen=True)
class SpectralCheck:
    passed: bool
    eig_min: float
    eig_max: float
    eigenvalues: np.ndarray


def spectral_bound_check(matrix, c: float, slack: float = SPECTRAL_SLACK) -> SpectralCheck:
    """Whether every eigenvalue of a symmetric matrix lies in [1/c, c]"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=1e-9, atol=1e-12):
        raise ContractError("spectral bound check needs a symmetric matrix")
    if not c > 0:
        raise DomainError(f"bound constant c must be positive, got {c}")
    eigenvalues = np.linalg.eigvalsh(matrix)
    eig_min, eig_max = float(eigenvalues[0]), float(eigenvalues[-1])
    passed = eig_min >= 1.0 / c - slack and eig_max <= c + slack
    return SpectralCheck(passed=passed, eig_min=eig_min, eig_max=eig_max, eigenvalues=eigenvalues)
