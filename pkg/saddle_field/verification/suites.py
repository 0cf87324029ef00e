# saddle_field/verification/suites.py
"""Seeded property suites.

Every check pairs an analytic path with an independent oracle: finite
differences, grid search, closed forms, or iterated conditional expectation.
Each suite draws from its own generator so that a suite gives the same
numbers whether it runs alone or inside 'all'.
"""
import math
from typing import Dict, List, Optional

import numpy as np
from tqdm import tqdm

from saddle_field.aggregation.aggregate_utility import (
    AggregateUtilityEvaluator,
    boundary_divergence_scan,
    brute_force_r,
    exponential_closed_form,
    exponential_value,
    r_and_gradient,
    r_hessian,
)
from saddle_field.conjugacy.points import DualPoint, PrimalDerivatives, PrimalPoint
from saddle_field.conjugacy.saddle_transform import (
    a_matrix,
    conjugate_point_from_dual,
    conjugate_point_from_primal,
    envelope_check,
    minimax_grid,
    second_order_bundle,
)
from saddle_field.exceptions import DomainError
from saddle_field.fields.scenario_field import (
    NodeFieldEvaluator,
    expected_utilities,
    field_at,
    invert_field,
    lemma19_data,
    lemma19_matrix,
    leaf_sigma,
    pareto_allocation_field,
    spectral_bound_check,
)
from saddle_field.fields.scenario_tree import NodeRef, ScenarioTree
from saddle_field.logging_config import get_logger
from saddle_field.utilities import utility_core as uc
from saddle_field.utilities.utility_core import AgentSet
from saddle_field.verification.finite_difference import (
    finite_difference_gradient,
    finite_difference_hessian,
    finite_difference_jacobian,
    second_difference,
)
from saddle_field.verification.reports import CheckAccumulator, CheckReport, SweepConfig

logger = get_logger(__name__)

SUITES = ("assumptions", "aggregate", "conjugacy", "identities", "field",
          "bounds", "lemma19", "envelope", "boundary")

# the 21 x 21 minimax grid is evaluated at this many points per run
MINIMAX_POINTS = 3
HOMOGENEITY_FACTORS = (0.5, 2.0, 10.0)
GROWTH_DECADES = 8


def _case(**values) -> Dict:
    return {key: (value.tolist() if isinstance(value, np.ndarray) else value) for key, value in values.items()}


def _point_case(a: PrimalPoint, node: Optional[NodeRef] = None) -> Dict:
    case = _case(v=a.v, x=a.x, q=a.q)
    if node is not None:
        case["node"] = str(node)
    return case


class SuiteRunner:
    """Runs named suites against one agent set and scenario tree"""

    def __init__(self, agents: AgentSet, tree: ScenarioTree, config: SweepConfig, progress: bool = False):
        self.agents = agents
        self.tree = tree
        self.config = config
        self.progress = progress
        self._checks: Dict[str, CheckAccumulator] = {}

    @property
    def c(self) -> float:
        return self.config.c_override if self.config.c_override is not None else self.agents.c_global

    def run(self, suite_name: str) -> List[CheckReport]:
        if suite_name == "all":
            reports = []
            for name in SUITES:
                reports.extend(self.run(name))
            return reports
        if suite_name not in SUITES:
            raise DomainError(f"unknown suite '{suite_name}'; expected one of {', '.join(SUITES + ('all',))}")

        self._checks = {}
        rng = np.random.default_rng([self.config.seed, SUITES.index(suite_name)])
        logger.info(f"Running suite '{suite_name}' with {self.config.points_for(suite_name)} points (seed {self.config.seed})")
        getattr(self, f"_suite_{suite_name}")(rng)
        reports = [check.report() for check in self._checks.values()]
        failed = [r.name for r in reports if not r.passed]
        if failed:
            logger.warning(f"Suite '{suite_name}' failed checks: {', '.join(failed)}")
        else:
            logger.info(f"✅ Suite '{suite_name}' passed {len(reports)} checks")
        return reports

    def _check(self, name: str, tolerance_key: str, tolerance: Optional[float] = None) -> CheckAccumulator:
        if name not in self._checks:
            tol = tolerance if tolerance is not None else self.config.tolerance(tolerance_key)
            self._checks[name] = CheckAccumulator(name, tol)
        return self._checks[name]

    def _points(self, suite_name: str, count: Optional[int] = None):
        count = self.config.points_for(suite_name) if count is None else count
        return tqdm(range(count), desc=suite_name, disable=not self.progress, leave=False)

    # sampling

    def _sample_v(self, rng, simplex: bool = False) -> np.ndarray:
        lo, hi = self.config.v_log_range
        v = np.exp(rng.uniform(math.log(lo), math.log(hi), self.agents.size))
        return v / v.sum() if simplex else v

    def _sample_point(self, rng, simplex: bool = False) -> PrimalPoint:
        v = self._sample_v(rng, simplex)
        x = rng.uniform(*self.config.x_range)
        q = rng.uniform(*self.config.q_range, self.tree.J)
        return PrimalPoint(v, x, q)

    def _sample_node(self, rng) -> NodeRef:
        nodes = self.tree.all_nodes()
        return nodes[int(rng.integers(len(nodes)))].ref

    # suites

    def _suite_assumptions(self, rng):
        c = self.c
        signs = self._check("utility.signs", "bound")
        aversion = self._check("utility.risk_aversion_bound", "bound")
        ratio = self._check("utility.marginal_ratio_bound", "bound")
        inverse = self._check("utility.inverse_marginal", "residual")
        fd_first = self._check("utility.first_derivative_fd", "gradient")
        fd_second = self._check("utility.second_derivative_fd", "gradient")
        vanishing = self._check("utility.vanishes_at_infinity", "bound")
        c_global = self._check("agents.c_global", "bound")

        c_global.flag(self.agents.c_global >= 1.0, _case(c_global=self.agents.c_global))
        half = np.logspace(-3, math.log10(50.0), 25)
        grid = np.concatenate([-half[::-1], [0.0], half])
        extra = rng.uniform(*self.config.x_range, self.config.points_for("assumptions"))
        xs = np.concatenate([grid, extra])

        for m, spec in enumerate(self.agents.agents):
            far = 50.0 / min(spec.rates)
            vanishing.flag(abs(uc.eval(spec, far, 0)) < 1e-8, _case(agent=m, x=far))
            for x in tqdm(xs, desc=f"assumptions[{m}]", disable=not self.progress, leave=False):
                x = float(x)
                if x < spec.lower_limit:
                    continue
                case = _case(agent=m, x=x)
                u0, u1, u2 = (uc.eval(spec, x, k) for k in range(3))
                signs.flag(u0 < 0 and u1 > 0 and u2 < 0, case)
                aversion.bound(-u2 / u1, 1.0 / c, c, case)
                ratio.bound(-u1 / u0, 1.0 / c, c, case)
                inverse.compare(uc.inverse_marginal(spec, u1), x, case)
                inverse.compare(uc.eval(spec, uc.inverse_marginal(spec, u1), 1), u1, case)
                fd_first.compare(u1, finite_difference_gradient(lambda z: uc.eval(spec, z, 0), x, self.config.fd_step), case)
                fd_second.compare(u2, finite_difference_gradient(lambda z: uc.eval(spec, z, 1), x, self.config.fd_step), case)

    def _suite_aggregate(self, rng):
        f = AggregateUtilityEvaluator(self.agents)
        signs = self._check("aggregate.signs", "bound")
        total = self._check("aggregate.allocation_sum", "residual")
        marginal = self._check("aggregate.marginal_equality", "identity")
        gradient = self._check("aggregate.gradient_fd", "gradient")
        hessian = self._check("aggregate.hessian_fd", "hessian")
        diagonal = self._check("aggregate.A_diagonal", "identity")
        homogeneity = self._check("aggregate.homogeneity", "homogeneity")
        euler = self._check("aggregate.euler_identity", "gradient")
        brute = self._check("aggregate.brute_force_upper_bound", "identity")
        closed = self._check("aggregate.exponential_closed_form", "closed_form") \
            if self.agents.is_pure_exponential else None
        grid_points = {1: 3, 2: 401, 3: 61}.get(self.agents.size, 21)

        for i in self._points("aggregate"):
            v = self._sample_v(rng)
            x = float(rng.uniform(*self.config.x_range))
            a = PrimalPoint(v, x, ())
            case = _point_case(a)
            d = r_hessian(self.agents, v, x)
            alloc = d.allocation

            signs.flag(d.value < 0 and d.dr_dx > 0 and bool(np.all(d.dr_dv < 0)) and d.d2r_dx2 < 0, case)
            total.compare(abs(math.fsum(alloc.x_hat) - x) / max(1.0, abs(x)), 0.0, case)
            marginal.compare(v * np.array([uc.eval(s, xm, 1) for s, xm in zip(self.agents.agents, alloc.x_hat)]),
                             np.full(v.size, alloc.lam), case)

            derivs = f.derivatives(a)
            fd_gradient = finite_difference_gradient(f, a, self.config.fd_step)
            gradient.compare(derivs.gradient, fd_gradient, case)
            hessian.compare(derivs.hessian, finite_difference_hessian(f, a, self.config.hessian_step), case)
            diagonal.compare(a_matrix(derivs, v), np.diag(alloc.tolerances), case)

            for z in HOMOGENEITY_FACTORS:
                homogeneity.compare(r_and_gradient(self.agents, z * v, x).value, z * d.value, _case(z=z, **case))
            euler.compare(float(np.dot(v, fd_gradient[:v.size])), d.value, case)
            if i < MINIMAX_POINTS:
                gap = brute_force_r(self.agents, v, x, grid_points=grid_points) - d.value
                brute.bound(gap / max(1.0, abs(d.value)), -math.inf, 0.0, case)

            if closed is not None:
                exact = exponential_closed_form(self.agents, v, x)
                closed.compare(d.value, exponential_value(self.agents, v, x), case)
                closed.compare(alloc.lam, exact.lam, case)
                closed.compare(alloc.x_hat, exact.x_hat, case)

    def _suite_conjugacy(self, rng):
        f = NodeFieldEvaluator(self.tree, self.agents)
        round_trip = self._check("conjugacy.round_trip", "round_trip")
        residual = self._check("conjugacy.residual", "residual")
        f_value = self._check("conjugacy.f_equals_uv", "identity")
        g_value = self._check("conjugacy.g_equals_xy", "identity")
        minimax = self._check("conjugacy.minimax_grid", "minimax")
        homogeneity = self._check("conjugacy.dual_homogeneity", "round_trip")
        exponential = AggregateUtilityEvaluator(self.agents) if self.agents.is_pure_exponential else None
        closed = self._check("conjugacy.exponential_closed_form", "closed_form") if exponential else None

        for i in self._points("conjugacy"):
            a = self._sample_point(rng)
            case = _point_case(a)
            pair = conjugate_point_from_primal(f, a)
            back = conjugate_point_from_dual(f, pair.dual)
            round_trip.compare(back.primal.as_vector(), a.as_vector(), case)
            residual.compare(back.residual, 0.0, case)
            f_value.compare(float(np.dot(pair.dual.u, a.v)), pair.f_value, case)
            g_value.compare(back.g_value, a.x * pair.dual.y, case)

            for z in (0.5, 2.0):
                # (z v, x, q) solves the scaled problem exactly
                scaled = conjugate_point_from_dual(f, pair.dual.replace(y=z * pair.dual.y), a.replace(v=z * a.v))
                homogeneity.compare(scaled.primal.x, a.x, _case(z=z, **case))
                homogeneity.compare(scaled.primal.v, z * a.v, _case(z=z, **case))
                homogeneity.compare(scaled.g_value, z * back.g_value, _case(z=z, **case))

            if i < MINIMAX_POINTS:
                sup_inf, inf_sup = minimax_grid(f, back, half_width=0.05, points=21)
                minimax.compare([sup_inf, inf_sup], [back.g_value, back.g_value], case)

            if closed is not None:
                u = -np.exp(rng.uniform(-2.0, 2.0, self.agents.size))
                t = self.agents.tolerances_at(0.0)
                solved = conjugate_point_from_dual(exponential, DualPoint(u, 1.0, ()))
                closed.compare(solved.g_value, float(np.sum(t * np.log(t / (-u)))), _case(u=u))
                closed.compare(solved.primal.v, t / (-u), _case(u=u))

    def _dual_oracles(self, f: NodeFieldEvaluator, pair, case: Dict,
                      b_check: CheckAccumulator, e_check: Optional[CheckAccumulator],
                      h_check: Optional[CheckAccumulator],
                      bundle):
        """B, E from differences of the solved v(u, 1, q); H from second differences of g(u, 1, q)"""
        u0, q0 = pair.dual.u, pair.dual.q
        guess = pair.primal.replace(v=pair.primal.v / pair.dual.y)

        def solve(u, q):
            return conjugate_point_from_dual(f, DualPoint(u, 1.0, q), guess)

        def v_of_log_u(ell):
            return solve(-np.exp(ell), q0).primal.v

        v1 = guess.v
        ell0 = np.log(-u0)
        dv_dell = finite_difference_jacobian(v_of_log_u, ell0, self.config.fd_step)
        # dv^l/du^m = dv^l/dell_m / u^m
        b_fd = dv_dell / u0[None, :] / np.outer(v1, v1)
        b_check.compare(bundle.B_mat, 0.5 * (b_fd + b_fd.T), case)

        if f.n_assets:
            dv_dq = finite_difference_jacobian(lambda q: solve(u0, q).primal.v, q0, self.config.fd_step)
            e_check.compare(bundle.E_mat, dv_dq / v1[:, None], case)
            h_fd = second_difference(lambda q: solve(u0, q).g_value, q0, step=1e-3)
            h_check.compare(bundle.H_mat, h_fd, case)

    def _suite_identities(self, rng):
        inverse = self._check("identities.B_inverse_of_A", "inverse")
        row_sums = self._check("identities.A_row_sums", "sum_identity")
        total = self._check("identities.A_total", "sum_identity")
        b_fd = self._check("identities.B_fd", "dual_second_order")
        if self.tree.J:
            c_sums = self._check("identities.C_column_sums", "sum_identity")
            e_fd = self._check("identities.E_fd", "dual_second_order")
            h_fd = self._check("identities.H_fd", "dual_second_order")
        else:
            c_sums = e_fd = h_fd = None

        for _ in self._points("identities"):
            node = self._sample_node(rng)
            f = NodeFieldEvaluator(self.tree, self.agents, node)
            a = self._sample_point(rng)
            case = _point_case(a, node)
            pair = conjugate_point_from_primal(f, a)
            bundle = second_order_bundle(f, pair)
            d = f.derivatives(a)

            inverse.compare(bundle.inverse_residual(), 0.0, case)
            row_sums.compare(bundle.A_mat.sum(axis=1), -a.v * d.d_vx / d.d_xx, case)
            total.compare(bundle.A_mat.sum(), -d.d_x / d.d_xx, case)
            if f.n_assets:
                c_sums.compare(bundle.C_mat.sum(axis=0), d.d_q / d.d_x - d.d_xq / d.d_xx, case)
            self._dual_oracles(f, pair, case, b_fd, e_fd, h_fd, bundle)

    def _tower(self, a: PrimalPoint, node: NodeRef):
        """Derivative bundle at node from children by iterated conditional expectation"""
        children = self.tree.children_of(node)
        if not children:
            return field_at(self.tree, self.agents, a, node).derivatives
        return PrimalDerivatives.expectation((p, self._tower(a, child.ref)) for p, child in children)

    def _suite_field(self, rng):
        tower = self._check("field.tower_property", "field")
        signs = self._check("field.signs", "bound")
        gradient = self._check("field.gradient_fd", "gradient")
        hessian = self._check("field.hessian_fd", "hessian")
        allocation = self._check("field.allocation_sum", "residual")
        utilities = self._check("field.expected_utility_consistency", "identity")
        inversion = self._check("field.inversion_round_trip", "round_trip")
        simplex = self._check("field.inverse_weights_in_simplex", "bound")

        for _ in self._points("field"):
            node = self._sample_node(rng)
            a = self._sample_point(rng, simplex=True)
            case = _point_case(a, node)
            evaluation = field_at(self.tree, self.agents, a, node)
            d = evaluation.derivatives

            iterated = self._tower(a, node)
            tower.compare(
                np.concatenate([[d.value], d.gradient, d.hessian.ravel()]),
                np.concatenate([[iterated.value], iterated.gradient, iterated.hessian.ravel()]),
                case,
            )
            signs.flag(d.value < 0 and d.d_x > 0 and bool(np.all(d.d_v < 0)) and d.d_xx < 0, case)

            f = NodeFieldEvaluator(self.tree, self.agents, node)
            gradient.compare(evaluation.gradient, finite_difference_gradient(f, a, self.config.fd_step), case)
            hessian.compare(evaluation.hessian, finite_difference_hessian(f, a, self.config.hessian_step), case)

            for _, leaf in self.tree.leaf_distribution(node):
                pi = pareto_allocation_field(self.tree, self.agents, a, leaf.ref)
                sigma = leaf_sigma(leaf, a)
                allocation.compare(abs(math.fsum(pi) - sigma) / max(1.0, abs(sigma)), 0.0, case)
            utilities.compare(expected_utilities(self.tree, self.agents, a, node), d.d_v, case)

            X, V = invert_field(self.tree, self.agents, d.d_v, a.q, node)
            inversion.compare(np.concatenate([[X], V]), np.concatenate([[a.x], a.v]), case)
            simplex.bound(np.concatenate([V, [V.sum()]]), 0.0, 1.0, case)
            simplex.flag(bool(np.all(V > 0)), case)

    def _suite_bounds(self, rng):
        c = self.c
        value_ratio = self._check("bounds.marginal_value_ratio", "bound")
        primal_spectrum = self._check("bounds.primal_spectrum", "bound")
        tolerance_ratio = self._check("bounds.tolerance_ratio", "bound")
        dual_ratio = self._check("bounds.dual_weight_ratio", "bound")
        dual_spectrum = self._check("bounds.dual_spectrum", "bound")
        dual_solution = self._check("bounds.dual_unit_solution", "bound")

        for _ in self._points("bounds"):
            node = self._sample_node(rng)
            f = NodeFieldEvaluator(self.tree, self.agents, node)
            a = self._sample_point(rng)
            case = _point_case(a, node)
            d = f.derivatives(a)
            value_ratio.bound(-a.v * d.d_v / d.d_x, 1.0 / c, c, case)
            tolerance_ratio.bound(a.v * d.d_vx / -d.d_xx, 1.0 / c, c, case)
            A = a_matrix(d, a.v)
            primal_spectrum.bound(spectral_bound_check(0.5 * (A + A.T), c).eigenvalues, 1.0 / c, c, case)

            u = -np.exp(rng.uniform(-2.0, 2.0, self.agents.size))
            y = float(np.exp(rng.uniform(-1.0, 1.0)))
            b = DualPoint(u, y, a.q)
            dual_case = _case(u=u, y=y, q=a.q, node=str(node))
            pair = conjugate_point_from_dual(f, b)
            dual_ratio.bound(-u * pair.primal.v / y, 1.0 / c, c, dual_case)
            bundle = second_order_bundle(f, pair)
            dual_spectrum.bound(spectral_bound_check(bundle.B_mat, c).eigenvalues, 1.0 / c, c, dual_case)
            dual_solution.bound(np.linalg.solve(bundle.B_mat, np.ones(self.agents.size)), 1.0 / c, c, dual_case)

    def _suite_lemma19(self, rng):
        c = self.c
        assembly = self._check("lemma19.assembly", "lemma19")
        spectral = self._check("lemma19.spectral_bound", "bound")
        density = self._check("lemma19.density_normalization", "field")
        tau_sum = self._check("lemma19.tau_sum", "field")
        tau_bounds = self._check("lemma19.tau_bounds", "bound")
        martingale = self._check("lemma19.R_martingale", "field")

        for _ in self._points("lemma19"):
            node = self._sample_node(rng)
            a = self._sample_point(rng)
            case = _point_case(a, node)
            data = lemma19_data(self.tree, self.agents, a)
            result = lemma19_matrix(self.tree, self.agents, a, node, data)

            assembly.compare(result.matrix, result.direct, case)
            spectral.bound(spectral_bound_check(result.matrix, c).eigenvalues, 1.0 / c, c, case)
            density.compare(float(np.dot(data.probability, data.density)), 1.0, case)
            tau_sum.compare(data.tau.sum(axis=1), np.array([data.R_process[ref] for ref in data.leaves]), case)
            tau_bounds.bound(data.tau, 1.0 / c, c, case)

            for parent in self.tree.all_nodes():
                if parent.is_leaf:
                    continue
                weights, values = [], []
                for p, child in self.tree.children_of(parent.ref):
                    idx = [data.index_of(leaf.ref) for _, leaf in self.tree.leaf_distribution(child.ref)]
                    cond = np.array([q for q, _ in self.tree.leaf_distribution(child.ref)])
                    weights.append(p * float(np.dot(cond, data.d2x_terminal[idx])))
                    values.append(data.R_process[child.ref])
                weights = np.array(weights)
                martingale.compare(float(np.dot(weights, values) / weights.sum()), data.R_process[parent.ref],
                                   dict(case, parent=str(parent.ref)))

    def _suite_envelope(self, rng):
        envelope = self._check("envelope.dg_dq_plus_df_dq", "envelope")
        if self.tree.J == 0:
            logger.info("Envelope suite has no quantities to perturb (J=0)")
        for _ in self._points("envelope"):
            node = self._sample_node(rng)
            f = NodeFieldEvaluator(self.tree, self.agents, node)
            a = self._sample_point(rng)
            pair = conjugate_point_from_primal(f, a)
            deviations = envelope_check(f, pair, step=1e-4)
            envelope.compare(deviations / max(1.0, pair.dual.y), np.zeros_like(deviations), _point_case(a, node))

    def _suite_boundary(self, rng):
        c = self.c
        if self.agents.size > 1:
            divergence = self._check("boundary.weight_divergence", "bound")
            for x in (0.0, float(rng.uniform(*self.config.x_range))):
                scan = boundary_divergence_scan(self.agents, x)
                divergence.flag(scan["reached"], _case(x=x, n=scan["n"], sum_dr_dv=scan["sum_dr_dv"]))

        growth_check = self._check("boundary.dual_growth", "bound")
        f = AggregateUtilityEvaluator(self.agents)
        u0 = -np.ones(self.agents.size)
        base = conjugate_point_from_dual(f, DualPoint(u0, 1.0, ()))
        previous = base
        for k in range(1, GROWTH_DECADES + 1):
            u = u0.copy()
            u[0] = -10.0 ** (-k)
            pair = conjugate_point_from_dual(f, DualPoint(u, 1.0, ()), previous.primal)
            growth = pair.g_value - base.g_value
            growth_check.bound(growth - k * math.log(10.0) / c, 0.0, math.inf, _case(k=k, g=pair.g_value))
            previous = pair


def run_suite(suite_name: str, config: SweepConfig, agents: AgentSet, tree: ScenarioTree,
              progress: bool = False) -> List[CheckReport]:
    """Run one named suite (or 'all') and return its reports"""
    return SuiteRunner(agents, tree, config, progress).run(suite_name)
