import math

import numpy as np
import pytest

from saddle_field.aggregation.aggregate_utility import AggregateUtilityEvaluator
from saddle_field.conjugacy.points import (
    DualPoint,
    PrimalDerivatives,
    PrimalEvaluator,
    PrimalPoint,
)
from saddle_field.conjugacy.saddle_transform import (
    conjugate_point_from_dual,
    conjugate_point_from_primal,
    dual_value,
    envelope_check,
    minimax_grid,
    second_order_bundle,
)
from saddle_field.exceptions import DomainError, PositiveDefiniteError, SaddlePointSolverError
from saddle_field.fields.scenario_field import NodeFieldEvaluator
from saddle_field.fields.scenario_tree import NodeRef


class FrozenEvaluator(PrimalEvaluator):
    """Returns the same derivative bundle everywhere"""

    def __init__(self, derivatives: PrimalDerivatives):
        self.fixed = derivatives

    @property
    def n_agents(self) -> int:
        return self.fixed.n_agents

    @property
    def n_assets(self) -> int:
        return self.fixed.n_assets

    def derivatives(self, point):
        return self.fixed


def frozen(d_v, d_x, d_vv, d_vx, d_xx):
    m = len(d_v)
    return FrozenEvaluator(PrimalDerivatives(
        value=-1.0, d_v=np.array(d_v, dtype=float), d_x=d_x, d_q=np.zeros(0),
        d_vv=np.array(d_vv, dtype=float), d_vx=np.array(d_vx, dtype=float), d_xx=d_xx,
        d_vq=np.zeros((m, 0)), d_xq=np.zeros(0), d_qq=np.zeros((0, 0)),
    ))


class TestConjugatePoints:
    def test_single_agent(self, single_agent):
        pair = conjugate_point_from_dual(AggregateUtilityEvaluator(single_agent), DualPoint([-1.0], 1.0, ()))
        np.testing.assert_allclose(pair.primal.v, [1.0])
        assert pair.primal.x == pytest.approx(0.0, abs=1e-12)
        assert pair.g_value == pytest.approx(0.0, abs=1e-12)

    def test_exponential_pair(self, exp_agents):
        f = AggregateUtilityEvaluator(exp_agents)
        pair = conjugate_point_from_dual(f, DualPoint([-1.0, -0.5], 1.0, ()))
        np.testing.assert_allclose(pair.primal.v, [1.0, 1.0], rtol=1e-12)
        assert pair.primal.x == pytest.approx(0.0, abs=1e-12)
        assert pair.f_value == pytest.approx(-1.5)
        assert pair.residual <= 1e-10

    def test_exponential_closed_form(self, exp_agents):
        f = AggregateUtilityEvaluator(exp_agents)
        u = np.array([-0.3, -2.0])
        t = np.array([1.0, 0.5])
        assert dual_value(f, DualPoint(u, 1.0, ())) == pytest.approx(float(np.sum(t * np.log(t / -u))), rel=1e-12)

    def test_from_primal(self, exp_agents):
        pair = conjugate_point_from_primal(AggregateUtilityEvaluator(exp_agents), PrimalPoint([1.0, math.e], 0.0, ()))
        assert pair.dual.y == pytest.approx(math.exp(1.0 / 3.0))
        np.testing.assert_allclose(pair.dual.u, [-math.exp(1.0 / 3.0), -0.5 * math.exp(-2.0 / 3.0)])
        # f = <u, v> and g = x y
        assert pair.f_value == pytest.approx(float(np.dot(pair.dual.u, [1.0, math.e])))
        assert pair.g_value == pytest.approx(0.0, abs=1e-15)

    def test_round_trip_mixture(self, mixed_agents):
        f = AggregateUtilityEvaluator(mixed_agents)
        a = PrimalPoint([0.5, 2.0], 1.5, ())
        back = conjugate_point_from_dual(f, conjugate_point_from_primal(f, a).dual)
        np.testing.assert_allclose(back.primal.v, a.v, rtol=1e-9)
        assert back.primal.x == pytest.approx(a.x, rel=1e-9)

    def test_homogeneous_in_y(self, mixed_agents):
        f = AggregateUtilityEvaluator(mixed_agents)
        base = conjugate_point_from_dual(f, DualPoint([-1.2, -0.7], 1.0, ()))
        scaled = conjugate_point_from_dual(f, DualPoint([-1.2, -0.7], 3.0, ()))
        np.testing.assert_allclose(scaled.primal.v, 3.0 * base.primal.v, rtol=1e-9)
        assert scaled.primal.x == pytest.approx(base.primal.x, rel=1e-9, abs=1e-12)
        assert scaled.g_value == pytest.approx(3.0 * base.g_value, rel=1e-9, abs=1e-12)

    def test_dual_point_domain(self):
        with pytest.raises(DomainError):
            DualPoint([-1.0, 0.0], 1.0, ())
        with pytest.raises(DomainError):
            DualPoint([-1.0], 0.0, ())

    def test_size_mismatch(self, exp_agents):
        with pytest.raises(DomainError):
            conjugate_point_from_dual(AggregateUtilityEvaluator(exp_agents), DualPoint([-1.0], 1.0, ()))

    def test_sign_violation(self):
        f = frozen([1.0], 1.0, [[0.0]], [0.0], -1.0)
        with pytest.raises(DomainError):
            conjugate_point_from_primal(f, PrimalPoint([1.0], 0.0, ()))

    def test_singular_jacobian(self):
        f = frozen([-1.0], 1.0, [[0.0]], [0.0], 0.0)
        with pytest.raises(SaddlePointSolverError):
            conjugate_point_from_dual(f, DualPoint([-2.0], 1.0, ()))


class TestSecondOrder:
    def test_exponential_bundle(self, exp_agents):
        f = AggregateUtilityEvaluator(exp_agents)
        bundle = second_order_bundle(f, conjugate_point_from_primal(f, PrimalPoint([1.0, 1.0], 0.0, ())))
        np.testing.assert_allclose(bundle.A_mat, np.diag([1.0, 0.5]), atol=1e-12)
        np.testing.assert_allclose(bundle.B_mat, np.diag([1.0, 2.0]), atol=1e-12)
        assert bundle.C_mat.shape == (2, 0)
        assert bundle.E_mat.shape == (2, 0)
        assert bundle.H_mat.shape == (0, 0)
        assert bundle.inverse_residual() < 1e-12

    def test_exposure_blocks(self, exp_agents):
        # f = r(v, x + q psi) makes q a pure cash shift, so g is affine in q
        f = AggregateUtilityEvaluator(exp_agents, psi=[2.0])
        pair = conjugate_point_from_primal(f, PrimalPoint([0.6, 1.9], 0.3, [0.1]))
        bundle = second_order_bundle(f, pair)
        np.testing.assert_allclose(bundle.C_mat, np.zeros((2, 1)), atol=1e-10)
        np.testing.assert_allclose(bundle.E_mat, np.zeros((2, 1)), atol=1e-10)
        np.testing.assert_allclose(bundle.H_mat, [[0.0]], atol=1e-10)

    def test_not_positive_definite(self):
        f = frozen([-1.0, -1.0], 1.0, -np.eye(2), [0.0, 0.0], -1.0)
        pair = conjugate_point_from_primal(f, PrimalPoint([1.0, 1.0], 0.0, ()))
        with pytest.raises(PositiveDefiniteError):
            second_order_bundle(f, pair)


class TestSaddleProperty:
    def test_minimax_grid(self, mixed_agents):
        f = AggregateUtilityEvaluator(mixed_agents)
        pair = conjugate_point_from_primal(f, PrimalPoint([0.9, 1.4], 2.0, ()))
        sup_inf, inf_sup = minimax_grid(f, pair, half_width=0.05, points=21)
        assert sup_inf == pytest.approx(pair.g_value, rel=1e-9)
        assert inf_sup == pytest.approx(pair.g_value, rel=1e-9)

    def test_envelope(self, mixed_agents):
        f = AggregateUtilityEvaluator(mixed_agents, psi=[1.0])
        pair = conjugate_point_from_primal(f, PrimalPoint([1.2, 0.8], 0.5, [0.25]))
        deviations = envelope_check(f, pair)
        assert deviations.shape == (1,)
        assert deviations[0] < 1e-6

    def test_envelope_on_two_leaf_tree(self, exp_agents, two_leaf_tree):
        f = NodeFieldEvaluator(two_leaf_tree, exp_agents)
        pair = conjugate_point_from_primal(f, PrimalPoint([0.4, 0.6], 0.2, [0.5]))
        deviations = envelope_check(f, pair, step=1e-4)
        assert deviations.shape == (1,)
        assert deviations[0] <= 1e-5

    def test_envelope_without_assets(self, exp_agents):
        f = AggregateUtilityEvaluator(exp_agents)
        pair = conjugate_point_from_primal(f, PrimalPoint([1.0, 1.0], 0.0, ()))
        assert envelope_check(f, pair).size == 0


class TestTreeBackedConjugates:
    @pytest.mark.parametrize("node", [NodeRef(0, 0), NodeRef(1, 1), NodeRef(2, 5)])
    def test_three_agents_three_stocks(self, three_agents, ternary_tree, node):
        f = NodeFieldEvaluator(ternary_tree, three_agents, node)
        a = PrimalPoint([0.8, 1.5, 0.4], -0.3, [0.25, -0.5, 0.4])
        pair = conjugate_point_from_primal(f, a)
        back = conjugate_point_from_dual(f, pair.dual)
        np.testing.assert_allclose(back.primal.as_vector(), a.as_vector(), atol=1e-8)
        assert back.g_value == pytest.approx(a.x * pair.dual.y, abs=1e-9)

        bundle = second_order_bundle(f, back)
        assert bundle.C_mat.shape == (3, 3)
        assert bundle.inverse_residual() <= 1e-7
        np.testing.assert_allclose(bundle.E_mat, -np.linalg.solve(bundle.A_mat, bundle.C_mat), atol=1e-10)
        assert np.all(envelope_check(f, back, step=1e-4) <= 1e-5)

    def test_minimax_grid_on_tree(self, three_agents, ternary_tree):
        f = NodeFieldEvaluator(ternary_tree, three_agents)
        pair = conjugate_point_from_primal(f, PrimalPoint([1.0, 0.5, 2.0], 0.7, [0.1, 0.1, -0.2]))
        sup_inf, inf_sup = minimax_grid(f, pair, half_width=0.05, points=21)
        assert sup_inf == pytest.approx(pair.g_value, rel=1e-6)
        assert inf_sup == pytest.approx(pair.g_value, rel=1e-6)
