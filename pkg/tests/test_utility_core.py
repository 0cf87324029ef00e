import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddle_field.exceptions import ConfigError, DomainError, UtilityRangeError
from saddle_field.utilities import utility_core as uc
from saddle_field.utilities.utility_core import AgentSet, UtilitySpec

EXP1 = UtilitySpec.exponential(1.0)
EXP2 = UtilitySpec.exponential(2.0)
MIX = UtilitySpec.mixture([1.0, 1.0], [1.0, 2.0])
WIDE_MIX = UtilitySpec.mixture([0.3, 2.0, 1.0], [0.5, 1.5, 3.0])


class TestEval:
    def test_exponential_values(self):
        assert uc.eval(EXP1, 0.0) == pytest.approx(-1.0)
        assert uc.eval(EXP1, 0.0, 1) == pytest.approx(1.0)
        assert uc.eval(EXP1, 0.0, 2) == pytest.approx(-1.0)
        assert uc.eval(EXP2, 0.0, 1) == pytest.approx(1.0)
        assert uc.eval(EXP2, 0.0) == pytest.approx(-0.5)

    def test_mixture_second_derivative(self):
        assert uc.eval(MIX, 0.0, 2) == pytest.approx(-3.0)
        assert uc.eval(MIX, 0.0, 1) == pytest.approx(2.0)

    def test_bad_order(self):
        with pytest.raises(DomainError):
            uc.eval(EXP1, 0.0, 3)

    def test_below_range(self):
        with pytest.raises(UtilityRangeError):
            uc.eval(EXP1, -701.0)
        # the limit scales with the largest rate
        with pytest.raises(UtilityRangeError):
            uc.eval(EXP2, -351.0)
        assert math.isfinite(uc.eval(EXP1, -699.0))

    def test_non_finite_argument(self):
        with pytest.raises(DomainError):
            uc.eval(EXP1, math.nan)

    def test_eval_array_marks_out_of_range(self):
        values = uc.eval_array(EXP1, np.array([0.0, -800.0]))
        assert values[0] == pytest.approx(-1.0)
        assert values[1] == -np.inf


class TestRiskTolerance:
    def test_exponential(self):
        assert uc.risk_tolerance(EXP1, 7.0) == pytest.approx(1.0)
        assert uc.risk_tolerance(EXP2, -3.0) == pytest.approx(0.5)

    def test_mixture(self):
        assert uc.risk_tolerance(MIX, 0.0) == pytest.approx(2.0 / 3.0)
        assert uc.risk_aversion(MIX, 0.0) == pytest.approx(1.5)

    @given(st.floats(min_value=-30.0, max_value=30.0))
    def test_aversion_between_extreme_rates(self, x):
        aversion = uc.risk_aversion(WIDE_MIX, x)
        assert 0.5 - 1e-12 <= aversion <= 3.0 + 1e-12


class TestInverseMarginal:
    def test_exponential(self):
        assert uc.inverse_marginal(EXP1, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert uc.inverse_marginal(EXP2, math.exp(-2.0)) == pytest.approx(1.0)

    def test_mixture(self):
        assert uc.inverse_marginal(MIX, 2.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("y", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_non_positive(self, y):
        with pytest.raises(DomainError):
            uc.inverse_marginal(MIX, y)

    def test_huge_marginal_out_of_range(self):
        with pytest.raises(UtilityRangeError):
            uc.inverse_marginal(EXP1, 1e308)

    @pytest.mark.parametrize("x", [690.0, 350.0, -340.0, -349.5])
    def test_mixture_near_range_limits(self, x):
        # limits for rates (1, 2): [-350, 700]
        y = uc.eval(MIX, x, 1)
        assert uc.inverse_marginal(MIX, y) == pytest.approx(x, rel=1e-12)

    def test_mixture_beyond_range_limits(self):
        with pytest.raises(UtilityRangeError):
            uc.inverse_marginal(MIX, uc.eval(MIX, -349.0, 1) * math.exp(4.0))
        with pytest.raises(DomainError) as excinfo:
            uc.inverse_marginal(MIX, 1e-305)
        assert excinfo.type is DomainError

    @given(st.floats(min_value=-40.0, max_value=40.0))
    @settings(max_examples=200)
    def test_inverts_marginal(self, x):
        y = uc.eval(WIDE_MIX, x, 1)
        assert uc.inverse_marginal(WIDE_MIX, y) == pytest.approx(x, abs=1e-9)


class TestSpecs:
    def test_c_bound(self):
        assert EXP1.c_bound == 1.0
        assert UtilitySpec.exponential(0.25).c_bound == 4.0
        assert UtilitySpec.mixture([1, 1], [0.5, 2.0]).c_bound == 2.0
        assert WIDE_MIX.c_bound == 3.0

    def test_agent_set(self):
        agents = AgentSet((EXP1, EXP2, MIX))
        assert agents.size == 3
        assert agents.c_global == 2.0
        assert not agents.is_pure_exponential
        assert AgentSet((EXP1, EXP2)).is_pure_exponential
        np.testing.assert_allclose(agents.tolerances_at(0.0), [1.0, 0.5, 2.0 / 3.0])

    @pytest.mark.parametrize("build", [
        lambda: UtilitySpec.exponential(0.0),
        lambda: UtilitySpec.exponential(-1.0),
        lambda: UtilitySpec.mixture([1.0], [1.0, 2.0]),
        lambda: UtilitySpec.mixture([], []),
        lambda: UtilitySpec.mixture([1.0, -1.0], [1.0, 2.0]),
        lambda: UtilitySpec("power", (1.0,), (1.0,)),
        lambda: AgentSet(()),
    ])
    def test_invalid(self, build):
        with pytest.raises(ConfigError):
            build()

    def test_to_dict(self):
        assert EXP2.to_dict() == {"kind": "exponential", "rate": 2.0}
        assert MIX.to_dict() == {"kind": "mixture", "weights": [1.0, 1.0], "rates": [1.0, 2.0]}
