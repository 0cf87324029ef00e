# saddle_field/utilities/utility_core.py
"""Exponential and exponential-mixture utilities on the real line.

Normalization:
    Exponential(rate a):            u(x) = -exp(-a x) / a
    ExponentialMixture(w, a):       u(x) = -sum_k w_k exp(-a_k x) / a_k

Both are negative, strictly increasing, strictly concave, vanish at +infinity
and have absolute risk aversion -u''/u' inside [min a, max a].
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from saddle_field.exceptions import ConfigError, DomainError, UtilityRangeError
from saddle_field.logging_config import get_logger

logger = get_logger(__name__)

EXPONENTIAL = "exponential"
MIXTURE = "mixture"

# exp(700) is still finite in double precision
_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class UtilitySpec:
    """One agent's utility: a tagged exponential or exponential mixture"""

    kind: str
    weights: Tuple[float, ...]
    rates: Tuple[float, ...]
    c_bound: float = field(init=False)

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, MIXTURE):
            raise ConfigError(f"unknown utility kind '{self.kind}'")
        if len(self.weights) == 0 or len(self.weights) != len(self.rates):
            raise ConfigError("utility needs equally many (>= 1) weights and rates")
        if self.kind == EXPONENTIAL and len(self.rates) != 1:
            raise ConfigError("exponential utility takes exactly one rate")
        if any(not (w > 0 and math.isfinite(w)) for w in self.weights):
            raise ConfigError("utility weights must be positive and finite")
        if any(not (a > 0 and math.isfinite(a)) for a in self.rates):
            raise ConfigError("utility rates must be positive and finite")
        # a(x) is a convex combination of the rates
        object.__setattr__(self, "c_bound", max(max(self.rates), 1.0 / min(self.rates)))

    @classmethod
    def exponential(cls, rate: float) -> "UtilitySpec":
        return cls(EXPONENTIAL, (1.0,), (float(rate),))

    @classmethod
    def mixture(cls, weights: Sequence[float], rates: Sequence[float]) -> "UtilitySpec":
        return cls(MIXTURE, tuple(float(w) for w in weights), tuple(float(a) for a in rates))

    @property
    def lower_limit(self) -> float:
        """Smallest x at which the utility is still evaluated"""
        return -_EXP_LIMIT / max(self.rates)

    def to_dict(self) -> Dict:
        if self.kind == EXPONENTIAL:
            return {"kind": EXPONENTIAL, "rate": self.rates[0]}
        return {"kind": MIXTURE, "weights": list(self.weights), "rates": list(self.rates)}


@dataclass(frozen=True)
class AgentSet:
    """Ordered agents u_1, ..., u_M with the common curvature constant c"""

    agents: Tuple[UtilitySpec, ...]

    def __post_init__(self):
        if len(self.agents) < 1:
            raise ConfigError("at least one agent is required")

    @property
    def size(self) -> int:
        return len(self.agents)

    @property
    def c_global(self) -> float:
        return max(spec.c_bound for spec in self.agents)

    @property
    def is_pure_exponential(self) -> bool:
        return all(spec.kind == EXPONENTIAL for spec in self.agents)

    def tolerances_at(self, x: float) -> np.ndarray:
        return np.array([risk_tolerance(spec, x) for spec in self.agents])

    def to_list(self) -> List[Dict]:
        return [spec.to_dict() for spec in self.agents]


def _check_range(u: UtilitySpec, x: float):
    if not math.isfinite(x):
        raise DomainError(f"utility argument must be finite, got {x}")
    if x < u.lower_limit:
        raise UtilityRangeError(
            f"utility argument {x:.6g} is below the representable range {u.lower_limit:.6g}"
        )


def eval(u: UtilitySpec, x: float, order: int = 0) -> float:
    """Return u(x), u'(x) or u''(x) for order 0, 1, 2"""
    _check_range(u, x)
    if order == 0:
        return -math.fsum(w * math.exp(-a * x) / a for w, a in zip(u.weights, u.rates))
    if order == 1:
        return math.fsum(w * math.exp(-a * x) for w, a in zip(u.weights, u.rates))
    if order == 2:
        return -math.fsum(w * a * math.exp(-a * x) for w, a in zip(u.weights, u.rates))
    raise DomainError(f"derivative order must be 0, 1 or 2, got {order}")


def eval_array(u: UtilitySpec, xs: np.ndarray) -> np.ndarray:
    """Vectorised u(x); arguments below the representable range give -inf"""
    xs = np.asarray(xs, dtype=float)
    with np.errstate(over="ignore"):
        values = np.zeros_like(xs)
        for w, a in zip(u.weights, u.rates):
            values -= w * np.exp(-a * xs) / a
    return np.where(xs < u.lower_limit, -np.inf, values)


def risk_tolerance(u: UtilitySpec, x: float) -> float:
    """t(x) = -u'(x) / u''(x), the reciprocal of absolute risk aversion"""
    if u.kind == EXPONENTIAL:
        return 1.0 / u.rates[0]
    return -eval(u, x, 1) / eval(u, x, 2)


def risk_aversion(u: UtilitySpec, x: float) -> float:
    return 1.0 / risk_tolerance(u, x)


def inverse_marginal(u: UtilitySpec, y: float) -> float:
    """Return x with u'(x) = y"""
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"marginal utility must be positive and finite, got {y}")

    if u.kind == EXPONENTIAL:
        x = -math.log(y) / u.rates[0]
        _check_range(u, x)
        return x

    # u' is strictly decreasing; bracket geometrically around 0
    def excess(x):
        return math.log(eval(u, x, 1)) - math.log(y)

    lower, upper = u.lower_limit, _EXP_LIMIT / min(u.rates)
    lo, hi = max(-1.0, lower), min(1.0, upper)
    while excess(lo) < 0:
        if lo <= lower:
            raise UtilityRangeError(f"u'(x) = {y:.6g} needs x below the representable range")
        lo = max(2.0 * lo, lower)
    while excess(hi) > 0:
        if hi >= upper:
            raise DomainError(f"marginal utility {y:.6g} is too small to invert")
        hi = min(2.0 * hi, upper)

    if excess(lo) == 0:
        return lo
    if excess(hi) == 0:
        return hi
    x = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # Newton polish on log u': d/dx log u'(x) = -1/t(x), kept inside [lower, upper]
    for _ in range(2):
        step = excess(x) * risk_tolerance(u, x)
        if not lower <= x + step <= upper:
            break
        x += step
    return x
