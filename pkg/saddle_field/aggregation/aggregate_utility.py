# saddle_field/aggregation/aggregate_utility.py
"""Weighted sup-convolution r(v, x) = max_{sum x^m = x} sum_m v^m u_m(x^m).

The maximizer is characterized by equal weighted marginal utilities
v^m u_m'(x_hat^m) = lambda, and every derivative of r is an explicit
function of lambda and the risk tolerances t_m(x_hat^m).
"""
import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from saddle_field.conjugacy.points import PrimalDerivatives, PrimalEvaluator, PrimalPoint
from saddle_field.exceptions import AllocationSolverError, DomainError
from saddle_field.logging_config import get_logger
from saddle_field.utilities import utility_core as uc
from saddle_field.utilities.utility_core import AgentSet

logger = get_logger(__name__)

MAX_ITERATIONS = 200


@dataclass(frozen=True)
class WeightVector:
    """Pareto weights v in (0, inf)^M"""

    v: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if v.ndim != 1 or v.size == 0:
            raise DomainError("weight vector must be a non-empty vector")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainError(f"Pareto weights must be positive and finite, got {v.tolist()}")
        object.__setattr__(self, "v", v)

    @classmethod
    def of(cls, v) -> "WeightVector":
        return v if isinstance(v, cls) else cls(v)

    def normalized(self) -> np.ndarray:
        """Point of the open simplex"""
        return self.v / self.v.sum()


@dataclass(frozen=True)
class AllocationResult:
    x_hat: np.ndarray
    lam: float
    tolerances: np.ndarray
    T_total: float
    iterations: int = 0


@dataclass(frozen=True)
class AggregateDerivatives:
    value: float
    dr_dx: float
    dr_dv: np.ndarray
    allocation: AllocationResult
    d2r_dx2: Optional[float] = None
    d2r_dvdx: Optional[np.ndarray] = None
    d2r_dv2: Optional[np.ndarray] = None
    A_matrix: Optional[np.ndarray] = None
    # dx_hat^m/dx and S[l, m] = v^l dx_hat^m/dv^l
    dxhat_dx: Optional[np.ndarray] = None
    dxhat_dv_scaled: Optional[np.ndarray] = None

    @property
    def has_second_order(self) -> bool:
        return self.d2r_dx2 is not None


def _check_size(agents: AgentSet, v: WeightVector):
    if v.v.size != agents.size:
        raise DomainError(f"expected {agents.size} Pareto weights, got {v.v.size}")


def solve_allocation(agents: AgentSet, v, x: float) -> AllocationResult:
    """Pareto allocation x_hat maximizing sum v^m u_m(x^m) subject to sum x^m = x"""
    v = WeightVector.of(v)
    _check_size(agents, v)
    if not math.isfinite(x):
        raise DomainError(f"cash amount must be finite, got {x}")

    if agents.size == 1:
        spec = agents.agents[0]
        tol = uc.risk_tolerance(spec, x)
        return AllocationResult(
            x_hat=np.array([float(x)]),
            lam=float(v.v[0] * uc.eval(spec, x, 1)),
            tolerances=np.array([tol]),
            T_total=tol,
        )

    log_v = np.log(v.v)

    def shares(s):
        return [uc.inverse_marginal(spec, math.exp(s - lv)) for spec, lv in zip(agents.agents, log_v)]

    # h(s) = sum_m I_m(e^s / v^m) - x is strictly decreasing in s = log(lambda)
    def excess(s):
        return math.fsum(shares(s)) - x

    split = x / agents.size
    s0 = float(np.mean([lv + math.log(uc.eval(spec, split, 1)) for spec, lv in zip(agents.agents, log_v)]))

    # doubling or halving lambda moves s by log 2
    step = math.log(2.0)
    lo, hi = s0, s0
    iterations = 0
    while excess(lo) < 0:
        lo -= step
        iterations += 1
        if iterations > MAX_ITERATIONS:
            raise AllocationSolverError(f"could not bracket lambda from below at v={v.v.tolist()}, x={x}")
    while excess(hi) > 0:
        hi += step
        iterations += 1
        if iterations > MAX_ITERATIONS:
            raise AllocationSolverError(f"could not bracket lambda from above at v={v.v.tolist()}, x={x}")

    if lo == hi:
        s = lo
    else:
        try:
            s, info = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                             maxiter=MAX_ITERATIONS, full_output=True, disp=False)
        except (ValueError, RuntimeError) as e:
            logger.error(f"Allocation root search failed: {type(e).__name__}: {e}", exc_info=True)
            raise AllocationSolverError(str(e)) from e
        if not info.converged:
            raise AllocationSolverError(
                f"allocation did not converge after {MAX_ITERATIONS} iterations: {info.flag}"
            )
        iterations += info.iterations

    # Newton polish: dh/ds = -sum_m t_m(x_hat^m)
    for _ in range(2):
        x_hat = shares(s)
        total = math.fsum(uc.risk_tolerance(spec, xm) for spec, xm in zip(agents.agents, x_hat))
        s += (math.fsum(x_hat) - x) / total

    x_hat = np.array(shares(s))
    # spread the last rounding residual proportionally to risk tolerance
    tolerances = np.array([uc.risk_tolerance(spec, xm) for spec, xm in zip(agents.agents, x_hat)])
    T_total = float(tolerances.sum())
    x_hat = x_hat + (x - math.fsum(x_hat)) * tolerances / T_total

    residual = abs(math.fsum(x_hat) - x)
    if residual > 1e-12 * max(1.0, abs(x)):
        raise AllocationSolverError(f"allocation residual {residual:.3e} too large at x={x}")

    logger.debug(f"Allocation solved in {iterations} iterations: lambda={math.exp(s):.6g}, x_hat={x_hat.tolist()}")
    return AllocationResult(x_hat=x_hat, lam=math.exp(s), tolerances=tolerances,
                            T_total=T_total, iterations=iterations)


def r_and_gradient(agents: AgentSet, v, x: float,
                   allocation: Optional[AllocationResult] = None) -> AggregateDerivatives:
    """Value r(v, x), dr/dx = lambda and dr/dv^m = u_m(x_hat^m)"""
    v = WeightVector.of(v)
    alloc = allocation or solve_allocation(agents, v, x)
    dr_dv = np.array([uc.eval(spec, xm, 0) for spec, xm in zip(agents.agents, alloc.x_hat)])
    return AggregateDerivatives(
        value=float(np.dot(v.v, dr_dv)),
        dr_dx=alloc.lam,
        dr_dv=dr_dv,
        allocation=alloc,
    )


def r_hessian(agents: AgentSet, v, x: float,
              first_order: Optional[AggregateDerivatives] = None) -> AggregateDerivatives:
    """Second derivatives of r from the risk tolerances at the Pareto allocation"""
    v = WeightVector.of(v)
    first = first_order or r_and_gradient(agents, v, x)
    alloc = first.allocation
    t = alloc.tolerances
    T = alloc.T_total
    lam = first.dr_dx
    share = t / T
    eye = np.eye(t.size)

    # v^l v^m d2r/dv^l dv^m = lambda t_l (delta_lm - t_m / T)
    scaled_vv = lam * t[:, None] * (eye - share[None, :])
    # v^l dx_hat^m / dv^l = t_m (delta_lm - t_l / T)
    sensitivity = t[None, :] * (eye - share[:, None])

    return replace(
        first,
        d2r_dx2=-lam / T,
        d2r_dvdx=lam * share / v.v,
        d2r_dv2=scaled_vv / np.outer(v.v, v.v),
        A_matrix=np.diag(t),
        dxhat_dx=share,
        dxhat_dv_scaled=sensitivity,
    )


def exponential_closed_form(agents: AgentSet, v, x: float) -> AllocationResult:
    """Closed-form allocation for agents that are all exponential"""
    if not agents.is_pure_exponential:
        raise DomainError("closed form requires exponential agents only")
    v = WeightVector.of(v)
    t = agents.tolerances_at(0.0)
    T = float(t.sum())
    lam = math.exp((float(np.dot(t, np.log(v.v))) - x) / T)
    x_hat = t * np.log(v.v / lam)
    return AllocationResult(x_hat=x_hat, lam=lam, tolerances=t, T_total=T)


def exponential_value(agents: AgentSet, v, x: float) -> float:
    """r(v, x) = -T exp(-x/T) prod_m (v^m)^(t_m/T) for exponential agents"""
    if not agents.is_pure_exponential:
        raise DomainError("closed form requires exponential agents only")
    v = WeightVector.of(v)
    t = agents.tolerances_at(0.0)
    T = float(t.sum())
    return -T * math.exp(-x / T + float(np.dot(t, np.log(v.v))) / T)


def brute_force_r(agents: AgentSet, v, x: float, grid_half_width: float = 4.0,
                  grid_points: int = 401) -> float:
    """Grid maximum of sum v^m u_m(x^m) over allocations summing to x.

    Offsets d_1..d_{M-1} range over a uniform grid in [-w, w] around the equal
    split; the last agent takes the remainder. Never exceeds r(v, x).
    """
    v = WeightVector.of(v)
    _check_size(agents, v)
    if grid_points < 3:
        raise DomainError("brute force needs at least 3 grid points")
    m = agents.size
    if m == 1:
        return float(v.v[0] * uc.eval(agents.agents[0], x, 0))

    offsets = np.linspace(-grid_half_width, grid_half_width, grid_points)
    split = x / m
    grids = np.meshgrid(*itertools.repeat(offsets, m - 1), indexing="ij")
    shares = [split + g for g in grids]
    shares.append(x - sum(shares))
    total = np.zeros_like(shares[0])
    for weight, spec, xs in zip(v.v, agents.agents, shares):
        total = total + weight * uc.eval_array(spec, xs)
    return float(np.max(total))


def boundary_divergence_scan(agents: AgentSet, x: float, threshold: float = -1e6,
                              max_exponent: int = 60) -> dict:
    """Track sum_m dr/dv^m along w_n = (1/n, 1 - 1/n, ...) as n = 10^k grows"""
    if agents.size < 2:
        raise DomainError("boundary scan needs at least two agents")
    trail = []
    for k in range(1, max_exponent + 1):
        n = 10.0 ** k
        rest = (1.0 - 1.0 / n) / (agents.size - 1)
        w = np.array([1.0 / n] + [rest] * (agents.size - 1))
        first = r_and_gradient(agents, w, x)
        total = float(first.dr_dv.sum())
        trail.append((n, total))
        if total < threshold:
            logger.info(f"✅ Boundary divergence reached {total:.3e} at n=1e{k}")
            return {"reached": True, "n": n, "sum_dr_dv": total, "trail": trail}
    logger.warning(f"Boundary scan stopped at n=1e{max_exponent} with sum {trail[-1][1]:.3e}")
    return {"reached": False, "n": trail[-1][0], "sum_dr_dv": trail[-1][1], "trail": trail}


class AggregateUtilityEvaluator(PrimalEvaluator):
    """f(v, x, q) = r(v, x + <q, psi>) for a fixed exposure vector psi (J may be 0)"""

    def __init__(self, agents: AgentSet, psi: Sequence[float] = ()):
        self.agents = agents
        self.psi = np.asarray(psi, dtype=float).reshape(-1)

    @property
    def n_agents(self) -> int:
        return self.agents.size

    @property
    def n_assets(self) -> int:
        return self.psi.size

    def tolerance_proxy(self) -> np.ndarray:
        return self.agents.tolerances_at(0.0)

    def derivatives(self, point: PrimalPoint) -> PrimalDerivatives:
        return terminal_derivatives(self.agents, point, sigma0=0.0, psi=self.psi)


def terminal_derivatives(agents: AgentSet, point: PrimalPoint, sigma0: float,
                         psi: np.ndarray) -> PrimalDerivatives:
    """Derivatives of r(v, sigma0 + x + <q, psi>) in (v, x, q) by the chain rule"""
    if point.q.size != psi.size:
        raise DomainError(f"expected {psi.size} quantities q, got {point.q.size}")
    total = sigma0 + point.x + float(np.dot(point.q, psi))
    d = r_hessian(agents, point.v, total)
    return PrimalDerivatives(
        value=d.value,
        d_v=d.dr_dv,
        d_x=d.dr_dx,
        d_q=d.dr_dx * psi,
        d_vv=d.d2r_dv2,
        d_vx=d.d2r_dvdx,
        d_xx=d.d2r_dx2,
        d_vq=np.outer(d.d2r_dvdx, psi),
        d_xq=d.d2r_dx2 * psi,
        d_qq=d.d2r_dx2 * np.outer(psi, psi),
    )
