# saddle_field/conjugacy/saddle_transform.py
"""Saddle conjugate g(u, y, q) = sup_v inf_x [<v, u> + x y - f(v, x, q)].

g is never tabulated: it is evaluated through the conjugate point map
(u, y) <-> (v, x) given by u = df/dv, y = df/dx, and the identity g = x y.
Second derivatives of g come from those of f through B = A^-1,
E = -A^-1 C and H = C^T A^-1 C + D.
"""
import math
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from saddle_field.conjugacy.points import (
    DualPoint,
    PrimalDerivatives,
    PrimalEvaluator,
    PrimalPoint,
    SaddlePair,
    SecondOrderBundle,
)
from saddle_field.exceptions import DomainError, PositiveDefiniteError, SaddlePointSolverError
from saddle_field.logging_config import get_logger

logger = get_logger(__name__)

MAX_NEWTON_ITERATIONS = 100
MAX_HALVINGS = 40
RESIDUAL_TOLERANCE = 1e-12
ACCEPT_TOLERANCE = 1e-10


def a_matrix(d: PrimalDerivatives, v: np.ndarray) -> np.ndarray:
    """A^{lm} = v^l v^m / f_x (f_{v^l v^m} - f_{v^l x} f_{v^m x} / f_xx)"""
    inner = d.d_vv - np.outer(d.d_vx, d.d_vx) / d.d_xx
    return np.outer(v, v) * inner / d.d_x


def c_matrix(d: PrimalDerivatives, v: np.ndarray) -> np.ndarray:
    """C^{mj} = v^m / f_x (f_{v^m q^j} - f_{v^m x} f_{x q^j} / f_xx)"""
    inner = d.d_vq - np.outer(d.d_vx, d.d_xq) / d.d_xx
    return v[:, None] * inner / d.d_x


def d_matrix(d: PrimalDerivatives) -> np.ndarray:
    """D^{ij} = 1 / f_x (-f_{q^i q^j} + f_{x q^i} f_{x q^j} / f_xx)"""
    return (-d.d_qq + np.outer(d.d_xq, d.d_xq) / d.d_xx) / d.d_x


def conjugate_point_from_primal(f: PrimalEvaluator, a: PrimalPoint) -> SaddlePair:
    """u = df/dv(a), y = df/dx(a); no iteration"""
    d = f.derivatives(a)
    if d.d_x <= 0 or np.any(d.d_v >= 0):
        raise DomainError(
            f"f violates the sign conditions at v={a.v.tolist()}, x={a.x}: f_x={d.d_x}, f_v={d.d_v.tolist()}"
        )
    dual = DualPoint(d.d_v, d.d_x, a.q)
    return SaddlePair(primal=a, dual=dual, f_value=d.value, g_value=a.x * d.d_x)


def _initial_guess(f: PrimalEvaluator, b: DualPoint) -> PrimalPoint:
    # exact when every agent is exponential: v^m = y t_m / (-u^m), x = sum t_m log(t_m / (-u^m))
    t = f.tolerance_proxy()
    v0 = b.y * t / (-b.u)
    x0 = float(np.sum(t * np.log(t / (-b.u))))
    return PrimalPoint(v0, x0, b.q)


def _log_residual(d: PrimalDerivatives, b: DualPoint) -> np.ndarray:
    if d.d_x <= 0 or np.any(d.d_v >= 0):
        return np.full(d.n_agents + 1, np.inf)
    return np.concatenate([np.log(d.d_v / b.u), [math.log(d.d_x / b.y)]])


def _log_jacobian(d: PrimalDerivatives, v: np.ndarray) -> np.ndarray:
    """Jacobian of the log residuals in the variables (log v, x)"""
    m = d.n_agents
    jac = np.empty((m + 1, m + 1))
    jac[:m, :m] = d.d_vv * v[None, :] / d.d_v[:, None]
    jac[:m, m] = d.d_vx / d.d_v
    jac[m, :m] = d.d_vx * v / d.d_x
    jac[m, m] = d.d_xx / d.d_x
    return jac


def conjugate_point_from_dual(f: PrimalEvaluator, b: DualPoint,
                              guess: Optional[PrimalPoint] = None) -> SaddlePair:
    """Solve df/dv(v, x, q) = u and df/dx(v, x, q) = y for (v, x).

    Damped Newton in (log v, x) on the residuals log(f_v / u), log(f_x / y),
    halving the step until the residual sup-norm decreases.
    """
    if b.u.size != f.n_agents:
        raise DomainError(f"expected {f.n_agents} dual utilities, got {b.u.size}")
    if b.q.size != f.n_assets:
        raise DomainError(f"expected {f.n_assets} quantities q, got {b.q.size}")

    point = guess.replace(q=b.q) if guess is not None else _initial_guess(f, b)
    m = f.n_agents
    d = f.derivatives(point)
    residual = _log_residual(d, b)
    norm = float(np.max(np.abs(residual)))

    iteration = 0
    while iteration < MAX_NEWTON_ITERATIONS and norm > RESIDUAL_TOLERANCE:
        iteration += 1
        try:
            step = np.linalg.solve(_log_jacobian(d, point.v), -residual)
        except np.linalg.LinAlgError as e:
            logger.error(f"Singular saddle Jacobian at v={point.v.tolist()}, x={point.x}", exc_info=True)
            raise SaddlePointSolverError(f"singular Jacobian (A(f) lost full rank): {e}") from e

        scale = 1.0
        for _ in range(MAX_HALVINGS):
            trial = PrimalPoint(point.v * np.exp(scale * step[:m]), point.x + scale * step[m], b.q)
            try:
                trial_d = f.derivatives(trial)
                trial_residual = _log_residual(trial_d, b)
                trial_norm = float(np.max(np.abs(trial_residual)))
            except DomainError:
                trial_norm = np.inf
            if trial_norm < norm:
                break
            scale *= 0.5
        else:
            logger.warning(f"Newton damping exhausted at iteration {iteration} with residual {norm:.3e}")
            break

        point, d, residual, norm = trial, trial_d, trial_residual, trial_norm
        logger.debug(f"Newton iteration {iteration}: residual={norm:.3e}, step scale={scale}")

    if not norm <= ACCEPT_TOLERANCE:
        raise SaddlePointSolverError(
            f"saddle solve did not converge after {iteration} iterations (residual {norm:.3e}) "
            f"at u={b.u.tolist()}, y={b.y}, q={b.q.tolist()}"
        )

    # polish: one full step past the stopping tolerance, kept only if it helps
    if norm > 0:
        try:
            step = np.linalg.solve(_log_jacobian(d, point.v), -residual)
            trial = PrimalPoint(point.v * np.exp(step[:m]), point.x + step[m], b.q)
            trial_d = f.derivatives(trial)
            trial_norm = float(np.max(np.abs(_log_residual(trial_d, b))))
            if trial_norm < norm:
                point, d, norm = trial, trial_d, trial_norm
        except (np.linalg.LinAlgError, DomainError):
            pass

    logger.debug(f"Saddle point found in {iteration} iterations: v={point.v.tolist()}, x={point.x}")
    return SaddlePair(primal=point, dual=b, f_value=d.value, g_value=point.x * b.y,
                      residual=norm, iterations=iteration)


def dual_value(f: PrimalEvaluator, b: DualPoint, guess: Optional[PrimalPoint] = None) -> float:
    """g(b) through the saddle solve"""
    return conjugate_point_from_dual(f, b, guess).g_value


def second_order_bundle(f: PrimalEvaluator, pair: SaddlePair) -> SecondOrderBundle:
    """Matrices A, C, D of f at pair.primal and B, E, H of g at pair.dual"""
    d = f.derivatives(pair.primal)
    v = pair.primal.v
    A = a_matrix(d, v)
    C = c_matrix(d, v)
    D = d_matrix(d)
    A = 0.5 * (A + A.T)

    try:
        factor = cho_factor(A)
    except LinAlgError as e:
        logger.error(f"A(f) is not positive definite at v={v.tolist()}, x={pair.primal.x}", exc_info=True)
        raise PositiveDefiniteError(f"A(f) is not positive definite: {e}") from e

    m = v.size
    B = cho_solve(factor, np.eye(m))
    B = 0.5 * (B + B.T)
    A_inv_C = cho_solve(factor, C) if C.size else np.zeros_like(C)
    E = -A_inv_C
    H = C.T @ A_inv_C + D
    H = 0.5 * (H + H.T)
    return SecondOrderBundle(A_mat=A, C_mat=C, D_mat=D, B_mat=B, E_mat=E, H_mat=H)


def envelope_check(f: PrimalEvaluator, pair: SaddlePair, step: float = 1e-4) -> np.ndarray:
    """|dg/dq^j + df/dq^j| with dg/dq from central differences of re-solved saddle points"""
    if step <= 0:
        raise DomainError("finite-difference step must be positive")
    J = f.n_assets
    if J == 0:
        return np.zeros(0)
    d = f.derivatives(pair.primal)
    deviations = np.empty(J)
    for j in range(J):
        e = np.zeros(J)
        e[j] = step
        g_plus = dual_value(f, pair.dual.replace(q=pair.dual.q + e), pair.primal)
        g_minus = dual_value(f, pair.dual.replace(q=pair.dual.q - e), pair.primal)
        deviations[j] = abs((g_plus - g_minus) / (2 * step) + d.d_q[j])
    logger.debug(f"Envelope deviations: {deviations.tolist()}")
    return deviations


def minimax_grid(f: PrimalEvaluator, pair: SaddlePair, half_width: float = 0.05,
                 points: int = 21) -> Tuple[float, float]:
    """Grid sup-inf and inf-sup of <v, u> + x y - f(v, x, q) around the saddle point.

    The grid is the slice v = v* exp(s e_1), x = x* + k h with s, k h in
    [-half_width, half_width]; the saddle point sits at its centre.
    """
    a, b = pair.primal, pair.dual
    offsets = np.linspace(-half_width, half_width, points)
    direction = np.zeros(a.v.size)
    direction[0] = 1.0
    table = np.empty((points, points))
    for i, s in enumerate(offsets):
        v = a.v * np.exp(s * direction)
        for k, h in enumerate(offsets):
            x = a.x + h
            table[i, k] = float(np.dot(v, b.u)) + x * b.y - f.value(PrimalPoint(v, x, a.q))
    sup_inf = float(np.max(np.min(table, axis=1)))
    inf_sup = float(np.min(np.max(table, axis=0)))
    return sup_inf, inf_sup
