# saddle_field/verification/finite_difference.py
"""Central-difference oracles.

Steps are scaled per coordinate: h_i = step * max(1, |z_i|), except for the
weight coordinates v of a PrimalPoint, which use h_m = step * v^m.
"""
from typing import Callable, Union

import numpy as np

from saddle_field.conjugacy.points import PrimalEvaluator, PrimalPoint
from saddle_field.exceptions import DomainError


def _scaled_steps(z: np.ndarray, step: float, n_relative: int = 0) -> np.ndarray:
    if not step > 0:
        raise DomainError(f"finite-difference step must be positive, got {step}")
    steps = step * np.maximum(1.0, np.abs(z))
    steps[:n_relative] = step * np.abs(z[:n_relative])
    if not np.all(steps > 0):
        raise DomainError("relative finite-difference steps need nonzero coordinates")
    return steps


def finite_difference_jacobian(fn: Callable[[np.ndarray], np.ndarray], z0, step: float = 1e-5,
                               n_relative: int = 0) -> np.ndarray:
    """J[i, k] = d fn_i / d z_k for a vector-valued fn; the first n_relative steps scale with |z_k|"""
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    steps = _scaled_steps(z0, step, n_relative)
    columns = []
    for k, h in enumerate(steps):
        e = np.zeros_like(z0)
        e[k] = h
        plus = np.atleast_1d(np.asarray(fn(z0 + e), dtype=float))
        minus = np.atleast_1d(np.asarray(fn(z0 - e), dtype=float))
        columns.append((plus - minus) / (2 * h))
    return np.stack(columns, axis=1)


def _as_scalar_function(f, point):
    if isinstance(f, PrimalEvaluator):
        n_agents = f.n_agents
        return (lambda z: f.value(PrimalPoint.from_vector(z, n_agents))), point.as_vector(), n_agents
    if np.ndim(point) == 0:
        return (lambda z: f(float(z[0]))), np.array([float(point)]), 0
    return f, np.asarray(point, dtype=float), 0


def finite_difference_gradient(f: Union[PrimalEvaluator, Callable], point, step: float = 1e-5) -> np.ndarray:
    """Gradient estimate of a scalar function or of a PrimalEvaluator in (v, x, q) order"""
    fn, z0, n_relative = _as_scalar_function(f, point)
    return finite_difference_jacobian(lambda z: [fn(z)], z0, step, n_relative)[0]


def finite_difference_hessian(f: PrimalEvaluator, point: PrimalPoint, step: float = 1e-4) -> np.ndarray:
    """Hessian estimate from central differences of the analytic gradient"""
    n_agents = f.n_agents

    def gradient(z):
        return f.derivatives(PrimalPoint.from_vector(z, n_agents)).gradient

    jac = finite_difference_jacobian(gradient, point.as_vector(), step, n_agents)
    return 0.5 * (jac + jac.T)


def second_difference(fn: Callable[[np.ndarray], float], z0, step: float = 1e-3) -> np.ndarray:
    """Hessian estimate from function values only"""
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    steps = _scaled_steps(z0, step)
    n = z0.size
    f0 = fn(z0)
    hess = np.zeros((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        hess[i, i] = (fn(z0 + ei) - 2 * f0 + fn(z0 - ei)) / steps[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            value = (fn(z0 + ei + ej) - fn(z0 + ei - ej) - fn(z0 - ei + ej) + fn(z0 - ei - ej))
            hess[i, j] = hess[j, i] = value / (4 * steps[i] * steps[j])
    return hess
