# saddle_field/conjugacy/points.py
"""Saddle coordinates a = (v, x, q), b = (u, y, q) and the primal evaluation surface."""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from saddle_field.exceptions import DomainError


def _vector(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class PrimalPoint:
    """a = (v, x, q) in A = (0, inf)^M x R x R^J"""

    v: np.ndarray
    x: float
    q: np.ndarray

    def __post_init__(self):
        v = _vector(self.v, "v")
        q = np.asarray(self.q, dtype=float).reshape(-1) if self.q is not None else np.zeros(0)
        if np.any(v <= 0):
            raise DomainError(f"Pareto weights must be positive, got {v.tolist()}")
        if not np.isfinite(self.x):
            raise DomainError("cash amount x must be finite")
        if not np.all(np.isfinite(q)):
            raise DomainError("quantities q must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "q", q)

    def replace(self, v=None, x=None, q=None) -> "PrimalPoint":
        return PrimalPoint(
            self.v if v is None else v,
            self.x if x is None else x,
            self.q if q is None else q,
        )

    def as_vector(self) -> np.ndarray:
        """Flattened coordinates (v, x, q), the order used by gradients and Hessians"""
        return np.concatenate([self.v, [self.x], self.q])

    @classmethod
    def from_vector(cls, flat: np.ndarray, n_agents: int) -> "PrimalPoint":
        return cls(flat[:n_agents], flat[n_agents], flat[n_agents + 1:])


@dataclass(frozen=True)
class DualPoint:
    """b = (u, y, q) in B = (-inf, 0)^M x (0, inf) x R^J"""

    u: np.ndarray
    y: float
    q: np.ndarray

    def __post_init__(self):
        u = _vector(self.u, "u")
        q = np.asarray(self.q, dtype=float).reshape(-1) if self.q is not None else np.zeros(0)
        if np.any(u >= 0):
            raise DomainError(f"dual utilities u must be negative, got {u.tolist()}")
        if not (self.y > 0 and np.isfinite(self.y)):
            raise DomainError(f"marginal y must be positive, got {self.y}")
        if not np.all(np.isfinite(q)):
            raise DomainError("quantities q must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "q", q)

    def replace(self, u=None, y=None, q=None) -> "DualPoint":
        return DualPoint(
            self.u if u is None else u,
            self.y if y is None else y,
            self.q if q is None else q,
        )


@dataclass(frozen=True)
class PrimalDerivatives:
    """Value, gradient and all second-derivative blocks of f at one point"""

    value: float
    d_v: np.ndarray
    d_x: float
    d_q: np.ndarray
    d_vv: np.ndarray
    d_vx: np.ndarray
    d_xx: float
    d_vq: np.ndarray
    d_xq: np.ndarray
    d_qq: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.d_v.shape[0]

    @property
    def n_assets(self) -> int:
        return self.d_q.shape[0]

    @property
    def gradient(self) -> np.ndarray:
        return np.concatenate([self.d_v, [self.d_x], self.d_q])

    @property
    def hessian(self) -> np.ndarray:
        m, j = self.n_agents, self.n_assets
        n = m + 1 + j
        hess = np.zeros((n, n))
        hess[:m, :m] = self.d_vv
        hess[:m, m] = self.d_vx
        hess[m, :m] = self.d_vx
        hess[m, m] = self.d_xx
        hess[:m, m + 1:] = self.d_vq
        hess[m + 1:, :m] = self.d_vq.T
        hess[m, m + 1:] = self.d_xq
        hess[m + 1:, m] = self.d_xq
        hess[m + 1:, m + 1:] = self.d_qq
        return hess

    @classmethod
    def expectation(cls, terms: Iterable[Tuple[float, "PrimalDerivatives"]]) -> "PrimalDerivatives":
        """Probability-weighted sum of derivative bundles"""
        terms = list(terms)
        if not terms:
            raise DomainError("expectation over an empty set of terms")
        weights = np.array([p for p, _ in terms])

        def combine(attr):
            stacked = np.array([getattr(d, attr) for _, d in terms], dtype=float)
            return np.tensordot(weights, stacked, axes=1)

        return cls(
            value=float(combine("value")),
            d_v=combine("d_v"),
            d_x=float(combine("d_x")),
            d_q=combine("d_q"),
            d_vv=combine("d_vv"),
            d_vx=combine("d_vx"),
            d_xx=float(combine("d_xx")),
            d_vq=combine("d_vq"),
            d_xq=combine("d_xq"),
            d_qq=combine("d_qq"),
        )


class PrimalEvaluator(ABC):
    """Evaluation surface of a saddle function f on A.

    Implementations must be reentrant: derivatives() may be called
    concurrently for different points.
    """

    @property
    @abstractmethod
    def n_agents(self) -> int:
        ...

    @property
    @abstractmethod
    def n_assets(self) -> int:
        ...

    @abstractmethod
    def derivatives(self, point: PrimalPoint) -> PrimalDerivatives:
        ...

    def value(self, point: PrimalPoint) -> float:
        return self.derivatives(point).value

    def tolerance_proxy(self) -> np.ndarray:
        """Per-agent risk tolerances used to seed the saddle solve"""
        return np.ones(self.n_agents)


@dataclass(frozen=True)
class SaddlePair:
    """Conjugate points with f(a) = <u, v> and g(b) = x y"""

    primal: PrimalPoint
    dual: DualPoint
    f_value: float
    g_value: float
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class SecondOrderBundle:
    """Primal matrices A, C, D and dual matrices B, E, H at a conjugate pair"""

    A_mat: np.ndarray
    C_mat: np.ndarray
    D_mat: np.ndarray
    B_mat: np.ndarray
    E_mat: np.ndarray
    H_mat: np.ndarray

    def inverse_residual(self) -> float:
        """Sup-norm of B A - I"""
        m = self.A_mat.shape[0]
        return float(np.max(np.abs(self.B_mat @ self.A_mat - np.eye(m))))
