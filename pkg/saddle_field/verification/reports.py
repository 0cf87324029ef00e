# saddle_field/verification/reports.py
"""Check reports, sweep configuration and report storage."""
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from saddle_field.exceptions import ConfigError
from saddle_field.logging_config import get_logger

logger = get_logger(__name__)

# below this magnitude a target is compared in absolute error
NEAR_ZERO = 1e-8

DEFAULT_TOLERANCES: Dict[str, float] = {
    "closed_form": 1e-10,
    "gradient": 1e-6,
    "hessian": 1e-4,
    "identity": 1e-9,
    "homogeneity": 1e-10,
    "residual": 1e-10,
    "round_trip": 1e-8,
    "inverse": 1e-7,
    "minimax": 1e-6,
    "dual_second_order": 1e-4,
    "envelope": 1e-5,
    "field": 1e-10,
    "lemma19": 1e-8,
    "sum_identity": 1e-8,
    "bound": 1e-9,
}

# draws per suite when no common n_points is given
DEFAULT_SUITE_POINTS: Dict[str, int] = {
    "assumptions": 20,
    "aggregate": 100,
    "conjugacy": 100,
    "identities": 20,
    "field": 50,
    "bounds": 200,
    "lemma19": 100,
    "envelope": 50,
}
FALLBACK_POINTS = 20


def _plain(value):
    """JSON-ready copy of a worst-case input"""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass
class CheckReport:
    name: str
    points_tested: int
    max_abs_error: float
    max_rel_error: float
    tolerance: float
    passed: bool
    worst_case: Optional[Dict] = None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "points_tested": self.points_tested,
            "max_abs_error": _plain(self.max_abs_error),
            "max_rel_error": _plain(self.max_rel_error),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "worst_case": _plain(self.worst_case),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "CheckReport":
        def number(value):
            return float(value) if isinstance(value, str) else value

        return cls(
            name=data["name"],
            points_tested=data["points_tested"],
            max_abs_error=number(data["max_abs_error"]),
            max_rel_error=number(data["max_rel_error"]),
            tolerance=data["tolerance"],
            passed=data["passed"],
            worst_case=data.get("worst_case"),
        )


class CheckAccumulator:
    """Max-reduction of errors for one named check"""

    def __init__(self, name: str, tolerance: float):
        self.name = name
        self.tolerance = tolerance
        self.points = 0
        self.max_abs = 0.0
        self.max_rel = 0.0
        self._worst_score = -1.0
        self._worst_case = None

    def _update(self, score: float, case: Dict):
        self.points += 1
        if math.isnan(score):
            score = math.inf
        if score > self._worst_score:
            self._worst_score = score
            self._worst_case = case

    def compare(self, analytic, oracle, case: Optional[Dict] = None):
        """Record |analytic - oracle|, relative to |oracle| unless it is near zero"""
        analytic = np.atleast_1d(np.asarray(analytic, dtype=float))
        oracle = np.atleast_1d(np.asarray(oracle, dtype=float))
        abs_err = np.abs(analytic - oracle).reshape(-1)
        scale = np.abs(oracle).reshape(-1)
        if abs_err.size == 0:
            self.points += 1
            return
        abs_err = np.where(np.isnan(abs_err), np.inf, abs_err)
        big = scale >= NEAR_ZERO
        rel_err = np.where(big, abs_err / np.where(big, scale, 1.0), abs_err)
        self.max_abs = max(self.max_abs, float(abs_err.max()))
        if np.any(big):
            self.max_rel = max(self.max_rel, float(rel_err[big].max()))
        self._update(float(rel_err.max()), case or {})

    def bound(self, value, lower: float, upper: float, case: Optional[Dict] = None):
        """Record how far value falls outside [lower, upper]"""
        value = np.atleast_1d(np.asarray(value, dtype=float))
        violation = float(np.max(np.maximum(np.maximum(lower - value, value - upper), 0.0)))
        self.max_abs = max(self.max_abs, violation)
        self.max_rel = max(self.max_rel, violation)
        self._update(violation, case or {})

    def flag(self, ok: bool, case: Optional[Dict] = None):
        score = 0.0 if ok else 1.0
        self.max_abs = max(self.max_abs, score)
        self.max_rel = max(self.max_rel, score)
        self._update(score, case or {})

    def report(self) -> CheckReport:
        passed = self._worst_score <= self.tolerance
        return CheckReport(
            name=self.name,
            points_tested=self.points,
            max_abs_error=self.max_abs,
            max_rel_error=self.max_rel,
            tolerance=self.tolerance,
            passed=bool(passed),
            worst_case=None if passed else self._worst_case,
        )


def _pair(raw, where: str) -> Tuple[float, float]:
    if (not isinstance(raw, (list, tuple)) or len(raw) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw)):
        raise ConfigError("expected a pair of numbers", path=where)
    lo, hi = float(raw[0]), float(raw[1])
    if not lo < hi:
        raise ConfigError(f"range [{lo}, {hi}] is empty", path=where)
    return lo, hi


@dataclass(frozen=True)
class SweepConfig:
    seed: int = 0
    n_points: Optional[int] = None
    suite_points: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SUITE_POINTS))
    v_log_range: Tuple[float, float] = (0.1, 10.0)
    x_range: Tuple[float, float] = (-5.0, 5.0)
    q_range: Tuple[float, float] = (-2.0, 2.0)
    fd_step: float = 1e-5
    hessian_step: float = 1e-4
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    c_override: Optional[float] = None

    def __post_init__(self):
        if self.n_points is not None and self.n_points < 1:
            raise ConfigError("n_points must be at least 1", path="sweep.n_points")
        for name, count in self.suite_points.items():
            if count < 1:
                raise ConfigError("point count must be at least 1", path=f"sweep.suite_points.{name}")
        if not self.v_log_range[0] > 0:
            raise ConfigError("v_log_range must be positive", path="sweep.v_log_range")
        if not (self.fd_step > 0 and self.hessian_step > 0):
            raise ConfigError("finite-difference steps must be positive", path="sweep.fd_step")

    def tolerance(self, check: str) -> float:
        return self.tolerances.get(check, DEFAULT_TOLERANCES[check])

    def points_for(self, suite: str) -> int:
        """n_points when set, otherwise the suite's own count"""
        if self.n_points is not None:
            return self.n_points
        return self.suite_points.get(suite, FALLBACK_POINTS)

    def with_overrides(self, seed: Optional[int] = None, n_points: Optional[int] = None,
                       tol: Optional[float] = None, c: Optional[float] = None) -> "SweepConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if n_points is not None:
            changes["n_points"] = n_points
        if tol is not None:
            changes["tolerances"] = {name: tol for name in DEFAULT_TOLERANCES}
        if c is not None:
            changes["c_override"] = c
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data, path: str = "sweep") -> "SweepConfig":
        if not isinstance(data, dict):
            raise ConfigError("sweep must be an object", path=path)
        known = {"seed", "n_points", "suite_points", "v_log_range", "x_range", "q_range", "fd_step",
                 "hessian_step", "tolerances", "c"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unexpected keys {sorted(extra)}", path=path)
        kwargs = {}
        for key in ("seed", "n_points"):
            if key in data:
                if isinstance(data[key], bool) or not isinstance(data[key], int):
                    raise ConfigError("expected an integer", path=f"{path}.{key}")
                kwargs[key] = data[key]
        for key in ("v_log_range", "x_range", "q_range"):
            if key in data:
                kwargs[key] = _pair(data[key], f"{path}.{key}")
        for key in ("fd_step", "hessian_step", "c"):
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                    raise ConfigError("expected a positive number", path=f"{path}.{key}")
                kwargs["c_override" if key == "c" else key] = float(value)
        if "tolerances" in data:
            raw = data["tolerances"]
            if not isinstance(raw, dict):
                raise ConfigError("tolerances must be an object", path=f"{path}.tolerances")
            tolerances = dict(DEFAULT_TOLERANCES)
            for name, value in raw.items():
                if name not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"unknown check '{name}'", path=f"{path}.tolerances.{name}")
                if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                    raise ConfigError("expected a non-negative number", path=f"{path}.tolerances.{name}")
                tolerances[name] = float(value)
            kwargs["tolerances"] = tolerances
        if "suite_points" in data:
            raw = data["suite_points"]
            if not isinstance(raw, dict):
                raise ConfigError("suite_points must be an object", path=f"{path}.suite_points")
            counts = dict(DEFAULT_SUITE_POINTS)
            for name, value in raw.items():
                if name not in DEFAULT_SUITE_POINTS:
                    raise ConfigError(f"unknown suite '{name}'", path=f"{path}.suite_points.{name}")
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError("expected an integer", path=f"{path}.suite_points.{name}")
                counts[name] = value
            kwargs["suite_points"] = counts
        return cls(**kwargs)

    def to_dict(self) -> Dict:
        data = {
            "seed": self.seed,
            "suite_points": dict(sorted(self.suite_points.items())),
            "v_log_range": list(self.v_log_range),
            "x_range": list(self.x_range),
            "q_range": list(self.q_range),
            "fd_step": self.fd_step,
            "hessian_step": self.hessian_step,
            "tolerances": dict(sorted(self.tolerances.items())),
        }
        if self.n_points is not None:
            data["n_points"] = self.n_points
        if self.c_override is not None:
            data["c"] = self.c_override
        return data


def dumps_reports(reports: List[CheckReport]) -> str:
    """Stable JSON text: sorted keys, shortest round-trip floats"""
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2, allow_nan=False)


class ReportStore:
    """Load and save report arrays and summarize them"""

    def __init__(self, storage_path: str = "data/reports.json"):
        self.storage_path = storage_path

    def load_reports(self) -> List[CheckReport]:
        try:
            with open(self.storage_path, 'r') as f:
                return [CheckReport.from_dict(item) for item in json.load(f)]
        except FileNotFoundError:
            return []

    def save_reports(self, reports: List[CheckReport]):
        os.makedirs(os.path.dirname(self.storage_path) or ".", exist_ok=True)
        with open(self.storage_path, 'w') as f:
            f.write(dumps_reports(reports))
            f.write("\n")
        logger.info(f"Saved {len(reports)} reports to {self.storage_path}")

    @staticmethod
    def summary_frame(reports: List[CheckReport]) -> pd.DataFrame:
        frame = pd.DataFrame(
            [{
                "check": r.name,
                "points": r.points_tested,
                "max_abs_error": r.max_abs_error,
                "max_rel_error": r.max_rel_error,
                "tolerance": r.tolerance,
                "passed": r.passed,
            } for r in reports],
            columns=["check", "points", "max_abs_error", "max_rel_error", "tolerance", "passed"],
        )
        return frame.set_index("check")

    @staticmethod
    def get_failures(reports: List[CheckReport]) -> List[CheckReport]:
        return [r for r in reports if not r.passed]
