"""Parameter sweeps and one-dimensional minimization over the arrival rate.

The minimizer never assumes unimodality: it scans a grid, takes the global
grid argmin, and only then refines inside the two neighbouring grid cells
with a golden-section search.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from . import analytic, oracle
from .core import ScenarioParams, ScenarioTag
from .simulator import DEFAULT_WARMUP, METRICS, SimConfig, max_workers, simulate

EVALUATORS = ("analytic", "simulation", "oracle")
EDGE_MARGIN = 1e-3
GRID_DIGITS = 12


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter sweep with the other rate held fixed.

    ``fixed`` is ``("l1", value)`` or ``("l2", value)``; ``grid`` is an
    inclusive ``(start, stop, step)`` over the free rate.
    """

    scenario: ScenarioTag
    metric: str
    fixed: Tuple[str, float]
    grid: Tuple[float, float, float]
    evaluator: str = "analytic"
    horizon: int = 10**6
    warmup: int = DEFAULT_WARMUP
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", ScenarioTag.parse(self.scenario))
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.evaluator not in EVALUATORS:
            raise ValueError(f"evaluator must be one of {EVALUATORS}, got {self.evaluator!r}")
        which, value = self.fixed
        if which not in ("l1", "l2"):
            raise ValueError("fixed parameter must be 'l1' or 'l2'")
        if not 0 < value < 1:
            raise ValueError(f"fixed {which} must lie in (0, 1)")
        start, stop, step = self.grid
        if step <= 0 or stop < start:
            raise ValueError("grid needs step > 0 and stop >= start")
        pts = self.points()
        if pts[0] <= 0 or pts[-1] >= 1:
            raise ValueError("grid must lie inside the open interval (0, 1)")
        if (
            self.scenario is ScenarioTag.INF_FCFS
            and self.metric == "aoai"
            and self.evaluator == "analytic"
        ):
            l1_max = pts[-1] if which == "l2" else value
            l2_min = value if which == "l2" else pts[0]
            if l1_max >= l2_min:
                raise ValueError("FCFS AoAI needs lambda1 < lambda2 across the whole grid")

    @property
    def free(self) -> str:
        return "l2" if self.fixed[0] == "l1" else "l1"

    def points(self) -> List[float]:
        start, stop, step = self.grid
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, GRID_DIGITS) for k in range(n)]

    def params_at(self, x: float) -> ScenarioParams:
        l1, l2 = (x, self.fixed[1]) if self.free == "l1" else (self.fixed[1], x)
        return ScenarioParams(self.scenario, l1, l2)


@dataclass(frozen=True)
class CurvePoint:
    parameter: float
    value: float
    ci: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class OptimumReport:
    lambda_star: float
    value_star: float
    bracket: Tuple[float, float]
    is_interior: bool
    curve: Tuple[Tuple[float, float], ...]

    def as_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "value_star": self.value_star,
            "bracket": list(self.bracket),
            "is_interior": self.is_interior,
            "curve": [list(p) for p in self.curve],
        }


def _evaluate(spec: SweepSpec, x: float) -> CurvePoint:
    try:
        params = spec.params_at(x)
        if spec.evaluator == "analytic":
            return CurvePoint(x, analytic.average(params, spec.metric), math.nan)
        if spec.evaluator == "oracle":
            res = oracle.oracle_average(params, spec.metric)
            return CurvePoint(x, res.value, res.tail_bound)
        cfg = SimConfig(params, spec.horizon, warmup=spec.warmup, seed=spec.seed)
        stats = simulate(cfg)
        return CurvePoint(x, stats.mean(spec.metric), stats.ci(spec.metric))
    except (ValueError, ArithmeticError, RuntimeError, MemoryError) as exc:
        return CurvePoint(x, math.nan, math.nan, f"{type(exc).__name__}: {exc}")


def sweep(spec: SweepSpec, workers: Optional[int] = None) -> List[CurvePoint]:
    """Evaluate the metric at every grid point, in parameter order.

    A failing point is returned with ``error`` set instead of aborting.
    """
    pts = spec.points()
    workers = 1 if spec.evaluator == "analytic" else min(workers or max_workers(), len(pts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda x: _evaluate(spec, x), pts))
    return [_evaluate(spec, x) for x in pts]


def search_interval(scenario, metric: str, lambda2: float) -> Tuple[float, float]:
    scenario = ScenarioTag.parse(scenario)
    if scenario is ScenarioTag.INF_FCFS and metric == "aoai":
        return EDGE_MARGIN, lambda2 - EDGE_MARGIN
    return EDGE_MARGIN, 1 - EDGE_MARGIN


def analytic_objective(scenario, metric: str, lambda2: float) -> Callable[[float], float]:
    scenario = ScenarioTag.parse(scenario)

    def f(l1: float) -> float:
        return analytic.average(ScenarioParams(scenario, l1, lambda2), metric)

    return f


def minimize_lambda1(
    scenario,
    metric: str,
    lambda2: float,
    tol: float = 1e-6,
    grid_step: float = 1e-2,
) -> OptimumReport:
    """Minimize the closed-form metric over lambda1 with lambda2 held fixed."""
    lo, hi = search_interval(scenario, metric, lambda2)
    if hi <= lo:
        raise ValueError(f"empty search interval ({lo}, {hi}) for lambda2={lambda2}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    f = analytic_objective(scenario, metric, lambda2)
    n = max(3, int(math.ceil((hi - lo) / grid_step)) + 1)
    grid = np.linspace(lo, hi, n)
    values = np.array([f(x) for x in grid])
    if not np.all(np.isfinite(values)):
        raise ValueError("objective is not finite on the search interval")
    k = int(np.argmin(values))
    curve = tuple((float(x), float(v)) for x, v in zip(grid, values))
    x_star, v_star = float(grid[k]), float(values[k])
    bracket = (float(grid[max(k - 1, 0)]), float(grid[min(k + 1, n - 1)]))

    if 0 < k < n - 1 and values[k] < values[k - 1] and values[k] < values[k + 1]:
        a, b, c = bracket[0], x_star, bracket[1]
        # scipy's golden stops once the bracket is below tol * (|x1| + |x2|)
        res = optimize.minimize_scalar(
            f, bracket=(a, b, c), method="golden", options={"xtol": tol / (2 * abs(b))}
        )
        if res.fun <= v_star and a <= res.x <= c:
            x_star, v_star = float(res.x), float(res.fun)

    interior = (x_star - lo) >= tol and (hi - x_star) >= tol and 0 < k < n - 1
    return OptimumReport(x_star, v_star, bracket, bool(interior), curve)


Curve = Union[Sequence[CurvePoint], Sequence[Tuple[float, float]], Sequence[float]]


def _values_and_noise(curve: Curve):
    vals, cis = [], []
    for p in curve:
        if isinstance(p, CurvePoint):
            vals.append(p.value)
            cis.append(p.ci if math.isfinite(p.ci) else 0.0)
        elif isinstance(p, (tuple, list)):
            vals.append(float(p[1]))
            cis.append(0.0)
        else:
            vals.append(float(p))
            cis.append(0.0)
    return np.array(vals), np.array(cis)


def detect_nonmonotonicity(curve: Curve, noise: float = 0.0) -> Tuple[bool, int]:
    """Whether the curve falls to an interior minimum and rises again.

    Both drops must exceed ``noise`` plus the combined CI halfwidths of the
    two points compared, so flat noisy stretches do not count.  Returns the
    flag and the index of the global minimum.
    """
    values, cis = _values_and_noise(curve)
    if values.size < 3:
        raise ValueError("need at least 3 curve points")
    finite = np.where(np.isfinite(values), values, np.inf)
    k = int(np.argmin(finite))
    if k == 0 or k == values.size - 1:
        return False, k

    def clears(i):
        return math.isfinite(values[i]) and values[i] - values[k] > noise + math.hypot(cis[i], cis[k])

    left = any(clears(i) for i in range(k))
    right = any(clears(j) for j in range(k + 1, values.size))
    return bool(left and right), k


def dense_grid_argmin(scenario, metric: str, lambda2: float, step: float = 1e-4) -> float:
    lo, hi = search_interval(scenario, metric, lambda2)
    grid = np.arange(lo, hi + step / 2, step)
    f = analytic_objective(scenario, metric, lambda2)
    return float(grid[int(np.argmin([f(x) for x in grid]))])


def battery_symmetry_gap(a: float, b: float) -> float:
    """|AoA(a, b) - AoA(b, a)| for the battery scenario; only ever reported."""
    return abs(analytic.aoa_buffer_battery(a, b) - analytic.aoa_buffer_battery(b, a))
