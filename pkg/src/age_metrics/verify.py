"""Three-way agreement checks: closed form, truncated chain, simulation."""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import analytic, oracle
from .core import ALL_SCENARIOS, ScenarioParams, ScenarioTag
from .simulator import METRICS, AgeStats, SimConfig, max_workers, simulate

DEFAULT_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class Tolerances:
    oracle_slack: float = 1e-6  # added to the oracle's own truncation bound
    rel_tol: float = 0.01
    ci_scale: float = 1.0


@dataclass(frozen=True)
class TriangleRow:
    scenario: ScenarioTag
    metric: str
    lambda1: float
    lambda2: float
    analytic: float
    oracle: Optional[float]
    oracle_bound: Optional[float]
    oracle_note: Optional[str]
    simulated: Optional[float]
    ci: Optional[float]
    oracle_ok: bool
    ci_ok: bool
    rel_ok: bool

    @property
    def rel_err(self) -> Optional[float]:
        if self.simulated is None:
            return None
        return abs(self.simulated - self.analytic) / abs(self.analytic)

    @property
    def passed(self) -> bool:
        return self.oracle_ok and self.ci_ok and self.rel_ok


def has_closed_form(params: ScenarioParams, metric: str) -> bool:
    """Closed-form AoAI for the infinite queues needs a stable queue."""
    if metric == "aoai" and params.scenario.infinite_queue:
        return params.lambda1 < params.lambda2
    return True


def grid_seed(base_seed: int, scenario: ScenarioTag, l1: float, l2: float) -> int:
    key = [base_seed & (2**64 - 1), ALL_SCENARIOS.index(scenario), round(l1 * 10**6), round(l2 * 10**6)]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0])


def compare(
    params: ScenarioParams,
    metric: str,
    stats: Optional[AgeStats],
    tol: Tolerances = Tolerances(),
) -> TriangleRow:
    exact = analytic.average(params, metric)
    value = bound = note = None
    oracle_ok = True
    try:
        res = oracle.oracle_average(params, metric)
        value, bound = res.value, res.tail_bound
        oracle_ok = abs(value - exact) <= bound + tol.oracle_slack
    except ValueError as exc:
        # no stationary chain exists (unstable infinite queue)
        note = str(exc)
    sim = ci = None
    ci_ok = rel_ok = True
    if stats is not None:
        sim, ci = stats.mean(metric), stats.ci(metric)
        ci_ok = abs(sim - exact) <= tol.ci_scale * ci
        rel_ok = abs(sim - exact) < tol.rel_tol * abs(exact)
    return TriangleRow(
        params.scenario, metric, params.lambda1, params.lambda2, exact,
        value, bound, note, sim, ci, bool(oracle_ok), bool(ci_ok), bool(rel_ok),
    )


def triangle(
    scenarios: Sequence = ALL_SCENARIOS,
    metrics: Sequence[str] = METRICS,
    grid: Sequence[float] = DEFAULT_GRID,
    horizon: Optional[int] = 10**7,
    warmup: int = 10_000,
    seed: int = 0,
    tol: Tolerances = Tolerances(),
    workers: Optional[int] = None,
) -> List[TriangleRow]:
    """Run every applicable (scenario, metric, grid point) comparison.

    ``horizon`` counts post-warmup slots; ``None`` skips simulation.
    Rows come back in (scenario, lambda1, lambda2, metric) order.
    """
    points = [
        ScenarioParams(sc, l1, l2)
        for sc in map(ScenarioTag.parse, scenarios)
        for l1 in grid
        for l2 in grid
    ]

    def run(p):
        if horizon is None:
            return None
        cfg = SimConfig(
            p, horizon + warmup, warmup=warmup,
            seed=grid_seed(seed, p.scenario, p.lambda1, p.lambda2),
        )
        return simulate(cfg)

    workers = min(workers or max_workers(), len(points))
    if workers > 1 and horizon is not None:
        with ThreadPoolExecutor(workers) as pool:
            stats = list(pool.map(run, points))
    else:
        stats = [run(p) for p in points]

    rows = []
    for p, st in zip(points, stats):
        for m in metrics:
            if has_closed_form(p, m):
                rows.append(compare(p, m, st, tol))
    return rows


@dataclass(frozen=True)
class PatternReport:
    lambda1: float
    lambda2: float
    h_max: int
    n_patterns: int
    spread: float  # largest max-min over patterns sharing (h, l)
    state_err: float  # largest |chain - closed form| over patterns
    level_err: float  # largest |combinatorial level sum - level closed form|
    queue_err: float  # largest |chain queue-length marginal - geometric law|
    empty_err: float

    def passed(self, spread=1e-9, state=1e-7, level=1e-12, queue=1e-8) -> bool:
        return (
            self.spread < spread
            and self.state_err < state
            and self.level_err < level
            and self.queue_err < queue
            and self.empty_err < queue
        )


def pattern_check(lambda1: float, lambda2: float, h_max: int = 8) -> PatternReport:
    """Compare queue-pattern probabilities of the (AI, queue) chain with the
    head-age/length closed form, level by level and for the queue length."""
    spec = oracle.build_chain(oracle.ChainId.AOAI_INF, (lambda1, lambda2), {"ai_cap": h_max + 1})
    res = oracle.stationary(spec, tol=1e-14)
    patterns = oracle.pattern_probabilities(res)

    groups: Dict[tuple, List[float]] = defaultdict(list)
    state_err, empty_err = 0.0, math.nan
    for pat, p in patterns.items():
        if pat.h == 0:
            empty_err = abs(p - analytic.empty_queue_prob(lambda1, lambda2))
            continue
        if pat.h > h_max:
            continue
        groups[(pat.h, pat.l)].append(p)
        state_err = max(state_err, abs(p - analytic.gamma_state_prob(pat, lambda1, lambda2)))
    spread = max(max(v) - min(v) for v in groups.values())
    level_err = max(
        abs(analytic.gamma_level_prob(h, lambda1, lambda2) - analytic.gamma_level_closed_form(h, lambda1, lambda2))
        for h in range(1, h_max + 1)
    )
    queue = oracle.queue_length_marginal(res)
    queue_err = max(
        abs(p - analytic.queue_length_dist(lambda1, lambda2, i)) for i, p in queue.items()
    )
    return PatternReport(
        lambda1, lambda2, h_max, sum(len(v) for v in groups.values()),
        spread, state_err, level_err, queue_err, empty_err,
    )
