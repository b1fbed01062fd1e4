"""Seeded Monte Carlo simulation of the four actuation scenarios.

Random streams: the seed feeds :class:`numpy.random.SeedSequence`, which is
spawned into two children, one Philox4x64 generator for packet arrivals and
one for actuation opportunities.  Identical configurations therefore give
bit-identical results on any numpy release that keeps the Philox stream and
``Generator.random`` stable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from . import _kernel
from .core import (
    AgeTriple,
    ScenarioParams,
    ScenarioTag,
    SlotEvents,
    SystemState,
    actuation_decision,
    evolve_aoa,
    evolve_aoai,
    evolve_aoi,
)

DEFAULT_WARMUP = 10_000
DEFAULT_BATCHES = 32
DEFAULT_QUEUE_CAP = 50_000_000  # 400 MB of stamps; a guard, not a model parameter
DEFAULT_TRACE_LIMIT = 100_000
CHUNK = 1 << 20
SEED_MASK = (1 << 64) - 1

_KERNEL_CODE = {
    ScenarioTag.INF_FCFS: _kernel.FCFS,
    ScenarioTag.INF_LCFS: _kernel.LCFS,
    ScenarioTag.BUFFER_CONTROLLER: _kernel.BUFFER,
    ScenarioTag.BUFFER_BATTERY: _kernel.BATTERY,
}


class QueueOverflowError(RuntimeError):
    """Raised when an unstable infinite queue exceeds the configured cap."""


@dataclass(frozen=True)
class SimConfig:
    params: ScenarioParams
    horizon: int
    warmup: int = DEFAULT_WARMUP
    seed: int = 0
    batches: int = DEFAULT_BATCHES
    record_trace: bool = False
    queue_cap: int = DEFAULT_QUEUE_CAP
    trace_limit: int = DEFAULT_TRACE_LIMIT

    def __post_init__(self):
        horizon, warmup, batches = int(self.horizon), int(self.warmup), int(self.batches)
        if horizon < 1:
            raise ValueError("horizon must be positive")
        if warmup < 0 or warmup >= horizon:
            raise ValueError("warmup must satisfy 0 <= warmup < horizon")
        if batches < 1:
            raise ValueError("batches must be positive")
        if horizon - warmup < batches:
            raise ValueError("fewer post-warmup slots than batches")
        if self.queue_cap < 1 or self.trace_limit < 0:
            raise ValueError("queue_cap must be positive and trace_limit non-negative")
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "warmup", warmup)
        object.__setattr__(self, "batches", batches)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def batch_len(self) -> int:
        return (self.horizon - self.warmup) // self.batches


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    events: SlotEvents
    actuated: bool
    ages: AgeTriple
    queue_len: int
    battery: Optional[int]


@dataclass(frozen=True)
class AgeStats:
    mean_aoi: float
    mean_aoa: float
    mean_aoai: float
    ci_halfwidth_aoi: float
    ci_halfwidth_aoa: float
    ci_halfwidth_aoai: float
    actuation_rate: float
    slots_counted: int
    nonstationary: bool = False
    invariant_violations: int = 0
    infeasible_states: int = 0
    max_queue_len: int = 0
    # one int64 row per traced slot, columns as in TRACE_COLUMNS
    trace_table: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    has_battery: bool = field(default=False, repr=False, compare=False)

    def mean(self, metric: str) -> float:
        return getattr(self, f"mean_{metric}")

    def ci(self, metric: str) -> float:
        return getattr(self, f"ci_halfwidth_{metric}")

    @property
    def trace(self) -> Optional[Tuple[SlotRecord, ...]]:
        """Per-slot records, rebuilt from ``trace_table`` on each access."""
        if self.trace_table is None:
            return None
        return tuple(_records(self.trace_table, self.has_battery))


METRICS = ("aoi", "aoa", "aoai")
TRACE_COLUMNS = _kernel.TRACE_COLUMNS


def step(state: SystemState, events: SlotEvents, scenario: ScenarioTag):
    """Advance ``state`` by one slot.

    Returns ``(new_state, actuated, actuated_packet_age)``; the age is ``None``
    when nothing was actuated.  This is the readable reference for the
    compiled loop in :mod:`age_metrics._kernel`.
    """
    scenario = ScenarioTag.parse(scenario)
    queue = [a + 1 for a in state.queue]
    if events.arrival:
        if scenario.infinite_queue:
            queue.append(1)
        else:
            queue = [1]

    opportunity = events.opportunity
    if scenario.has_battery:
        opportunity = events.opportunity or state.battery == 1
    actuated = actuation_decision(
        bool(state.queue), SlotEvents(events.arrival, opportunity)
    )

    packet_age = None
    if actuated:
        packet_age = queue.pop(0) if scenario is ScenarioTag.INF_FCFS else queue.pop()

    battery = 0
    if scenario.has_battery:
        if actuated:
            battery = state.battery if events.opportunity else 0
        else:
            battery = 1 if (events.opportunity or state.battery) else 0

    ages = AgeTriple(
        evolve_aoi(state.ages.aoi, events.arrival),
        evolve_aoa(state.ages.aoa, actuated),
        evolve_aoai(state.ages.aoai, actuated, packet_age),
    )
    return SystemState(ages, tuple(queue), battery), actuated, packet_age


def _streams(seed: int):
    children = np.random.SeedSequence(seed & SEED_MASK).spawn(2)
    return tuple(np.random.Generator(np.random.Philox(c)) for c in children)


def _halfwidth(samples: np.ndarray) -> float:
    k = samples.shape[0]
    if k < 2:
        return math.inf
    sd = float(np.std(samples, ddof=1))
    return float(stats.t.ppf(0.975, k - 1)) * sd / math.sqrt(k)


def simulate(config: SimConfig) -> AgeStats:
    """Run one replication and return time averages with 95% batch-means CIs."""
    params = config.params
    code = _KERNEL_CODE[params.scenario]
    arrivals_rng, opportunity_rng = _streams(config.seed)

    st = _kernel.new_state()
    buf = np.zeros(16, dtype=np.int64)
    sums = np.zeros((config.batches, 3), dtype=np.int64)
    counters = np.zeros(_kernel.N_COUNTERS, dtype=np.int64)
    trace_limit = min(config.trace_limit, config.horizon) if config.record_trace else 0
    trace = np.zeros((max(trace_limit, 1), len(_kernel.TRACE_COLUMNS)), dtype=np.int64)
    cap = config.queue_cap

    done = 0
    while done < config.horizon:
        m = min(CHUNK, config.horizon - done)
        arrivals = arrivals_rng.random(m) < params.lambda1
        opportunities = opportunity_rng.random(m) < params.lambda2
        buf = _kernel.run_chunk(
            code, arrivals, opportunities, st, buf, sums, counters,
            config.warmup, config.batch_len, config.batches, trace, trace_limit, cap,
        )
        if counters[_kernel.C_OVERFLOW_SLOT]:
            raise QueueOverflowError(
                f"queue exceeded {cap} packets at slot {counters[_kernel.C_OVERFLOW_SLOT]} "
                f"({params.scenario.value}, lambda1={params.lambda1}, lambda2={params.lambda2})"
            )
        done += m

    counted = config.batch_len * config.batches
    batch_means = sums / config.batch_len
    means = sums.sum(axis=0) / counted
    return AgeStats(
        mean_aoi=float(means[0]),
        mean_aoa=float(means[1]),
        mean_aoai=float(means[2]),
        ci_halfwidth_aoi=_halfwidth(batch_means[:, 0]),
        ci_halfwidth_aoa=_halfwidth(batch_means[:, 1]),
        ci_halfwidth_aoai=_halfwidth(batch_means[:, 2]),
        actuation_rate=float(counters[_kernel.C_ACTUATIONS]) / counted,
        slots_counted=counted,
        nonstationary=not params.stable,
        invariant_violations=int(counters[_kernel.C_VIOLATIONS]),
        infeasible_states=int(counters[_kernel.C_INFEASIBLE]),
        max_queue_len=int(counters[_kernel.C_MAXLEN]),
        trace_table=trace[:trace_limit] if config.record_trace else None,
        has_battery=params.scenario.has_battery,
    )


def _records(rows: np.ndarray, has_battery: bool) -> List[SlotRecord]:
    out = []
    for slot, arr, opp, act, aoi, aoa, aoai, qlen, bat in rows.tolist():
        out.append(
            SlotRecord(
                slot=slot,
                events=SlotEvents(bool(arr), bool(opp)),
                actuated=bool(act),
                ages=AgeTriple(aoi, aoa, aoai),
                queue_len=qlen,
                battery=bat if has_battery else None,
            )
        )
    return out


def replication_seed(base_seed: int, rep: int) -> int:
    """Seed of replication ``rep``; replication 0 reuses the base seed."""
    if rep == 0:
        return base_seed
    ss = np.random.SeedSequence([base_seed & SEED_MASK, rep])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def max_workers() -> int:
    env = os.environ.get("AGE_METRICS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def replicate(config: SimConfig, n_reps: int, workers: Optional[int] = None) -> AgeStats:
    """Independent replications pooled into one :class:`AgeStats`.

    CIs are across-replication t intervals.  Results do not depend on the
    order in which replications finish.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    if n_reps == 1:
        return simulate(config)
    configs = [replace(config, seed=replication_seed(config.seed, r)) for r in range(n_reps)]
    workers = min(workers or max_workers(), n_reps)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(simulate, configs))
    else:
        runs = [simulate(c) for c in configs]

    def pooled(metric):
        values = np.array([r.mean(metric) for r in runs])
        return float(values.mean()), _halfwidth(values)

    (mi, ci_i), (ma, ci_a), (mai, ci_ai) = (pooled(m) for m in METRICS)
    return AgeStats(
        mean_aoi=mi,
        mean_aoa=ma,
        mean_aoai=mai,
        ci_halfwidth_aoi=ci_i,
        ci_halfwidth_aoa=ci_a,
        ci_halfwidth_aoai=ci_ai,
        actuation_rate=float(np.mean([r.actuation_rate for r in runs])),
        slots_counted=sum(r.slots_counted for r in runs),
        nonstationary=runs[0].nonstationary,
        invariant_violations=sum(r.invariant_violations for r in runs),
        infeasible_states=sum(r.infeasible_states for r in runs),
        max_queue_len=max(r.max_queue_len for r in runs),
    )
