"""Truncated Markov chains solved numerically, without any closed form.

Each chain is enumerated breadth-first from its initial state using the
per-slot event probabilities ``w, x, y, z`` (arrival and opportunity, arrival
only, opportunity only, neither).  Transitions that would leave the truncation
box are dropped; the missing row mass is the leak, reported with every
solution and bounded in every mean.

The FCFS queue-content chains use a lumped state: packets older than a cutoff
``K`` are only counted, not located.  Service removes the oldest packet, so
the count is all the dynamics need to know about them and the lumping is
exact for every pattern whose head-of-line age is at most ``K``.
"""

from __future__ import annotations

import csv
import enum
import math
from functools import lru_cache
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .analytic import QueuePattern, RateConstants
from .core import ScenarioParams, ScenarioTag

MAX_STATES = 4_000_000
MAX_PATTERN_CAP = 16
TAIL_TARGET = 1e-13
NOISE_FLOOR = 1e-11


class ChainId(str, enum.Enum):
    AOA_INF = "aoa-inf"  # (A, Q)
    AOA_BUFFER = "aoa-buffer"  # (A, Q)
    AOA_BATTERY = "aoa-battery"  # (A, Q, B)
    AOAI_BUFFER = "aoai-buffer"  # (AI, I)
    AOAI_BATTERY = "aoai-battery"  # (AI, I, B)
    AOAI_INF = "aoai-inf"  # (AI, queue pattern, overflow count)
    QUEUE_PATTERN = "queue-pattern"  # (queue pattern, overflow count)
    FCFS_SOJOURN = "fcfs-sojourn"  # age of each packet when actuated
    BUFFER_OCCUPANCY = "buffer-occupancy"  # Q
    BATTERY_OCCUPANCY = "battery-occupancy"  # (Q, B)


COORDINATES = {
    ChainId.AOA_INF: ("aoa", "queue"),
    ChainId.AOA_BUFFER: ("aoa", "queue"),
    ChainId.AOA_BATTERY: ("aoa", "queue", "battery"),
    ChainId.AOAI_BUFFER: ("aoai", "aoi"),
    ChainId.AOAI_BATTERY: ("aoai", "aoi", "battery"),
    ChainId.AOAI_INF: ("aoai", "pattern", "overflow"),
    ChainId.QUEUE_PATTERN: ("pattern", "overflow"),
    ChainId.FCFS_SOJOURN: ("sojourn",),
    ChainId.BUFFER_OCCUPANCY: ("queue",),
    ChainId.BATTERY_OCCUPANCY: ("queue", "battery"),
}

_NEEDS_STABLE = {ChainId.AOA_INF, ChainId.AOAI_INF, ChainId.QUEUE_PATTERN, ChainId.FCFS_SOJOURN}


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChainSpec:
    chain_id: ChainId
    lambda1: float
    lambda2: float
    limits: Dict[str, int]
    states: Tuple[tuple, ...]
    rows: np.ndarray
    cols: np.ndarray
    probs: np.ndarray
    index: Dict[tuple, int] = field(repr=False, compare=False, default_factory=dict)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def matrix(self) -> sp.csr_matrix:
        n = self.n_states
        return sp.csr_matrix((self.probs, (self.rows, self.cols)), shape=(n, n))

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.probs, minlength=self.n_states)

    def coordinate(self, name: str) -> np.ndarray:
        """Per-state value of a named coordinate (``queue`` is a length for
        the pattern chains)."""
        names = COORDINATES[self.chain_id]
        if self.chain_id in (ChainId.AOAI_INF, ChainId.QUEUE_PATTERN) and name == "queue":
            pi, oi = names.index("pattern"), names.index("overflow")
            return np.array([bin(s[pi]).count("1") + s[oi] for s in self.states], dtype=float)
        if name not in names:
            raise KeyError(f"{self.chain_id.value} has no coordinate {name!r}")
        k = names.index(name)
        return np.array([s[k] for s in self.states], dtype=float)

    def row(self, state: tuple) -> Dict[tuple, float]:
        """Outgoing transitions of one state, keyed by target state."""
        i = self.index[state]
        sel = self.rows == i
        return {self.states[c]: float(p) for c, p in zip(self.cols[sel], self.probs[sel])}


@dataclass(frozen=True)
class StationaryResult:
    spec: ChainSpec
    probabilities: np.ndarray
    residual: float
    leaked_mass: float
    iterations: int

    def prob(self, state: tuple) -> float:
        return float(self.probabilities[self.spec.index[state]])


class MeanAge(NamedTuple):
    value: float
    tail_bound: float


# ---------------------------------------------------------------- limits


def tail_ratio(lambda1: float, lambda2: float) -> float:
    return max(1 - lambda1, 1 - lambda2)


def default_limits(chain_id, lambda1: float, lambda2: float) -> Dict[str, int]:
    """Truncation box sized so the geometric tails fall below ~1e-13."""
    chain_id = ChainId(chain_id)
    r = tail_ratio(lambda1, lambda2)
    max_age = int(math.ceil(math.log(TAIL_TARGET) / math.log(r))) + 40
    limits = {"max_age": max_age}
    if lambda1 < lambda2:
        rc = RateConstants.from_rates(lambda1, lambda2)
        rho = rc.x / rc.y
        limits["max_queue"] = int(math.ceil(math.log(TAIL_TARGET) / math.log(rho))) + 5
    if chain_id is ChainId.AOAI_INF:
        limits["ai_cap"] = 14
    if chain_id is ChainId.QUEUE_PATTERN:
        limits["h_max"] = 14
    if chain_id is ChainId.FCFS_SOJOURN:
        limits["max_age"] = _sojourn_limit(lambda1, lambda2)
    return limits


def _sojourn_limit(l1, l2):
    # the sojourn tail decays at most as fast as both service and the
    # arrival-gap ratio; pad for the polynomial prefactor
    rc = RateConstants.from_rates(l1, l2)
    slow = max(1 - l2, rc.x / rc.y, (1 - l2) / (1 - l1) if l1 < 1 else 0.0)
    slow = min(max(slow, 1 - l2), 0.999)
    return int(math.ceil(math.log(TAIL_TARGET) / math.log(slow))) + 60


# ---------------------------------------------------------------- builders


def _enumerate(chain_id, l1, l2, limits, start, successors, admissible) -> ChainSpec:
    index = {start: 0}
    states = [start]
    rows: List[int] = []
    cols: List[int] = []
    probs: List[float] = []
    todo = deque([start])
    while todo:
        s = todo.popleft()
        i = index[s]
        for p, t in successors(s):
            if p == 0.0 or not admissible(t):
                continue
            j = index.get(t)
            if j is None:
                if len(states) >= MAX_STATES:
                    raise MemoryError(
                        f"{chain_id.value}: more than {MAX_STATES} states; reduce the limits"
                    )
                j = len(states)
                index[t] = j
                states.append(t)
                todo.append(t)
            rows.append(i)
            cols.append(j)
            probs.append(p)

    # canonical order: lexicographic in the state tuple
    order = sorted(range(len(states)), key=lambda k: states[k])
    rank = np.empty(len(states), dtype=np.int64)
    rank[order] = np.arange(len(states))
    coo = sp.coo_matrix(
        (np.asarray(probs), (rank[np.asarray(rows)], rank[np.asarray(cols)])),
        shape=(len(states),) * 2,
    ).tocsr()
    coo.sum_duplicates()
    coo = coo.tocoo()
    perm = np.lexsort((coo.col, coo.row))
    ordered = tuple(states[k] for k in order)
    return ChainSpec(
        chain_id=chain_id,
        lambda1=l1,
        lambda2=l2,
        limits=dict(limits),
        states=ordered,
        rows=coo.row[perm].astype(np.int64),
        cols=coo.col[perm].astype(np.int64),
        probs=coo.data[perm],
        index={s: k for k, s in enumerate(ordered)},
    )


def _aoa_inf(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)
    w, x, y, z = rc.w, rc.x, rc.y, rc.z
    amax, qmax = lim["max_age"], lim["max_queue"]

    def succ(s):
        a, q = s
        if q == 0:
            return [(w, (1, 0)), (y + z, (a + 1, 0)), (x, (a + 1, 1))]
        return [(y, (1, q - 1)), (w, (1, q)), (z, (a + 1, q)), (x, (a + 1, q + 1))]

    return (1, 0), succ, lambda s: s[0] <= amax and s[1] <= qmax


def _aoa_buffer(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)
    amax = lim["max_age"]

    def succ(s):
        a, q = s
        if q == 0:
            return [(rc.w, (1, 0)), (1 - l1, (a + 1, 0)), (rc.x, (a + 1, 1))]
        return [(l2, (1, 0)), (1 - l2, (a + 1, 1))]

    return (1, 0), succ, lambda s: s[0] <= amax


def _aoa_battery(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)
    w, x, y, z = rc.w, rc.x, rc.y, rc.z
    amax = lim["max_age"]

    def succ(s):
        a, q, b = s
        if q == 1:
            return [(l2, (1, 0, 0)), (1 - l2, (a + 1, 1, 0))]
        if b == 1:
            return [(w, (1, 0, 1)), (x, (1, 0, 0)), (1 - l1, (a + 1, 0, 1))]
        return [(w, (1, 0, 0)), (z, (a + 1, 0, 0)), (y, (a + 1, 0, 1)), (x, (a + 1, 1, 0))]

    return (1, 0, 0), succ, lambda s: s[0] <= amax


def _aoai_buffer(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)
    w, x, y, z = rc.w, rc.x, rc.y, rc.z
    amax = lim["max_age"]

    def succ(s):
        ai, i = s
        stored = i < ai
        after_y = (i + 1, i + 1) if stored else (ai + 1, i + 1)
        return [(w, (1, 1)), (x, (ai + 1, 1)), (y, after_y), (z, (ai + 1, i + 1))]

    return (1, 1), succ, lambda s: s[0] <= amax


def _aoai_battery(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)
    w, x, y, z = rc.w, rc.x, rc.y, rc.z
    amax = lim["max_age"]

    def succ(s):
        ai, i, b = s
        if b == 1:
            return [(w, (1, 1, 1)), (x, (1, 1, 0)), (1 - l1, (ai + 1, i + 1, 1))]
        if i < ai:
            return [(w, (1, 1, 0)), (x, (ai + 1, 1, 0)), (y, (i + 1, i + 1, 0)), (z, (ai + 1, i + 1, 0))]
        return [(w, (1, 1, 0)), (x, (ai + 1, 1, 0)), (y, (ai + 1, i + 1, 1)), (z, (ai + 1, i + 1, 0))]

    return (1, 1, 0), succ, lambda s: s[0] <= amax


def _queue_moves(mask, m, K, arrival, opportunity):
    """One FCFS slot on the lumped queue (mask over ages 1..K, m older packets).

    Returns ``(mask, m, served_age)`` where ``served_age`` is ``None`` without
    an actuation and ``K + 1`` when an overflow packet was served.
    """
    nonempty = mask != 0 or m > 0
    top = (mask >> (K - 1)) & 1
    mask = (mask << 1) & ((1 << K) - 1)
    m += top
    if arrival:
        mask |= 1
    served = None
    if opportunity and (nonempty or arrival):
        if m > 0:
            m -= 1
            served = K + 1
        else:
            served = mask.bit_length()
            mask &= ~(1 << (served - 1))
    return mask, m, served


def _events(l1, l2):
    rc = RateConstants.from_rates(l1, l2)
    return ((rc.w, True, True), (rc.x, True, False), (rc.y, False, True), (rc.z, False, False))


def _aoai_inf(l1, l2, lim):
    cap = lim["ai_cap"]
    if not 2 <= cap <= MAX_PATTERN_CAP + 1:
        raise ValueError(f"ai_cap must lie in [2, {MAX_PATTERN_CAP + 1}]")
    K = cap - 1
    qmax = lim["max_queue"]
    events = _events(l1, l2)

    def succ(s):
        ai, mask, m = s
        out = []
        for p, arr, opp in events:
            nmask, nm, served = _queue_moves(mask, m, K, arr, opp)
            nai = ai + 1 if served is None else min(ai + 1, served)
            out.append((p, (min(nai, cap), nmask, nm)))
        return out

    def ok(s):
        return bin(s[1]).count("1") + s[2] <= qmax

    return (1, 0, 0), succ, ok


def _queue_pattern(l1, l2, lim):
    K = lim["h_max"]
    if not 1 <= K <= MAX_PATTERN_CAP:
        raise ValueError(f"h_max must lie in [1, {MAX_PATTERN_CAP}]")
    qmax = lim["max_queue"]
    events = _events(l1, l2)

    def succ(s):
        mask, m = s
        return [(p, _queue_moves(mask, m, K, a, o)[:2]) for p, a, o in events]

    return (0, 0), succ, lambda s: bin(s[0]).count("1") + s[1] <= qmax


def _fcfs_sojourn(l1, l2, lim) -> ChainSpec:
    # T' = max(T - Y, 0) + S with Y ~ Geom(l1) arrival gaps and S ~ Geom(l2)
    # service waits; rows are dense, so build them directly
    tmax = lim["max_age"]
    q1, q2 = 1 - l1, 1 - l2
    service = np.zeros(tmax + 1)
    service[1:] = l2 * q2 ** np.arange(tmax)
    rows, cols, probs = [], [], []
    for t in range(1, tmax + 1):
        residual = np.empty(t)
        residual[0] = q1 ** (t - 1)
        residual[1:] = l1 * q1 ** (t - 1 - np.arange(1, t))
        nxt = np.convolve(residual, service)[: tmax + 1]
        ks = np.nonzero(nxt > 1e-300)[0]
        rows.append(np.full(ks.size, t - 1))
        cols.append(ks - 1)
        probs.append(nxt[ks])
    states = tuple((t,) for t in range(1, tmax + 1))
    return ChainSpec(
        chain_id=ChainId.FCFS_SOJOURN,
        lambda1=l1,
        lambda2=l2,
        limits=dict(lim),
        states=states,
        rows=np.concatenate(rows).astype(np.int64),
        cols=np.concatenate(cols).astype(np.int64),
        probs=np.concatenate(probs),
        index={s: k for k, s in enumerate(states)},
    )


def _buffer_occupancy(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)

    def succ(s):
        (q,) = s
        if q == 0:
            return [(1 - l1 + rc.w, (0,)), (rc.x, (1,))]
        return [(l2, (0,)), (1 - l2, (1,))]

    return (0,), succ, lambda s: True


def _battery_occupancy(l1, l2, lim):
    rc = RateConstants.from_rates(l1, l2)

    def succ(s):
        q, b = s
        if q == 1:
            return [(l2, (0, 0)), (1 - l2, (1, 0))]
        if b == 1:
            return [(rc.x, (0, 0)), (l2 + rc.z, (0, 1))]
        return [(rc.w + rc.z, (0, 0)), (rc.y, (0, 1)), (rc.x, (1, 0))]

    return (0, 0), succ, lambda s: True


_BUILDERS: Dict[ChainId, Callable] = {
    ChainId.AOA_INF: _aoa_inf,
    ChainId.AOA_BUFFER: _aoa_buffer,
    ChainId.AOA_BATTERY: _aoa_battery,
    ChainId.AOAI_BUFFER: _aoai_buffer,
    ChainId.AOAI_BATTERY: _aoai_battery,
    ChainId.AOAI_INF: _aoai_inf,
    ChainId.QUEUE_PATTERN: _queue_pattern,
    ChainId.BUFFER_OCCUPANCY: _buffer_occupancy,
    ChainId.BATTERY_OCCUPANCY: _battery_occupancy,
}


def build_chain(chain_id, params, limits: Optional[Dict[str, int]] = None) -> ChainSpec:
    """Enumerate the feasible states of a truncated chain and its transitions.

    ``params`` is a :class:`ScenarioParams` or a ``(lambda1, lambda2)`` pair.
    Missing limits are filled from :func:`default_limits`.
    """
    chain_id = ChainId(chain_id)
    l1, l2 = _rates(params)
    if chain_id in _NEEDS_STABLE and l1 >= l2:
        raise ValueError(f"{chain_id.value} needs a stable queue (lambda1 < lambda2)")
    lim = default_limits(chain_id, l1, l2)
    lim.update(limits or {})
    for k, v in lim.items():
        if v < 1:
            raise ValueError(f"limit {k} must be positive")
    if chain_id is ChainId.FCFS_SOJOURN:
        return _fcfs_sojourn(l1, l2, lim)
    start, succ, ok = _BUILDERS[chain_id](l1, l2, lim)
    return _enumerate(chain_id, l1, l2, lim, start, succ, ok)


def _rates(params) -> Tuple[float, float]:
    if isinstance(params, ScenarioParams):
        return params.lambda1, params.lambda2
    l1, l2 = params
    p = ScenarioParams(ScenarioTag.BUFFER_CONTROLLER, l1, l2)
    return p.lambda1, p.lambda2


# ---------------------------------------------------------------- solving


def stationary(spec: ChainSpec, tol: float = 1e-13, max_iters: int = 200_000) -> StationaryResult:
    """Power iteration with renormalization until ``||pi P - pi||_1 < tol``.

    Mass lost through the truncation boundary is reported as ``leaked_mass``
    (measured on the converged vector before renormalization).
    """
    pt = spec.matrix().T.tocsr()
    n = spec.n_states
    pi = np.full(n, 1.0 / n)
    residual = math.inf
    for it in range(1, max_iters + 1):
        nxt = pt @ pi
        total = nxt.sum()
        nxt /= total
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"{spec.chain_id.value}: residual {residual:.3e} after {max_iters} iterations"
        )
    out = pt @ pi
    leaked = float(max(0.0, 1.0 - out.sum()))
    residual = float(np.abs(out / out.sum() - pi).sum())
    return StationaryResult(spec, pi, residual, leaked, it)


def marginal(result: StationaryResult, which: str) -> Dict[float, float]:
    values = result.spec.coordinate(which)
    out: Dict[float, float] = {}
    for v, p in zip(values, result.probabilities):
        out[v] = out.get(v, 0.0) + p
    return dict(sorted(out.items()))


def mean_age(result: StationaryResult, which: str) -> MeanAge:
    """Mean of one coordinate plus a bound on what truncation left out.

    The marginal is extrapolated geometrically past the largest kept value.
    The decay ratio is read off where the marginal is still well above
    round-off (probability > 1e-11), since the far tail of a truncated
    solution is mostly noise.  Leaked mass is charged at the largest value.
    """
    values = result.spec.coordinate(which)
    mean = float(np.dot(values, result.probabilities))
    marg = marginal(result, which)
    ks = np.array(list(marg), dtype=float)
    ps = np.array(list(marg.values()))
    vmax = float(ks[-1])
    bound = result.leaked_mass * (vmax + 1)
    above = np.nonzero(ps > NOISE_FLOOR)[0]
    if above.size >= 2:
        i = int(above[-1])
        k = min(5, i)
        r = (ps[i] / ps[i - k]) ** (1.0 / (ks[i] - ks[i - k])) if ps[i - k] > 0 else 0.0
        r = min(r, 1 - 1e-6)
        if r > 0:
            edge = ps[i] * r ** (vmax - ks[i])
            bound += edge * (vmax * r / (1 - r) + r / (1 - r) ** 2)
    return MeanAge(mean, float(bound))


# ---------------------------------------------------------------- derived quantities


def fcfs_mean_aoai(params, limits: Optional[Dict[str, int]] = None, tol: float = 1e-14) -> MeanAge:
    """Average AoAI of the FCFS queue by renewal-reward over actuations.

    With ``T`` the age of an actuated packet, ``Y`` the next arrival gap and
    ``S`` the next service wait, the gap to the next actuation is
    ``G = max(Y - T, 0) + S`` and AoAI climbs from ``T`` during it, so the
    time average is ``E[G T + G (G - 1) / 2] / E[G]`` under the stationary
    law of ``T``.
    """
    spec = build_chain(ChainId.FCFS_SOJOURN, params, limits)
    res = stationary(spec, tol=tol)
    l1, l2 = spec.lambda1, spec.lambda2
    t = spec.coordinate("sojourn")
    pi = res.probabilities
    tail = (1 - l1) ** t
    eu = tail / l1
    eu2 = tail * (2 - l1) / l1**2
    es, es2 = 1 / l2, (2 - l2) / l2**2
    eg = eu + es
    eg2 = eu2 + 2 * eu * es + es2
    num = float(np.dot(pi, t * eg + (eg2 - eg) / 2))
    den = float(np.dot(pi, eg))
    value = num / den
    tb = mean_age(res, "sojourn").tail_bound
    # a unit of missing sojourn mass shifts the ratio by at most about
    # (mean + 1/l1 + 1/l2) per unit of probability
    bound = tb * (1 + l1 * (value + 1 / l1 + 1 / l2))
    return MeanAge(value, bound)


def queue_pattern_stationary(params, h_max: int, tol: float = 1e-14) -> Dict[QueuePattern, float]:
    """Stationary probability of every FCFS queue pattern with head age <= h_max.

    Computed from the (AI, queue) chain by summing over AI; the empty queue
    is included under the zero pattern.
    """
    if not 1 <= h_max <= MAX_PATTERN_CAP:
        raise ValueError(f"h_max must lie in [1, {MAX_PATTERN_CAP}]")
    spec = build_chain(ChainId.AOAI_INF, params, {"ai_cap": h_max + 1})
    return pattern_probabilities(stationary(spec, tol=tol))


def pattern_probabilities(result: StationaryResult) -> Dict[QueuePattern, float]:
    """Sum a solved (AI, queue) chain over AI, keeping fully located patterns."""
    if result.spec.chain_id is not ChainId.AOAI_INF:
        raise ValueError("pattern probabilities need the aoai-inf chain")
    out: Dict[QueuePattern, float] = {}
    for (ai, mask, m), p in zip(result.spec.states, result.probabilities):
        if m == 0:
            key = QueuePattern(mask)
            out[key] = out.get(key, 0.0) + float(p)
    return dict(sorted(out.items(), key=lambda kv: (kv[0].h, kv[0].mask)))


def queue_length_marginal(result: StationaryResult) -> Dict[int, float]:
    return {int(k): v for k, v in marginal(result, "queue").items()}


# ---------------------------------------------------------------- dumps


def _label(state: tuple) -> str:
    return "(" + ",".join(str(v) for v in state) + ")"


def dump_chain_csv(spec: ChainSpec, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["row", "col", "from_state", "to_state", "probability"])
        for r, c, p in zip(spec.rows, spec.cols, spec.probs):
            out.writerow([int(r), int(c), _label(spec.states[r]), _label(spec.states[c]), repr(float(p))])


def dump_stationary_csv(result: StationaryResult, path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["index", "state", "probability"])
        for k, (s, p) in enumerate(zip(result.spec.states, result.probabilities)):
            out.writerow([k, _label(s), repr(float(p))])


# ---------------------------------------------------------------- routing


@lru_cache(maxsize=256)
def _solved(chain_id: ChainId, l1: float, l2: float) -> StationaryResult:
    return stationary(build_chain(chain_id, (l1, l2)))


def oracle_average(params: ScenarioParams, metric: str) -> MeanAge:
    """Average of ``metric`` for ``params`` from the matching truncated chain.

    AoI only depends on arrivals and is read off the buffer (AI, I) chain.
    Preemptive LCFS has the same AoAI sample path as the one-slot buffer:
    it always actuates the freshest unactuated packet, and any older packet
    it actuates later cannot lower AoAI.  FCFS AoAI uses the sojourn chain.
    """
    l1, l2 = params.lambda1, params.lambda2
    sc = params.scenario
    if metric == "aoi":
        return mean_age(_solved(ChainId.AOAI_BUFFER, l1, l2), "aoi")
    if metric == "aoa":
        if sc.infinite_queue:
            return mean_age(_solved(ChainId.AOA_INF, l1, l2), "aoa")
        cid = ChainId.AOA_BATTERY if sc.has_battery else ChainId.AOA_BUFFER
        return mean_age(_solved(cid, l1, l2), "aoa")
    if metric == "aoai":
        if sc is ScenarioTag.INF_FCFS:
            if l1 >= l2:
                raise ValueError("fcfs-sojourn needs a stable queue (lambda1 < lambda2)")
            return fcfs_mean_aoai((l1, l2))
        cid = ChainId.AOAI_BATTERY if sc.has_battery else ChainId.AOAI_BUFFER
        return mean_age(_solved(cid, l1, l2), "aoai")
    raise ValueError(f"unknown metric {metric!r}")
