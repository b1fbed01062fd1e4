"""Closed-form averages and stationary probabilities.

All rates are restricted to the open interval (0, 1).  Limits at the
boundary are checked numerically in the tests rather than special-cased here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Union

from .core import ScenarioParams, ScenarioTag, check_probability

MAX_PATTERN_AGE = 64
NEAR_INSTABILITY = 1e-6


class UnstableQueueError(ValueError):
    """No stationary closed form exists because lambda1 >= lambda2."""


class NearInstabilityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class RateConstants:
    """Joint per-slot event probabilities (arrival, opportunity)."""

    w: float  # arrival and opportunity
    x: float  # arrival only
    y: float  # opportunity only
    z: float  # neither

    @classmethod
    def from_rates(cls, lambda1: float, lambda2: float) -> "RateConstants":
        l1 = check_probability("lambda1", lambda1)
        l2 = check_probability("lambda2", lambda2)
        return cls(l1 * l2, l1 * (1 - l2), (1 - l1) * l2, (1 - l1) * (1 - l2))

    @property
    def total(self) -> float:
        return self.w + self.x + self.y + self.z


@dataclass(frozen=True)
class QueuePattern:
    """Set of packet ages held by a FCFS queue at the end of a slot.

    ``mask`` has bit ``a - 1`` set when a packet of age ``a`` is queued, so the
    head-of-line age is the bit length and the queue length is the popcount.
    """

    mask: int

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("pattern mask must be non-negative")

    @classmethod
    def from_string(cls, bits: str) -> "QueuePattern":
        """Parse ``"101"`` as (age 3, age 2, age 1) occupancy, head first."""
        bits = bits.strip()
        if bits in ("", "0"):
            return cls(0)
        if set(bits) - {"0", "1"} or bits[0] != "1":
            raise ValueError(f"pattern must be a bit string starting with 1, got {bits!r}")
        return cls(int(bits, 2))

    @classmethod
    def from_ages(cls, ages: Iterable[int]) -> "QueuePattern":
        mask = 0
        for a in ages:
            if a < 1:
                raise ValueError("packet ages start at 1")
            mask |= 1 << (a - 1)
        return cls(mask)

    @property
    def h(self) -> int:
        return self.mask.bit_length()

    @property
    def l(self) -> int:
        return bin(self.mask).count("1")

    @property
    def ages(self) -> tuple:
        return tuple(a for a in range(self.h, 0, -1) if self.mask >> (a - 1) & 1)

    def __str__(self) -> str:
        return format(self.mask, "b") if self.mask else "0"


def _rates(lambda1, lambda2):
    return check_probability("lambda1", lambda1), check_probability("lambda2", lambda2)


def _require_stable(l1, l2):
    if l1 >= l2:
        raise UnstableQueueError(
            f"unstable: no closed form for lambda1={l1} >= lambda2={l2}"
        )


def avg_aoi(lambda1: float) -> float:
    return 1.0 / check_probability("lambda1", lambda1)


def aoa_buffer_controller(l1: float, l2: float) -> float:
    return ((l2 - 1) * (l1**2 + l1 * l2) - l2**2) / (l1 * l2 * (l1 * (l2 - 1) - l2))


def aoa_buffer_battery(l1: float, l2: float) -> float:
    num = (
        l1**4 * (l2 - 1) ** 3
        - 2 * l1**3 * l2 * (l2 - 1) ** 2
        - l1**2 * l2**2 * (2 * l2**2 - 3 * l2 + 1)
        + l1 * l2**3 * (3 * l2 - 2)
        - l2**4
    )
    den = (
        l1 * l2 * (l1 * (l2 - 1) - l2)
        * (l1**2 * (l2 - 1) ** 2 + l1 * (-2 * l2**2 + l2) + l2**2)
    )
    return num / den


def aoai_fcfs(l1: float, l2: float) -> float:
    return (l1**2 * (l2 - 1) * (l1 - l2) + l2**3 * (l1 - 1)) / (l1 * (l1 - l2) * l2**2)


def aoai_single_freshest(l1: float, l2: float) -> float:
    """Shared by preemptive LCFS and the one-slot buffer with a controller."""
    return 1.0 / l1 + 1.0 / l2 - 1.0


def aoai_buffer_battery(l1: float, l2: float) -> float:
    num = (
        l1**4 * (l2 - 4) * (l2 - 1) ** 3 * l2
        - 4 * l1**3 * (l2 - 1) ** 3 * l2**2
        + l1 * (3 - 4 * l2) * l2**4
        + l2**5
        + l1**5 * (l2 - 1) ** 3 * (2 * l2 - 1)
        + 2 * l1**2 * l2**3 * (2 - 5 * l2 + 3 * l2**2)
    )
    den = (
        l1 * l2 * (l1 + l2 - l1 * l2) ** 2
        * (l1**2 * (l2 - 1) ** 2 + l2**2 + l1 * (l2 - 2 * l2**2))
    )
    return num / den


def avg_aoa(params: ScenarioParams) -> float:
    """Average age of actuation.

    For the infinite queues this is ``max(1/lambda1, 1/lambda2)``, which
    equals ``1/lambda1`` whenever the queue is stable.
    """
    l1, l2 = params.lambda1, params.lambda2
    sc = params.scenario
    if sc.infinite_queue:
        return max(1.0 / l1, 1.0 / l2)
    if sc is ScenarioTag.BUFFER_CONTROLLER:
        return aoa_buffer_controller(l1, l2)
    return aoa_buffer_battery(l1, l2)


def avg_aoai(params: ScenarioParams) -> float:
    """Average age of actuated information.

    Raises :class:`UnstableQueueError` for FCFS with ``lambda1 >= lambda2``
    and warns with :class:`NearInstabilityWarning` when the two rates are
    within 1e-6 of each other.
    """
    l1, l2 = params.lambda1, params.lambda2
    sc = params.scenario
    if sc is ScenarioTag.INF_FCFS:
        _require_stable(l1, l2)
        if l2 - l1 < NEAR_INSTABILITY:
            warnings.warn(
                f"lambda2 - lambda1 = {l2 - l1:.3g}: FCFS closed form is ill-conditioned",
                NearInstabilityWarning,
                stacklevel=2,
            )
        return aoai_fcfs(l1, l2)
    if sc in (ScenarioTag.INF_LCFS, ScenarioTag.BUFFER_CONTROLLER):
        return aoai_single_freshest(l1, l2)
    return aoai_buffer_battery(l1, l2)


def average(params: ScenarioParams, metric: str) -> float:
    if metric == "aoi":
        return avg_aoi(params.lambda1)
    if metric == "aoa":
        return avg_aoa(params)
    if metric == "aoai":
        return avg_aoai(params)
    raise ValueError(f"unknown metric {metric!r}")


def queue_length_dist(lambda1: float, lambda2: float, i: int) -> float:
    """Stationary probability of ``i`` packets in the Geo/Geo/1 queue."""
    l1, l2 = _rates(lambda1, lambda2)
    _require_stable(l1, l2)
    if i < 0:
        raise ValueError("queue length must be non-negative")
    rc = RateConstants.from_rates(l1, l2)
    rho = rc.x / rc.y
    return rho**i * (1 - rho)


@lru_cache(maxsize=64)
def _gamma_parts(l1: float, l2: float):
    rc = RateConstants.from_rates(l1, l2)
    rho = rc.x / rc.y
    d0 = 1 - rho

    def d(i):
        return rho**i * d0

    gamma1 = (rc.x * d(0) + rc.w * rc.z * d(1) + rc.w * rc.y * d(2)) / (1 - rc.w)
    return rc, d, gamma1


def f_coefficient(i: int, lambda1: float, lambda2: float) -> float:
    l1, l2 = _rates(lambda1, lambda2)
    _require_stable(l1, l2)
    rc, d, _ = _gamma_parts(l1, l2)
    return rc.x * d(i) + rc.w * d(i + 1)


def gamma_one(lambda1: float, lambda2: float) -> float:
    """Probability that the queue holds exactly one packet, of age 1."""
    l1, l2 = _rates(lambda1, lambda2)
    _require_stable(l1, l2)
    return _gamma_parts(l1, l2)[2]


def empty_queue_prob(lambda1: float, lambda2: float) -> float:
    return queue_length_dist(lambda1, lambda2, 0)


def gamma_hl(h: int, l: int, lambda1: float, lambda2: float) -> float:
    """Stationary probability of one particular FCFS queue state with head age
    ``h`` and length ``l``.

    Every state with the same ``(h, l)`` has this probability.
    """
    l1, l2 = _rates(lambda1, lambda2)
    _require_stable(l1, l2)
    if not (1 <= l <= h):
        raise ValueError(f"need 1 <= l <= h, got h={h}, l={l}")
    if h > MAX_PATTERN_AGE:
        raise ValueError(f"head age {h} exceeds supported maximum {MAX_PATTERN_AGE}")
    rc, d, g1 = _gamma_parts(l1, l2)
    w, x, y, z = rc.w, rc.x, rc.y, rc.z

    def f(i):
        return x * d(i) + w * d(i + 1)

    gap = h - l
    terms = [x ** (l - 1) * z**gap * g1]
    for i in range(1, l):
        ci = math.comb(l - 1, i)
        for j in range(gap + 1):
            terms.append(
                ci * math.comb(gap, j) * w**i * x ** (l - i - 1) * y**j * z ** (gap - j) * f(j + i)
            )
    for j in range(1, gap + 1):
        terms.append(math.comb(gap, j) * x ** (l - 1) * y**j * z ** (gap - j) * f(j))
    return math.fsum(terms)


def gamma_state_prob(pattern: Union[QueuePattern, str], lambda1: float, lambda2: float) -> float:
    if isinstance(pattern, str):
        pattern = QueuePattern.from_string(pattern)
    if pattern.h == 0:
        raise ValueError("the empty queue is not a head-of-line state; use empty_queue_prob")
    return gamma_hl(pattern.h, pattern.l, lambda1, lambda2)


def gamma_level_prob(h: int, lambda1: float, lambda2: float) -> float:
    """Total probability of all queue states whose head-of-line age is ``h``,
    summed state by state."""
    if h < 1:
        raise ValueError("head age must be >= 1")
    return math.fsum(
        math.comb(h - 1, l - 1) * gamma_hl(h, l, lambda1, lambda2) for l in range(1, h + 1)
    )


def gamma_level_closed_form(h: int, lambda1: float, lambda2: float) -> float:
    """Same quantity as :func:`gamma_level_prob` from its one-line closed form."""
    l1, l2 = _rates(lambda1, lambda2)
    _require_stable(l1, l2)
    if h < 1:
        raise ValueError("head age must be >= 1")
    rc, d, g1 = _gamma_parts(l1, l2)
    terms = [(1 - l2) ** (h - 1) * g1]
    for j in range(1, h):
        fj = rc.x * d(j) + rc.w * d(j + 1)
        terms.append(math.comb(h - 1, j) * l2**j * (1 - l2) ** (h - 1 - j) * fj)
    return math.fsum(terms)
