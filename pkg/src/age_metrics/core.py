"""Domain types and the per-slot update rules shared by every scenario.

Slot timing: the arrival and opportunity events of slot ``n`` are realized at
the start of the slot, the actuation decision looks at the queue occupancy left
at the end of slot ``n - 1``, and every age is the value at the end of slot
``n``.  A packet received in slot ``n`` therefore has age 1 when the slot ends.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple


class ScenarioTag(str, enum.Enum):
    INF_FCFS = "inf-fcfs"
    INF_LCFS = "inf-lcfs"
    BUFFER_CONTROLLER = "buffer-controller"
    BUFFER_BATTERY = "buffer-battery"

    @property
    def infinite_queue(self) -> bool:
        return self in (ScenarioTag.INF_FCFS, ScenarioTag.INF_LCFS)

    @property
    def has_battery(self) -> bool:
        return self is ScenarioTag.BUFFER_BATTERY

    @classmethod
    def parse(cls, value: "str | ScenarioTag") -> "ScenarioTag":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "inffcfs": cls.INF_FCFS,
            "inflcfs": cls.INF_LCFS,
            "buffercontroller": cls.BUFFER_CONTROLLER,
            "bufferbattery": cls.BUFFER_BATTERY,
        }
        try:
            return cls(key)
        except ValueError:
            pass
        try:
            return aliases[key.replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown scenario {value!r}") from None


ALL_SCENARIOS = tuple(ScenarioTag)


def check_probability(name: str, value: float) -> float:
    """Return ``value`` as a float if it lies in the open interval (0, 1)."""
    value = float(value)
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {value!r}")
    return value


@dataclass(frozen=True)
class ScenarioParams:
    scenario: ScenarioTag
    lambda1: float
    lambda2: float

    def __post_init__(self):
        object.__setattr__(self, "scenario", ScenarioTag.parse(self.scenario))
        object.__setattr__(self, "lambda1", check_probability("lambda1", self.lambda1))
        object.__setattr__(self, "lambda2", check_probability("lambda2", self.lambda2))

    @property
    def stable(self) -> bool:
        """Whether an infinite queue is positive recurrent (always true for buffers)."""
        return not self.scenario.infinite_queue or self.lambda1 < self.lambda2


@dataclass(frozen=True)
class SlotEvents:
    arrival: bool
    opportunity: bool


@dataclass(frozen=True)
class AgeTriple:
    aoi: int = 1
    aoa: int = 1
    aoai: int = 1

    def consistent(self) -> bool:
        return (
            self.aoi >= 1
            and self.aoa >= 1
            and self.aoai >= 1
            and self.aoai >= self.aoi
            and self.aoai >= self.aoa
        )


@dataclass(frozen=True)
class SystemState:
    """End-of-slot state of one scenario.

    ``queue`` holds the ages of stored packets, oldest first.  Buffer scenarios
    hold at most one packet.  ``battery`` is only meaningful for the battery
    scenario.
    """

    ages: AgeTriple = field(default_factory=AgeTriple)
    queue: Tuple[int, ...] = ()
    battery: int = 0

    @property
    def queue_len(self) -> int:
        return len(self.queue)

    def valid_for(self, scenario: ScenarioTag) -> bool:
        if any(b >= a for a, b in zip(self.queue, self.queue[1:])):
            return False
        if any(a < 1 for a in self.queue):
            return False
        if not scenario.infinite_queue and len(self.queue) > 1:
            return False
        if scenario.has_battery:
            if self.battery not in (0, 1):
                return False
            if self.battery == 1 and self.queue:
                return False
        elif self.battery != 0:
            return False
        return True


def actuation_decision(queue_nonempty_prev: bool, events: SlotEvents) -> bool:
    """An actuation happens when there is an opportunity and something to actuate.

    A packet arriving in the current slot is eligible for actuation in the
    same slot.
    """
    return bool(events.opportunity and (queue_nonempty_prev or events.arrival))


def evolve_aoi(prev_aoi: int, arrival: bool) -> int:
    return 1 if arrival else prev_aoi + 1


def evolve_aoa(prev_aoa: int, actuated: bool) -> int:
    return 1 if actuated else prev_aoa + 1


def evolve_aoai(prev_aoai: int, actuated: bool, actuated_packet_age: Optional[int] = None) -> int:
    """Age of the freshest information ever acted upon.

    On actuation the age drops to the actuated packet's age unless that packet
    is older than what was already acted upon (possible under LCFS).
    """
    if actuated:
        if actuated_packet_age is None:
            raise ValueError("an actuation must report the age of the actuated packet")
        if actuated_packet_age < 1:
            raise ValueError(f"packet age must be >= 1, got {actuated_packet_age}")
        return min(prev_aoai + 1, actuated_packet_age)
    if actuated_packet_age is not None:
        raise ValueError("packet age given without an actuation")
    return prev_aoai + 1
