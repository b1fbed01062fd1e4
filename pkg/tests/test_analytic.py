"""Closed forms against hand arithmetic and against constants frozen from the
truncated-chain oracle (computed before these tests were written)."""

import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from age_metrics import analytic
from age_metrics.analytic import (
    NearInstabilityWarning,
    QueuePattern,
    UnstableQueueError,
    avg_aoa,
    avg_aoai,
    avg_aoi,
    gamma_hl,
    gamma_level_closed_form,
    gamma_level_prob,
    gamma_one,
    gamma_state_prob,
    queue_length_dist,
)
from age_metrics.core import ScenarioParams

rates = st.floats(0.01, 0.99)

# Oracle chain solutions, frozen.
ORACLE_AOA_BATTERY_03_05 = 3.3502705245804028
ORACLE_AOAI_BATTERY_03_05 = 3.5189910066392978
ORACLE_AOA_CONTROLLER_03_05 = 3.794871794870665
ORACLE_AOAI_FCFS_03_06 = 4.333333333333427
ORACLE_PATTERNS_02_05 = {
    "1": 0.09374999999999606,
    "10": 0.04687499999999871,
    "11": 0.011718749999999677,
    "100": 0.023437500000000028,
    "101": 0.005859375000000007,
    "110": 0.005859375000000007,
    "111": 0.0014648437500000017,
}


def P(scenario, l1, l2):
    return ScenarioParams(scenario, l1, l2)


@pytest.mark.parametrize("l1, expected", [(0.5, 2.0), (0.25, 4.0)])
def test_avg_aoi(l1, expected):
    assert avg_aoi(l1) == expected


def test_avg_aoi_rejects_boundary():
    with pytest.raises(ValueError):
        avg_aoi(1.0)


def test_frozen_oracle_values():
    assert avg_aoa(P("buffer-battery", 0.3, 0.5)) == pytest.approx(ORACLE_AOA_BATTERY_03_05, abs=1e-9)
    assert avg_aoai(P("buffer-battery", 0.3, 0.5)) == pytest.approx(ORACLE_AOAI_BATTERY_03_05, abs=1e-9)
    assert avg_aoa(P("buffer-controller", 0.3, 0.5)) == pytest.approx(ORACLE_AOA_CONTROLLER_03_05, abs=1e-9)
    assert avg_aoai(P("inf-fcfs", 0.3, 0.6)) == pytest.approx(ORACLE_AOAI_FCFS_03_06, abs=1e-9)


def test_single_freshest_aoai():
    assert avg_aoai(P("buffer-controller", 0.5, 0.5)) == pytest.approx(3.0)
    assert avg_aoai(P("inf-lcfs", 0.2, 0.7)) == pytest.approx(1 / 0.2 + 1 / 0.7 - 1)


def test_infinite_queue_aoa():
    assert avg_aoa(P("inf-fcfs", 0.2, 0.5)) == pytest.approx(5.0)
    # unstable: actuations happen at the opportunity rate
    assert avg_aoa(P("inf-fcfs", 0.6, 0.3)) == pytest.approx(1 / 0.3)


def test_fcfs_aoai_needs_stability():
    with pytest.raises(UnstableQueueError):
        avg_aoai(P("inf-fcfs", 0.5, 0.5))
    with pytest.raises(UnstableQueueError):
        avg_aoai(P("inf-fcfs", 0.6, 0.3))


def test_fcfs_aoai_warns_near_instability():
    with pytest.warns(NearInstabilityWarning):
        avg_aoai(P("inf-fcfs", 0.5, 0.5 + 1e-7))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        avg_aoai(P("inf-fcfs", 0.5, 0.6))


@given(rates, rates)
def test_buffer_ordering(l1, l2):
    p = P("buffer-controller", l1, l2)
    assert avg_aoi(l1) <= avg_aoa(p) * (1 + 1e-9)
    assert avg_aoa(p) <= avg_aoai(p) * (1 + 1e-9)
    b = P("buffer-battery", l1, l2)
    assert avg_aoa(b) <= avg_aoai(b) * (1 + 1e-9)
    assert avg_aoi(l1) <= avg_aoai(b) * (1 + 1e-9)


def test_battery_aoa_can_undercut_aoi():
    # Confirmed by the (A, Q, B) chain and by a 1e7-slot simulation: stored
    # energy makes actuations more regular than arrivals, so the mean AoA
    # drops below 1/lambda1 at low lambda1 even though fewer events reset it.
    assert avg_aoa(P("buffer-battery", 0.25, 0.5)) == pytest.approx(3.9764705882327154, abs=1e-9)
    assert avg_aoa(P("buffer-battery", 0.25, 0.5)) < avg_aoi(0.25)


@given(rates, rates)
def test_battery_never_worse_than_controller(l1, l2):
    # stored energy can only add actuation opportunities
    assert avg_aoa(P("buffer-battery", l1, l2)) <= avg_aoa(P("buffer-controller", l1, l2)) * (1 + 1e-9)


@given(st.floats(0.01, 0.98), st.floats(0.0, 1.0))
def test_fcfs_aoai_dominates_aoa(l1, frac):
    l2 = l1 + (0.99 - l1) * max(frac, 0.01)
    assert avg_aoai(P("inf-fcfs", l1, l2)) >= 1 / l1 - 1e-9


def test_queue_length_dist():
    rc = analytic.RateConstants.from_rates(0.2, 0.5)
    assert queue_length_dist(0.2, 0.5, 0) == pytest.approx(1 - rc.x / rc.y)
    assert queue_length_dist(0.2, 0.5, 2) == pytest.approx(0.046875)
    with pytest.raises(UnstableQueueError):
        queue_length_dist(0.5, 0.4, 0)
    with pytest.raises(ValueError):
        queue_length_dist(0.2, 0.5, -1)


@given(st.floats(0.01, 0.9), st.floats(0.0, 1.0))
def test_queue_length_normalizes(l1, frac):
    l2 = l1 + (0.99 - l1) * max(frac, 0.01)
    rc = analytic.RateConstants.from_rates(l1, l2)
    if rc.x / rc.y > 0.9:
        return
    total = math.fsum(queue_length_dist(l1, l2, i) for i in range(1000))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_rate_constants_sum_to_one():
    rc = analytic.RateConstants.from_rates(0.37, 0.81)
    assert rc.total == pytest.approx(1.0)


def test_pattern_parsing():
    p = QueuePattern.from_string("101")
    assert (p.h, p.l, p.ages) == (3, 2, (3, 1))
    assert str(p) == "101"
    assert QueuePattern.from_ages([3, 1]) == p
    assert QueuePattern.from_string("0").h == 0
    with pytest.raises(ValueError):
        QueuePattern.from_string("012")
    with pytest.raises(ValueError):
        QueuePattern.from_string("01")
    with pytest.raises(ValueError):
        QueuePattern.from_ages([0])


def test_gamma_one_is_first_pattern():
    assert gamma_state_prob("1", 0.2, 0.5) == pytest.approx(gamma_one(0.2, 0.5))
    assert gamma_level_prob(1, 0.2, 0.5) == pytest.approx(gamma_one(0.2, 0.5))


def test_gamma_matches_frozen_chain():
    for bits, value in ORACLE_PATTERNS_02_05.items():
        assert gamma_state_prob(bits, 0.2, 0.5) == pytest.approx(value, abs=1e-12)


def test_gamma_two_one_by_hand():
    rc = analytic.RateConstants.from_rates(0.2, 0.5)
    f1 = analytic.f_coefficient(1, 0.2, 0.5)
    expected = rc.z * gamma_one(0.2, 0.5) + rc.y * f1
    assert gamma_hl(2, 1, 0.2, 0.5) == pytest.approx(expected, rel=1e-14)


def test_pattern_equivalence_closed_form():
    assert gamma_state_prob("101", 0.2, 0.5) == gamma_state_prob("110", 0.2, 0.5)


def test_level_sum_identity():
    for h in range(1, 9):
        assert abs(gamma_level_prob(h, 0.2, 0.5) - gamma_level_closed_form(h, 0.2, 0.5)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.6), st.floats(0.0, 1.0))
def test_levels_normalize(l1, frac):
    l2 = l1 + 0.1 + (0.95 - l1 - 0.1) * frac
    levels = [gamma_level_closed_form(h, l1, l2) for h in range(1, 201)]
    ratio = levels[-1] / levels[-2]
    tail = levels[-1] * ratio / (1 - ratio)
    total = analytic.empty_queue_prob(l1, l2) + math.fsum(levels) + tail
    assert total == pytest.approx(1.0, abs=1e-9)


def test_gamma_rejects_bad_inputs():
    with pytest.raises(ValueError):
        gamma_hl(2, 3, 0.2, 0.5)
    with pytest.raises(ValueError):
        gamma_hl(65, 1, 0.2, 0.5)
    with pytest.raises(UnstableQueueError):
        gamma_hl(2, 1, 0.5, 0.2)
    with pytest.raises(ValueError):
        gamma_state_prob("0", 0.2, 0.5)


def test_average_dispatch():
    p = P("buffer-controller", 0.5, 0.5)
    assert analytic.average(p, "aoi") == 2.0
    with pytest.raises(ValueError):
        analytic.average(p, "peak")
