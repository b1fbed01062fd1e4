"""Truncated-chain oracle: structure, solver contract, and agreement with
the closed forms it is meant to check."""

import csv
import itertools

import numpy as np
import pytest

from age_metrics import analytic, oracle
from age_metrics.analytic import QueuePattern
from age_metrics.core import ScenarioParams
from age_metrics.oracle import ChainId, build_chain, mean_age, stationary

L1, L2 = 0.3, 0.6
W, X, Y, Z = L1 * L2, L1 * (1 - L2), (1 - L1) * L2, (1 - L1) * (1 - L2)


def test_aoa_buffer_small_truncation_matches_matrix():
    spec = build_chain(ChainId.AOA_BUFFER, (L1, L2), {"max_age": 3})
    assert set(spec.states) == {(1, 0), (2, 0), (2, 1), (3, 0), (3, 1)}
    assert spec.row((1, 0)) == pytest.approx({(1, 0): W, (2, 0): 1 - L1, (2, 1): X})
    assert spec.row((2, 0)) == pytest.approx({(1, 0): W, (3, 0): 1 - L1, (3, 1): X})
    assert spec.row((2, 1)) == pytest.approx({(1, 0): L2, (3, 1): 1 - L2})


def test_aoai_buffer_small_truncation_first_row():
    spec = build_chain(ChainId.AOAI_BUFFER, (L1, L2), {"max_age": 2})
    assert set(spec.states) == {(1, 1), (2, 1), (2, 2)}
    assert spec.row((1, 1)) == pytest.approx({(1, 1): W, (2, 1): X, (2, 2): 1 - L1})


def test_battery_chain_rows():
    spec = build_chain(ChainId.AOA_BATTERY, (L1, L2))
    # empty queue, empty battery: actuate now, store a packet, or charge
    assert spec.row((1, 0, 0)) == pytest.approx(
        {(1, 0, 0): W, (2, 1, 0): X, (2, 0, 1): Y, (2, 0, 0): Z}
    )
    # charged and empty: any arrival is actuated at once with stored energy;
    # an opportunity that finds nothing to do leaves the battery full
    assert spec.row((3, 0, 1)) == pytest.approx({(1, 0, 1): W, (1, 0, 0): X, (4, 0, 1): 1 - L1})


def test_excluded_states_absent():
    batt = build_chain(ChainId.AOA_BATTERY, (L1, L2))
    assert not any(q == 1 and b == 1 for _, q, b in batt.states)
    buf = build_chain(ChainId.AOA_BUFFER, (L1, L2))
    assert (1, 1) not in buf.index
    aoai = build_chain(ChainId.AOAI_BUFFER, (L1, L2))
    assert all(ai >= i for ai, i in aoai.states)
    ab = build_chain(ChainId.AOAI_BATTERY, (L1, L2))
    assert all(ai >= i for ai, i, _ in ab.states)
    # a full battery means the stored packet was already actuated
    assert all(ai == i for ai, i, b in ab.states if b == 1)


@pytest.mark.parametrize("chain_id", [c for c in ChainId if c is not ChainId.FCFS_SOJOURN])
def test_interior_rows_are_stochastic(chain_id):
    spec = build_chain(chain_id, (0.3, 0.6))
    sums = spec.row_sums()
    ages = spec.coordinate(oracle.COORDINATES[chain_id][0]) if chain_id not in (
        ChainId.BUFFER_OCCUPANCY, ChainId.BATTERY_OCCUPANCY, ChainId.QUEUE_PATTERN) else None
    if ages is None:
        interior = np.ones(spec.n_states, dtype=bool)
    else:
        interior = ages < ages.max()
    if chain_id in (ChainId.AOA_INF,):
        interior &= spec.coordinate("queue") < spec.limits["max_queue"]
    if chain_id in (ChainId.AOAI_INF, ChainId.QUEUE_PATTERN):
        interior &= spec.coordinate("queue") < spec.limits["max_queue"]
    assert np.all(sums <= 1 + 1e-12)
    assert np.max(np.abs(sums[interior] - 1)) < 1e-12


def test_transition_probabilities_come_from_event_rates():
    allowed = {W, X, Y, Z, 1 - L1, 1 - L2, L2, L1}
    allowed |= {a + b for a, b in itertools.combinations(sorted(allowed), 2)}
    for chain_id in (ChainId.AOA_BUFFER, ChainId.AOA_BATTERY, ChainId.AOAI_BUFFER, ChainId.AOAI_BATTERY):
        spec = build_chain(chain_id, (L1, L2))
        for p in np.unique(np.round(spec.probs, 12)):
            assert any(abs(p - a) < 1e-12 for a in allowed), (chain_id, p)


def test_occupancy_two_state_example():
    res = stationary(build_chain(ChainId.BUFFER_OCCUPANCY, (0.5, 0.5)))
    assert res.prob((0,)) == pytest.approx(2 / 3, abs=1e-12)
    assert res.residual < 1e-13


def test_battery_occupancy_has_no_full_full_state():
    spec = build_chain(ChainId.BATTERY_OCCUPANCY, (0.4, 0.3))
    assert (1, 1) not in spec.index
    res = stationary(spec)
    assert sum(res.probabilities) == pytest.approx(1.0)


def test_aoa_inf_example():
    res = stationary(build_chain(ChainId.AOA_INF, (0.2, 0.5), {"max_age": 200, "max_queue": 100}))
    assert mean_age(res, "aoa").value == pytest.approx(5.0, abs=1e-6)


def test_aoai_buffer_example():
    res = stationary(build_chain(ChainId.AOAI_BUFFER, (0.5, 0.5)))
    assert mean_age(res, "aoai").value == pytest.approx(3.0, abs=1e-9)


def test_aoa_battery_matches_closed_form():
    res = stationary(build_chain(ChainId.AOA_BATTERY, (0.3, 0.5)))
    m = mean_age(res, "aoa")
    assert abs(m.value - analytic.aoa_buffer_battery(0.3, 0.5)) <= m.tail_bound + 1e-9


def test_uniform_toy_mean():
    spec = oracle.ChainSpec(
        ChainId.BUFFER_OCCUPANCY, 0.5, 0.5, {}, ((1,), (2,)),
        np.array([0, 1]), np.array([1, 0]), np.array([1.0, 1.0]), {(1,): 0, (2,): 1},
    )
    res = oracle.StationaryResult(spec, np.array([0.5, 0.5]), 0.0, 0.0, 1)
    assert mean_age(res, "queue").value == 1.5


def test_solver_reports_nonconvergence():
    spec = build_chain(ChainId.AOA_BUFFER, (0.1, 0.1))
    with pytest.raises(oracle.ConvergenceError):
        stationary(spec, tol=1e-15, max_iters=3)


def test_stationary_contract():
    res = stationary(build_chain(ChainId.AOAI_BATTERY, (0.4, 0.3)))
    assert np.all(res.probabilities >= 0)
    assert res.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert res.residual < 1e-13
    assert res.leaked_mass < 1e-10


def test_build_chain_errors():
    with pytest.raises(ValueError):
        build_chain(ChainId.AOA_INF, (0.5, 0.5))
    with pytest.raises(ValueError):
        build_chain(ChainId.AOAI_INF, (0.6, 0.3))
    with pytest.raises(ValueError):
        build_chain(ChainId.AOA_BUFFER, (0.3, 0.6), {"max_age": 0})
    with pytest.raises(ValueError):
        build_chain("not-a-chain", (0.3, 0.6))
    with pytest.raises(ValueError):
        oracle.queue_pattern_stationary((0.2, 0.5), 17)


@pytest.mark.parametrize("l1, l2", [(0.1, 0.3), (0.2, 0.5), (0.5, 0.7), (0.1, 0.9)])
def test_fcfs_aoai_renewal(l1, l2):
    m = oracle.fcfs_mean_aoai((l1, l2))
    assert abs(m.value - analytic.aoai_fcfs(l1, l2)) <= m.tail_bound + 1e-9


def test_patterns_equal_within_level():
    pats = oracle.queue_pattern_stationary((0.2, 0.5), 6)
    assert abs(pats[QueuePattern.from_string("101")] - pats[QueuePattern.from_string("110")]) < 1e-9
    assert pats[QueuePattern.from_string("1")] == pytest.approx(analytic.gamma_one(0.2, 0.5), abs=1e-8)
    assert pats[QueuePattern(0)] == pytest.approx(analytic.empty_queue_prob(0.2, 0.5), abs=1e-10)


def test_queue_pattern_chain_agrees_with_aoai_chain():
    direct = stationary(build_chain(ChainId.QUEUE_PATTERN, (0.2, 0.5), {"h_max": 7}), tol=1e-14)
    via_ai = oracle.queue_pattern_stationary((0.2, 0.5), 6)
    for (mask, m), p in zip(direct.spec.states, direct.probabilities):
        pat = QueuePattern(mask)
        if m == 0 and pat.h <= 6:
            assert p == pytest.approx(via_ai[pat], abs=1e-12)


def test_queue_length_marginal_is_geometric():
    spec = build_chain(ChainId.AOAI_INF, (0.2, 0.5), {"ai_cap": 9})
    marg = oracle.queue_length_marginal(stationary(spec, tol=1e-14))
    for i, p in marg.items():
        assert abs(p - analytic.queue_length_dist(0.2, 0.5, i)) < 1e-8


def test_oracle_average_routing():
    p = ScenarioParams("inf-lcfs", 0.2, 0.7)
    assert oracle.oracle_average(p, "aoai").value == pytest.approx(1 / 0.2 + 1 / 0.7 - 1, abs=1e-8)
    assert oracle.oracle_average(p, "aoi").value == pytest.approx(5.0, abs=1e-8)
    with pytest.raises(ValueError):
        oracle.oracle_average(ScenarioParams("inf-fcfs", 0.5, 0.4), "aoa")
    with pytest.raises(ValueError):
        oracle.oracle_average(ScenarioParams("inf-fcfs", 0.5, 0.4), "aoai")
    with pytest.raises(ValueError):
        oracle.oracle_average(p, "peak")


def test_dumps_are_sorted_and_deterministic(tmp_path):
    spec = build_chain(ChainId.AOA_BUFFER, (L1, L2), {"max_age": 4})
    res = stationary(spec)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    oracle.dump_chain_csv(spec, a)
    oracle.dump_chain_csv(spec, b)
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()
    oracle.dump_stationary_csv(res, tmp_path / "pi.csv")
    rows = list(csv.DictReader(open(tmp_path / "pi.csv")))
    assert [r["state"] for r in rows] == [f"({a},{q})" for a, q in spec.states]
    assert list(spec.states) == sorted(spec.states)
