import pytest
from hypothesis import given
from hypothesis import strategies as st

from age_metrics.core import (
    AgeTriple,
    ScenarioParams,
    ScenarioTag,
    SlotEvents,
    SystemState,
    actuation_decision,
    check_probability,
    evolve_aoa,
    evolve_aoai,
    evolve_aoi,
)


@pytest.mark.parametrize(
    "prev, arrival, opportunity, expected",
    [
        (False, True, True, True),  # same-slot actuation of a fresh packet
        (False, False, True, False),
        (True, False, False, False),
        (True, False, True, True),
        (True, True, False, False),
        (False, False, False, False),
    ],
)
def test_actuation_decision(prev, arrival, opportunity, expected):
    assert actuation_decision(prev, SlotEvents(arrival, opportunity)) is expected


@given(st.booleans(), st.booleans(), st.booleans())
def test_actuation_decision_is_monotone(prev, arrival, opportunity):
    base = actuation_decision(prev, SlotEvents(arrival, opportunity))
    assert actuation_decision(True, SlotEvents(arrival, opportunity)) >= base
    assert actuation_decision(prev, SlotEvents(True, opportunity)) >= base
    assert actuation_decision(prev, SlotEvents(arrival, True)) >= base


@pytest.mark.parametrize("prev, arrival, expected", [(7, True, 1), (1, False, 2), (3, False, 4)])
def test_evolve_aoi(prev, arrival, expected):
    assert evolve_aoi(prev, arrival) == expected


@pytest.mark.parametrize("prev, actuated, expected", [(5, True, 1), (1, False, 2), (9, False, 10)])
def test_evolve_aoa(prev, actuated, expected):
    assert evolve_aoa(prev, actuated) == expected


@pytest.mark.parametrize(
    "prev, actuated, age, expected",
    [(4, True, 2, 2), (4, True, 6, 5), (4, False, None, 5)],
)
def test_evolve_aoai(prev, actuated, age, expected):
    assert evolve_aoai(prev, actuated, age) == expected


def test_evolve_aoai_contract():
    with pytest.raises(ValueError):
        evolve_aoai(3, True, None)
    with pytest.raises(ValueError):
        evolve_aoai(3, True, 0)
    with pytest.raises(ValueError):
        evolve_aoai(3, False, 2)


@given(st.integers(1, 10**9), st.integers(1, 10**9))
def test_evolve_aoai_never_exceeds_increment(prev, age):
    assert evolve_aoai(prev, True, age) <= prev + 1


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_rates_must_be_open_interval(bad):
    with pytest.raises(ValueError):
        check_probability("lambda1", bad)
    with pytest.raises(ValueError):
        ScenarioParams("inf-fcfs", bad, 0.5)


@pytest.mark.parametrize(
    "text, tag",
    [
        ("InfFcfs", ScenarioTag.INF_FCFS),
        ("inf_lcfs", ScenarioTag.INF_LCFS),
        ("buffer-controller", ScenarioTag.BUFFER_CONTROLLER),
        ("BufferBattery", ScenarioTag.BUFFER_BATTERY),
    ],
)
def test_scenario_parse(text, tag):
    assert ScenarioTag.parse(text) is tag


def test_scenario_parse_rejects_unknown():
    with pytest.raises(ValueError):
        ScenarioTag.parse("ring-buffer")


def test_stability_flag():
    assert ScenarioParams("inf-fcfs", 0.2, 0.5).stable
    assert not ScenarioParams("inf-lcfs", 0.5, 0.5).stable
    assert ScenarioParams("buffer-battery", 0.9, 0.1).stable


def test_age_triple_consistency():
    assert AgeTriple(2, 3, 3).consistent()
    assert not AgeTriple(4, 1, 3).consistent()
    assert not AgeTriple(1, 0, 1).consistent()


def test_state_validity():
    assert SystemState(queue=(5, 3, 1)).valid_for(ScenarioTag.INF_FCFS)
    assert not SystemState(queue=(3, 3)).valid_for(ScenarioTag.INF_FCFS)
    assert not SystemState(queue=(1, 3)).valid_for(ScenarioTag.INF_FCFS)
    assert not SystemState(queue=(3, 1)).valid_for(ScenarioTag.BUFFER_CONTROLLER)
    assert SystemState(battery=1).valid_for(ScenarioTag.BUFFER_BATTERY)
    assert not SystemState(queue=(2,), battery=1).valid_for(ScenarioTag.BUFFER_BATTERY)
    assert not SystemState(battery=1).valid_for(ScenarioTag.BUFFER_CONTROLLER)
