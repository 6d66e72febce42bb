import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solarharvest.clustering import (
    DAY_STATE,
    NIGHT_STATE,
    NightDayConfig,
    SlotConfig,
    night_day_cluster,
    night_day_threshold,
    slot_cluster,
    transition_matrix,
    write_visits_csv,
)
from solarharvest.errors import ConfigError, DegenerateMonthError
from solarharvest.power import HarvestSeries

DAY = [0.0] * 7 + [0.001, 0.004, 0.008, 0.010, 0.010, 0.008, 0.004, 0.001] + [0.0] * 9


def two_days():
    return HarvestSeries.from_currents(DAY * 2)


def test_night_day_two_identical_days():
    visits = night_day_cluster(two_days())
    assert [v.state for v in visits] == [NIGHT_STATE, DAY_STATE, NIGHT_STATE, DAY_STATE, NIGHT_STATE]
    assert [v.duration_h for v in visits] == [7.0, 8.0, 16.0, 8.0, 9.0]
    assert [v.truncated for v in visits] == [True, False, False, False, True]
    assert visits[1].start == "1999-01-01T07:00"
    assert sum(v.n_samples for v in visits) == 48


def test_threshold_is_fraction_of_max():
    s = two_days()
    assert night_day_threshold(s, NightDayConfig()) == pytest.approx(0.010 / 50)
    assert night_day_threshold(s, NightDayConfig(0.5)) == pytest.approx(0.005)
    assert night_day_threshold(s, NightDayConfig(0.5, reference_max_a=0.1)) == pytest.approx(0.05)
    visits = night_day_cluster(s, NightDayConfig(0.5))
    day = [v for v in visits if v.state == DAY_STATE]
    assert all(v.duration_h == 4.0 for v in day)


def test_threshold_boundary_counts_as_day():
    s = HarvestSeries.from_currents([0.0, 0.02, 1.0, 0.02, 0.0])
    visits = night_day_cluster(s, threshold_a=0.02)
    assert [v.state for v in visits] == [NIGHT_STATE, DAY_STATE, NIGHT_STATE]
    assert visits[1].duration_h == 3.0


def test_gap_truncates_and_merges():
    s = two_days()
    keep = np.ones(48, dtype=bool)
    keep[26] = False  # a missing hour in the middle of the second night
    keep[10] = False  # a missing day hour on day 1
    visits = night_day_cluster(s.subset(keep))
    states = [v.state for v in visits]
    assert all(a != b for a, b in zip(states, states[1:]))
    assert [v.truncated for v in visits] == [True, True, True, False, True]
    assert sum(v.n_samples for v in visits) == 46


def test_all_dark_month_is_degenerate():
    with pytest.raises(DegenerateMonthError):
        night_day_cluster(HarvestSeries.from_currents([0.0] * 48))
    with pytest.raises(DegenerateMonthError):
        night_day_cluster(HarvestSeries.from_currents([]))


def test_slot_cluster_twelve_slots():
    visits = slot_cluster(two_days(), SlotConfig(12))
    assert len(visits) == 24
    assert [v.state for v in visits] == list(range(12)) * 2
    assert all(v.duration_h == 2.0 and v.n_samples == 2 for v in visits)
    assert visits[5].samples == (DAY[10], DAY[11])


def test_slot_cluster_partial_day():
    s = HarvestSeries.from_currents(DAY[5:], start_hour=5)
    visits = slot_cluster(s, SlotConfig(6))
    assert visits[0].state == 1 and visits[0].n_samples == 3
    assert all(v.duration_h == 4.0 for v in visits)


@pytest.mark.parametrize("n", [1, 5, 7, 2.5])
def test_slot_config_rejects(n):
    with pytest.raises(ConfigError):
        SlotConfig(n)


def test_transition_matrices_exact():
    assert transition_matrix("night-day").tolist() == [[0.0, 1.0], [1.0, 0.0]]
    P = transition_matrix("slot", 4)
    assert P.tolist() == [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]]
    for n in (2, 3, 4, 6, 8, 12, 24):
        P = transition_matrix("slot", n)
        assert np.all(P.sum(axis=1) == 1.0)
        # the uniform distribution is stationary for a cyclic permutation
        assert np.array_equal(np.full(n, 1.0 / n) @ P, np.full(n, 1.0 / n))
    with pytest.raises(ConfigError):
        transition_matrix("night-day", 3)


def test_write_visits_csv(tmp_path):
    write_visits_csv(night_day_cluster(two_days()), tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "state,start,duration_h,n_samples"
    assert lines[2] == "0,1999-01-01T07:00,8.0,8"


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0, 0.05), min_size=2, max_size=200).filter(lambda xs: max(xs) > 0))
def test_night_day_partition_properties(currents):
    s = HarvestSeries.from_currents(currents)
    th = night_day_threshold(s, NightDayConfig())
    visits = night_day_cluster(s)
    states = [v.state for v in visits]
    assert all(a != b for a, b in zip(states, states[1:]))
    flat = [x for v in visits for x in v.samples]
    assert flat == list(s.current_a)
    for v in visits:
        assert v.duration_h == v.n_samples
        if v.state == DAY_STATE:
            assert min(v.samples) >= th
        else:
            assert max(v.samples) < th
    assert visits[0].truncated and visits[-1].truncated
    assert not any(v.truncated for v in visits[1:-1])


@settings(max_examples=60, deadline=None)
@given(n=st.sampled_from([2, 3, 4, 6, 8, 12, 24]), days=st.integers(1, 4))
def test_slot_sojourns_exact(n, days):
    s = HarvestSeries.from_currents(np.linspace(0, 0.01, 24 * days))
    visits = slot_cluster(s, SlotConfig(n))
    assert len(visits) == n * days
    assert all(v.duration_h == 24 / n and v.n_samples == 24 // n for v in visits)
    assert [v.state for v in visits] == list(range(n)) * days
