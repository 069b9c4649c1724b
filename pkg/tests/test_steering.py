import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ransim.flows import Flow, QciClass
from ransim.kernel import RngStream
from ransim.radio import Beam
from ransim.steering import (ConflictGroups, EnergyParams, EnergyState, FailureDetector, Leg,
                             PowerState, ReservationLedger, Slot, SteeringKpis, apply_partition,
                             detect_link_failure, energy_state_update, idle_energy,
                             interfered_fraction, per_link_interfered, pgia_conflict_sets,
                             pgia_fallback_all, pgia_fallback_steer, pgia_partition_resources,
                             silence_sleeping, steer_flow)
from ransim.topology import MmwLink, aimed_beams, generate_mmw_links


# -- failure detection ------------------------------------------------------

def test_failure_needs_consecutive_run():
    assert detect_link_failure([-7] * 5)
    assert not detect_link_failure([-7, -7, -7, -7, 0, -7, -7, -7, -7])
    # threshold is strict
    assert not detect_link_failure([-6.0] * 10)
    with pytest.raises(ValueError):
        detect_link_failure([])


@given(st.lists(st.floats(-20, 10), min_size=1, max_size=40))
def test_streaming_detector_matches_batch(hist):
    d = FailureDetector()
    fired = any([d.push(v) for v in hist])
    assert fired == detect_link_failure(hist)


# -- steering -----------------------------------------------------------------

def test_steer_picks_best_alive_leg_and_releases_dead():
    f = Flow(0, 0)
    ledger = ReservationLedger()
    ledger.reserve(0, 1, 12)
    legs = [Leg(0, 5e6), Leg(1, 50e6, alive=False), Leg(2, 20e6)]
    kp = SteeringKpis()
    d = steer_flow(f, legs, ledger, kp, current=1)
    assert d.target.aiv_index == 2
    assert d.released == {1: 12}
    assert ledger.held(0, 1) == 0 and ledger.release(0, 1) == 0
    assert kp.switches == 1 and f.legs == [2]


def test_steer_tie_goes_to_lower_index():
    d = steer_flow(Flow(0, 0), [Leg(3, 1e6), Leg(1, 1e6)])
    assert d.target.aiv_index == 1


def test_steer_respects_delay_budget():
    f = Flow(0, 0, QciClass.GBR_HIGH, 1e6)
    d = steer_flow(f, [Leg(0, 100e6, delay_ms=40.0), Leg(1, 2e6, delay_ms=5.0)])
    assert d.target.aiv_index == 1


def test_all_legs_dead_suspends():
    kp = SteeringKpis()
    d = steer_flow(Flow(0, 0), [Leg(0, 1e6, alive=False)], ReservationLedger(), kp)
    assert d.suspended and d.target is None and kp.suspended == 1


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 50)), max_size=20))
def test_ledger_balances(ops):
    led = ReservationLedger()
    for aiv, n in ops:
        led.reserve(7, aiv, n)
    freed = sum(led.release(7, a) for a in range(4))
    assert freed == led.reserved_total == led.released_total
    assert all(led.held_on(a) == 0 for a in range(4))


# -- energy -------------------------------------------------------------------

def test_sleep_entered_after_k_idle_ttis():
    es = EnergyState(0)
    p = EnergyParams(k_idle_ttis=3)
    states = [energy_state_update(es, 0.0, 0.0, p).state for _ in range(4)]
    assert states == [PowerState.ACTIVE, PowerState.ACTIVE, PowerState.SLEEP, PowerState.SLEEP]


def test_wake_takes_one_tti():
    es = EnergyState(0, PowerState.SLEEP)
    energy_state_update(es, 100.0)
    assert es.state is PowerState.ACTIVE
    # the TTI in which data arrived was still accounted asleep
    assert es.energy == pytest.approx(EnergyParams().p_sleep)


@given(st.integers(0, 200), st.integers(1, 10))
def test_idle_energy_closed_form(ticks, k):
    p = EnergyParams(k_idle_ttis=k)
    es = EnergyState(0)
    for _ in range(ticks):
        energy_state_update(es, 0.0, 0.0, p)
    assert es.energy == pytest.approx(idle_energy(ticks, p))


def test_energy_load_term():
    es = EnergyState(0)
    energy_state_update(es, 10.0, 0.5)
    assert es.energy == pytest.approx(10.0 + 90.0 * 0.5)
    with pytest.raises(ValueError):
        energy_state_update(es, 0.0, 1.5)


@given(st.lists(st.booleans(), min_size=1, max_size=6), st.integers(0, 1000))
def test_sleeping_nodes_are_silent(asleep, seed):
    rng = np.random.default_rng(seed)
    assign = rng.integers(-1, 5, (len(asleep), 10))
    states = [EnergyState(i, PowerState.SLEEP if s else PowerState.ACTIVE) for i, s in enumerate(asleep)]
    out = silence_sleeping(assign, states)
    for i, s in enumerate(asleep):
        if s:
            assert (out[i] == -1).all()
        else:
            assert (out[i] == assign[i]).all()


# -- PGIA ---------------------------------------------------------------------

def _link(i, tx, rx, bw=15.0):
    tb, rb = aimed_beams(tx, rx, bw, 20.0, 10.0)
    return MmwLink(i, tx, rx, tb, rb)


def test_far_apart_links_do_not_conflict():
    links = [_link(0, (0.0, 0.0), (100.0, 0.0)), _link(1, (0.0, 5000.0), (100.0, 5000.0))]
    g = pgia_conflict_sets(links)
    assert g.groups == [(0,), (1,)] and g.edges == []


def test_aligned_links_conflict():
    # link 1's transmitter sits right behind link 0's transmitter, pointing the same way
    links = [_link(0, (0.0, 0.0), (100.0, 0.0)), _link(1, (-20.0, 1.0), (80.0, 1.0))]
    g = pgia_conflict_sets(links)
    assert g.groups == [(0, 1)]


def test_conflict_groups_must_partition():
    with pytest.raises(ValueError):
        ConflictGroups((0, 1), [(0,)], [])
    with pytest.raises(ValueError):
        ConflictGroups((0, 1), [(0, 1), (1,)], [])


@given(st.integers(1, 40), st.integers(0, 10_000))
def test_partition_slots_disjoint_within_groups(n, seed):
    links = generate_mmw_links(n, 0.25, RngStream("mmw", seed))
    g = pgia_conflict_sets(links)
    slots = pgia_partition_resources(g)
    for grp in g.groups:
        assert sum(slots[i].share for i in grp) == pytest.approx(1.0)
        for a in grp:
            for b in grp:
                if a != b:
                    assert not slots[a].overlaps(slots[b])
    apply_partition(links, slots)
    assert all(0 < l.resource_share <= 1 for l in links)


@given(st.integers(1, 40), st.integers(0, 10_000))
def test_interfered_fraction_bounds(n, seed):
    links = generate_mmw_links(n, 0.5, RngStream("mmw", seed))
    free = interfered_fraction(links)
    sliced = interfered_fraction(links, pgia_partition_resources(pgia_conflict_sets(links)))
    assert 0.0 <= sliced <= 1.0 and 0.0 <= free <= 1.0
    per = per_link_interfered(links)
    assert set(np.unique(per)) <= {0.0, 1.0}


def test_pairwise_conflicts_vanish_after_slicing():
    # a pair that conflicts is fully protected once time-sliced
    links = [_link(0, (0.0, 0.0), (100.0, 0.0)), _link(1, (-20.0, 1.0), (80.0, 1.0))]
    assert interfered_fraction(links) == 1.0
    assert interfered_fraction(links, pgia_partition_resources(pgia_conflict_sets(links))) == 0.0


def test_fallback_moves_newest():
    assert pgia_fallback_steer((3, 9, 1, 7), 2) == [7, 9]
    assert pgia_fallback_steer((1, 2), 5) == []
    with pytest.raises(ValueError):
        pgia_fallback_steer((1,), 0)
    links = generate_mmw_links(100, 0.25, RngStream("mmw", 1))
    g = pgia_conflict_sets(links)
    kept, moved = pgia_fallback_all(links, g, 3)
    assert len(kept) + len(moved) == 100
    assert all(len(grp) - sum(i in moved for i in grp) <= 3 for grp in g.groups)


def test_mixed_beam_patterns_rejected():
    a = _link(0, (0.0, 0.0), (100.0, 0.0))
    b = _link(1, (500.0, 0.0), (600.0, 0.0), bw=30.0)
    with pytest.raises(ValueError):
        pgia_conflict_sets([a, b])


def test_slot_helpers():
    assert Slot(0.0, 0.5).overlaps(Slot(0.25, 1.0))
    assert not Slot(0.0, 0.5).overlaps(Slot(0.5, 1.0))
    assert Slot(0.25, 0.75).share == 0.5
