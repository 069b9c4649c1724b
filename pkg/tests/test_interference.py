import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ransim import kernels
from ransim.interference import (AllocationError, CoordinatedScheduler, FqamMode, Measurement,
                                 RbAllocation, RbState, assign_fqam, audit_allocation,
                                 coordinated_schedule, detect_interfered_users, fqam_user_rate,
                                 reserve_jt_rbs, select_active_nns, select_jt_candidates)


def test_measurement_validation():
    with pytest.raises(ValueError):
        Measurement(0, 5, {1: -80.0})
    with pytest.raises(ValueError):
        Measurement(0, 1, {1: float("nan")})


def test_jt_candidates_threshold_is_strict():
    # gap of exactly 6 dB is not below 6 dB
    m = [Measurement(0, 1, {1: -80.0, 2: -86.0}), Measurement(1, 1, {1: -80.0, 2: -85.9})]
    out = select_jt_candidates(m, 6.0)
    assert 0 not in out and out[1] == frozenset({1, 2})


def test_jt_candidates_cap_and_cluster():
    m = Measurement(0, 1, {1: -80.0, 2: -81.0, 3: -82.0, 9: -80.5})
    assert select_jt_candidates(m, 6.0, cluster={1, 2, 3}, max_set=2)[0] == frozenset({1, 2})
    assert select_jt_candidates(m, 6.0, cluster={1, 2, 3}, max_set=3)[0] == frozenset({1, 2, 3})
    with pytest.raises(ValueError):
        select_jt_candidates(m, 0.0)


def test_reserve_rbs():
    assert reserve_jt_rbs(3, 10, 100) == 30
    assert reserve_jt_rbs(1, 3, 100) == 34
    assert reserve_jt_rbs(0, 3, 100) == 0
    with pytest.raises(ValueError):
        reserve_jt_rbs(4, 3, 100)


def test_nn_activation_order_is_greedy():
    base = np.full(4, -90.0)
    cand = np.array([[-80.0, -95.0], [-80.0, -95.0], [-95.0, -80.0], [-89.0, -95.0]])
    assert select_active_nns(cand, base, 2) == [0, 1]
    assert select_active_nns(cand, base, 2, min_gain_db=20.0) == []
    with pytest.raises(ValueError):
        select_active_nns(cand, base, 3)


def _random_schedule(seed, nodes=3, users=9, rb=20, jt_frac=0.3, edge=True):
    rng = np.random.default_rng(seed)
    ids = list(range(nodes))
    serving = rng.integers(0, nodes, users)
    served = {n: [u for u in range(users) if serving[u] == n] for n in ids}
    jt = {}
    for u in range(users):
        if rng.random() < jt_frac and nodes > 1:
            other = int((serving[u] + 1 + rng.integers(0, nodes - 1)) % nodes)
            jt[u] = frozenset({int(serving[u]), other})
    nb = {u: int((serving[u] + 1) % nodes) for u in range(users) if u not in jt} if edge else {}
    res = reserve_jt_rbs(len(jt), users, rb)
    return CoordinatedScheduler(ids, served, rb, jt, nb, res), serving


@given(st.integers(0, 5000), st.integers(1, 5), st.integers(1, 15), st.booleans())
def test_coordinated_schedule_passes_audit(seed, nodes, users, edge):
    sched, _ = _random_schedule(seed, nodes, users, edge=edge)
    for t in range(4):
        audit_allocation(sched.schedule(t))


def test_audit_catches_double_booking():
    a = RbAllocation.empty([0, 1], 2)
    a.ue[:, 0] = 7
    a.state[:, 0] = RbState.NORMAL
    with pytest.raises(AllocationError):
        audit_allocation(a)


def test_audit_catches_mismatched_jt():
    a = RbAllocation.empty([0, 1], 1)
    a.ue[:, 0] = [3, 4]
    a.state[:, 0] = RbState.JT
    a.coop[(0, 0)] = a.coop[(1, 0)] = frozenset({0, 1})
    with pytest.raises(AllocationError):
        audit_allocation(a)


def test_audit_catches_useless_mute():
    a = RbAllocation.empty([0, 1], 1)
    a.state[0, 0] = RbState.MUTED
    with pytest.raises(AllocationError):
        audit_allocation(a)


def test_plain_round_robin_without_im():
    alloc = coordinated_schedule([0], {0: [4, 5]}, 4)
    assert alloc.ue[0].tolist() == [4, 5, 4, 5]
    assert (alloc.state == RbState.NORMAL).all()


@given(st.integers(0, 10_000))
def test_jt_never_degrades_sinr(seed):
    # the same user served by its JT set versus by its serving node alone, with
    # the other cluster node either idle or carrying another user
    rng = np.random.default_rng(seed)
    rx = rng.uniform(1e-12, 1e-8, (4, 3))
    noise = 1e-13
    for other in (-1, 1):
        single = kernels.rb_sinr(rx, np.array([[0], [other], [2]]), noise)[0, 0]
        joint = kernels.rb_sinr(rx, np.array([[0], [0], [2]]), noise)[0, 0]
        assert joint >= single * (1 - 1e-12)


def test_detect_victims_and_dominant_interferer():
    noise = -100.0
    m = [Measurement(0, 1, {1: -80.0, 2: -79.0, 3: -90.0}),
         Measurement(1, 1, {1: -60.0, 2: -90.0}),
         Measurement(2, 1, {1: -80.0})]
    v = detect_interfered_users(m, noise, 3.0, beam_of=lambda u, n: 2)
    assert [x.ue_id for x in v] == [0]
    assert v[0].interferer == (2, 2)
    assert v[0].sinr_db < 0


def test_fqam_modes():
    v = detect_interfered_users([Measurement(0, 1, {1: -80.0, 2: -79.0})], -100.0)
    sp = assign_fqam(v, "Spatial", beam_airtime={(2, 0): 0.25})
    assert sp.coverage(0) == 0.25 and sp.coverage(99) == 0.0
    fr = assign_fqam(v, FqamMode.FREQUENCY, pool_fraction=0.25)
    assert fr.coverage(0, victim_share=0.5) == 0.5
    assert fr.coverage(0, victim_share=0.1) == 1.0
    tm = assign_fqam(v, FqamMode.TIME, time_period=4)
    assert tm.coverage(0) == 0.25


@given(st.floats(-10, 30), st.floats(0, 1), st.floats(0.01, 1))
def test_fqam_rate_bounds(db, cov, share):
    s = 10 ** (db / 10)
    base = fqam_user_rate(s, 0.0, 1e6, share)
    up = fqam_user_rate(s, cov, 1e6, share)
    full = fqam_user_rate(s, 1.0, 1e6, share)
    assert up >= base * (1 - 1e-12)
    assert full >= up * (1 - 1e-12)
