"""Cross-module invariants, each as a plain check the acceptance run can reuse."""
import dataclasses
import filecmp

import numpy as np
import pytest

from ransim import harness, kernels
from ransim.experiments import interworking as iw
from ransim.experiments import nn_activation, slice_sla
from ransim.flows import Flow, QciClass
from ransim.radio import sinr
from ransim.slicing import FlowQueue, schedule_tti
from ransim.steering import EnergyParams, EnergyState, energy_state_update, silence_sleeping


def _small_configs():
    E = harness.EXPERIMENTS
    return [
        harness.ScenarioConfig("NnActivation", seeds=[0, 1], params=E["NnActivation"].params(n_ttis=6)),
        harness.ScenarioConfig("Fqam", seeds=[0, 1, 2]),
        harness.ScenarioConfig("Pgia", seeds=[0, 1], params=E["Pgia"].params(densities=[20, 100])),
        harness.ScenarioConfig("SliceSla", seeds=[0], params=E["SliceSla"].params(windows=2, window_ticks=1000)),
        harness.ScenarioConfig("Interworking", seeds=[0, 1], params=E["Interworking"].params(
            sites=1, loads_mbps=[8.0], measure_s=8.0, warmup_s=1.0, max_drain_s=10.0)),
    ]


def check_determinism(tmp_path):
    for cfg in _small_configs():
        outs = []
        for k in range(2):
            res = harness.run_experiment(cfg)
            d = tmp_path / f"{cfg.experiment}_{k}"
            harness.write_outputs(res, d)
            outs.append(d)
        name = harness.EXPERIMENTS[cfg.experiment].csv_name
        for suffix in ("", "_report"):
            a, b = outs[0] / f"{name}{suffix}.csv", outs[1] / f"{name}{suffix}.csv"
            assert a.read_bytes() == b.read_bytes(), f"{cfg.experiment}{suffix} differs between runs"


def check_rb_audit():
    p = nn_activation.NnActivationParams(n_ttis=10)
    total = 0
    for seed in range(3):
        total += nn_activation.run_seed(p, seed, audit=True).audits
    assert total == 3 * 10 * len(p.nn_counts) * 2
    # slice scheduler: never more RBs than the node has, in any TTI
    rng = np.random.default_rng(0)
    for _ in range(50):
        qs = [FlowQueue(Flow(i, i, QciClass.GBR_HIGH, 1e6), int(rng.integers(50, 400)), 5000, False, 100)
              for i in range(3)] + [FlowQueue(Flow(3 + i, 3 + i), int(rng.integers(50, 400)), 0, True)
                                    for i in range(3)]
        rb = int(rng.integers(1, 30))
        for t in range(0, 100, 5):
            for q in qs:
                q.arrive(t)
                q.expire(t)
            g = schedule_tti(qs, rb, 5)
            assert sum(g.rbs.values()) <= rb
            assert all(g.served[f] <= g.rbs[f] * q.bits_per_rb for f, q in ((q.flow.id, q) for q in qs))


def check_sinr_monotone():
    rng = np.random.default_rng(1)
    for _ in range(300):
        s = float(rng.uniform(-100, -50))
        intf = rng.uniform(-120, -60, int(rng.integers(0, 6))).tolist()
        extra = float(rng.uniform(-120, -60))
        assert sinr(s, intf + [extra], -100.0).linear <= sinr(s, intf, -100.0).linear
        # per-RB kernel: switching on one more transmitter never helps another user
        nodes, users = int(rng.integers(2, 6)), int(rng.integers(2, 8))
        rx = rng.uniform(1e-12, 1e-8, (users, nodes))
        assign = rng.integers(0, users, (nodes, 1))
        k = int(rng.integers(0, nodes))
        off = assign.copy()
        off[k, 0] = -1
        a_on = kernels.rb_sinr(rx, assign, 1e-13)
        a_off = kernels.rb_sinr(rx, off, 1e-13)
        for n in range(nodes):
            if n != k and assign[n, 0] != assign[k, 0]:
                assert a_on[n, 0] <= a_off[n, 0] * (1 + 1e-12)


def check_sleep_silence():
    rng = np.random.default_rng(2)
    par = EnergyParams(k_idle_ttis=3)
    states = [EnergyState(i) for i in range(4)]
    rx = rng.uniform(1e-12, 1e-8, (6, 4))
    for t in range(200):
        for es in states:
            energy_state_update(es, float(rng.random() < 0.2) * 1000.0, 0.3, par)
        assign = silence_sleeping(rng.integers(0, 6, (4, 10)), states)
        for i, es in enumerate(states):
            if not es.transmitting:
                assert (assign[i] == -1).all()
        # a silent node adds nothing to anyone's interference
        s = kernels.rb_sinr(rx, assign, 1e-13)
        quiet = [i for i, es in enumerate(states) if not es.transmitting]
        if quiet:
            s_without = kernels.rb_sinr(rx[:, [i for i in range(4) if i not in quiet]],
                                        np.delete(assign, quiet, axis=0), 1e-13)
            assert np.allclose(np.delete(s, quiet, axis=0), s_without, rtol=1e-12, atol=0)


def check_bit_conservation():
    p = dataclasses.replace(slice_sla.SliceSlaParams(), windows=2, window_ticks=1000)
    r = slice_sla.run_seed(p, 0)
    for f, off in r.offered_bits.items():
        assert r.delivered_bits[f] >= 0 and r.dropped_bits[f] >= 0
        if off:  # finite sources: delivered + dropped never exceeds what arrived
            assert r.delivered_bits[f] + r.dropped_bits[f] <= off
    ip = iw.InterworkingParams(sites=1, loads_mbps=[8.0], measure_s=8.0, warmup_s=1.0, max_drain_s=10.0)
    for mode in iw.MODES:
        assert iw.run_seed(ip, 1, mode, 8.0).conservation_ok
    rng = np.random.default_rng(3)
    qs = [FlowQueue(Flow(i, i, QciClass.GBR_LOW, 1e6), 200, int(rng.integers(100, 3000)), False, 50)
          for i in range(4)]
    for t in range(0, 2000, 5):
        for q in qs:
            q.arrive(t)
            q.expire(t)
        schedule_tti(qs, 6, 5)
    for q in qs:
        assert q.served_total + q.dropped_total + q.backlog == q.offered_total


def check_qci_one_step():
    r = slice_sla.run_seed(slice_sla.SliceSlaParams(windows=6), 1)
    for trace in r.qci_trace.values():
        assert all(abs(b - a) <= 1 for a, b in zip(trace, trace[1:]))


def check_jt_non_degradation():
    rng = np.random.default_rng(4)
    for _ in range(500):
        nodes, users = int(rng.integers(2, 6)), int(rng.integers(2, 8))
        rx = rng.uniform(1e-12, 1e-8, (users, nodes))
        assign = rng.integers(-1, users, (nodes, 1))
        u = int(rng.integers(0, users))
        a, b = int(rng.integers(0, nodes)), int(rng.integers(0, nodes))
        if a == b:
            continue
        single = assign.copy()
        single[a, 0] = u
        joint = single.copy()
        joint[b, 0] = u
        s1 = kernels.rb_sinr(rx, single, 1e-13)[a, 0]
        s2 = kernels.rb_sinr(rx, joint, 1e-13)[a, 0]
        assert s2 >= s1 * (1 - 1e-12)


CHECKS = {
    "determinism": check_determinism,
    "rb_allocation_audit": check_rb_audit,
    "sinr_interferer_monotonicity": check_sinr_monotone,
    "sleep_implies_silence": check_sleep_silence,
    "bit_conservation": check_bit_conservation,
    "qci_one_step_bound": check_qci_one_step,
    "jt_sinr_non_degradation": check_jt_non_degradation,
}


def test_determinism(tmp_path):
    check_determinism(tmp_path)


def test_rb_allocation_audit():
    check_rb_audit()


def test_sinr_interferer_monotonicity():
    check_sinr_monotone()


def test_sleep_implies_silence():
    check_sleep_silence()


def test_bit_conservation():
    check_bit_conservation()


def test_qci_one_step_bound():
    check_qci_one_step()


def test_jt_sinr_non_degradation():
    check_jt_non_degradation()
