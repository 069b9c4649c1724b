"""Hotspot with nomadic nodes under a macro umbrella: activation and coordination."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..interference import (CoordinatedScheduler, Measurement, audit_allocation,
                            reserve_jt_rbs, select_active_nns, select_jt_candidates)
from ..kernel import Simulation
from ..radio import lte_profile, noise_dbm, spectral_efficiency
from ..topology import generate_hotspot, generate_macro_grid, uniform_in_disc
from ..stats import mean_and_stderr
from .common import rsrp_matrix

COLUMNS = ("nn_count", "im_enabled", "mean_throughput_bps", "stderr_bps", "n_seeds")


@dataclass
class NnActivationParams:
    sites: int = 1
    isd_m: float = 500.0
    macro_power_dbm: float = 46.0
    n_ues: int = 30
    hotspot_fraction: float = 2.0 / 3.0
    hotspot_radius_m: float = 50.0
    hotspot_distance_m: float = 350.0
    macro_radius_m: float = 250.0
    # "sector": the 1/3 non-hotspot UEs fall in the umbrella sector's wedge; "disc": whole site
    macro_ue_area: str = "sector"
    nn_candidates: int = 4
    nn_power_dbm: float = 30.0
    nn_antenna_gain_db: float = 5.0
    nn_counts: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    jt_delta_db: float = 6.0
    jt_max_set: int = 2
    edge_delta_db: float = 6.0
    activation_gain_db: float = 3.0
    shadowing_macro_db: float = 8.0
    shadowing_nn_db: float = 4.0
    bandwidth_mhz: float = 20.0
    n_ttis: int = 60


@dataclass
class NnRun:
    mean_tput: dict[tuple[int, bool], float]
    user_tput: dict[tuple[int, bool], np.ndarray]
    audits: int = 0
    draw_counts: dict = field(default_factory=dict)


def _drop(p: NnActivationParams, sim: Simulation):
    grid = generate_macro_grid(p.sites, 3, p.isd_m, (lte_profile(p.bandwidth_mhz),), p.macro_power_dbm)
    macros = grid.nodes
    ang = math.radians(30.0)
    center = (p.hotspot_distance_m * math.cos(ang), p.hotspot_distance_m * math.sin(ang))
    place = sim.stream("placement")
    n_hot = int(round(p.n_ues * p.hotspot_fraction))
    hot = uniform_in_disc(place, n_hot, p.hotspot_radius_m, center)
    if p.macro_ue_area == "sector":
        n = p.n_ues - n_hot
        r = p.macro_radius_m * np.sqrt(place.uniform(0.0, 1.0, n))
        th = np.radians(30.0 + place.uniform(-60.0, 60.0, n))
        spread = np.column_stack([r * np.cos(th), r * np.sin(th)])
    else:
        spread = uniform_in_disc(place, p.n_ues - n_hot, p.macro_radius_m)
    ue_xy = np.vstack([hot, spread])
    nns = generate_hotspot(p.nn_candidates, p.hotspot_radius_m, center, sim.stream("nn"),
                           p.nn_power_dbm, lte_profile(p.bandwidth_mhz), p.nn_antenna_gain_db,
                           first_id=len(macros))
    shadow = sim.stream("shadowing")
    sig = np.array([p.shadowing_macro_db] * len(macros) + [p.shadowing_nn_db] * len(nns))
    sh = shadow.normal(0.0, 1.0, (p.n_ues, len(sig))) * sig[None, :]
    rsrp = rsrp_matrix(ue_xy, macros + nns, sh)
    return macros, nns, rsrp


def run_seed(p: NnActivationParams, seed: int, audit: bool = False, trace: list | None = None) -> NnRun:
    """All NN counts with and without IM on one drop.

    With ``trace`` given, the per-RB allocation of every node is appended as
    (tick, node, rb, ue, mode) for the largest NN count with IM enabled.
    """
    sim = Simulation(horizon=p.n_ttis * 5, master_seed=seed)
    macros, nns, rsrp = _drop(p, sim)
    n_mac = len(macros)
    aiv = lte_profile(p.bandwidth_mhz)
    rb = aiv.rb_count
    noise_mw = 10.0 ** (noise_dbm(aiv.rb_bandwidth_hz) / 10.0)
    per_rb = rsrp - 10.0 * math.log10(rb)
    order = select_active_nns(rsrp[:, n_mac:], rsrp[:, :n_mac].max(axis=1),
                              max(p.nn_counts), p.activation_gain_db)
    res = NnRun({}, {})
    tti_s = aiv.tti_ticks * 0.2e-3
    for k in p.nn_counts:
        active = [n_mac + c for c in order[:k]]
        cols = list(range(n_mac)) + active
        sub = per_rb[:, cols]
        rx_mw = 10.0 ** (sub / 10.0)
        serving = np.argmax(sub, axis=1)
        served = {j: [u for u in range(p.n_ues) if serving[u] == j] for j in range(len(cols))}
        cluster = list(range(n_mac, len(cols)))
        for im in (False, True):
            jt, edge, reserved = {}, {}, 0
            if im and len(cluster) >= 2:
                meas = [Measurement(u, int(serving[u]),
                                    {j: float(sub[u, j]) for j in cluster})
                        for u in range(p.n_ues) if serving[u] in cluster]
                jt = select_jt_candidates(meas, p.jt_delta_db, set(cluster), p.jt_max_set)
                n_cluster_users = len(meas)
                reserved = reserve_jt_rbs(len(jt), n_cluster_users, rb)
                for m in meas:
                    if m.ue_id in jt:
                        continue
                    nb = max((j for j in cluster if j != m.serving), key=lambda j: (sub[m.ue_id, j], -j))
                    if sub[m.ue_id, m.serving] - sub[m.ue_id, nb] < p.edge_delta_db:
                        edge[m.ue_id] = nb
            macro_sched = CoordinatedScheduler(list(range(n_mac)), served, rb)
            nn_sched = CoordinatedScheduler(cluster, served, rb, jt, edge, reserved)
            bits = np.zeros(p.n_ues)
            for t in range(p.n_ttis):
                a_nn = nn_sched.schedule(t)
                a_mac = macro_sched.schedule(t)
                if audit:
                    audit_allocation(a_nn)
                    res.audits += 1
                if trace is not None and im and k == max(p.nn_counts):
                    for alloc in (a_mac, a_nn) if cluster else (a_mac,):
                        trace.extend((t * aiv.tti_ticks, cols[n], r, u, m)
                                     for _, n, r, u, m in alloc.trace_rows())
                assign = np.vstack([a_mac.assignment(), a_nn.assignment()]) \
                    if cluster else a_mac.assignment()
                s = kernels.rb_sinr(rx_mw, assign, noise_mw)
                rate = aiv.rb_bandwidth_hz * spectral_efficiency(s)
                # JT nodes report the same SINR for their user: count it once
                dup = (assign[:, None, :] == assign[None, :, :]).sum(axis=1)
                mask = assign >= 0
                np.add.at(bits, assign[mask], (rate / dup)[mask] * tti_s)
            tput = bits / (p.n_ttis * tti_s)
            res.user_tput[(k, im)] = tput
            res.mean_tput[(k, im)] = float(tput.mean())
    res.draw_counts = sim.draw_counts()
    return res


def aggregate(p: NnActivationParams, runs: list[NnRun]) -> list[dict]:
    """Mean user throughput per (NN count, IM) with its standard error across drops."""
    rows = []
    for im in (False, True):
        for k in p.nn_counts:
            m, se = mean_and_stderr([r.mean_tput[(k, im)] for r in runs])
            rows.append({"nn_count": k, "im_enabled": int(im), "mean_throughput_bps": m,
                         "stderr_bps": 0.0 if se is None else se, "n_seeds": len(runs)})
    return rows
