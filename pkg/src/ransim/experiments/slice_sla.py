"""A GBR slice and a saturating best-effort slice sharing one overloaded node."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..flows import Flow, QciClass
from ..kernel import LTE_TTI_TICKS, TICK_S, Simulation
from ..radio import lte_profile, noise_dbm, pathloss_db, spectral_efficiency
from ..slicing import (FlowQueue, QciController, RateMeter, Sla, SliceRegistry, adapt_qci,
                       core_feedback, monitor_sla, schedule_tti)
from ..topology import uniform_in_disc

COLUMNS = ("window", "slice_id", "fraction", "met", "qci_histogram")


@dataclass
class SliceDef:
    name: str
    guaranteed_rate_bps: float
    max_delay_ms: float
    fulfillment_target: float
    default_qci: int
    n_flows: int
    offered_bps: float = 0.0  # 0 means a saturating (full-buffer) source


@dataclass
class SliceSlaParams:
    bandwidth_mhz: float = 5.0
    tx_power_dbm: float = 46.0
    antenna_gain_db: float = 14.0
    cell_radius_m: float = 600.0
    interference_over_noise_db: float = 25.0
    windows: int = 10
    window_ticks: int = 5000
    rate_window_ms: float = 20.0
    deescalate_below_util: float = 0.8
    aggregate: str = "min"
    slices: list[SliceDef] = field(default_factory=lambda: [
        SliceDef("gbr", 1e6, 20.0, 0.99, int(QciClass.NON_GBR_PRIORITY), 8, 1e6),
        SliceDef("bulk", 0.0, 1000.0, 0.5, int(QciClass.BEST_EFFORT), 40, 0.0),
    ])


@dataclass
class SliceSlaRun:
    seed: int
    rows: list[dict]
    qci_trace: dict[int, list[int]]  # flow id -> ordinal per window
    slice_throughput_bps: dict[int, list[float]]
    delivered_bits: dict[int, int]
    offered_bits: dict[int, int]
    dropped_bits: dict[int, int]
    events: list[dict]
    draw_counts: dict


def run_seed(p: SliceSlaParams, seed: int) -> SliceSlaRun:
    sim = Simulation(horizon=p.windows * p.window_ticks, master_seed=seed)
    aiv = lte_profile(p.bandwidth_mhz)
    tti = LTE_TTI_TICKS
    if p.window_ticks % tti:
        raise ValueError("window must be a whole number of TTIs")
    n_total = sum(s.n_flows for s in p.slices)
    xy = uniform_in_disc(sim.stream("placement"), n_total, p.cell_radius_m)
    d = np.hypot(xy[:, 0], xy[:, 1])
    rb_noise = noise_dbm(aiv.rb_bandwidth_hz)
    rx = p.tx_power_dbm - 10 * math.log10(aiv.rb_count) + p.antenna_gain_db - pathloss_db(d, aiv.carrier_ghz)
    sinr_db = rx - (rb_noise + 10 * math.log10(1 + 10 ** (p.interference_over_noise_db / 10)))
    bpr = np.floor(aiv.rb_bandwidth_hz * spectral_efficiency(10 ** (sinr_db / 10)) * tti * TICK_S)
    bpr = np.maximum(bpr, 1).astype(int)

    reg = SliceRegistry(p.aggregate)
    queues: list[FlowQueue] = []
    ctl: dict[int, QciController] = {}
    slas = {}
    fid = 0
    for sd in p.slices:
        sla = Sla(sd.guaranteed_rate_bps, sd.max_delay_ms, sd.fulfillment_target, sd.name)
        sid = reg.register_slice(sla, QciClass(sd.default_qci))
        slas[sid] = sla
        for _ in range(sd.n_flows):
            f = Flow(fid, fid)
            reg.classify_flow(f, sid)
            offered = int(round(sd.offered_bps * tti * TICK_S))
            delay_ticks = int(round(sd.max_delay_ms * 1e-3 / TICK_S))
            queues.append(FlowQueue(f, int(bpr[fid]), offered, sd.offered_bps <= 0,
                                    delay_ticks if sd.offered_bps > 0 else None))
            ctl[fid] = QciController(QciClass(sd.default_qci))
            fid += 1

    ttis_per_window = p.window_ticks // tti
    meter_ttis = max(1, int(round(p.rate_window_ms * 1e-3 / TICK_S / tti)))
    meters = {q.flow.id: RateMeter(meter_ttis) for q in queues}
    rows, events = [], []
    qci_trace = {q.flow.id: [] for q in queues}
    thr = {sid: [] for sid in reg.slices}
    for w in range(p.windows):
        met = {q.flow.id: np.zeros(ttis_per_window, dtype=bool) for q in queues}
        used = 0
        bits_by_slice = {sid: 0 for sid in reg.slices}
        for k in range(ttis_per_window):
            tick = (w * ttis_per_window + k) * tti
            arrived = {q.flow.id: q.arrive(tick) for q in queues}
            for q in queues:
                q.expire(tick)
            grant = schedule_tti(queues, aiv.rb_count, tti)
            used += sum(grant.rbs.values())
            end = tick + tti
            for q in queues:
                f = q.flow
                meters[f.id].push(grant.served[f.id], arrived[f.id])
                sla = slas[f.slice_id]
                g_tti = int(round(sla.guaranteed_rate_bps * tti * TICK_S))
                ok_rate = meters[f.id].met(g_tti)
                ok_delay = q.hol_delay(end) * TICK_S * 1e3 <= sla.max_delay_ms
                met[f.id][k] = ok_rate and ok_delay
                bits_by_slice[f.slice_id] += grant.served[f.id]
        util = used / (aiv.rb_count * ttis_per_window)
        for sid, sl in reg.slices.items():
            rep = monitor_sla(reg, sid, w, met, p.window_ticks)
            events.append(core_feedback(reg, sid))
            hist = [0, 0, 0, 0]
            for f in sorted(sl.flows):
                hist[int(queues[f].flow.qci)] += 1
            rows.append({"window": w, "slice_id": sid, "fraction": rep.fraction, "met": int(rep.met),
                         "qci_histogram": ";".join(f"{QciClass(i).name}:{c}" for i, c in enumerate(hist))})
            thr[sid].append(bits_by_slice[sid] / (p.window_ticks * TICK_S))
            for f in sorted(sl.flows):
                adapt_qci(queues[f].flow, rep.flow_fraction[f], sl.sla, ctl[f], w, util,
                          p.deescalate_below_util)
        for q in queues:
            qci_trace[q.flow.id].append(int(q.flow.qci))
    return SliceSlaRun(seed, rows, qci_trace, thr,
                       {q.flow.id: q.served_total for q in queues},
                       {q.flow.id: q.offered_total for q in queues},
                       {q.flow.id: q.dropped_total for q in queues},
                       events, sim.draw_counts())


def aggregate(p: SliceSlaParams, runs: list[SliceSlaRun]) -> list[dict]:
    """Per-window status rows; with several seeds each row is tagged by seed order."""
    out = []
    for r in sorted(runs, key=lambda r: r.seed):
        for row in r.rows:
            out.append(dict(row, seed=r.seed) if len(runs) > 1 else dict(row))
    return out
