"""Flow-level comparison of Standalone 5G, hard handover, fast UP switch and dual connectivity.

Each sector carries a co-sited LTE node and a 5G node. Flows (file downloads)
arrive as a Poisson process at uniformly dropped, slowly moving UEs and share
their serving node's capacity equally (processor sharing). Rates are piecewise
constant between events, so the simulation jumps from event to event on the
tick grid: arrivals, completions, measurement instants and interruption ends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..interworking import (FilteredMeas, InterruptionLedger, Mode, TriggerState, UeContext,
                            decide_switch, execute_fs, execute_hh)
from ..kernel import TICK_S, TICKS_PER_S, Simulation
from ..radio import beam_gain_db, noise_dbm, pathloss_db, spectral_efficiency
from ..stats import percentile
from ..topology import SECTOR_BORESIGHTS, hex_site_positions, in_hexagon

COLUMNS = ("mode", "load", "seed", "p10_throughput_bps", "mean_throughput_bps")
MODES = ("Standalone5G", "HH", "FS", "DC")


@dataclass
class InterworkingParams:
    modes: list[str] = field(default_factory=lambda: list(MODES))
    loads_mbps: list[float] = field(default_factory=lambda: [4.0, 6.0, 8.0, 10.0, 12.0])
    sites: int = 7
    isd_m: float = 500.0
    tx_power_dbm: float = 46.0
    lte_carrier_ghz: float = 2.0
    nr_carrier_ghz: float = 15.0
    lte_bandwidth_mhz: float = 20.0
    nr_bandwidth_mhz: float = 20.0
    standalone_bandwidth_mhz: float = 40.0
    nr_array_gain_db: float = 10.0
    shadowing_db: float = 8.0
    shadow_decorrelation_m: float = 50.0
    nr_nlos_extra_sigma_db: float = 6.0
    indoor_fraction: float = 0.8
    lte_penetration_db: float = 20.0
    nr_penetration_db: float = 38.0
    payload_bits: float = 16e6
    ue_speed_kmh: float = 3.0
    meas_period_ticks: int = 200
    filter_a: float = 0.5
    hysteresis_db: float = 3.0
    ttt_ticks: int = 800
    hh_interruption_ticks: int = 1500
    warmup_s: float = 5.0
    measure_s: float = 40.0
    max_drain_s: float = 60.0
    percentile: float = 10.0


@dataclass
class FlowRecord:
    id: int
    arrival: int
    central: bool
    done: int | None = None
    delivered: float = 0.0


@dataclass
class InterworkingRun:
    seed: int
    mode: str
    load: float
    throughputs: np.ndarray  # measured (central, in-window, completed) flows
    unfinished: int
    handovers: int
    ledger: InterruptionLedger
    conservation_ok: bool
    draw_counts: dict


def _p_los(d_m):
    d = np.maximum(d_m, 1.0)
    return np.minimum(18.0 / d, 1.0) * (1.0 - np.exp(-d / 63.0)) + np.exp(-d / 63.0)


class _Net:
    """Static per-node data: positions, boresights, carriers, bandwidths."""

    def __init__(self, p: InterworkingParams, mode: Mode):
        sites = hex_site_positions(p.sites, p.isd_m)
        self.sites = sites
        xs, ys, bs = [], [], []
        for sx, sy in sites:
            for b in SECTOR_BORESIGHTS:
                xs.append(sx)
                ys.append(sy)
                bs.append(b)
        n = len(xs)
        self.n_sectors = n
        if mode is Mode.STANDALONE:
            self.layers = [("nr", p.nr_carrier_ghz, p.standalone_bandwidth_mhz * 1e6)]
        else:
            self.layers = [("lte", p.lte_carrier_ghz, p.lte_bandwidth_mhz * 1e6),
                           ("nr", p.nr_carrier_ghz, p.nr_bandwidth_mhz * 1e6)]
        self.x = np.tile(xs, len(self.layers))
        self.y = np.tile(ys, len(self.layers))
        self.bore = np.tile(bs, len(self.layers))
        self.layer = np.repeat(np.arange(len(self.layers)), n)
        self.is_nr = np.array([self.layers[l][0] == "nr" for l in self.layer])
        self.carrier = np.array([self.layers[l][1] for l in self.layer])
        self.bw = np.array([self.layers[l][2] for l in self.layer])
        self.noise_mw = 10.0 ** (np.array([noise_dbm(b) for b in self.bw]) / 10.0)
        self.n = len(self.x)


def _drop_positions(stream, n, sites, isd_m):
    out = np.empty((n, 2))
    k = 0
    r = isd_m / math.sqrt(3.0)
    while k < n:
        s = sites[int(stream.integers(0, len(sites)))]
        c = stream.uniform(-r, r, 2) + s
        if in_hexagon(c[None, :], s, isd_m)[0] and math.hypot(c[0] - s[0], c[1] - s[1]) >= 10.0:
            out[k] = c
            k += 1
    return out


def run_seed(p: InterworkingParams, seed: int, mode: str, load_mbps: float) -> InterworkingRun:
    mode = Mode(mode)
    net = _Net(p, mode)
    if mode is Mode.STANDALONE and np.any(~net.is_nr):
        raise AssertionError("standalone 5G must not use the LTE layer")
    label = f"{load_mbps:g}"
    sim = Simulation(horizon=int((p.warmup_s + p.measure_s + p.max_drain_s) * TICKS_PER_S), master_seed=seed)
    arr_s = sim.stream(f"arrivals/{label}")
    ue_s = sim.stream(f"ue/{label}")
    ch_s = sim.stream(f"shadowing/{label}")

    rate_flows = load_mbps * 1e6 * net.n_sectors / p.payload_bits  # flows per second, whole area
    t_meas_end = int((p.warmup_s + p.measure_s) * TICKS_PER_S)
    warm = int(p.warmup_s * TICKS_PER_S)
    hard_end = sim.horizon
    speed = p.ue_speed_kmh / 3.6 * TICK_S  # metres per tick
    ledger = InterruptionLedger()
    center = net.sites[0]

    # per-flow state, kept in parallel lists indexed by slot
    flows: list[FlowRecord] = []
    active: list[int] = []
    pos: dict[int, np.ndarray] = {}
    vel: dict[int, np.ndarray] = {}
    shadow: dict[int, np.ndarray] = {}
    fading: dict[int, tuple] = {}  # flow -> (z, los, indoor)
    rx: dict[int, np.ndarray] = {}
    remaining: dict[int, float] = {}
    ctx: dict[int, UeContext] = {}
    fmeas: dict[int, list[FilteredMeas]] = {}
    trig: dict[int, list[TriggerState]] = {}
    handovers = 0

    def channel(f: int) -> np.ndarray:
        d = np.hypot(pos[f][0] - net.x, pos[f][1] - net.y)
        az = np.degrees(np.arctan2(pos[f][1] - net.y, pos[f][0] - net.x))
        g = beam_gain_db(az, net.bore, 70.0, 14.0, 20.0)
        return p.tx_power_dbm + g - pathloss_db(d, net.carrier) - shadow[f]

    def shadow_db(z, los, indoor) -> np.ndarray:
        # one draw per site sector, shared by the co-sited carriers
        sh = []
        for name, _, _ in net.layers:
            if name == "lte":
                sh.append(p.shadowing_db * z + (p.lte_penetration_db if indoor else 0.0))
            else:
                sig = np.where(los, p.shadowing_db, p.shadowing_db + p.nr_nlos_extra_sigma_db)
                sh.append(sig * z + (p.nr_penetration_db if indoor else 0.0))
        return np.concatenate(sh)

    step_m = speed * p.meas_period_ticks
    rho = math.exp(-step_m / p.shadow_decorrelation_m) if p.shadow_decorrelation_m > 0 else 1.0

    def layer_nodes(layer: int) -> range:
        return range(layer * net.n_sectors, (layer + 1) * net.n_sectors)

    def rsrp_view(f: int) -> np.ndarray:
        # serving-beam array gain counts toward the 5G measurement
        return rx[f] + np.where(net.is_nr, p.nr_array_gain_db, 0.0)

    def new_flow(tick: int) -> None:
        fid = len(flows)
        xy = _drop_positions(ue_s, 1, net.sites, p.isd_m)[0]
        heading = ue_s.uniform(0.0, 2 * math.pi)
        central = bool(in_hexagon(xy[None, :], center, p.isd_m)[0])
        flows.append(FlowRecord(fid, tick, central))
        pos[fid] = xy
        vel[fid] = speed * np.array([math.cos(heading), math.sin(heading)])
        z = ch_s.normal(0.0, 1.0, net.n_sectors)
        d = np.hypot(xy[0] - net.x[:net.n_sectors], xy[1] - net.y[:net.n_sectors])
        los = ch_s.uniform(0.0, 1.0, net.n_sectors) < _p_los(d)
        indoor = ch_s.uniform() < p.indoor_fraction
        fading[fid] = (z, los, indoor)
        shadow[fid] = shadow_db(z, los, indoor)
        rx[fid] = channel(fid)
        view = rsrp_view(fid)
        fm, tr, serving = [], [], []
        if mode is Mode.DC:
            for layer in range(2):
                nodes = list(layer_nodes(layer))
                best = max(nodes, key=lambda j: (view[j], -j))
                serving.append(best)
                fm.append(measure_rsrp_dict(view, nodes, None, p.filter_a))
                tr.append(TriggerState())
        else:
            nodes = list(range(net.n))
            best = max(nodes, key=lambda j: (view[j], -j))
            serving.append(best)
            fm.append(measure_rsrp_dict(view, nodes, None, p.filter_a))
            tr.append(TriggerState())
        ctx[fid] = UeContext(fid, mode, serving, cp_legs=set(range(net.n)) if mode in (Mode.FS, Mode.DC)
                             else {serving[0]})
        fmeas[fid] = fm
        trig[fid] = tr
        remaining[fid] = float(p.payload_bits)
        active.append(fid)

    def measure(tick: int) -> None:
        nonlocal handovers
        for f in active:
            pos[f] = pos[f] + vel[f] * p.meas_period_ticks
            if rho < 1.0:
                z, los, indoor = fading[f]
                z = rho * z + math.sqrt(1.0 - rho * rho) * ch_s.normal(0.0, 1.0, net.n_sectors)
                fading[f] = (z, los, indoor)
                shadow[f] = shadow_db(z, los, indoor)
            rx[f] = channel(f)
            view = rsrp_view(f)
            c = ctx[f]
            for leg_i, (fm, tr) in enumerate(zip(fmeas[f], trig[f])):
                nodes = list(fm.value)
                measure_rsrp_dict(view, nodes, fm, p.filter_a)
                # the trigger runs on the same trace in every mode; only execution differs
                target = decide_switch(fm, c.serving[leg_i], tick, tr, p.hysteresis_db, p.ttt_ticks)
                if target is None:
                    continue
                if mode is Mode.HH:
                    execute_hh(c, target, tick, ledger, p.hh_interruption_ticks)
                    handovers += 1
                elif mode is Mode.FS:
                    execute_fs(c, target, tick, ledger=ledger)
                else:
                    # DC legs and standalone 5G re-point without a user-plane gap
                    c.serving[leg_i] = target

    def rates(tick: int) -> dict[int, float]:
        served = {}
        for f in active:
            if ctx[f].interrupted(tick):
                continue
            for j in ctx[f].serving:
                served.setdefault(j, []).append(f)
        on = np.zeros(net.n, dtype=bool)
        on[list(served)] = True
        out = {f: 0.0 for f in active}
        for j, fl in served.items():
            same = on & (net.layer == net.layer[j])
            same[j] = False
            for f in fl:
                lin = 10.0 ** (rx[f] / 10.0)
                s = lin[j] * (10.0 ** (p.nr_array_gain_db / 10.0) if net.is_nr[j] else 1.0)
                sinr = s / (lin[same].sum() + net.noise_mw[j])
                out[f] += net.bw[j] * float(spectral_efficiency(sinr)) / len(fl)
        return out

    def measured_pending() -> bool:
        return any(flows[f].central and warm <= flows[f].arrival < t_meas_end for f in active)

    tick = 0
    next_arrival = int(math.ceil(arr_s.exponential(1.0 / rate_flows) * TICKS_PER_S))
    next_meas = p.meas_period_ticks
    while tick < hard_end:
        if tick >= t_meas_end and not measured_pending():
            break
        r = rates(tick)
        # next event on the tick grid
        nxt = min(next_arrival, next_meas, hard_end)
        for f in active:
            if ctx[f].interrupted(tick):
                nxt = min(nxt, ctx[f].interruption_until)
            elif r[f] > 0:
                nxt = min(nxt, tick + max(1, math.ceil(remaining[f] / (r[f] * TICK_S) - 1e-9)))
        dt = nxt - tick
        done = []
        for f in active:
            if r[f] > 0:
                bits = min(remaining[f], r[f] * dt * TICK_S)
                remaining[f] -= bits
                flows[f].delivered += bits
                if remaining[f] <= 1e-6 * p.payload_bits:
                    flows[f].delivered += remaining[f]
                    remaining[f] = 0.0
                    done.append(f)
        tick = nxt
        for f in done:
            flows[f].done = tick
            active.remove(f)
        if tick == next_meas:
            measure(tick)
            next_meas += p.meas_period_ticks
        while next_arrival <= tick:
            new_flow(tick)
            next_arrival += max(1, int(math.ceil(arr_s.exponential(1.0 / rate_flows) * TICKS_PER_S)))

    meas = [fr for fr in flows if fr.central and warm <= fr.arrival < t_meas_end]
    tput = np.array([p.payload_bits / ((fr.done - fr.arrival) * TICK_S) for fr in meas if fr.done is not None])
    unfinished = sum(fr.done is None for fr in meas)
    cons = all(fr.delivered <= p.payload_bits * (1 + 1e-9) for fr in flows) and all(
        abs(fr.delivered - p.payload_bits) <= 1e-6 * p.payload_bits for fr in flows if fr.done is not None)
    return InterworkingRun(seed, mode.value, load_mbps, tput, unfinished, handovers, ledger, cons,
                           sim.draw_counts())


def measure_rsrp_dict(view: np.ndarray, nodes, previous: FilteredMeas | None, a: float) -> FilteredMeas:
    meas = previous if previous is not None else FilteredMeas(a)
    return meas.update({j: float(view[j]) for j in nodes})


def aggregate(p: InterworkingParams, runs: list[InterworkingRun]) -> list[dict]:
    """One row per (mode, load, seed) plus a pooled row per (mode, load) with seed = "all"."""
    rows = []
    order = {m: i for i, m in enumerate(MODES)}
    runs = sorted(runs, key=lambda r: (order.get(r.mode, 9), r.load, r.seed))
    for r in runs:
        if len(r.throughputs):
            rows.append({"mode": r.mode, "load": r.load, "seed": r.seed,
                         "p10_throughput_bps": percentile(r.throughputs, p.percentile),
                         "mean_throughput_bps": float(r.throughputs.mean())})
    keys = sorted({(r.mode, r.load) for r in runs}, key=lambda k: (order.get(k[0], 9), k[1]))
    for mode, load in keys:
        pool = np.concatenate([r.throughputs for r in runs if r.mode == mode and r.load == load])
        if len(pool):
            rows.append({"mode": mode, "load": load, "seed": "all",
                         "p10_throughput_bps": percentile(pool, p.percentile),
                         "mean_throughput_bps": float(pool.mean())})
    return rows


def pooled_p10(p: InterworkingParams, runs: list[InterworkingRun], mode: str, load: float) -> float:
    pool = np.concatenate([r.throughputs for r in runs if r.mode == mode and r.load == load])
    return percentile(pool, p.percentile)
