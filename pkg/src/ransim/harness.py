"""Scenario configuration, the multi-seed runner, report rows and CSV output.

A scenario is one experiment kind plus its parameter block, a seed list and a
few run-level switches. Configs are strict JSON: every field has a default,
unknown keys and wrong types are rejected before anything runs.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
import time
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, kernels
from .experiments import fqam, interworking, nn_activation, pgia, slice_sla
from .interference import FqamMode
from .kernel import LTE_TTI_TICKS, Simulation, TICKS_PER_S
from .slicing import Sla
from .stats import mean_and_stderr, percentile
from .topology import generate_macro_grid, generate_mmw_links

REPORT_COLUMNS = ("experiment", "parameters", "statistic", "value", "stderr", "n_seeds")
TRACE_COLUMNS = ("tick", "node", "rb", "ue", "mode")
DEPLOYMENT_COLUMNS = ("node_id", "kind", "x_m", "y_m", "tx_power_dbm", "carrier_ghz", "active")
KPI_COLUMNS = ("series", "unit", "tick", "value")


class ConfigError(ValueError):
    """A scenario config that cannot be run."""


@dataclass(frozen=True)
class _Kind:
    module: Any
    params: type
    csv_name: str
    summary: str


EXPERIMENTS: dict[str, _Kind] = {
    "NnActivation": _Kind(nn_activation, nn_activation.NnActivationParams, "nn_activation",
                          "mean user throughput versus active nomadic nodes, with and without IM"),
    "Fqam": _Kind(fqam, fqam.FqamParams, "fqam",
                  "edge (p5) and mean user rate with FQAM on dominant interfering beams"),
    "Pgia": _Kind(pgia, pgia.PgiaParams, "pgia",
                  "fraction of interfered mmW links versus density, with and without PGIA"),
    "SliceSla": _Kind(slice_sla, slice_sla.SliceSlaParams, "slice_sla",
                      "GBR slice fulfillment next to a saturating best-effort slice"),
    "Interworking": _Kind(interworking, interworking.InterworkingParams, "interworking",
                          "p10 and mean flow throughput for SA, HH, FS and DC versus load"),
}


def _default_seeds() -> list[int]:
    return list(range(20))


@dataclass
class ScenarioConfig:
    """One runnable scenario.

    ``horizon_ticks`` and ``warmup_ticks`` of 0 keep the experiment's own
    duration. Otherwise they override it: NnActivation runs horizon/5 LTE TTIs,
    SliceSla runs horizon/window_ticks windows, Interworking warms up for
    ``warmup_ticks`` and measures arrivals up to ``horizon_ticks``. Fqam and
    Pgia are snapshot experiments and accept neither.
    """
    experiment: str
    seeds: list[int] = field(default_factory=_default_seeds)
    horizon_ticks: int = 0
    warmup_ticks: int = 0
    trace_allocations: bool = False
    dump_deployment: bool = False
    params: Any = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"expected one of {sorted(EXPERIMENTS)}")
        if self.params is None:
            self.params = EXPERIMENTS[self.experiment].params()


# --------------------------------------------------------------------------
# strict (de)serialization

def _coerce(tp, value, path: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union or type(tp).__name__ == "UnionType":
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        errs = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(a, value, path)
            except ConfigError as e:
                errs.append(str(e))
        raise ConfigError(errs[0] if errs else f"{path}: bad value {value!r}")
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
        (inner,) = typing.get_args(tp) or (Any,)
        return [_coerce(inner, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        return _from_dict(tp, value, path)
    if tp is Any:
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported field type {tp!r}")


def _from_dict(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {unknown}; allowed {names}")
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kw[f.name] = _coerce(hints[f.name], data[f.name], f"{path}.{f.name}" if path else f.name)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{path or 'config'}: missing required key {f.name!r}")
    try:
        return cls(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "experiment" not in data:
        raise ConfigError("config: missing required key 'experiment'")
    kind = data["experiment"]
    if not isinstance(kind, str) or kind not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown kind {kind!r}; expected one of {sorted(EXPERIMENTS)}")
    body = dict(data)
    params = body.pop("params", {})
    cfg = _from_dict(ScenarioConfig, body, "")
    cfg.params = _from_dict(EXPERIMENTS[kind].params, params, "params")
    validate_config(cfg)
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def _reject_constant(name):
    raise ConfigError(f"non-finite number {name} is not valid JSON")


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key {k!r}")
        out[k] = v
    return out


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicates, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from e
    return config_from_dict(data)


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)


def config_hash(cfg: ScenarioConfig) -> str:
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# validation and effective parameters

def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _check_params(kind: str, p) -> None:
    if kind == "NnActivation":
        _need(p.sites in (1, 7, 19), "params.sites must be 1, 7 or 19")
        _need(p.n_ues > 0, "params.n_ues must be positive")
        _need(0.0 <= p.hotspot_fraction <= 1.0, "params.hotspot_fraction must be in [0, 1]")
        _need(p.macro_ue_area in ("sector", "disc"), "params.macro_ue_area must be 'sector' or 'disc'")
        _need(len(p.nn_counts) > 0 and all(0 <= k <= p.nn_candidates for k in p.nn_counts),
              "params.nn_counts must be non-empty and within [0, nn_candidates]")
        _need(len(set(p.nn_counts)) == len(p.nn_counts), "params.nn_counts must not repeat")
        _need(p.n_ttis > 0, "params.n_ttis must be positive")
        _need(p.jt_max_set >= 2, "params.jt_max_set must be at least 2")
    elif kind == "Fqam":
        _need(p.sites in (1, 7, 19), "params.sites must be 1, 7 or 19")
        _need(p.n_ues > 0, "params.n_ues must be positive")
        _need(p.beams_per_sector > 0, "params.beams_per_sector must be positive")
        _need(p.mode in [m.value for m in FqamMode], f"params.mode must be one of {[m.value for m in FqamMode]}")
        _need(0.0 < p.pool_fraction <= 1.0, "params.pool_fraction must be in (0, 1]")
        _need(p.time_period >= 1, "params.time_period must be at least 1")
        _need(0.0 < p.percentile <= 100.0, "params.percentile must be in (0, 100]")
    elif kind == "Pgia":
        _need(len(p.densities) > 0 and all(d >= 0 for d in p.densities),
              "params.densities must be non-empty and non-negative")
        _need(p.area_km2 > 0, "params.area_km2 must be positive")
        _need(len(p.link_length_m) == 2 and 0 < p.link_length_m[0] <= p.link_length_m[1],
              "params.link_length_m must be [min, max] with 0 < min <= max")
        _need(p.max_group_size >= 0, "params.max_group_size must be >= 0")
    elif kind == "SliceSla":
        _need(len(p.slices) > 0, "params.slices must not be empty")
        _need(p.window_ticks > 0 and p.window_ticks % LTE_TTI_TICKS == 0,
              f"params.window_ticks must be a positive multiple of {LTE_TTI_TICKS}")
        _need(p.windows > 0, "params.windows must be positive")
        _need(p.aggregate in ("min", "mean"), "params.aggregate must be 'min' or 'mean'")
        names = [s.name for s in p.slices]
        _need(len(set(names)) == len(names), "params.slices names must be unique")
        for i, s in enumerate(p.slices):
            try:
                Sla(s.guaranteed_rate_bps, s.max_delay_ms, s.fulfillment_target, s.name)
            except ValueError as e:
                raise ConfigError(f"params.slices[{i}]: {e}") from e
            _need(0 <= s.default_qci <= 3, f"params.slices[{i}].default_qci must be in 0..3")
            _need(s.n_flows >= 0 and s.offered_bps >= 0, f"params.slices[{i}]: counts and rates must be >= 0")
    elif kind == "Interworking":
        _need(len(p.modes) > 0 and set(p.modes) <= set(interworking.MODES),
              f"params.modes must be a non-empty subset of {list(interworking.MODES)}")
        _need(len(p.loads_mbps) > 0 and all(l > 0 for l in p.loads_mbps),
              "params.loads_mbps must be non-empty and positive")
        _need(len(set(p.loads_mbps)) == len(p.loads_mbps), "params.loads_mbps must not repeat")
        _need(p.sites in (1, 7, 19), "params.sites must be 1, 7 or 19")
        _need(p.payload_bits > 0, "params.payload_bits must be positive")
        _need(0.0 < p.filter_a <= 1.0, "params.filter_a must be in (0, 1]")
        _need(p.hysteresis_db >= 0, "params.hysteresis_db must be >= 0")
        _need(p.meas_period_ticks > 0, "params.meas_period_ticks must be positive")
        _need(p.measure_s > 0 and p.warmup_s >= 0, "params.measure_s must be > 0 and warmup_s >= 0")
        _need(0.0 < p.percentile <= 100.0, "params.percentile must be in (0, 100]")


def effective_params(cfg: ScenarioConfig):
    """The parameter block with run-level horizon/warm-up overrides applied."""
    kind, p = cfg.experiment, cfg.params
    h, w = cfg.horizon_ticks, cfg.warmup_ticks
    if kind in ("Fqam", "Pgia"):
        _need(h == 0 and w == 0, f"{kind} is a snapshot experiment: horizon_ticks and warmup_ticks must be 0")
        return p
    if kind == "NnActivation":
        _need(w == 0, "NnActivation has no warm-up phase: warmup_ticks must be 0")
        if h:
            _need(h % LTE_TTI_TICKS == 0, f"horizon_ticks must be a multiple of {LTE_TTI_TICKS} for NnActivation")
            return dataclasses.replace(p, n_ttis=h // LTE_TTI_TICKS)
        return p
    if kind == "SliceSla":
        _need(w == 0, "SliceSla has no warm-up phase: warmup_ticks must be 0")
        if h:
            _need(h % p.window_ticks == 0, "horizon_ticks must be a whole number of SliceSla windows")
            return dataclasses.replace(p, windows=h // p.window_ticks)
        return p
    # Interworking
    q = p
    if w:
        q = dataclasses.replace(q, warmup_s=w / TICKS_PER_S)
    if h:
        start = int(round(q.warmup_s * TICKS_PER_S))
        _need(h > start, "horizon_ticks must exceed the warm-up")
        q = dataclasses.replace(q, measure_s=(h - start) / TICKS_PER_S)
    return q


def validate_config(cfg: ScenarioConfig) -> None:
    """Raise ConfigError with a specific message if ``cfg`` cannot be run."""
    _need(cfg.experiment in EXPERIMENTS, f"unknown experiment {cfg.experiment!r}")
    _need(isinstance(cfg.params, EXPERIMENTS[cfg.experiment].params),
          f"params must be {EXPERIMENTS[cfg.experiment].params.__name__}")
    _need(len(cfg.seeds) > 0, "seeds must not be empty")
    _need(all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in cfg.seeds),
          "seeds must be non-negative integers")
    _need(len(set(cfg.seeds)) == len(cfg.seeds), "seeds must not repeat")
    _need(cfg.horizon_ticks >= 0 and cfg.warmup_ticks >= 0, "horizon_ticks and warmup_ticks must be >= 0")
    _need(not cfg.trace_allocations or cfg.experiment == "NnActivation",
          "trace_allocations is only supported by NnActivation")
    _check_params(cfg.experiment, cfg.params)
    _check_params(cfg.experiment, effective_params(cfg))


# --------------------------------------------------------------------------
# result types

@dataclass(frozen=True)
class ReportRow:
    experiment: str
    parameters: str
    statistic: str
    value: float
    stderr: float | None
    n_seeds: int

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if (self.stderr is not None) != (self.n_seeds > 1):
            raise ValueError("stderr is present exactly when n_seeds > 1")


@dataclass
class KpiSeries:
    name: str
    unit: str
    samples: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        ticks = [t for t, _ in self.samples]
        if any(b < a for a, b in zip(ticks, ticks[1:])):
            raise ValueError("KPI ticks must be non-decreasing")

    def append(self, tick: int, value: float) -> None:
        if self.samples and tick < self.samples[-1][0]:
            raise ValueError("KPI ticks must be non-decreasing")
        self.samples.append((int(tick), float(value)))


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    columns: tuple[str, ...]
    rows: list[dict]
    report: list[ReportRow]
    runs: list
    kpis: list[KpiSeries] = field(default_factory=list)
    trace: list[tuple] | None = None
    deployment: list[dict] | None = None
    draw_counts: dict[str, dict] = field(default_factory=dict)
    elapsed_s: float = 0.0


# --------------------------------------------------------------------------
# running

def _units(kind: str, p, seeds: list[int]) -> list[tuple]:
    seeds = sorted(seeds)
    if kind == "Interworking":
        return [(s, m, l) for m in p.modes for l in p.loads_mbps for s in seeds]
    return [(s,) for s in seeds]


def _run_unit(args):
    kind, p, unit, trace = args
    mod = EXPERIMENTS[kind].module
    if kind == "Interworking":
        return mod.run_seed(p, *unit), None
    if kind == "NnActivation" and trace:
        rows: list = []
        return mod.run_seed(p, unit[0], trace=rows), rows
    return mod.run_seed(p, unit[0]), None


def _unit_label(unit: tuple) -> str:
    return "/".join(f"{u:g}" if isinstance(u, float) else str(u) for u in unit)


def _se(values) -> float | None:
    return mean_and_stderr(values)[1]


def _report(kind: str, p, runs: list, rows: list[dict]) -> list[ReportRow]:
    out = []
    if kind == "NnActivation":
        for r in rows:
            n = r["n_seeds"]
            out.append(ReportRow(kind, f"nn_count={r['nn_count']};im={r['im_enabled']}",
                                 "mean_user_throughput_bps", r["mean_throughput_bps"],
                                 r["stderr_bps"] if n > 1 else None, n))
    elif kind == "Fqam":
        n = len(runs)
        for r in rows:
            key = "fqam" if r["fqam_enabled"] else "base"
            per_p = [percentile(getattr(x, key), p.percentile) for x in runs]
            per_m = [float(getattr(x, key).mean()) for x in runs]
            par = f"fqam={r['fqam_enabled']};mode={r['mode']}"
            out.append(ReportRow(kind, par, f"p{p.percentile:g}_rate_bps", r["p5_rate_bps"], _se(per_p), n))
            out.append(ReportRow(kind, par, "mean_rate_bps", r["mean_rate_bps"], _se(per_m), n))
    elif kind == "Pgia":
        for r in rows:
            n = r["n_seeds"]
            out.append(ReportRow(kind, f"density={r['density']};pgia={r['pgia_enabled']}",
                                 "interfered_fraction", r["mean_interfered_fraction"],
                                 r["stddev"] / math.sqrt(n) if n > 1 else None, n))
    elif kind == "SliceSla":
        n = len(runs)
        keys = sorted({(row["slice_id"], row["window"]) for x in runs for row in x.rows})
        for sid, w in keys:
            vals = [row["fraction"] for x in runs for row in x.rows
                    if row["slice_id"] == sid and row["window"] == w]
            m, se = mean_and_stderr(vals)
            out.append(ReportRow(kind, f"slice={p.slices[sid].name};window={w}", "fulfillment_fraction",
                                 m, se, n))
    elif kind == "Interworking":
        pooled = [r for r in rows if r["seed"] == "all"]
        for r in pooled:
            sel = [x for x in runs if x.mode == r["mode"] and x.load == r["load"] and len(x.throughputs)]
            n = len(sel)
            per_p = [percentile(x.throughputs, p.percentile) for x in sel]
            per_m = [float(x.throughputs.mean()) for x in sel]
            par = f"mode={r['mode']};load_mbps={r['load']:g}"
            out.append(ReportRow(kind, par, f"p{p.percentile:g}_throughput_bps", r["p10_throughput_bps"],
                                 _se(per_p) if n > 1 else None, max(n, 1)))
            out.append(ReportRow(kind, par, "mean_throughput_bps", r["mean_throughput_bps"],
                                 _se(per_m) if n > 1 else None, max(n, 1)))
    return out


def _kpis(kind: str, p, runs: list) -> list[KpiSeries]:
    if kind != "SliceSla":
        return []
    out = []
    for x in runs:
        for sid, vals in sorted(x.slice_throughput_bps.items()):
            s = KpiSeries(f"seed{x.seed}/{p.slices[sid].name}/throughput", "bit/s")
            for w, v in enumerate(vals):
                s.append((w + 1) * p.window_ticks, v)
            out.append(s)
    return out


def deployment_rows(cfg: ScenarioConfig, seed: int | None = None) -> list[dict]:
    """Node table of the scenario's deployment for ``seed`` (first seed by default)."""
    kind, p = cfg.experiment, effective_params(cfg)
    seed = min(cfg.seeds) if seed is None else seed

    def row(nid, kind_, x, y, pw, f, active=True):
        return {"node_id": nid, "kind": kind_, "x_m": round(float(x), 3), "y_m": round(float(y), 3),
                "tx_power_dbm": float(pw), "carrier_ghz": f, "active": int(active)}

    out = []
    if kind == "NnActivation":
        sim = Simulation(horizon=0, master_seed=seed)
        macros, nns, _ = nn_activation._drop(p, sim)
        for n in macros + nns:
            out.append(row(n.id, n.kind.value, n.x, n.y, n.tx_power_dbm,
                           "|".join(f"{a.carrier_ghz:g}" for a in n.aivs), n.active))
    elif kind == "Fqam":
        for n in generate_macro_grid(p.sites, 3, p.isd_m, None, p.macro_power_dbm).nodes:
            out.append(row(n.id, n.kind.value, n.x, n.y, n.tx_power_dbm,
                           "|".join(f"{a.carrier_ghz:g}" for a in n.aivs)))
    elif kind == "Pgia":
        sim = Simulation(horizon=0, master_seed=seed)
        d = max(p.densities)
        links = generate_mmw_links(int(round(d * p.area_km2)), p.area_km2, sim.stream(f"mmw/{d}"),
                                   tuple(p.link_length_m), p.beamwidth_deg, p.peak_gain_db,
                                   p.front_to_back_db)
        for l in links:
            out.append(row(2 * l.id, "MmwEndpoint", *l.tx, 0.0, f"{p.carrier_ghz:g}"))
            out.append(row(2 * l.id + 1, "MmwEndpoint", *l.rx, 0.0, f"{p.carrier_ghz:g}"))
    elif kind == "SliceSla":
        out.append(row(0, "MacroSector", 0.0, 0.0, p.tx_power_dbm, "2"))
    elif kind == "Interworking":
        net = interworking._Net(p, interworking.Mode.DC)
        for i in range(net.n):
            out.append(row(i, "MacroSector", net.x[i], net.y[i], p.tx_power_dbm, f"{net.carrier[i]:g}"))
    return out


def run_experiment(cfg: ScenarioConfig, parallel: int = 1) -> ExperimentResult:
    """Run every seed of ``cfg`` and fold the results in seed order.

    Units of work (one seed, or one (seed, mode, load) for Interworking) are
    independent, so ``parallel > 1`` farms them out to worker processes; the
    output does not depend on it.
    """
    validate_config(cfg)
    if parallel < 1:
        raise ConfigError("parallel must be >= 1")
    kind = cfg.experiment
    p = effective_params(cfg)
    units = _units(kind, p, cfg.seeds)
    first = min(cfg.seeds)
    jobs = [(kind, p, u, cfg.trace_allocations and u[0] == first) for u in units]
    t0 = time.perf_counter()
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            results = list(ex.map(_run_unit, jobs, chunksize=max(1, len(jobs) // (4 * parallel))))
    else:
        results = [_run_unit(j) for j in jobs]
    runs = [r for r, _ in results]
    trace = next((t for _, t in results if t is not None), None)
    mod = EXPERIMENTS[kind].module
    rows = mod.aggregate(p, runs)
    draws = {_unit_label(u): r.draw_counts for u, r in zip(units, runs)}
    res = ExperimentResult(cfg, tuple(mod.COLUMNS), rows, _report(kind, p, runs, rows), runs,
                           _kpis(kind, p, runs), trace,
                           deployment_rows(cfg) if cfg.dump_deployment else None, draws)
    res.elapsed_s = time.perf_counter() - t0
    return res


def run_scenario(cfg: ScenarioConfig, parallel: int = 1) -> list[ReportRow]:
    return run_experiment(cfg, parallel).report


# --------------------------------------------------------------------------
# output

def format_value(v) -> str:
    """Plain decimal text: no exponent, shortest round-tripping digits."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return str(float(v))
        return np.format_float_positional(float(v), trim="-")
    return str(v)


def _as_dict(row) -> dict:
    return dataclasses.asdict(row) if dataclasses.is_dataclass(row) else dict(row)


def export_csv(rows, path, columns=None) -> Path:
    """Header plus one line per row, ``\\n`` line ends, no locale formatting.

    ``rows`` may be dicts or dataclass instances; columns default to the
    ReportRow layout.
    """
    rows = [_as_dict(r) for r in rows]
    cols = tuple(columns) if columns is not None else REPORT_COLUMNS
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            missing = [c for c in cols if c not in r]
            if missing:
                raise ValueError(f"row lacks column(s) {missing}")
            w.writerow([format_value(r[c]) for c in cols])
    return path


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def read_report_csv(path) -> list[ReportRow]:
    out = []
    for r in read_csv(path):
        out.append(ReportRow(r["experiment"], r["parameters"], r["statistic"], float(r["value"]),
                             float(r["stderr"]) if r["stderr"] != "" else None, int(r["n_seeds"])))
    return out


def _versions() -> dict:
    import scipy
    return {"ransim": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "kernel_backend": kernels.BACKEND}


def write_outputs(res: ExperimentResult, out_dir) -> dict:
    """Write the experiment CSVs and ``manifest.json`` under ``out_dir``; return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = EXPERIMENTS[res.config.experiment].csv_name
    files = [export_csv(res.rows, out / f"{name}.csv", res.columns),
             export_csv(res.report, out / f"{name}_report.csv")]
    if res.kpis:
        files.append(export_csv([{"series": k.name, "unit": k.unit, "tick": t, "value": v}
                                 for k in res.kpis for t, v in k.samples],
                                out / f"{name}_kpis.csv", KPI_COLUMNS))
    if res.trace is not None:
        files.append(export_csv([dict(zip(TRACE_COLUMNS, t)) for t in res.trace],
                                out / f"{name}_allocations.csv", TRACE_COLUMNS))
    if res.deployment is not None:
        files.append(export_csv(res.deployment, out / f"{name}_deployment.csv", DEPLOYMENT_COLUMNS))
    manifest = {
        "experiment": res.config.experiment,
        "config_hash": config_hash(res.config),
        "config": config_to_dict(res.config),
        "seeds": sorted(res.config.seeds),
        "versions": _versions(),
        "files": [f.name for f in files],
        "elapsed_s": round(res.elapsed_s, 3),
        "draw_counts": res.draw_counts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return manifest


def canonical_config_path(kind: str) -> Path:
    return Path(__file__).parent / "configs" / f"{EXPERIMENTS[kind].csv_name}.json"
