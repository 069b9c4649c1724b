"""Interfered mmW links versus link density, with and without PGIA time-slicing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import steering
from ..kernel import Simulation
from ..topology import generate_mmw_links

COLUMNS = ("density", "pgia_enabled", "mean_interfered_fraction", "stddev", "n_seeds")


@dataclass
class PgiaParams:
    densities: list[int] = field(default_factory=lambda: [20, 50, 100, 150, 200])
    area_km2: float = 1.0
    link_length_m: list[float] = field(default_factory=lambda: [50.0, 200.0])
    beamwidth_deg: float = 15.0
    peak_gain_db: float = 20.0
    front_to_back_db: float = 10.0
    carrier_ghz: float = 60.0
    ci_threshold_db: float = 12.0
    # groups above this size push their newest links to sub-6 GHz; 0 disables fallback
    max_group_size: int = 0


@dataclass
class PgiaRun:
    seed: int
    fraction: dict[tuple[int, bool], float]
    moved: dict[int, int]
    draw_counts: dict


def run_seed(p: PgiaParams, seed: int) -> PgiaRun:
    sim = Simulation(horizon=0, master_seed=seed)
    frac, moved = {}, {}
    for density in p.densities:
        n = int(round(density * p.area_km2))
        links = generate_mmw_links(n, p.area_km2, sim.stream(f"mmw/{density}"),
                                   tuple(p.link_length_m), p.beamwidth_deg, p.peak_gain_db,
                                   p.front_to_back_db)
        if not links:
            frac[(density, False)] = frac[(density, True)] = 0.0
            moved[density] = 0
            continue
        kw = dict(ci_threshold_db=p.ci_threshold_db, carrier_ghz=p.carrier_ghz)
        frac[(density, False)] = steering.interfered_fraction(links, None, **kw)
        groups = steering.pgia_conflict_sets(links, **kw)
        gone: list[int] = []
        if p.max_group_size > 0:
            links, gone = steering.pgia_fallback_all(links, groups, p.max_group_size)
            groups = steering.pgia_conflict_sets(links, **kw)
        slots = steering.pgia_partition_resources(groups)
        frac[(density, True)] = steering.interfered_fraction(links, slots, **kw) if links else 0.0
        moved[density] = len(gone)
    return PgiaRun(seed, frac, moved, sim.draw_counts())


def aggregate(p: PgiaParams, runs: list[PgiaRun]) -> list[dict]:
    rows = []
    for density in p.densities:
        for pgia in (False, True):
            v = np.array([r.fraction[(density, pgia)] for r in runs])
            rows.append({"density": density, "pgia_enabled": int(pgia),
                         "mean_interfered_fraction": float(v.mean()),
                         "stddev": float(v.std(ddof=1)) if len(v) > 1 else 0.0,
                         "n_seeds": len(v)})
    return rows
