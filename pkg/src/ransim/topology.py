"""Deployments, user placement, mobility and traffic generation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from itertools import count

import numpy as np

from .flows import Flow
from .kernel import TICK_S, RngStream
from .radio import AivProfile, Beam, lte_profile, sector_beam


class NodeKind(str, enum.Enum):
    MACRO_SECTOR = "MacroSector"
    NOMADIC_NODE = "NomadicNode"
    MMW_ENDPOINT = "MmwEndpoint"


@dataclass
class Node:
    id: int
    kind: NodeKind
    x: float
    y: float
    aivs: tuple[AivProfile, ...]
    beams: tuple[Beam, ...]
    tx_power_dbm: float
    active: bool = True
    site: int = -1

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class Deployment:
    nodes: list[Node]
    bounds: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax
    isd_m: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        for n in self.nodes:
            if n.active and not n.aivs:
                raise ValueError(f"active node {n.id} has no AIV")
        sites: dict[int, int] = {}
        for n in self.nodes:
            if n.kind is NodeKind.MACRO_SECTOR:
                sites[n.site] = sites.get(n.site, 0) + 1
        if any(c != 3 for c in sites.values()):
            raise ValueError("macro sectors must come in co-sited triples")

    def of_kind(self, kind: NodeKind) -> list[Node]:
        return [n for n in self.nodes if n.kind is kind]

    def positions(self, nodes=None) -> np.ndarray:
        nodes = self.nodes if nodes is None else nodes
        return np.array([[n.x, n.y] for n in nodes], dtype=float).reshape(-1, 2)

    def extend(self, more: list[Node]) -> "Deployment":
        return Deployment(self.nodes + list(more), self.bounds, self.isd_m)

    def dump(self, path) -> None:
        """Write one CSV line per node: id, kind, x, y, power, frequency."""
        with open(path, "w", newline="") as fh:
            fh.write("node_id,kind,x_m,y_m,tx_power_dbm,carrier_ghz,active\n")
            for n in self.nodes:
                f = "|".join(f"{a.carrier_ghz:g}" for a in n.aivs)
                fh.write(f"{n.id},{n.kind.value},{n.x:.3f},{n.y:.3f},"
                         f"{n.tx_power_dbm:g},{f},{int(n.active)}\n")


SECTOR_BORESIGHTS = (30.0, 150.0, 270.0)
_RING_SIZES = {1: 0, 7: 1, 19: 2}


def hex_site_positions(sites: int, isd_m: float) -> np.ndarray:
    if sites not in _RING_SIZES:
        raise ValueError(f"unsupported site count {sites}; use 1, 7 or 19")
    rings = _RING_SIZES[sites]
    pts = []
    for q in range(-rings, rings + 1):
        for r in range(-rings, rings + 1):
            if max(abs(q), abs(r), abs(q + r)) > rings:
                continue
            x = isd_m * (q + r / 2.0)
            y = isd_m * (r * math.sqrt(3) / 2.0)
            ring = max(abs(q), abs(r), abs(q + r))
            pts.append((ring, round(math.atan2(y, x) % (2 * math.pi), 9), x, y))
    pts.sort()
    return np.array([[p[2], p[3]] for p in pts])


def generate_macro_grid(sites: int = 7, sectors_per_site: int = 3, isd_m: float = 500.0,
                        aivs: tuple[AivProfile, ...] | None = None,
                        tx_power_dbm: float = 46.0, first_id: int = 0) -> Deployment:
    if isd_m <= 0:
        raise ValueError("isd must be positive")
    if sectors_per_site != 3:
        raise ValueError("only three-sector sites are supported")
    aivs = aivs or (lte_profile(),)
    xy = hex_site_positions(sites, isd_m)
    nodes = []
    nid = count(first_id)
    for s, (x, y) in enumerate(xy):
        for b in SECTOR_BORESIGHTS:
            nodes.append(Node(next(nid), NodeKind.MACRO_SECTOR, float(x), float(y),
                              tuple(aivs), (sector_beam(b),), tx_power_dbm, True, s))
    reach = float(np.max(np.abs(xy))) + isd_m / math.sqrt(3)
    return Deployment(nodes, (-reach, reach, -reach, reach), isd_m)


def uniform_in_disc(stream: RngStream, n: int, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    r = radius * np.sqrt(stream.random(n))
    th = stream.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])


def in_hexagon(xy: np.ndarray, center, isd_m: float) -> np.ndarray:
    """Membership in the pointy-top hexagonal cell of a site (inradius isd/2)."""
    p = np.atleast_2d(xy) - np.asarray(center)
    inr = isd_m / 2.0
    ok = np.ones(len(p), dtype=bool)
    for ang in (0.0, 60.0, 120.0):
        a = math.radians(ang)
        ok &= np.abs(p[:, 0] * math.cos(a) + p[:, 1] * math.sin(a)) <= inr
    return ok


def generate_hotspot(nn_count: int, radius_m: float, center, stream: RngStream,
                     tx_power_dbm: float = 30.0, aiv: AivProfile | None = None,
                     antenna_gain_db: float = 5.0, first_id: int = 1000,
                     at_center: bool = False) -> list[Node]:
    """Nomadic nodes placed uniformly in a disc, all initially inactive."""
    if nn_count < 0:
        raise ValueError("nn_count must be non-negative")
    aiv = aiv or lte_profile()
    if at_center:
        xy = np.tile(np.asarray(center, dtype=float), (nn_count, 1))
    else:
        xy = uniform_in_disc(stream, nn_count, radius_m, center)
    omni = Beam(0.0, 360.0, antenna_gain_db, 0.0)
    return [Node(first_id + i, NodeKind.NOMADIC_NODE, float(x), float(y), (aiv,), (omni,),
                 tx_power_dbm, False) for i, (x, y) in enumerate(xy)]


@dataclass
class MmwLink:
    id: int
    tx: tuple[float, float]
    rx: tuple[float, float]
    tx_beam: Beam
    rx_beam: Beam
    established: bool = True
    resource_share: float = 1.0

    def __post_init__(self):
        if self.tx == self.rx or self.length <= 0:
            raise ValueError("link endpoints must differ")
        if not 0 < self.resource_share <= 1:
            raise ValueError("resource share must be in (0, 1]")

    @property
    def length(self) -> float:
        return math.hypot(self.rx[0] - self.tx[0], self.rx[1] - self.tx[1])


def aimed_beams(tx, rx, beamwidth_deg: float, peak_db: float, ftb_db: float) -> tuple[Beam, Beam]:
    az = math.degrees(math.atan2(rx[1] - tx[1], rx[0] - tx[0]))
    back = (az + 180.0 + 180.0) % 360.0 - 180.0
    return Beam(az, beamwidth_deg, peak_db, ftb_db), Beam(back, beamwidth_deg, peak_db, ftb_db)


def generate_mmw_links(count_: int, area_km2: float, stream: RngStream,
                       length_m: tuple[float, float] = (50.0, 200.0),
                       beamwidth_deg: float = 15.0, peak_db: float = 20.0,
                       ftb_db: float = 10.0) -> list[MmwLink]:
    if count_ < 0 or area_km2 <= 0:
        raise ValueError("count must be >= 0 and area > 0")
    side = math.sqrt(area_km2) * 1000.0
    tx = stream.uniform(0.0, side, (count_, 2))
    lengths = stream.uniform(length_m[0], length_m[1], count_)
    ang = stream.uniform(0.0, 2 * math.pi, count_)
    links = []
    for i in range(count_):
        t = (float(tx[i, 0]), float(tx[i, 1]))
        r = (t[0] + float(lengths[i] * math.cos(ang[i])), t[1] + float(lengths[i] * math.sin(ang[i])))
        tb, rb = aimed_beams(t, r, beamwidth_deg, peak_db, ftb_db)
        links.append(MmwLink(i, t, r, tb, rb))
    return links


@dataclass
class Ue:
    id: int
    x: float
    y: float
    speed: float = 0.0
    heading: float = 0.0
    flows: list[int] = field(default_factory=list)


def _fold(v: float, lo: float, hi: float) -> tuple[float, bool]:
    """Reflect ``v`` into [lo, hi]; the flag says whether direction flipped."""
    span = hi - lo
    if span <= 0:
        return lo, False
    u = (v - lo) % (2 * span)
    flips = int(math.floor((v - lo) / span)) % 2 != 0
    return (lo + (2 * span - u) if u > span else lo + u), flips


def step_mobility(ue: Ue, dticks: int, bounds: tuple[float, float, float, float]) -> Ue:
    """Straight-line motion at constant speed with reflective boundaries."""
    if dticks < 0:
        raise ValueError("dticks must be non-negative")
    if ue.speed == 0 or dticks == 0:
        return ue
    d = ue.speed * dticks * TICK_S
    vx, vy = math.cos(ue.heading), math.sin(ue.heading)
    x, fx = _fold(ue.x + d * vx, bounds[0], bounds[1])
    y, fy = _fold(ue.y + d * vy, bounds[2], bounds[3])
    if fx:
        vx = -vx
    if fy:
        vy = -vy
    return replace(ue, x=x, y=y, heading=math.atan2(vy, vx))


@dataclass(frozen=True)
class TrafficModel:
    kind: str = "FullBuffer"  # or "FlowArrivals"
    arrival_rate: float = 0.0  # flows per second
    payload_bits: float = 16e6

    def __post_init__(self):
        if self.kind not in ("FullBuffer", "FlowArrivals"):
            raise ValueError(f"unknown traffic kind {self.kind}")
        if self.kind == "FlowArrivals" and (self.arrival_rate < 0 or self.payload_bits <= 0):
            raise ValueError("FlowArrivals needs arrival_rate >= 0 and payload_bits > 0")


class TrafficSource:
    """Stateful flow generator over a set of UEs."""

    def __init__(self, model: TrafficModel, ue_ids, stream: RngStream, first_flow_id: int = 0):
        self.model = model
        self.ue_ids = list(ue_ids)
        self.stream = stream
        self._ids = count(first_flow_id)
        self._seeded = False

    def offer(self, tick: int, dticks: int = 1) -> list[Flow]:
        m = self.model
        if m.kind == "FullBuffer":
            if self._seeded:
                return []
            self._seeded = True
            return [Flow(next(self._ids), u, arrival_tick=tick) for u in self.ue_ids]
        if m.arrival_rate == 0 or not self.ue_ids:
            return []
        n = int(self.stream.poisson(m.arrival_rate * dticks * TICK_S))
        out = []
        for _ in range(n):
            u = self.ue_ids[int(self.stream.integers(len(self.ue_ids)))]
            out.append(Flow(next(self._ids), u, payload_bits=m.payload_bits,
                            remaining_bits=m.payload_bits, arrival_tick=tick))
        return out


def offer_traffic(model: TrafficModel, tick: int, source: TrafficSource, dticks: int = 1) -> list[Flow]:
    if source.model != model:
        raise ValueError("source was built for a different traffic model")
    return source.offer(tick, dticks)


def poisson_arrival_ticks(rate_per_s: float, start: int, end: int, stream: RngStream) -> list[int]:
    """Arrival ticks of a Poisson process on [start, end)."""
    if rate_per_s <= 0 or end <= start:
        return []
    n = int(stream.poisson(rate_per_s * (end - start) * TICK_S))
    ticks = np.sort(stream.uniform(start, end, n)).astype(np.int64)
    return [int(t) for t in ticks]
