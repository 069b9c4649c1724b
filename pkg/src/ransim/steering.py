"""Traffic steering across AIVs, energy-saving states, and PGIA for mmW link fields.

PGIA (pre-emptive geometric interference analysis) decides, before links go
live, which of them would hurt each other, groups them, and time-slices each
group so that members never transmit together.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .flows import QCI_DELAY_BUDGET_MS, Flow
from .radio import beam_gain_db, pathloss_db
from .topology import MmwLink

FAILURE_SINR_DB = -6.0
FAILURE_TTIS = 5
PGIA_CI_THRESHOLD_DB = 12.0
MMW_CARRIER_GHZ = 60.0


# --------------------------------------------------------------------------
# link failure and steering

def detect_link_failure(sinr_history_db, threshold_db: float = FAILURE_SINR_DB,
                        n_consecutive: int = FAILURE_TTIS) -> bool:
    """True when the history holds ``n_consecutive`` TTIs in a row below threshold."""
    hist = list(sinr_history_db)
    if not hist:
        raise ValueError("history window must hold at least one TTI")
    if n_consecutive < 1:
        raise ValueError("n_consecutive must be >= 1")
    run = 0
    for v in hist:
        run = run + 1 if v < threshold_db else 0
        if run >= n_consecutive:
            return True
    return False


class FailureDetector:
    """Streaming form of :func:`detect_link_failure` for per-TTI use."""

    def __init__(self, threshold_db: float = FAILURE_SINR_DB, n_consecutive: int = FAILURE_TTIS):
        self.threshold_db = threshold_db
        self.n = n_consecutive
        self.run = 0

    def push(self, sinr_db: float) -> bool:
        self.run = self.run + 1 if sinr_db < self.threshold_db else 0
        return self.run >= self.n


@dataclass
class Leg:
    """One candidate air-interface path for a flow."""
    aiv_index: int
    est_rate_bps: float
    delay_ms: float = 1.0
    alive: bool = True
    name: str = ""


class ReservationLedger:
    """GBR resource-block reservations per (flow, leg)."""

    def __init__(self):
        self._held: dict[tuple[int, int], int] = {}
        self.reserved_total = 0
        self.released_total = 0

    def reserve(self, flow_id: int, aiv_index: int, rbs: int) -> None:
        if rbs < 0:
            raise ValueError("cannot reserve a negative RB count")
        self._held[(flow_id, aiv_index)] = self._held.get((flow_id, aiv_index), 0) + rbs
        self.reserved_total += rbs

    def held(self, flow_id: int, aiv_index: int) -> int:
        return self._held.get((flow_id, aiv_index), 0)

    def held_on(self, aiv_index: int) -> int:
        return sum(v for (_, a), v in self._held.items() if a == aiv_index)

    def release(self, flow_id: int, aiv_index: int) -> int:
        """Free everything the flow holds on the leg; a second call returns 0."""
        rbs = self._held.pop((flow_id, aiv_index), 0)
        self.released_total += rbs
        return rbs


@dataclass
class SteeringDecision:
    target: Leg | None
    released: dict[int, int] = field(default_factory=dict)  # aiv index -> RBs freed
    suspended: bool = False


@dataclass
class SteeringKpis:
    decisions: int = 0
    switches: int = 0
    suspended: int = 0


def steer_flow(flow: Flow, legs: list[Leg], ledger: ReservationLedger | None = None,
               kpis: SteeringKpis | None = None, current: int | None = None) -> SteeringDecision:
    """Pick the alive leg with the best estimated rate that meets the delay budget.

    Ties go to the lower AIV index. Reservations the flow holds on dead legs
    are released in the same call. With no alive leg the flow is suspended and
    ``kpis.suspended`` counts it.
    """
    kpis = kpis if kpis is not None else SteeringKpis()
    kpis.decisions += 1
    released: dict[int, int] = {}
    if ledger is not None:
        for leg in legs:
            if not leg.alive:
                n = ledger.release(flow.id, leg.aiv_index)
                if n:
                    released[leg.aiv_index] = n
    alive = [leg for leg in legs if leg.alive]
    if not alive:
        kpis.suspended += 1
        return SteeringDecision(None, released, suspended=True)
    budget = QCI_DELAY_BUDGET_MS[flow.qci]
    ok = [leg for leg in alive if leg.delay_ms <= budget] or alive
    target = min(ok, key=lambda leg: (-leg.est_rate_bps, leg.aiv_index))
    if current is not None and current != target.aiv_index:
        kpis.switches += 1
    flow.legs = [target.aiv_index]
    return SteeringDecision(target, released)


# --------------------------------------------------------------------------
# energy saving

class PowerState(str, enum.Enum):
    ACTIVE = "Active"
    SLEEP = "Sleep"


@dataclass(frozen=True)
class EnergyParams:
    p_sleep: float = 1.0
    p_idle: float = 10.0
    beta: float = 90.0
    k_idle_ttis: int = 5
    tti_ticks: int = 1


@dataclass
class EnergyState:
    node_id: int
    state: PowerState = PowerState.ACTIVE
    ticks_in_state: int = 0
    idle_ttis: int = 0
    energy: float = 0.0

    @property
    def transmitting(self) -> bool:
        return self.state is PowerState.ACTIVE


def energy_state_update(es: EnergyState, queued_bits: float, load_fraction: float = 0.0,
                        params: EnergyParams = EnergyParams()) -> EnergyState:
    """Account one TTI in the current state, then apply the transition rule.

    The state that holds during a TTI is the one decided at the end of the
    previous TTI, so a sleeping node that sees data stays silent for that TTI
    (the one-TTI wake latency) and is Active from the next.
    """
    if not 0.0 <= load_fraction <= 1.0:
        raise ValueError("load_fraction must be in [0, 1]")
    ticks = params.tti_ticks
    if es.state is PowerState.ACTIVE:
        es.energy += ticks * (params.p_idle + params.beta * load_fraction)
    else:
        es.energy += ticks * params.p_sleep
    es.ticks_in_state += ticks
    if es.state is PowerState.ACTIVE:
        es.idle_ttis = es.idle_ttis + 1 if queued_bits <= 0 else 0
        if es.idle_ttis >= params.k_idle_ttis:
            es.state, es.ticks_in_state = PowerState.SLEEP, 0
    elif queued_bits > 0:
        es.state, es.ticks_in_state, es.idle_ttis = PowerState.ACTIVE, 0, 0
    return es


def idle_energy(idle_ticks: int, params: EnergyParams = EnergyParams()) -> float:
    """Energy of a node that goes idle for ``idle_ticks`` after being busy.

    Closed form of repeated :func:`energy_state_update` with an empty queue:
    k TTIs at idle power, the rest asleep.
    """
    awake = min(idle_ticks, params.k_idle_ttis * params.tti_ticks)
    return awake * params.p_idle + (idle_ticks - awake) * params.p_sleep


def silence_sleeping(assign: np.ndarray, states: list[EnergyState]) -> np.ndarray:
    """Blank the allocation rows of sleeping nodes so they radiate nothing."""
    out = np.array(assign, copy=True)
    for row, es in enumerate(states):
        if not es.transmitting:
            out[row, :] = -1
    return out


# --------------------------------------------------------------------------
# PGIA

@dataclass
class ConflictGroups:
    link_ids: tuple[int, ...]
    groups: list[tuple[int, ...]]
    edges: list[tuple[int, int]]

    def __post_init__(self):
        seen = [i for g in self.groups for i in g]
        if sorted(seen) != sorted(self.link_ids) or len(set(seen)) != len(seen):
            raise ValueError("groups must partition the link set")

    def group_of(self, link_id: int) -> tuple[int, ...]:
        for g in self.groups:
            if link_id in g:
                return g
        raise KeyError(link_id)

    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups]


def _link_arrays(links: list[MmwLink]):
    tx = np.array([l.tx for l in links], dtype=float).reshape(-1, 2)
    rx = np.array([l.rx for l in links], dtype=float).reshape(-1, 2)
    taz = np.array([l.tx_beam.boresight_deg for l in links], dtype=float)
    raz = np.array([l.rx_beam.boresight_deg for l in links], dtype=float)
    return tx, rx, taz, raz


def _beam_params(links: list[MmwLink]) -> tuple[float, float, float]:
    b = links[0].tx_beam
    p = (b.beamwidth_deg, b.peak_gain_db, b.front_to_back_db)
    for l in links:
        for bm in (l.tx_beam, l.rx_beam):
            if (bm.beamwidth_deg, bm.peak_gain_db, bm.front_to_back_db) != p:
                raise ValueError("PGIA kernel needs one beam pattern across the link field")
    return p


def pair_ci_matrix(links: list[MmwLink], carrier_ghz: float = MMW_CARRIER_GHZ) -> np.ndarray:
    """Single-interferer C/I (dB): ``[i, j]`` is link i's C/I with only j transmitting."""
    if not links:
        return np.zeros((0, 0))
    bw, peak, ftb = _beam_params(links)
    tx, rx, taz, raz = _link_arrays(links)
    return kernels.pair_ci_db(tx, rx, taz, raz, bw, peak, ftb, carrier_ghz)


def _groups_from_adjacency(ids: list[int], adj: np.ndarray) -> ConflictGroups:
    n = len(ids)
    if n == 0:
        return ConflictGroups((), [], [])
    k, lab = connected_components(csr_matrix(adj), directed=False)
    groups = [tuple(ids[i] for i in np.flatnonzero(lab == g)) for g in range(k)]
    groups.sort(key=lambda g: g[0])
    ii, jj = np.nonzero(np.triu(adj, 1))
    edges = [(ids[a], ids[b]) for a, b in zip(ii, jj)]
    return ConflictGroups(tuple(ids), groups, edges)


def pgia_conflict_sets(links: list[MmwLink], ci_threshold_db: float = PGIA_CI_THRESHOLD_DB,
                       carrier_ghz: float = MMW_CARRIER_GHZ) -> ConflictGroups:
    """Group links that would interfere: edge when either direction's C/I is below threshold."""
    ids = [l.id for l in links]
    ci = pair_ci_matrix(links, carrier_ghz)
    bad = ci < ci_threshold_db
    return _groups_from_adjacency(ids, bad | bad.T)


def pgia_conflict_sets_bruteforce(links: list[MmwLink], ci_threshold_db: float = PGIA_CI_THRESHOLD_DB,
                                  carrier_ghz: float = MMW_CARRIER_GHZ) -> ConflictGroups:
    """Reference implementation: scalar per-pair link budgets and breadth-first search."""
    n = len(links)
    ids = [l.id for l in links]

    def ci(a: MmwLink, b: MmwLink) -> float:
        carrier = a.tx_beam.peak_gain_db + a.rx_beam.peak_gain_db - float(pathloss_db(a.length, carrier_ghz))
        dx, dy = a.rx[0] - b.tx[0], a.rx[1] - b.tx[1]
        d = math.hypot(dx, dy)
        g_tx = float(beam_gain_db(math.degrees(math.atan2(dy, dx)), b.tx_beam.boresight_deg,
                                  b.tx_beam.beamwidth_deg, b.tx_beam.peak_gain_db,
                                  b.tx_beam.front_to_back_db))
        g_rx = float(beam_gain_db(math.degrees(math.atan2(-dy, -dx)), a.rx_beam.boresight_deg,
                                  a.rx_beam.beamwidth_deg, a.rx_beam.peak_gain_db,
                                  a.rx_beam.front_to_back_db))
        return carrier - (g_tx + g_rx - float(pathloss_db(d, carrier_ghz)))

    nbr: list[set[int]] = [set() for _ in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if ci(links[i], links[j]) < ci_threshold_db or ci(links[j], links[i]) < ci_threshold_db:
                nbr[i].add(j)
                nbr[j].add(i)
                edges.append((ids[i], ids[j]))
    seen = [False] * n
    groups = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp, q = [], deque([s])
        while q:
            u = q.popleft()
            comp.append(u)
            for v in sorted(nbr[u]):
                if not seen[v]:
                    seen[v] = True
                    q.append(v)
        groups.append(tuple(ids[i] for i in sorted(comp)))
    groups.sort(key=lambda g: g[0])
    return ConflictGroups(tuple(ids), groups, edges)


@dataclass(frozen=True)
class Slot:
    """Fraction [start, end) of each frame in which a link may transmit."""
    start: float
    end: float

    @property
    def share(self) -> float:
        return self.end - self.start

    def overlaps(self, other: "Slot") -> bool:
        return self.start < other.end and other.start < self.end


def pgia_partition_resources(groups: ConflictGroups) -> dict[int, Slot]:
    """Equal time-slicing: member j of a k-group owns [j/k, (j+1)/k)."""
    out = {}
    for g in groups.groups:
        k = len(g)
        for j, lid in enumerate(g):
            out[lid] = Slot(j / k, (j + 1) / k if j + 1 < k else 1.0)
    return out


def apply_partition(links: list[MmwLink], slots: dict[int, Slot]) -> None:
    for l in links:
        l.resource_share = slots[l.id].share


def pgia_fallback_steer(group, max_group_size: int = 8) -> list[int]:
    """Link ids to move to the sub-6 GHz leg: the newest (highest id) beyond the cap."""
    if max_group_size < 1:
        raise ValueError("max_group_size must be >= 1")
    members = sorted(group)
    excess = len(members) - max_group_size
    return members[-excess:] if excess > 0 else []


def pgia_fallback_all(links: list[MmwLink], groups: ConflictGroups,
                      max_group_size: int = 8) -> tuple[list[MmwLink], list[int]]:
    """Apply :func:`pgia_fallback_steer` to every group; return kept links and moved ids."""
    moved = set()
    for g in groups.groups:
        moved.update(pgia_fallback_steer(g, max_group_size))
    return [l for l in links if l.id not in moved], sorted(moved)


def per_link_interfered(links: list[MmwLink], slots: dict[int, Slot] | None = None,
                        ci_threshold_db: float = PGIA_CI_THRESHOLD_DB,
                        carrier_ghz: float = MMW_CARRIER_GHZ) -> np.ndarray:
    """Airtime fraction per link with aggregate C/I below threshold."""
    n = len(links)
    if n == 0:
        return np.zeros(0)
    ci = pair_ci_matrix(links, carrier_ghz)
    ioc = 10.0 ** (-ci / 10.0)
    if slots is None:
        start, end = np.zeros(n), np.ones(n)
    else:
        start = np.array([slots[l.id].start for l in links])
        end = np.array([slots[l.id].end for l in links])
    return kernels.slotted_interfered(ioc, start, end, 10.0 ** (ci_threshold_db / 10.0))


def interfered_fraction(links: list[MmwLink], slots: dict[int, Slot] | None = None,
                        ci_threshold_db: float = PGIA_CI_THRESHOLD_DB,
                        carrier_ghz: float = MMW_CARRIER_GHZ) -> float:
    """Mean over links of the time they spend below the C/I threshold.

    Without ``slots`` every link transmits all the time, so this is the
    fraction of interfered links.
    """
    if not links:
        raise ValueError("need at least one link")
    return float(np.clip(per_link_interfered(links, slots, ci_threshold_db, carrier_ghz).mean(), 0.0, 1.0))
