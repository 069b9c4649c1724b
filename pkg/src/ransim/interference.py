"""Interference management for dynamic topologies and FQAM edge-user protection.

Covers nomadic-node activation, joint-transmission (JT) candidate selection and
RB reservation, coordinated round-robin scheduling with muting, detection of
heavily interfered users and FQAM mode assignment.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .radio import Sinr, fqam_effective_sinr, rate_bps


class AllocationError(AssertionError):
    """An RB allocation broke one of its structural invariants."""


@dataclass
class Measurement:
    ue_id: int
    serving: int
    rsrp_dbm: dict[int, float]
    tick: int = 0

    def __post_init__(self):
        if self.serving not in self.rsrp_dbm:
            raise ValueError("measurement must contain the serving node")
        if not all(math.isfinite(v) for v in self.rsrp_dbm.values()):
            raise ValueError("RSRP values must be finite")


def select_active_nns(candidate_rsrp: np.ndarray, baseline_rsrp: np.ndarray,
                      max_active: int, min_gain_db: float = 3.0) -> list[int]:
    """Greedy activation order of nomadic nodes.

    ``candidate_rsrp[u, c]`` is user u's RSRP from candidate c and
    ``baseline_rsrp[u]`` its best RSRP from the always-on layer. Each round
    activates the candidate that lifts the most users' best RSRP by more than
    ``min_gain_db``; ties go to the lower index.
    """
    cand = np.asarray(candidate_rsrp, dtype=float)
    if cand.ndim != 2:
        cand = cand.reshape(len(baseline_rsrp), -1)
    if max_active > cand.shape[1]:
        raise ValueError("max_active exceeds the number of candidates")
    best = np.asarray(baseline_rsrp, dtype=float).copy()
    chosen: list[int] = []
    for _ in range(max_active):
        gains = ((cand - best[:, None]) > min_gain_db).sum(axis=0)
        gains[chosen] = -1
        c = int(np.argmax(gains))
        if gains[c] <= 0:
            break
        chosen.append(c)
        best = np.maximum(best, cand[:, c])
    return chosen


def select_jt_candidates(measurements, delta_db: float = 6.0, cluster=None,
                         max_set: int = 2) -> dict[int, frozenset]:
    """UEs whose serving/neighbour RSRP gap is below ``delta_db`` (strict).

    Returns ue -> cooperating node set (serving plus neighbours within the
    gap, strongest first, at most ``max_set`` nodes).
    """
    if delta_db <= 0:
        raise ValueError("delta_db must be positive")
    if isinstance(measurements, Measurement):
        measurements = [measurements]
    out = {}
    for m in measurements:
        s = m.rsrp_dbm[m.serving]
        nbrs = sorted(((v, k) for k, v in m.rsrp_dbm.items()
                       if k != m.serving and (cluster is None or k in cluster)),
                      key=lambda t: (-t[0], t[1]))
        close = [k for v, k in nbrs if s - v < delta_db]
        if close:
            out[m.ue_id] = frozenset([m.serving] + close[:max_set - 1])
    return out


def reserve_jt_rbs(n_jt_users: int, n_total_users: int, total_rbs: int) -> int:
    if not 0 <= n_jt_users <= n_total_users or total_rbs < 0:
        raise ValueError("need 0 <= n_jt_users <= n_total_users and total_rbs >= 0")
    return min(total_rbs, math.ceil(total_rbs * n_jt_users / max(n_total_users, 1)))


class RbState(enum.IntEnum):
    IDLE = 0
    NORMAL = 1
    JT = 2
    FQAM = 3
    MUTED = 4


@dataclass
class RbAllocation:
    """One TTI of RB usage for a set of nodes (rows follow ``node_ids``)."""

    node_ids: list[int]
    ue: np.ndarray
    state: np.ndarray
    coop: dict[tuple[int, int], frozenset] = field(default_factory=dict)
    tti: int = 0

    @classmethod
    def empty(cls, node_ids, rb_count: int, tti: int = 0) -> "RbAllocation":
        n = len(node_ids)
        return cls(list(node_ids), np.full((n, rb_count), -1, dtype=np.int64),
                   np.zeros((n, rb_count), dtype=np.int8), {}, tti)

    @property
    def rb_count(self) -> int:
        return self.ue.shape[1]

    def assignment(self) -> np.ndarray:
        """User per (node, RB) with -1 where nothing is transmitted."""
        tx = (self.state == RbState.NORMAL) | (self.state == RbState.JT) | (self.state == RbState.FQAM)
        return np.where(tx, self.ue, -1)

    def counts(self) -> dict[str, np.ndarray]:
        return {s.name: (self.state == s).sum(axis=1) for s in RbState}

    def trace_rows(self):
        """(tick, node, rb, ue, mode) tuples for the allocation trace CSV."""
        for i, nid in enumerate(self.node_ids):
            for r in range(self.rb_count):
                st = RbState(int(self.state[i, r]))
                yield (self.tti, nid, r, int(self.ue[i, r]), st.name)


def audit_allocation(alloc: RbAllocation, cluster=None) -> None:
    """Raise AllocationError if the allocation breaks a structural invariant."""
    idx = {n: i for i, n in enumerate(alloc.node_ids)}
    cluster = set(alloc.node_ids if cluster is None else cluster)
    valid = set(int(s) for s in RbState)
    if not set(np.unique(alloc.state).tolist()) <= valid:
        raise AllocationError("unknown RB state")
    for i in range(len(alloc.node_ids)):
        if sum(int(c[i]) for c in alloc.counts().values()) != alloc.rb_count:
            raise AllocationError("RB conservation violated")
    assigned = alloc.assignment()
    for r in range(alloc.rb_count):
        by_ue: dict[int, list[int]] = {}
        for i, nid in enumerate(alloc.node_ids):
            u = int(assigned[i, r])
            if u >= 0:
                by_ue.setdefault(u, []).append(nid)
            st = alloc.state[i, r]
            if st == RbState.JT:
                s = alloc.coop.get((nid, r))
                if s is None or nid not in s:
                    raise AllocationError(f"JT RB {r} at node {nid} lacks a cooperating set")
                for m in s:
                    if m in idx and (alloc.state[idx[m], r] != RbState.JT
                                     or alloc.ue[idx[m], r] != alloc.ue[i, r]):
                        raise AllocationError(f"JT RB {r} not identical across {sorted(s)}")
            elif st == RbState.MUTED:
                others = [j for j, m in enumerate(alloc.node_ids)
                          if m != nid and m in cluster and assigned[j, r] >= 0]
                if not others:
                    raise AllocationError(f"RB {r} muted at node {nid} protects nobody")
        for u, nodes in by_ue.items():
            if len(nodes) > 1:
                sets = {alloc.coop.get((n, r)) for n in nodes}
                if len(sets) != 1 or None in sets or not set(nodes) <= next(iter(sets)):
                    raise AllocationError(f"UE {u} holds RB {r} on non-cooperating nodes {nodes}")


class CoordinatedScheduler:
    """Round-robin per node with JT on reserved RBs and edge-user muting.

    ``served`` maps node -> list of users it serves. ``jt_sets`` maps JT users
    to their cooperating nodes; ``edge_neighbor`` maps non-JT cell-edge users
    to the cluster neighbour that must mute when they are scheduled. With both
    empty this is plain per-node round robin.
    """

    def __init__(self, node_ids, served: dict[int, list[int]], rb_count: int,
                 jt_sets: dict[int, frozenset] | None = None,
                 edge_neighbor: dict[int, int] | None = None, reserved: int = 0):
        self.node_ids = list(node_ids)
        self.rb_count = rb_count
        self.jt_sets = dict(jt_sets or {})
        self.edge_neighbor = dict(edge_neighbor or {})
        self.jt_users = sorted(self.jt_sets)
        self.reserved = reserved if self.jt_users else 0
        self.normal = {n: [u for u in served.get(n, []) if u not in self.jt_sets]
                       for n in self.node_ids}
        self._ptr = {n: 0 for n in self.node_ids}
        self._jt_ptr = 0

    def schedule(self, tti: int) -> RbAllocation:
        alloc = RbAllocation.empty(self.node_ids, self.rb_count, tti)
        idx = {n: i for i, n in enumerate(self.node_ids)}
        ue, st = alloc.ue, alloc.state
        for r in range(self.reserved):
            u = self.jt_users[(self._jt_ptr + r) % len(self.jt_users)]
            s = frozenset(n for n in self.jt_sets[u] if n in idx)
            for n in s:
                ue[idx[n], r] = u
                st[idx[n], r] = RbState.JT
                alloc.coop[(n, r)] = s
        self._jt_ptr += self.reserved
        k = len(self.node_ids)
        order = [self.node_ids[(tti + j) % k] for j in range(k)] if k else []
        for r in range(self.rb_count):
            for n in order:
                i = idx[n]
                if st[i, r] != RbState.IDLE:
                    continue
                users = self.normal[n]
                if not users:
                    continue
                u = users[self._ptr[n] % len(users)]
                self._ptr[n] += 1
                ue[i, r] = u
                st[i, r] = RbState.NORMAL
                nb = self.edge_neighbor.get(u)
                if nb is not None and nb in idx and st[idx[nb], r] == RbState.IDLE:
                    st[idx[nb], r] = RbState.MUTED
        return alloc


def coordinated_schedule(cluster, served, rb_count: int, jt_sets=None, edge_neighbor=None,
                         reserved: int = 0, tti: int = 0) -> RbAllocation:
    """One-shot coordinated schedule (a fresh scheduler, first TTI)."""
    return CoordinatedScheduler(cluster, served, rb_count, jt_sets, edge_neighbor,
                                reserved).schedule(tti)


@dataclass(frozen=True)
class Victim:
    ue_id: int
    sinr_db: float
    interferer: tuple[int, int]  # (node, beam)


def detect_interfered_users(measurements, noise_dbm: float, sinr_threshold_db: float = 3.0,
                            beam_of=None) -> list[Victim]:
    """Users whose wideband SINR is below the threshold, with their dominant interferer.

    ``beam_of(ue_id, node_id)`` names the interferer's beam pointing at the
    user (defaults to beam 0). Users without any interferer are never victims.
    """
    out = []
    n_mw = 10.0 ** (noise_dbm / 10.0)
    for m in measurements:
        others = {k: v for k, v in m.rsrp_dbm.items() if k != m.serving}
        if not others:
            continue
        s = 10.0 ** (m.rsrp_dbm[m.serving] / 10.0)
        i = sum(10.0 ** (v / 10.0) for v in others.values())
        sinr_db = 10.0 * math.log10(s / (i + n_mw))
        if sinr_db < sinr_threshold_db:
            dom = min(others, key=lambda k: (-others[k], k))
            beam = 0 if beam_of is None else int(beam_of(m.ue_id, dom))
            out.append(Victim(m.ue_id, sinr_db, (dom, beam)))
    return out


class FqamMode(str, enum.Enum):
    SPATIAL = "Spatial"
    FREQUENCY = "Frequency"
    TIME = "Time"


@dataclass
class FqamModeMap:
    mode: FqamMode
    enabled_beams: set[tuple[int, int]] = field(default_factory=set)
    victim_interferer: dict[int, tuple[int, int]] = field(default_factory=dict)
    pool_fraction: float = 0.0
    time_period: int = 1
    # share of an interferer's airtime spent on each beam; missing entries count as 1
    beam_airtime: dict[tuple[int, int], float] = field(default_factory=dict)

    def coverage(self, ue_id: int, victim_share: float = 1.0) -> float:
        """Fraction of a user's resources on which its dominant interferer uses FQAM.

        ``victim_share`` is the fraction of the serving node's RBs taken by
        victims (needed for the frequency pool).
        """
        if ue_id not in self.victim_interferer:
            return 0.0
        if self.mode is FqamMode.SPATIAL:
            beam = self.victim_interferer[ue_id]
            return self.beam_airtime.get(beam, 1.0) if beam in self.enabled_beams else 0.0
        if self.mode is FqamMode.FREQUENCY:
            if victim_share <= 0:
                return 1.0
            return min(1.0, self.pool_fraction / victim_share)
        return 1.0 / self.time_period


def assign_fqam(victims, mode: FqamMode | str = FqamMode.SPATIAL, pool_fraction: float = 0.25,
                time_period: int = 2, beam_airtime: dict | None = None) -> FqamModeMap:
    """Spatial: FQAM on each victim's dominant interfering beam, active while that
    beam is being served. Frequency: a fixed RB pool. Time: every k-th TTI."""
    mode = FqamMode(mode)
    fmap = FqamModeMap(mode, pool_fraction=pool_fraction, time_period=time_period,
                       beam_airtime=dict(beam_airtime or {}))
    for v in victims:
        fmap.victim_interferer[v.ue_id] = v.interferer
        if mode is FqamMode.SPATIAL:
            fmap.enabled_beams.add(v.interferer)
    return fmap


def fqam_user_rate(sinr_linear: float, coverage: float, bandwidth_hz: float, share: float,
                   g_max_db: float = 3.0, aiv=None) -> float:
    """Rate of a user holding ``share`` of the band, FQAM-uplifted on ``coverage`` of it."""
    base = rate_bps(sinr_linear, bandwidth_hz, aiv)
    if coverage <= 0:
        return share * base
    up = rate_bps(fqam_effective_sinr(Sinr(sinr_linear), True, g_max_db), bandwidth_hz, aiv)
    return share * ((1.0 - coverage) * base + coverage * up)
