"""Slice-aware QoS control: SLA registry, windowed monitoring, QCI ladder, core feedback.

The controller runs once per monitoring window. A scheduler that honours QCI
priorities (GBR token buckets first, then weighted sharing) lives here too, so
that the control loop can be exercised end to end on a single shared node.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .flows import Flow, QciClass
from .kernel import TICK_S

DEFAULT_WINDOW_TICKS = 5000
ESCALATE_MARGIN = 0.02
DEESCALATE_MARGIN = 0.005


@dataclass(frozen=True)
class Sla:
    guaranteed_rate_bps: float
    max_delay_ms: float
    fulfillment_target: float = 0.99
    name: str = ""

    def __post_init__(self):
        if self.guaranteed_rate_bps < 0:
            raise ValueError("guaranteed rate must be >= 0")
        if not 0 < self.fulfillment_target <= 1:
            raise ValueError("fulfillment target must be in (0, 1]")
        if not self.max_delay_ms > 0:
            raise ValueError("max delay must be > 0")


class SliceStatus(str, enum.Enum):
    FULFILLED = "Fulfilled"
    AT_RISK = "AtRisk"
    VIOLATED = "Violated"


@dataclass
class FulfillmentReport:
    slice_id: int
    window: int
    window_ticks: int
    flow_fraction: dict[int, float]
    fraction: float
    met: bool

    def __post_init__(self):
        for v in [self.fraction, *self.flow_fraction.values()]:
            if not 0.0 <= v <= 1.0:
                raise ValueError("fractions must lie in [0, 1]")


@dataclass
class Slice:
    id: int
    sla: Sla
    default_qci: QciClass = QciClass.BEST_EFFORT
    flows: set[int] = field(default_factory=set)
    status: SliceStatus = SliceStatus.FULFILLED
    last_report: FulfillmentReport | None = None
    violation_streak: int = 0


class SliceRegistry:
    """Slices, flow membership and the per-window control loop."""

    def __init__(self, aggregate: str = "min"):
        if aggregate not in ("min", "mean"):
            raise ValueError("aggregate must be 'min' or 'mean'")
        self.slices: dict[int, Slice] = {}
        self.flow_slice: dict[int, int] = {}
        self.aggregate = aggregate
        self.warnings = 0
        self.events: list[dict] = []
        self._next = 0

    def register_slice(self, sla: Sla, default_qci: QciClass = QciClass.BEST_EFFORT) -> int:
        sid = self._next
        self._next += 1
        self.slices[sid] = Slice(sid, sla, QciClass(default_qci))
        return sid

    def resolve(self, tag) -> int | None:
        if isinstance(tag, Sla):
            hits = [s.id for s in self.slices.values() if s.sla == tag]
            return hits[0] if len(hits) == 1 else None
        if isinstance(tag, str):
            hits = [s.id for s in self.slices.values() if s.sla.name == tag]
            return hits[0] if len(hits) == 1 else None
        if isinstance(tag, (int, np.integer)) and int(tag) in self.slices:
            return int(tag)
        return None

    def classify_flow(self, flow: Flow, tag) -> int | None:
        """Attach ``flow`` to the slice named by ``tag`` (slice id, SLA, or SLA name).

        Unresolvable tags leave the flow untagged at best effort and count a warning.
        """
        old = self.flow_slice.pop(flow.id, None)
        if old is not None:
            self.slices[old].flows.discard(flow.id)
        sid = self.resolve(tag)
        if sid is None:
            self.warnings += 1
            flow.slice_id = None
            flow.set_qci(QciClass.BEST_EFFORT)
            return None
        sl = self.slices[sid]
        sl.flows.add(flow.id)
        self.flow_slice[flow.id] = sid
        flow.slice_id = sid
        flow.set_qci(sl.default_qci, sl.sla.guaranteed_rate_bps)
        return sid


def _fraction(met: np.ndarray) -> float:
    return float(np.count_nonzero(met)) / len(met) if len(met) else 1.0


def monitor_sla(registry: SliceRegistry, slice_id: int, window: int,
                met_by_flow: dict[int, np.ndarray], window_ticks: int = DEFAULT_WINDOW_TICKS
                ) -> FulfillmentReport:
    """Summarise one window of per-TTI met flags into a report and update slice status.

    ``met_by_flow[f][t]`` says whether flow f met both rate and delay at TTI t.
    """
    sl = registry.slices[slice_id]
    fr = {f: _fraction(np.asarray(met_by_flow.get(f, []), dtype=bool)) for f in sorted(sl.flows)}
    if not fr:
        frac = 1.0
    elif registry.aggregate == "min":
        frac = min(fr.values())
    else:
        frac = float(np.mean(list(fr.values())))
    target = sl.sla.fulfillment_target
    met = frac >= target
    rep = FulfillmentReport(slice_id, window, window_ticks, fr, frac, met)
    sl.last_report = rep
    if met:
        sl.status = SliceStatus.FULFILLED
    elif frac >= target - ESCALATE_MARGIN:
        sl.status = SliceStatus.AT_RISK
    else:
        sl.status = SliceStatus.VIOLATED
    return rep


@dataclass
class QciController:
    """Hysteresis ladder state for one flow."""
    default: QciClass
    high_streak: int = 0
    changes: list[tuple[int, int]] = field(default_factory=list)  # (window, new ordinal)


def adapt_qci(flow: Flow, fraction: float, sla: Sla, ctl: QciController, window: int = 0,
              utilization: float = 0.0, deescalate_below_util: float = 1.0) -> QciClass:
    """One ladder step per window at most.

    Escalate below ``target - 0.02``. De-escalate after two consecutive windows
    above ``target + 0.005``, never below the slice default, and only when the
    serving node's utilization in the window was below ``deescalate_below_util``
    (1.0 makes the guard inert only for a node with idle resources).
    """
    target = sla.fulfillment_target
    new = flow.qci
    if fraction < target - ESCALATE_MARGIN:
        ctl.high_streak = 0
        new = flow.qci.step(+1)
    elif fraction > target + DEESCALATE_MARGIN:
        ctl.high_streak += 1
        if ctl.high_streak >= 2 and flow.qci > ctl.default and utilization < deescalate_below_util:
            new = flow.qci.step(-1)
            ctl.high_streak = 0
    else:
        ctl.high_streak = 0
    if new != flow.qci:
        flow.set_qci(new, sla.guaranteed_rate_bps)
        ctl.changes.append((window, int(new)))
    return flow.qci


def core_feedback(registry: SliceRegistry, slice_id: int) -> dict:
    """Status message for the core network; appended to the registry's event log."""
    sl = registry.slices[slice_id]
    rep = sl.last_report
    if rep is None:
        raise ValueError("no completed window yet")
    sl.violation_streak = 0 if rep.met else sl.violation_streak + 1
    msg = {"slice_id": slice_id, "window": rep.window, "met": rep.met, "fraction": rep.fraction,
           "consecutive_violation_windows": sl.violation_streak}
    registry.events.append(msg)
    return msg


# --------------------------------------------------------------------------
# per-TTI data path on one shared node

@dataclass
class FlowQueue:
    """Backlog of one flow as (arrival tick, bits) chunks. ``saturating`` sources never run dry."""
    flow: Flow
    bits_per_rb: int
    offered_per_tti: int = 0
    saturating: bool = False
    max_delay_ticks: int | None = None
    chunks: deque = field(default_factory=deque)
    tokens: int = 0
    served_total: int = 0
    offered_total: int = 0
    dropped_total: int = 0

    @property
    def backlog(self) -> int:
        return sum(b for _, b in self.chunks)

    def arrive(self, tick: int) -> int:
        if self.offered_per_tti > 0:
            self.chunks.append([tick, self.offered_per_tti])
            self.offered_total += self.offered_per_tti
        return self.offered_per_tti

    def expire(self, tick: int) -> int:
        if self.max_delay_ticks is None:
            return 0
        gone = 0
        while self.chunks and tick - self.chunks[0][0] > self.max_delay_ticks:
            gone += self.chunks.popleft()[1]
        self.dropped_total += gone
        return gone

    def need(self) -> float:
        return math.inf if self.saturating else self.backlog

    def serve(self, bits: int) -> int:
        if self.saturating:
            self.served_total += bits
            return bits
        done = 0
        while self.chunks and done < bits:
            take = min(self.chunks[0][1], bits - done)
            self.chunks[0][1] -= take
            done += take
            if self.chunks[0][1] == 0:
                self.chunks.popleft()
        self.served_total += done
        return done

    def hol_delay(self, tick: int) -> int:
        return tick - self.chunks[0][0] if self.chunks and not self.saturating else 0


def _weighted_split(rbs: int, weights: list[float], caps: list[float]) -> list[int]:
    """Integer water-filling of ``rbs`` by weight, never exceeding a cap; largest remainder."""
    n = len(weights)
    out = [0] * n
    live = [i for i in range(n) if caps[i] > 0]
    left = rbs
    while left > 0 and live:
        wsum = sum(weights[i] for i in live)
        ideal = {i: left * weights[i] / wsum for i in live}
        give = {i: min(int(ideal[i]), int(caps[i] - out[i]) if not math.isinf(caps[i]) else int(ideal[i]))
                for i in live}
        if sum(give.values()) == 0:
            order = sorted(live, key=lambda i: (-(ideal[i] - int(ideal[i])), -weights[i], i))
            for i in order:
                if left == 0:
                    break
                if out[i] < caps[i]:
                    out[i] += 1
                    left -= 1
            live = [i for i in live if out[i] < caps[i]]
            continue
        for i, g in give.items():
            out[i] += g
            left -= g
        live = [i for i in live if out[i] < caps[i]]
    return out


@dataclass
class TtiGrant:
    rbs: dict[int, int]
    served: dict[int, int]
    gbr_phase: dict[int, int]


def schedule_tti(queues: list[FlowQueue], rb_count: int, tti_ticks: int) -> TtiGrant:
    """GBR flows (highest class first) get RBs for their token-limited backlog;
    the remainder is split by QCI weight among everyone with data left."""
    rbs = {q.flow.id: 0 for q in queues}
    served = {q.flow.id: 0 for q in queues}
    gbr_phase = {}
    left = rb_count
    gbr = sorted((q for q in queues if q.flow.qci.gbr), key=lambda q: (-int(q.flow.qci), q.flow.id))
    for q in gbr:
        q.tokens += int(round(q.flow.guaranteed_bps * tti_ticks * TICK_S))
        want = min(q.need(), q.tokens)
        n = min(left, math.ceil(want / q.bits_per_rb)) if want > 0 else 0
        got = q.serve(min(int(want), n * q.bits_per_rb))
        q.tokens -= got
        rbs[q.flow.id] += n
        served[q.flow.id] += got
        gbr_phase[q.flow.id] = got
        left -= n
    rest = [q for q in queues if q.need() > 0]
    if left > 0 and rest:
        caps = [math.ceil(q.need() / q.bits_per_rb) if not math.isinf(q.need()) else math.inf for q in rest]
        split = _weighted_split(left, [q.flow.qci.weight for q in rest], caps)
        for q, n in zip(rest, split):
            if n:
                got = q.serve(n * q.bits_per_rb)
                rbs[q.flow.id] += n
                served[q.flow.id] += got
    for q in gbr:
        # cap the credit a GBR flow may bank while it has nothing queued
        q.tokens = min(q.tokens, int(round(q.flow.guaranteed_bps * tti_ticks * TICK_S)))
    return TtiGrant(rbs, served, gbr_phase)


class RateMeter:
    """Trailing-window served vs. arrived bits, in whole TTIs."""

    def __init__(self, ttis: int):
        self.served = deque(maxlen=ttis)
        self.arrived = deque(maxlen=ttis)

    def push(self, served: int, arrived: int) -> None:
        self.served.append(served)
        self.arrived.append(arrived)

    def met(self, guaranteed_bits_per_tti: int) -> bool:
        due = min(guaranteed_bits_per_tti * len(self.served), sum(self.arrived))
        return sum(self.served) >= due
