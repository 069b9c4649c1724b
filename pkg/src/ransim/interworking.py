"""Tight LTE/5G interworking: measurement filtering, switch decisions, and the
three user-plane architectures (hard handover, fast PDCP switch, dual connectivity).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .kernel import TICK_S, ticks_from_ms
from .radio import AivProfile

HH_INTERRUPTION_TICKS = ticks_from_ms(300.0)
MEAS_PERIOD_TICKS = 200
FILTER_A = 0.5
HYSTERESIS_DB = 3.0
TTT_TICKS = 800


class Mode(str, enum.Enum):
    STANDALONE = "Standalone5G"
    HH = "HH"
    FS = "FS"
    DC = "DC"


@dataclass
class AivLeg:
    node_id: int
    aiv: AivProfile
    alive: bool = True
    sleeping: bool = False
    rate_bps: float = 0.0

    @property
    def effective_rate(self) -> float:
        return self.rate_bps if self.alive and not self.sleeping else 0.0


@dataclass
class FilteredMeas:
    """Layer-3 style exponential filter per node: F_n = (1 - a) F_{n-1} + a M_n."""
    a: float = FILTER_A
    value: dict[int, float] = field(default_factory=dict)
    samples: int = 0

    def __post_init__(self):
        if not 0 < self.a <= 1:
            raise ValueError("filter coefficient must be in (0, 1]")

    def update(self, raw: dict[int, float]) -> "FilteredMeas":
        for node, m in raw.items():
            prev = self.value.get(node)
            self.value[node] = m if prev is None else (1.0 - self.a) * prev + self.a * m
        self.samples += 1
        return self


def measure_rsrp(raw_dbm: dict[int, float], previous: FilteredMeas | None = None,
                 a: float = FILTER_A) -> FilteredMeas:
    """Fold one raw RSRP sample set into the filter (a new filter starts at the raw value)."""
    meas = previous if previous is not None else FilteredMeas(a)
    return meas.update(raw_dbm)


@dataclass
class TriggerState:
    """Time-to-trigger bookkeeping: which candidate has been better, since when."""
    candidate: int | None = None
    since: int = 0


def decide_switch(meas: FilteredMeas, serving: int, tick: int, state: TriggerState,
                  hysteresis_db: float = HYSTERESIS_DB, ttt_ticks: int = TTT_TICKS,
                  candidates=None) -> int | None:
    """Propose the best candidate once it has beaten ``serving + hysteresis`` for ``ttt_ticks``.

    The comparison is strict, so equal RSRP never triggers. A change of best
    candidate restarts the timer.
    """
    if hysteresis_db < 0:
        raise ValueError("hysteresis must be >= 0")
    pool = meas.value.keys() if candidates is None else candidates
    others = [n for n in pool if n != serving and n in meas.value]
    s = meas.value.get(serving, -math.inf)
    best = min(others, key=lambda n: (-meas.value[n], n), default=None)
    if best is None or not meas.value[best] > s + hysteresis_db:
        state.candidate = None
        return None
    if state.candidate != best:
        state.candidate, state.since = best, tick
    if tick - state.since >= ttt_ticks:
        state.candidate = None
        return best
    return None


@dataclass
class InterruptionLedger:
    events: list[tuple[int, int, int]] = field(default_factory=list)  # (ue, start, end)

    def add(self, ue_id: int, start: int, length: int = HH_INTERRUPTION_TICKS) -> int:
        self.events.append((ue_id, start, start + length))
        return start + length

    def total_ticks(self) -> int:
        return sum(e - s for _, s, e in self.events)

    def audit(self, length: int = HH_INTERRUPTION_TICKS) -> bool:
        return all(e - s == length for _, s, e in self.events)

    def union_ticks(self) -> int:
        """Zero-rate ticks actually lost: overlapping events of one UE count once."""
        total = 0
        by_ue: dict[int, list[tuple[int, int]]] = {}
        for u, s, e in self.events:
            by_ue.setdefault(u, []).append((s, e))
        for spans in by_ue.values():
            end = None
            for s, e in sorted(spans):
                if end is None or s >= end:
                    total += e - s
                    end = e
                elif e > end:
                    total += e - end
                    end = e
        return total


@dataclass
class UeContext:
    ue_id: int
    mode: Mode
    serving: list[int]
    cp_legs: set[int] = field(default_factory=set)
    pdcp_queue_bits: float = 0.0
    interruption_until: int = 0
    handovers: int = 0
    switches: int = 0
    signaling_events: int = 0

    def __post_init__(self):
        self.mode = Mode(self.mode)
        limit = 2 if self.mode is Mode.DC else 1
        if not 1 <= len(self.serving) <= limit:
            raise ValueError(f"{self.mode.value} allows 1..{limit} serving legs")

    def interrupted(self, tick: int) -> bool:
        return tick < self.interruption_until


def execute_hh(ctx: UeContext, target: int, now: int, ledger: InterruptionLedger | None = None,
               interruption_ticks: int = HH_INTERRUPTION_TICKS) -> UeContext:
    """Break-before-make: new serving leg, no user-plane data until now + interruption."""
    if target in ctx.serving:
        raise ValueError("hard handover target equals the serving leg")
    ctx.serving = [target]
    ctx.cp_legs = {target}
    ctx.interruption_until = now + interruption_ticks
    ctx.handovers += 1
    ctx.signaling_events += 1
    if ledger is not None:
        ledger.add(ctx.ue_id, now, interruption_ticks)
    return ctx


def execute_fs(ctx: UeContext, target: int, now: int, cp_alive=None,
               ledger: InterruptionLedger | None = None) -> UeContext:
    """Swap the user-plane leg at PDCP with no interruption or core signaling.

    If the control plane is not alive on the target, this degrades to a hard handover.
    """
    if ctx.serving == [target]:
        return ctx
    alive = ctx.cp_legs if cp_alive is None else cp_alive
    if target not in alive:
        return execute_hh(ctx, target, now, ledger)
    ctx.serving = [target]
    ctx.switches += 1
    return ctx


def dc_schedule(ctx: UeContext, legs: list[AivLeg], ticks: int | None = None) -> dict[int, int]:
    """Drain the shared PDCP queue over ``ticks`` through every alive leg.

    Each leg offers ``rate * ticks`` bits (whole TTIs of its own profile);
    the queue is drained leg by leg in the given order, never past empty.
    """
    if not any(l.alive and not l.sleeping for l in legs):
        raise ValueError("dual connectivity needs at least one alive leg")
    if ticks is None:
        ticks = max(l.aiv.tti_ticks for l in legs)
    out = {}
    for leg in legs:
        whole = (ticks // leg.aiv.tti_ticks) * leg.aiv.tti_ticks
        cap = int(leg.effective_rate * whole * TICK_S)
        take = int(min(cap, ctx.pdcp_queue_bits))
        ctx.pdcp_queue_bits -= take
        out[leg.node_id] = take
    return out
