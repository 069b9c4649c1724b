"""Tick-driven simulation engine: clock, event queue and named random streams.

One tick is 0.2 ms, the 5G TTI. An LTE TTI spans 5 ticks.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

TICK_S = 0.2e-3
TICKS_PER_S = 5000
LTE_TTI_TICKS = 5
NR_TTI_TICKS = 1

_MASK64 = (1 << 64) - 1


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current tick."""


def ticks_from_ms(ms: float) -> int:
    return int(round(ms / (TICK_S * 1e3)))


def label_key(label: str) -> int:
    """64-bit key of a stream label (first 8 bytes of BLAKE2b, big-endian)."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class RngStream:
    """A named, reproducible random stream.

    The generator is PCG64 seeded by ``SeedSequence([seed, label_key(label)])``,
    so draws depend only on (label, seed, position) and two labels never share
    state. ``position`` counts the scalar values drawn so far.
    """

    def __init__(self, label: str, seed: int):
        if not label:
            raise ValueError("stream label must be non-empty")
        self.label = label
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, label_key(label)]))
        )
        self.position = 0

    def _count(self, size) -> None:
        self.position += 1 if size is None else int(np.prod(size))

    def random(self, size=None):
        self._count(size)
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        self._count(size)
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        self._count(size)
        return self._gen.normal(loc, scale, size)

    def exponential(self, scale=1.0, size=None):
        self._count(size)
        return self._gen.exponential(scale, size)

    def poisson(self, lam=1.0, size=None):
        self._count(size)
        return self._gen.poisson(lam, size)

    def integers(self, low, high=None, size=None):
        self._count(size)
        return self._gen.integers(low, high, size)

    def __repr__(self) -> str:
        return f"RngStream({self.label!r}, seed={self.seed}, position={self.position})"


def rng_stream(label: str, master_seed: int) -> RngStream:
    return RngStream(label, master_seed)


@dataclass(order=True)
class _Entry:
    tick: int
    seq: int
    payload: Any = field(compare=False)


class EventQueue:
    """Events ordered by (tick, insertion sequence)."""

    def __init__(self):
        self._heap: list[_Entry] = []
        self._seq = itertools.count()

    def push(self, tick: int, payload: Any) -> int:
        seq = next(self._seq)
        heapq.heappush(self._heap, _Entry(tick, seq, payload))
        return seq

    def peek_tick(self) -> int | None:
        return self._heap[0].tick if self._heap else None

    def pop(self) -> tuple[int, int, Any]:
        e = heapq.heappop(self._heap)
        return e.tick, e.seq, e.payload

    def __len__(self) -> int:
        return len(self._heap)


class Simulation:
    """Run controller.

    Payloads that are callables are invoked as ``payload(sim)`` on dispatch;
    anything else is handed to ``handler`` (if given) as ``handler(sim, payload)``.
    """

    def __init__(self, horizon: int, master_seed: int = 0,
                 handler: Callable[["Simulation", Any], None] | None = None):
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        self.horizon = int(horizon)
        self.master_seed = int(master_seed)
        self.now = 0
        self.queue = EventQueue()
        self.handler = handler
        self.finished = False
        self.dispatched: list[tuple[int, int]] = []
        self.record_dispatch = False
        self._streams: dict[str, RngStream] = {}

    def schedule(self, event: Any, at: int) -> int:
        if at < self.now:
            raise SchedulingError(f"cannot schedule at tick {at}, clock is at {self.now}")
        return self.queue.push(int(at), event)

    def schedule_in(self, event: Any, delay: int) -> int:
        return self.schedule(event, self.now + int(delay))

    def stream(self, label: str) -> RngStream:
        s = self._streams.get(label)
        if s is None:
            s = self._streams[label] = RngStream(label, self.master_seed)
        return s

    def draw_counts(self) -> dict[str, int]:
        return {k: self._streams[k].position for k in sorted(self._streams)}

    def advance(self) -> int:
        """Move to the next occupied tick (or the horizon) and dispatch it."""
        nxt = self.queue.peek_tick()
        if nxt is None or nxt > self.horizon:
            self.now = self.horizon
            self.finished = True
            return self.now
        self.now = nxt
        while self.queue.peek_tick() == self.now:
            tick, seq, payload = self.queue.pop()
            if self.record_dispatch:
                self.dispatched.append((tick, seq))
            if callable(payload):
                payload(self)
            elif self.handler is not None:
                self.handler(self, payload)
        return self.now

    def run(self) -> int:
        while not self.finished:
            self.advance()
        return self.now
