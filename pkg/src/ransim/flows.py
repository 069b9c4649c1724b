"""Flow and QoS class types shared by steering, slicing and interworking."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class QciClass(enum.IntEnum):
    BEST_EFFORT = 0
    NON_GBR_PRIORITY = 1
    GBR_LOW = 2
    GBR_HIGH = 3

    @property
    def gbr(self) -> bool:
        return self >= QciClass.GBR_LOW

    @property
    def weight(self) -> float:
        return QCI_WEIGHTS[self]

    def step(self, delta: int) -> "QciClass":
        return QciClass(min(max(int(self) + delta, 0), int(QciClass.GBR_HIGH)))


QCI_WEIGHTS = {
    QciClass.BEST_EFFORT: 1.0,
    QciClass.NON_GBR_PRIORITY: 2.0,
    QciClass.GBR_LOW: 4.0,
    QciClass.GBR_HIGH: 8.0,
}

# delay budget per class, used by steering to filter legs
QCI_DELAY_BUDGET_MS = {
    QciClass.BEST_EFFORT: 300.0,
    QciClass.NON_GBR_PRIORITY: 100.0,
    QciClass.GBR_LOW: 50.0,
    QciClass.GBR_HIGH: 20.0,
}


@dataclass
class Flow:
    id: int
    ue_id: int
    qci: QciClass = QciClass.BEST_EFFORT
    guaranteed_bps: float = 0.0
    remaining_bits: float = math.inf
    slice_id: int | None = None
    legs: list = field(default_factory=list)
    payload_bits: float = math.inf
    arrival_tick: int = 0
    delivered_bits: float = 0.0
    done_tick: int | None = None

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        if (self.guaranteed_bps > 0) != self.qci.gbr:
            raise ValueError(
                f"flow {self.id}: guaranteed_bps={self.guaranteed_bps} inconsistent with {self.qci.name}")

    def set_qci(self, qci: QciClass, guaranteed_bps: float = 0.0) -> None:
        self.qci = QciClass(qci)
        self.guaranteed_bps = guaranteed_bps if self.qci.gbr else 0.0
        self.check()

    @property
    def finite(self) -> bool:
        return not math.isinf(self.payload_bits)
