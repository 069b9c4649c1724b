"""Helpers shared by the experiment drivers."""
from __future__ import annotations

import numpy as np

from ..radio import beam_gain_db, pathloss_db
from ..topology import Node


def rsrp_matrix(ue_xy: np.ndarray, nodes: list[Node], shadow_db: np.ndarray | None = None,
                carrier_ghz: float | None = None, extra_gain_db=0.0) -> np.ndarray:
    """Received total power (dBm) at each UE from each node, using the node's first beam."""
    ue_xy = np.atleast_2d(ue_xy)
    if not nodes:
        return np.zeros((len(ue_xy), 0))
    nx = np.array([n.x for n in nodes])
    ny = np.array([n.y for n in nodes])
    dx = ue_xy[:, 0:1] - nx[None, :]
    dy = ue_xy[:, 1:2] - ny[None, :]
    d = np.hypot(dx, dy)
    az = np.degrees(np.arctan2(dy, dx))
    gains = np.empty_like(d)
    freqs = np.empty(len(nodes))
    power = np.empty(len(nodes))
    for j, n in enumerate(nodes):
        b = n.beams[0]
        gains[:, j] = beam_gain_db(az[:, j], b.boresight_deg, b.beamwidth_deg,
                                   b.peak_gain_db, b.front_to_back_db)
        freqs[j] = carrier_ghz if carrier_ghz is not None else n.aivs[0].carrier_ghz
        power[j] = n.tx_power_dbm
    pl = pathloss_db(d, freqs[None, :])
    out = power[None, :] + gains + extra_gain_db - pl
    if shadow_db is not None:
        out = out - shadow_db
    return out

