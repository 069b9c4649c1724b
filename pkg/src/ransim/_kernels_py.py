"""Pure numpy versions of the hot kernels. Same signatures as ``_ckernels``."""
from __future__ import annotations

import numpy as np


def pair_ci_db(tx, rx, tx_az, rx_az, beamwidth, peak_db, ftb_db, carrier_ghz):
    """C/I (dB) at each link's receiver with one other link's transmitter as interferer.

    ``out[i, j]`` is the C/I of link ``i`` when link ``j`` transmits; the
    diagonal is +inf. Transmit powers are equal and cancel.
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    n = len(tx)
    out = np.full((n, n), np.inf)
    if n == 0:
        return out
    freq_term = 20.0 * np.log10(carrier_ghz / 2.0)

    def pl(d):
        return 128.1 + 37.6 * np.log10(np.maximum(d, 10.0) / 1000.0) + freq_term

    own = np.hypot(rx[:, 0] - tx[:, 0], rx[:, 1] - tx[:, 1])
    carrier = 2.0 * peak_db - pl(own)
    # dx[i, j]: vector from tx_j to rx_i
    dx = rx[:, None, 0] - tx[None, :, 0]
    dy = rx[:, None, 1] - tx[None, :, 1]
    dist = np.hypot(dx, dy)
    az_tx = np.degrees(np.arctan2(dy, dx))
    az_rx = np.degrees(np.arctan2(-dy, -dx))

    def gain(az, bore):
        off = (az - bore + 180.0) % 360.0 - 180.0
        return peak_db - np.minimum(12.0 * (off / beamwidth) ** 2, ftb_db)

    interf = gain(az_tx, np.asarray(tx_az)[None, :]) + gain(az_rx, np.asarray(rx_az)[:, None]) - pl(dist)
    ci = carrier[:, None] - interf
    np.fill_diagonal(ci, np.inf)
    out[:] = ci
    return out


def slotted_interfered(i_over_c, start, end, threshold_lin):
    """Airtime fraction during which each link's aggregate C/I is below threshold.

    Link ``i`` transmits on [start[i], end[i]) of a unit frame; ``i_over_c[i, j]``
    is the linear I/C contributed by link ``j`` at link ``i``'s receiver.
    """
    ioc = np.asarray(i_over_c, dtype=float)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    n = len(start)
    bad = np.zeros(n)
    if n == 0:
        return bad
    cuts = np.unique(np.concatenate([start, end, [0.0, 1.0]]))
    for a, b in zip(cuts[:-1], cuts[1:]):
        act = np.flatnonzero((start <= a) & (a < end))
        if len(act) < 2:
            continue
        sub = ioc[np.ix_(act, act)].copy()
        np.fill_diagonal(sub, 0.0)
        agg = sub.sum(axis=1)
        hit = agg * threshold_lin > 1.0
        bad[act[hit]] += b - a
    return bad / (end - start)


def rb_sinr(rx_mw, assign, noise_mw):
    """Per-(node, RB) SINR of the assigned user.

    ``rx_mw[u, n]`` is user ``u``'s received power from node ``n``;
    ``assign[n, r]`` the user served by node ``n`` on RB ``r`` or -1. Nodes
    serving the same user on the same RB combine coherently (joint
    transmission), so their power counts as signal.
    """
    rx_mw = np.asarray(rx_mw, dtype=float)
    assign = np.asarray(assign)
    n_nodes, n_rb = assign.shape
    out = np.zeros((n_nodes, n_rb))
    for r in range(n_rb):
        col = assign[:, r]
        tx = np.flatnonzero(col >= 0)
        if len(tx) == 0:
            continue
        users = col[tx]
        p = rx_mw[np.ix_(users, tx)]  # p[k, m]: power at user of k-th tx from m-th tx
        same = users[:, None] == users[None, :]
        sig = np.where(same, p, 0.0).sum(axis=1)
        intf = np.where(same, 0.0, p).sum(axis=1)
        out[tx, r] = sig / (intf + noise_mw)
    return out
