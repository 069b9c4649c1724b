import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ransim.kernel import RngStream
from ransim.radio import lte_profile, pathloss_db
from ransim.topology import (Deployment, NodeKind, TrafficModel, TrafficSource, Ue,
                             generate_hotspot, generate_macro_grid, generate_mmw_links,
                             hex_site_positions, in_hexagon, offer_traffic,
                             poisson_arrival_ticks, step_mobility, uniform_in_disc)


def test_macro_grid_shape():
    d = generate_macro_grid(7, 3, 500.0)
    assert len(d.nodes) == 21
    assert len({n.id for n in d.nodes}) == 21
    sites = hex_site_positions(7, 500.0)
    assert np.allclose(sites[0], 0.0)
    assert np.allclose(np.hypot(sites[1:, 0], sites[1:, 1]), 500.0)
    assert sorted({n.beams[0].boresight_deg for n in d.nodes}) == [30.0, 150.0, 270.0]


def test_grid_site_counts():
    assert len(hex_site_positions(1, 500.0)) == 1
    assert len(hex_site_positions(19, 500.0)) == 19
    with pytest.raises(ValueError):
        hex_site_positions(5, 500.0)
    with pytest.raises(ValueError):
        generate_macro_grid(7, 3, 0.0)


def test_deployment_rejects_bad_triples_and_duplicates():
    nodes = generate_macro_grid(1).nodes
    with pytest.raises(ValueError):
        Deployment(nodes[:2], (-1, 1, -1, 1))
    with pytest.raises(ValueError):
        Deployment(nodes + [nodes[0]], (-1, 1, -1, 1))


def test_dominant_sector_is_geometric():
    # with zero shadowing the strongest sector is the nearest site's sector facing the point
    d = generate_macro_grid(7, 3, 500.0)
    xy = np.array([[n.x, n.y] for n in d.nodes])
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = rng.uniform(-400, 400, 2)
        dist = np.hypot(p[0] - xy[:, 0], p[1] - xy[:, 1])
        az = np.degrees(np.arctan2(p[1] - xy[:, 1], p[0] - xy[:, 0]))
        rx = np.array([n.beams[0].gain_db(a) for n, a in zip(d.nodes, az)]) - pathloss_db(dist, 2.0)
        best = d.nodes[int(np.argmax(rx))]
        near_site = int(np.argmin(np.hypot(p[0] - hex_site_positions(7, 500)[:, 0],
                                           p[1] - hex_site_positions(7, 500)[:, 1])))
        if np.min(dist) < 10.0:
            continue
        sorted_d = np.sort(np.unique(np.round(dist, 6)))
        if len(sorted_d) > 1 and sorted_d[1] - sorted_d[0] < 30.0:
            continue  # too close to a cell border to call
        assert best.site == near_site


def test_hotspot_nodes_start_inactive_and_in_disc():
    nn = generate_hotspot(6, 50.0, (100.0, 50.0), RngStream("nn", 1))
    assert len(nn) == 6
    assert all(n.kind is NodeKind.NOMADIC_NODE and not n.active for n in nn)
    assert all(math.hypot(n.x - 100.0, n.y - 50.0) <= 50.0 + 1e-9 for n in nn)
    with pytest.raises(ValueError):
        generate_hotspot(-1, 50.0, (0, 0), RngStream("nn", 1))


@given(st.integers(0, 60), st.integers(0, 1000))
def test_mmw_links_lengths_in_range(n, seed):
    links = generate_mmw_links(n, 1.0, RngStream("mmw", seed))
    assert len(links) == n
    assert all(50.0 - 1e-6 <= l.length <= 200.0 + 1e-6 for l in links)


def test_deployment_is_pure_function_of_seed():
    a = generate_mmw_links(30, 1.0, RngStream("mmw", 4))
    b = generate_mmw_links(30, 1.0, RngStream("mmw", 4))
    assert [(l.tx, l.rx) for l in a] == [(l.tx, l.rx) for l in b]


def test_deployment_dump(tmp_path):
    d = generate_macro_grid(1)
    p = tmp_path / "dep.csv"
    d.dump(p)
    lines = p.read_text().splitlines()
    assert lines[0].startswith("node_id,kind,x_m,y_m")
    assert len(lines) == 4


@given(st.floats(0, 20), st.floats(-math.pi, math.pi), st.integers(0, 50000),
       st.floats(-90, 90), st.floats(-90, 90))
def test_mobility_keeps_speed_and_bounds(speed, heading, dt, x, y):
    b = (-100.0, 100.0, -100.0, 100.0)
    u = step_mobility(Ue(0, x, y, speed, heading), dt, b)
    assert b[0] - 1e-9 <= u.x <= b[1] + 1e-9 and b[2] - 1e-9 <= u.y <= b[3] + 1e-9
    assert u.speed == speed


def test_uniform_in_disc_and_hexagon():
    pts = uniform_in_disc(RngStream("p", 0), 500, 100.0, (10.0, -5.0))
    assert np.all(np.hypot(pts[:, 0] - 10.0, pts[:, 1] + 5.0) <= 100.0 + 1e-9)
    assert in_hexagon(np.array([[0.0, 0.0], [249.0, 0.0], [251.0, 0.0]]), (0, 0), 500.0).tolist() == \
        [True, True, False]


def test_traffic_models():
    fb = TrafficModel()
    src = TrafficSource(fb, [1, 2, 3], RngStream("t", 0))
    assert len(offer_traffic(fb, 0, src)) == 3
    assert offer_traffic(fb, 1, src) == []
    fa = TrafficModel("FlowArrivals", 5000.0, 1e6)
    src2 = TrafficSource(fa, [1], RngStream("t", 0))
    flows = [f for t in range(100) for f in src2.offer(t)]
    assert 60 <= len(flows) <= 150  # mean 100
    with pytest.raises(ValueError):
        TrafficModel("Bursty")
    with pytest.raises(ValueError):
        offer_traffic(fb, 0, src2)


def test_poisson_arrivals_sorted_in_range():
    t = poisson_arrival_ticks(100.0, 0, 50000, RngStream("a", 0))
    assert t == sorted(t) and all(0 <= x < 50000 for x in t)
    assert 800 <= len(t) <= 1200
