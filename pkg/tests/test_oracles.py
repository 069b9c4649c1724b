"""Fast paths against their by-definition oracles."""
import math
from fractions import Fraction

import numpy as np

from ransim.kernel import RngStream
from ransim.stats import percentile
from ransim.steering import pgia_conflict_sets, pgia_conflict_sets_bruteforce
from ransim.topology import generate_mmw_links

N_FIELDS = 500
N_LISTS = 10_000


def random_fields(n_fields=N_FIELDS, max_links=50):
    rng = np.random.default_rng(2024)
    for k in range(n_fields):
        n = int(rng.integers(1, max_links + 1))
        area = float(rng.choice([0.01, 0.05, 0.25, 1.0]))
        lo = float(rng.uniform(20.0, 100.0))
        ftb = float(rng.choice([6.0, 10.0, 20.0]))
        bw = float(rng.choice([10.0, 15.0, 30.0]))
        yield generate_mmw_links(n, area, RngStream(f"field/{k}", 7), (lo, lo + 150.0), bw, 20.0, ftb)


def test_conflict_sets_match_bruteforce():
    mismatches = 0
    for links in random_fields():
        fast = pgia_conflict_sets(links)
        slow = pgia_conflict_sets_bruteforce(links)
        if fast.groups != slow.groups or sorted(fast.edges) != sorted(slow.edges):
            mismatches += 1
    assert mismatches == 0


def test_fields_exercise_both_outcomes():
    sizes = [max(pgia_conflict_sets(l).sizes()) for l in random_fields(60)]
    assert min(sizes) == 1 and max(sizes) > 5


def _oracle(xs, p):
    s = sorted(xs)
    return s[math.ceil(Fraction(p) * len(s) / 100) - 1]


def test_percentile_matches_sort_oracle():
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(N_LISTS):
        n = int(rng.integers(1, 200))
        if rng.random() < 0.3:
            xs = rng.integers(-5, 5, n).astype(float).tolist()  # many ties
        else:
            xs = rng.normal(0, 1e6, n).tolist()
        p = float(rng.choice([5.0, 10.0, 50.0, 100.0])) if rng.random() < 0.3 else float(rng.uniform(1e-6, 100.0))
        if percentile(xs, p) != _oracle(xs, p):
            bad += 1
    assert bad == 0
