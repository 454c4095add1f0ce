import os
import sys

import numpy as np
import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

LEVELS = [f"{k / 20:.2f}" for k in range(1, 20)]


@st.composite
def distinct_scores(draw, max_n=20, max_m=20):
    """(calib, test) with all n + m scores distinct."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    perm = draw(st.permutations(range(n + m)))
    vals = [float(v) for v in perm]
    return vals[:n], vals[n:]


@st.composite
def tied_scores(draw, max_n=20, max_m=20):
    """(calib, test) drawn from a small integer range, so ties are common."""
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    vals = st.integers(0, 6).map(float)
    return draw(st.lists(vals, min_size=n, max_size=n)), draw(st.lists(vals, min_size=m, max_size=m))


levels = st.sampled_from(LEVELS)


def pv_from_sorted_ranks(ranks, n):
    """A p-value vector whose test points are already in decreasing-score order."""
    from conformal_bfdr import PValueVector

    m = len(ranks)
    scores = np.arange(m, 0, -1, dtype=float)
    return PValueVector(np.asarray(ranks), np.arange(m), n, m, test_scores=scores)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


# acceptance lines, echoed at the end of the run whatever the capture mode
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
