import os
import sys

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis.extra.numpy import arrays

from quatern.qcore import QMat

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def qmats(draw, min_side=1, max_side=5, rows=None, cols=None):
    m = rows if rows is not None else draw(st.integers(min_side, max_side))
    n = cols if cols is not None else draw(st.integers(min_side, max_side))
    return QMat(draw(arrays(np.float64, (m, n, 4), elements=finite)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_q(rng, m, n, scale=1.0):
    return QMat(scale * rng.standard_normal((m, n, 4)))


def low_rank(rng, m, n, r):
    from quatern.qcore import mat_mul
    return mat_mul(rand_q(rng, m, r), rand_q(rng, r, n))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
