"""Published reference values for the 3 x 3 worked example used by ``selftest``."""

from __future__ import annotations

import numpy as np

from .qcore import QMat

EXAMPLE1_ALPHA = 2.058856e-3
EXAMPLE1_ITERATIONS = {"qsai": 4, "qrapid": 4, "qhpi19": 3}

_A = [
    [(6, 3, 5, 2), (1, 5, 2, 3), (0, 1, 7, 8)],
    [(2, 1, 1, 1), (3, 3, 1, 1), (2, 5, 2, 1)],
    [(4, 2, 2, 2), (6, 6, 2, 2), (4, 10, 4, 2)],
]

# columns of the pseudoinverse as printed, four decimals
_PINV_COLS = [
    [(0.0627, -0.0325, -0.0520, 0.0236),
     (-0.0118, -0.0229, 0.0102, 0.0314),
     (-0.0042, 0.0458, -0.0116, -0.0362)],
    [(-0.0028, 0.0085, 0.0051, -0.0264),
     (0.0164, -0.0075, -0.0129, -0.0092),
     (0.0045, -0.0225, 0.0071, 0.0081)],
    [(-0.0055, 0.0170, 0.0102, -0.0527),
     (0.0327, -0.0150, -0.0259, -0.0183),
     (0.0091, -0.0449, 0.0142, 0.0163)],
]


def example1_matrix() -> QMat:
    return QMat(np.array(_A, dtype=np.float64))


def example1_pinv_rounded() -> QMat:
    cols = np.array(_PINV_COLS, dtype=np.float64)  # (col, row, 4)
    return QMat(cols.transpose(1, 0, 2))


def matches_to_decimals(x: QMat, ref: QMat, decimals: int = 4) -> bool:
    """True when ``x`` rounds to ``ref`` entrywise (half-unit slack for ties)."""
    slack = 0.5 * 10.0 ** (-decimals) + 1e-12
    return x.shape == ref.shape and bool(np.all(np.abs(x.data - ref.data) <= slack))
