"""Matrix Market (coordinate, real) reading and the saylr1 test system."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .qcore import QMat

SAYLR1_URL = "https://math.nist.gov/MatrixMarket/data/Harwell-Boeing/oilgen/saylr1.html"
SAYLR1_SCALES = (1.0, -1.0, 2.0, 1.5)  # (s, x, y, z) multiples of the real matrix


class MMParseError(ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class MMHeader:
    object: str
    format: str
    field: str
    symmetry: str
    rows: int
    cols: int
    nnz: int


def _parse_banner(line: str, lineno: int) -> tuple[str, str, str, str]:
    tok = line.strip().split()
    if len(tok) != 5 or tok[0].lower() != "%%matrixmarket":
        raise MMParseError(f"bad banner {line.strip()!r}", lineno)
    obj, fmt, fld, sym = (t.lower() for t in tok[1:])
    if obj != "matrix" or fmt != "coordinate" or fld != "real" or sym not in ("general", "symmetric"):
        raise MMParseError(
            f"unsupported type '{obj} {fmt} {fld} {sym}'; "
            "only 'matrix coordinate real general|symmetric' is accepted", lineno)
    return obj, fmt, fld, sym


def read_matrix_market(path) -> tuple[MMHeader, np.ndarray]:
    """Parse a coordinate real file into a dense array.

    Indices are 1-based on disk; symmetric files are mirrored and duplicate
    entries are summed.
    """
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MMParseError("empty file", 1)
    banner = _parse_banner(lines[0], 1)
    k = 1
    while k < len(lines) and (not lines[k].strip() or lines[k].lstrip().startswith("%")):
        k += 1
    if k == len(lines):
        raise MMParseError("missing size line", k + 1)
    size = lines[k].split()
    try:
        rows, cols, nnz = (int(t) for t in size)
    except ValueError:
        raise MMParseError(f"bad size line {lines[k].strip()!r}", k + 1) from None
    if rows <= 0 or cols <= 0 or nnz < 0:
        raise MMParseError(f"bad size line {lines[k].strip()!r}", k + 1)
    header = MMHeader(*banner, rows, cols, nnz)
    if banner[3] == "symmetric" and rows != cols:
        raise MMParseError("symmetric matrix must be square", k + 1)
    dense = np.zeros((rows, cols))
    seen = 0
    for lineno in range(k + 2, len(lines) + 1):
        ln = lines[lineno - 1].strip()
        if not ln or ln.startswith("%"):
            continue
        if seen == nnz:
            raise MMParseError(f"more than the declared {nnz} entries", lineno)
        parts = ln.split()
        if len(parts) != 3:
            raise MMParseError(f"expected 'row col value', got {ln!r}", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MMParseError(f"malformed entry {ln!r}", lineno) from None
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise MMParseError(f"index ({i}, {j}) outside {rows}x{cols}", lineno)
        dense[i - 1, j - 1] += v
        if banner[3] == "symmetric" and i != j:
            dense[j - 1, i - 1] += v
        seen += 1
    if seen < nnz:
        raise MMParseError(f"truncated body: {seen} of {nnz} entries", len(lines) + 1)
    return header, dense


def parse_matrix_market(path) -> np.ndarray:
    return read_matrix_market(path)[1]


def write_matrix_market(path, a: np.ndarray, comment: str = "") -> None:
    a = np.asarray(a, dtype=np.float64)
    ii, jj = np.nonzero(a)
    out = ["%%MatrixMarket matrix coordinate real general"]
    if comment:
        out += [f"% {ln}" for ln in comment.splitlines()]
    out.append(f"{a.shape[0]} {a.shape[1]} {ii.size}")
    out += [f"{i + 1} {j + 1} {float(a[i, j])!r}" for i, j in zip(ii, jj)]
    Path(path).write_text("\n".join(out) + "\n")


def build_saylr1_system(a_s: np.ndarray, m: int, seed: int = 0) -> tuple[QMat, QMat]:
    """``A = A_s (1 - i + 2j + 1.5k)`` and a seeded uniform ``B`` with ``m`` columns."""
    a_s = np.asarray(a_s, dtype=np.float64)
    if a_s.ndim != 2 or a_s.shape[0] != a_s.shape[1]:
        raise ValueError(f"A_s must be square, got {a_s.shape}")
    a = QMat(np.stack([c * a_s for c in SAYLR1_SCALES], axis=-1))
    rng = np.random.default_rng(seed)
    b = QMat(rng.uniform(0.0, 1.0, size=(a_s.shape[0], m, 4)))
    return a, b


def reservoir_surrogate(nx: int = 14, ny: int = 17, seed: int = 0, log_sigma: float = 2.5,
                        accumulation: float = 1e-4, drift: float = 0.05) -> np.ndarray:
    """Five-point reservoir pressure operator on an ``nx`` by ``ny`` grid.

    Same sparsity as saylr1 (14 x 17 grid, 1128 nonzeros) with log-normal
    transmissibilities, a weak accumulation term and an upwinded drift that
    breaks symmetry.  Used when the real file is not available.
    """
    rng = np.random.default_rng(seed)
    n = nx * ny
    perm = np.exp(log_sigma * rng.standard_normal((ny, nx)))
    a = np.zeros((n, n))
    idx = lambda i, j: j * nx + i
    tmean = 0.0
    edges = []
    for j in range(ny):
        for i in range(nx):
            for di, dj in ((1, 0), (0, 1)):
                i2, j2 = i + di, j + dj
                if i2 < nx and j2 < ny:
                    k1, k2 = perm[j, i], perm[j2, i2]
                    t = 2.0 * k1 * k2 / (k1 + k2)
                    edges.append((idx(i, j), idx(i2, j2), t, di))
                    tmean += t
    tmean /= len(edges)
    for p, q, t, along_x in edges:
        a[p, p] += t
        a[q, q] += t
        a[p, q] -= t
        a[q, p] -= t
        if along_x:
            # flow in +x: upwind node p feeds q
            u = drift * t
            a[q, q] += u
            a[q, p] -= u
    a[np.arange(n), np.arange(n)] += accumulation * tmean
    return a


def find_saylr1(path=None) -> Path | None:
    """Locate a user-supplied saylr1.mtx (argument, ``QUATERN_SAYLR1``, or ``data/``)."""
    cands = [path, os.environ.get("QUATERN_SAYLR1"),
             Path(__file__).resolve().parents[2] / "data" / "saylr1.mtx",
             Path.cwd() / "data" / "saylr1.mtx"]
    for c in cands:
        if c and Path(c).is_file():
            return Path(c)
    return None


def load_saylr1_or_surrogate(path=None, seed: int = 0) -> tuple[np.ndarray, str]:
    found = find_saylr1(path)
    if found is not None:
        return parse_matrix_market(found), str(found)
    return reservoir_surrogate(seed=seed), f"surrogate(seed={seed})"
