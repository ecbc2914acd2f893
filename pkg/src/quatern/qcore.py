"""Dense quaternion matrices.

A quaternion matrix is stored as a float64 array of shape ``(rows, cols, 4)``
holding the components ``(s, x, y, z)`` of ``s + x i + y j + z k`` for every
entry, row-major.  Values are treated as immutable: every operation returns a
new matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ShapeError(ValueError):
    """Operands with incompatible shapes."""


class EmbeddingError(ValueError):
    """A complex matrix that is not the image of a quaternion matrix."""

    def __init__(self, deviation: float, tol: float):
        super().__init__(
            f"complex matrix violates quaternion block structure: "
            f"deviation {deviation:.3e} > tolerance {tol:.3e}"
        )
        self.deviation = deviation
        self.tol = tol


class QmatFormatError(ValueError):
    """Malformed QMAT text file."""

    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


# ---------------------------------------------------------------------------
# scalars

@dataclass(frozen=True)
class Quat:
    s: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __mul__(self, other):
        if isinstance(other, Quat):
            return quat_mul(self, other)
        return Quat(self.s * other, self.x * other, self.y * other, self.z * other)

    def __rmul__(self, other):
        return Quat(self.s * other, self.x * other, self.y * other, self.z * other)

    def __add__(self, other: Quat) -> Quat:
        return Quat(self.s + other.s, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Quat) -> Quat:
        return Quat(self.s - other.s, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Quat:
        return Quat(-self.s, -self.x, -self.y, -self.z)

    def conj(self) -> Quat:
        return Quat(self.s, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.s**2 + self.x**2 + self.y**2 + self.z**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.x, self.y, self.z])


def quat_mul(a: Quat, b: Quat) -> Quat:
    """Hamilton product ``a * b``."""
    return Quat(
        a.s * b.s - a.x * b.x - a.y * b.y - a.z * b.z,
        a.s * b.x + a.x * b.s + a.y * b.z - a.z * b.y,
        a.s * b.y - a.x * b.z + a.y * b.s + a.z * b.x,
        a.s * b.z + a.x * b.y - a.y * b.x + a.z * b.s,
    )


ONE = Quat(1.0)
I_ = Quat(0.0, 1.0)
J_ = Quat(0.0, 0.0, 1.0)
K_ = Quat(0.0, 0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# matrices

class QMat:
    """Dense quaternion matrix backed by an ``(m, n, 4)`` float64 array."""

    __slots__ = ("data",)
    __array_priority__ = 100  # keep numpy scalars from hijacking r-operators

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C")
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise ShapeError(f"expected array of shape (m, n, 4), got {arr.shape}")
        arr.flags.writeable = False
        self.data = arr

    # construction -----------------------------------------------------------
    @classmethod
    def from_components(cls, s, x=None, y=None, z=None) -> QMat:
        s = np.atleast_2d(np.asarray(s, dtype=np.float64))
        zero = np.zeros_like(s)
        parts = [s] + [zero if c is None else np.atleast_2d(np.asarray(c, dtype=np.float64))
                       for c in (x, y, z)]
        return cls(np.stack(parts, axis=-1))

    @classmethod
    def zeros(cls, m: int, n: int) -> QMat:
        return cls(np.zeros((m, n, 4)))

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator) -> QMat:
        """Standard Gaussian in all four components."""
        return cls(rng.standard_normal((m, n, 4)))

    # views --------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def component(self, k: int) -> np.ndarray:
        return self.data[..., k]

    @property
    def s(self) -> np.ndarray:
        return self.data[..., 0]

    @property
    def H(self) -> QMat:
        return adjoint(self)

    def __getitem__(self, idx) -> QMat:
        r, c = idx
        sub = self.data[r, c]
        if sub.ndim == 1:
            return QMat(sub.reshape(1, 1, 4))
        if sub.ndim == 2:
            # one index was scalar; keep orientation
            if isinstance(r, (int, np.integer)):
                sub = sub[None, :, :]
            else:
                sub = sub[:, None, :]
        return QMat(sub)

    def entry(self, r: int, c: int) -> Quat:
        return Quat(*map(float, self.data[r, c]))

    # arithmetic ---------------------------------------------------------------
    def __add__(self, other: QMat) -> QMat:
        _same_shape(self, other)
        return QMat(self.data + other.data)

    def __sub__(self, other: QMat) -> QMat:
        _same_shape(self, other)
        return QMat(self.data - other.data)

    def __neg__(self) -> QMat:
        return QMat(-self.data)

    def __mul__(self, c) -> QMat:
        if isinstance(c, QMat):
            raise TypeError("use @ for matrix products or hadamard() for entrywise products")
        return QMat(self.data * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c) -> QMat:
        return QMat(self.data / float(c))

    def __matmul__(self, other: QMat) -> QMat:
        return mat_mul(self, other)

    def __repr__(self) -> str:
        return f"QMat({self.rows}x{self.cols})"

    def add_identity(self, c: float = 1.0) -> QMat:
        """``self + c*I`` for square matrices, without forming ``I``."""
        m, n = self.shape
        if m != n:
            raise ShapeError(f"add_identity needs a square matrix, got {m}x{n}")
        out = self.data.copy()
        idx = np.arange(m)
        out[idx, idx, 0] += c
        return QMat(out)


def _same_shape(a: QMat, b: QMat) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape[0]}x{a.shape[1]} vs {b.shape[0]}x{b.shape[1]}")


@dataclass
class MulCounter:
    """Per-run tally of quaternion matrix products.

    Threaded explicitly through a solver run; never shared between runs.
    """

    count: int = 0
    enabled: bool = True
    _marks: list = field(default_factory=list, repr=False)

    def mul(self, a: QMat, b: QMat) -> QMat:
        return mat_mul(a, b, counter=self)

    def mark(self) -> int:
        self._marks.append(self.count)
        return self.count

    def since_mark(self) -> int:
        return self.count - self._marks[-1]


def _right_block(b: np.ndarray) -> np.ndarray:
    # Real (4p, 4n) matrix T with [As|Ax|Ay|Az] @ T == [Cs|Cx|Cy|Cz] for C = A B.
    bs, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.block([
        [bs, bx, by, bz],
        [-bx, bs, -bz, by],
        [-by, bz, bs, -bx],
        [-bz, -by, bx, bs],
    ])


def mat_mul(a: QMat, b: QMat, counter: MulCounter | None = None) -> QMat:
    """Quaternion matrix product, entries multiplied left-to-right.

    Computed as a single real GEMM: the left factor's components are laid side
    by side and multiplied by the real 4x4-block image of the right factor.
    """
    m, p = a.shape
    p2, n = b.shape
    if p != p2:
        raise ShapeError(f"cannot multiply {m}x{p} by {p2}x{n}")
    if counter is not None and counter.enabled:
        counter.count += 1
    left = a.data.transpose(0, 2, 1).reshape(m, 4 * p)
    out = left @ _right_block(b.data)
    return QMat(out.reshape(m, 4, n).transpose(0, 2, 1))


def adjoint(a: QMat) -> QMat:
    """Conjugate transpose."""
    d = a.data.transpose(1, 0, 2).copy()
    d[..., 1:] *= -1.0
    return QMat(d)


def identity(n: int) -> QMat:
    d = np.zeros((n, n, 4))
    d[np.arange(n), np.arange(n), 0] = 1.0
    return QMat(d)


def frobenius(a: QMat) -> float:
    return float(np.linalg.norm(a.data.ravel()))


def fro_dist(a: QMat, b: QMat) -> float:
    _same_shape(a, b)
    return float(np.linalg.norm((a.data - b.data).ravel()))


def inner(a: QMat, b: QMat) -> float:
    """Global inner product ``Re trace(a^H b)``."""
    _same_shape(a, b)
    return float(np.dot(a.data.ravel(), b.data.ravel()))


def hadamard(a: QMat, b: QMat) -> QMat:
    """Entrywise Hamilton product ``a[r,c] * b[r,c]``."""
    _same_shape(a, b)
    p, q = a.data, b.data
    ps, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qs, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return QMat(np.stack([
        ps * qs - px * qx - py * qy - pz * qz,
        ps * qx + px * qs + py * qz - pz * qy,
        ps * qy - px * qz + py * qs + pz * qx,
        ps * qz + px * qy - py * qx + pz * qs,
    ], axis=-1))


def real_mask_apply(mask, m: QMat, x: QMat) -> QMat:
    """``mask*m + (1-mask)*x`` with a real 0/1 mask shared by all components."""
    _same_shape(m, x)
    w = np.asarray(mask, dtype=np.float64)
    if w.shape != m.shape:
        raise ShapeError(f"mask shape {w.shape} does not match matrix shape {m.shape}")
    w = w[..., None]
    return QMat(w * m.data + (1.0 - w) * x.data)


def allclose(a: QMat, b: QMat, rtol: float = 1e-12, atol: float = 0.0) -> bool:
    return a.shape == b.shape and fro_dist(a, b) <= atol + rtol * max(frobenius(a), frobenius(b))


# ---------------------------------------------------------------------------
# complex embedding

def embed(a: QMat) -> np.ndarray:
    """Complex representation, a ``2m x 2n`` complex matrix.

    ``[[S + X i, Y + Z i], [-Y + Z i, S - X i]]``; a ring homomorphism.
    """
    s, x, y, z = (a.data[..., k] for k in range(4))
    return np.block([[s + 1j * x, y + 1j * z], [-y + 1j * z, s - 1j * x]])


def embed_tol(c: np.ndarray) -> float:
    return 1e-8 * (1.0 + float(np.linalg.norm(c)))


def unembed(c: np.ndarray, tol: float | None = None) -> QMat:
    """Left inverse of :func:`embed`.

    The two redundant copies of every component are averaged; raises
    :class:`EmbeddingError` when they disagree by more than ``tol``
    (default ``1e-8 * (1 + ||c||_F)``).
    """
    c = np.asarray(c)
    if c.ndim != 2 or c.shape[0] % 2 or c.shape[1] % 2:
        raise ShapeError(f"complex representation must be 2m x 2n, got {c.shape}")
    m, n = c.shape[0] // 2, c.shape[1] // 2
    c11, c12 = c[:m, :n], c[:m, n:]
    c21, c22 = c[m:, :n], c[m:, n:]
    dev = math.hypot(np.linalg.norm(c22 - np.conj(c11)), np.linalg.norm(c21 + np.conj(c12)))
    if tol is None:
        tol = embed_tol(c)
    if dev > tol:
        raise EmbeddingError(dev, tol)
    s = 0.5 * (c11.real + c22.real)
    x = 0.5 * (c11.imag - c22.imag)
    y = 0.5 * (c12.real - c21.real)
    z = 0.5 * (c12.imag + c21.imag)
    return QMat(np.stack([s, x, y, z], axis=-1))


# ---------------------------------------------------------------------------
# QMAT text format

def write_qmat(path, a: QMat) -> None:
    m, n = a.shape
    lines = [f"QMAT v1 {m} {n}"]
    lines += [" ".join(repr(float(v)) for v in q) for q in a.data.reshape(-1, 4)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_qmat(path) -> QMat:
    text = Path(path).read_text().splitlines()
    if not text:
        raise QmatFormatError("empty file", 1)
    head = text[0].split()
    if len(head) != 4 or head[0] != "QMAT" or head[1] != "v1":
        raise QmatFormatError(f"expected 'QMAT v1 <rows> <cols>', got {text[0]!r}", 1)
    try:
        m, n = int(head[2]), int(head[3])
    except ValueError:
        raise QmatFormatError(f"bad dimensions in header {text[0]!r}", 1) from None
    if m <= 0 or n <= 0:
        raise QmatFormatError(f"dimensions must be positive, got {m}x{n}", 1)
    body = [(i + 2, ln) for i, ln in enumerate(text[1:]) if ln.strip()]
    if len(body) != m * n:
        line = body[m * n][0] if len(body) > m * n else len(text) + 1
        raise QmatFormatError(f"expected {m * n} entries, found {len(body)}", line)
    out = np.empty((m * n, 4))
    for k, (lineno, ln) in enumerate(body):
        parts = ln.split()
        if len(parts) != 4:
            raise QmatFormatError(f"expected 4 components, got {len(parts)}", lineno)
        try:
            out[k] = [float(p) for p in parts]
        except ValueError:
            raise QmatFormatError(f"non-numeric component in {ln!r}", lineno) from None
    return QMat(out.reshape(m, n, 4))
