"""Quaternion CUR factorization and impute-reconstruct completion of color images.

A color image is stored as a purely imaginary quaternion matrix with the RGB
channels in the ``i, j, k`` components.  Each completion sweep rebuilds a rank
``r`` CUR approximation of the current estimate, optionally smooths it, and
puts the observed pixels back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .imaging import gaussian_blur, psnr, ssim
from .pinv import BACKENDS, pinv
from .qcore import QMat, ShapeError, mat_mul, real_mask_apply

CUR_BACKENDS = ("qsvd", "qns", "qsai", "qrapid", "qhpi19")
U_MODES = ("opt", "cross")
SELECTIONS = ("uniform", "energy")


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuatImage:
    pixels: QMat

    def __post_init__(self):
        d = self.pixels.data
        if np.any(d[..., 0] != 0.0):
            raise ValueError("image pixels must be purely imaginary")

    @classmethod
    def from_rgb(cls, rgb: np.ndarray) -> QuatImage:
        rgb = np.asarray(rgb, dtype=np.float64)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ShapeError(f"expected (h, w, 3) array, got {rgb.shape}")
        if rgb.min(initial=0.0) < 0.0 or rgb.max(initial=0.0) > 1.0:
            raise ValueError("channel values must lie in [0, 1]")
        return cls(QMat(np.concatenate([np.zeros(rgb.shape[:2] + (1,)), rgb], axis=-1)))

    @property
    def height(self) -> int:
        return self.pixels.rows

    @property
    def width(self) -> int:
        return self.pixels.cols

    def rgb(self) -> np.ndarray:
        return self.pixels.data[..., 1:].copy()


@dataclass(frozen=True)
class CurConfig:
    rank: int = 8
    iters: int = 15
    backend: str = "qsvd"
    u_mode: str = "opt"
    gaussian_sigma: float | None = None
    seed: int = 0
    redraw: bool = False
    selection: str = "uniform"
    pinv_tol: float = 1e-10
    pinv_max_iters: int = 500
    pure_imaginary: bool = True

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if self.iters < 1:
            raise ValueError("iters must be positive")
        if self.backend not in CUR_BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {CUR_BACKENDS}")
        if self.u_mode not in U_MODES:
            raise ValueError(f"unknown u_mode {self.u_mode!r}; expected one of {U_MODES}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"unknown selection {self.selection!r}; expected one of {SELECTIONS}")
        if self.gaussian_sigma is not None and not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be positive")


@dataclass
class CurHistory:
    psnr: list[float] = field(default_factory=list)
    ssim: list[float] = field(default_factory=list)
    scalar_leak: list[float] = field(default_factory=list)
    rel_change: list[float] = field(default_factory=list)

    def rows(self):
        for t, (p, s) in enumerate(zip(self.psnr, self.ssim), start=1):
            yield t, p, s


def _check_indices(idx, bound: int, what: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise IndexError(f"{what} index out of range 0..{bound - 1}")
    if np.unique(idx).size != idx.size:
        raise ValueError(f"duplicate {what} indices")
    return idx


def _pinv(a: QMat, cfg: CurConfig, what: str) -> QMat:
    assert cfg.backend in BACKENDS
    rep = pinv(a, cfg.backend, tol=cfg.pinv_tol, max_iters=cfg.pinv_max_iters)
    if not (rep.converged or rep.stalled) or not np.all(np.isfinite(rep.X.data)):
        raise BackendError(f"{cfg.backend} failed on {what} ({a.rows}x{a.cols}) "
                           f"after {rep.iterations} iterations")
    return rep.X


def cur_factor(a: QMat, rows_idx, cols_idx, u_mode: str = "opt",
               cfg: CurConfig | None = None) -> tuple[QMat, QMat, QMat]:
    """``C = A[:, J]``, ``R = A[I, :]`` and the coupling matrix ``U``.

    ``opt`` uses ``U = C^+ A R^+``; ``cross`` uses ``U = (A[I, J])^+``.
    """
    cfg = cfg or CurConfig(rank=max(1, len(rows_idx)), u_mode=u_mode)
    m, n = a.shape
    ii = _check_indices(rows_idx, m, "row")
    jj = _check_indices(cols_idx, n, "column")
    if ii.size != jj.size:
        raise ValueError(f"need as many rows as columns, got {ii.size} and {jj.size}")
    c = QMat(a.data[:, jj])
    r = QMat(a.data[ii, :])
    if u_mode == "opt":
        u = mat_mul(mat_mul(_pinv(c, cfg, "C"), a), _pinv(r, cfg, "R"))
    elif u_mode == "cross":
        u = _pinv(QMat(a.data[np.ix_(ii, jj)]), cfg, "W")
    else:
        raise ValueError(f"unknown u_mode {u_mode!r}")
    return c, u, r


def cur_reconstruct(a: QMat, rows_idx, cols_idx, u_mode: str = "opt",
                    cfg: CurConfig | None = None) -> QMat:
    c, u, r = cur_factor(a, rows_idx, cols_idx, u_mode, cfg)
    return mat_mul(mat_mul(c, u), r)


def select_indices(m: int, n: int, r: int, rng: np.random.Generator,
                   weights: tuple[np.ndarray, np.ndarray] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``r`` distinct rows and columns, uniformly or with the given weights."""
    if r > min(m, n):
        raise ValueError(f"rank {r} exceeds min({m}, {n})")
    pr = pc = None
    if weights is not None:
        pr, pc = (w / w.sum() if w.sum() > 0 and np.count_nonzero(w) >= r else None for w in weights)
    return (np.sort(rng.choice(m, size=r, replace=False, p=pr)),
            np.sort(rng.choice(n, size=r, replace=False, p=pc)))


def _energy(z: QMat) -> tuple[np.ndarray, np.ndarray]:
    sq = np.sum(z.data ** 2, axis=2)
    return sq.sum(axis=1), sq.sum(axis=0)


def random_mask(shape: tuple[int, int], missing_fraction: float, seed: int = 0) -> np.ndarray:
    """0/1 mask with exactly ``round(missing_fraction * size)`` zeros."""
    if not 0.0 <= missing_fraction < 1.0:
        raise ValueError("missing_fraction must lie in [0, 1)")
    size = shape[0] * shape[1]
    k = int(round(missing_fraction * size))
    mask = np.ones(size)
    mask[np.random.default_rng(seed).choice(size, size=k, replace=False)] = 0.0
    return mask.reshape(shape)


def _blur(x: QMat, sigma: float) -> QMat:
    d = x.data.copy()
    for k in range(1, 4):
        d[..., k] = gaussian_blur(d[..., k], sigma)
    return QMat(d)


def impute_reconstruct(observed: QuatImage, mask: np.ndarray, cfg: CurConfig,
                       truth: QuatImage | None = None) -> tuple[QuatImage, CurHistory]:
    """Alternate CUR reconstruction with reinsertion of the observed pixels.

    Missing pixels start at zero.  Row and column indices are drawn once from
    ``cfg.seed`` unless ``cfg.redraw`` is set, in which case every sweep draws
    a fresh set.  The scalar part of each reconstruction is dropped before
    reinsertion when ``cfg.pure_imaginary`` holds; its size is still logged.
    """
    mask = np.asarray(mask, dtype=np.float64)
    m_img = observed.pixels
    if mask.shape != m_img.shape:
        raise ShapeError(f"mask shape {mask.shape} does not match image {m_img.shape}")
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise ValueError("mask must be binary")
    m, n = m_img.shape
    rng = np.random.default_rng(cfg.seed)
    cur = real_mask_apply(mask, m_img, QMat.zeros(m, n))
    draw = lambda z: select_indices(m, n, cfg.rank, rng,
                                    _energy(z) if cfg.selection == "energy" else None)
    ii, jj = draw(cur)
    hist = CurHistory()
    ref = truth.rgb() if truth is not None else None
    for _ in range(cfg.iters):
        if cfg.redraw:
            ii, jj = draw(cur)
        x = cur_reconstruct(cur, ii, jj, cfg.u_mode, cfg)
        scale = max(float(np.max(np.abs(x.data))), 1e-300)
        hist.scalar_leak.append(float(np.max(np.abs(x.data[..., 0]))) / scale)
        if cfg.pure_imaginary:
            d = x.data.copy()
            d[..., 0] = 0.0
            x = QMat(d)
        if cfg.gaussian_sigma is not None:
            x = _blur(x, cfg.gaussian_sigma)
        nxt = real_mask_apply(mask, m_img, x)
        denom = max(float(np.linalg.norm(cur.data)), 1e-300)
        hist.rel_change.append(float(np.linalg.norm(nxt.data - cur.data)) / denom)
        cur = nxt
        if ref is not None:
            est = np.clip(cur.data[..., 1:], 0.0, 1.0)
            hist.psnr.append(psnr(est, ref))
            hist.ssim.append(ssim(est, ref))
    d = cur.data.copy()
    d[..., 0] = 0.0
    d[..., 1:] = np.clip(d[..., 1:], 0.0, 1.0)
    return QuatImage(QMat(d)), hist


def planted_low_rank(m: int = 80, n: int = 60, rank: int = 5, seed: int = 0) -> QuatImage:
    """Purely imaginary image of exact quaternion rank ``rank`` with values in ``[0, 1]``.

    ``A = L Q`` with ``L`` real nonnegative and ``Q`` purely imaginary; real
    left factors keep the product purely imaginary.
    """
    rng = np.random.default_rng(seed)
    left = rng.uniform(0.0, 1.0, size=(m, rank))
    q = np.zeros((rank, n, 4))
    q[..., 1:] = rng.uniform(0.0, 1.0, size=(rank, n, 3))
    data = np.einsum("ik,kjc->ijc", left, q)
    data /= data.max()
    data[..., 0] = 0.0
    return QuatImage(QMat(data))


def relative_error(x: QuatImage, ref: QuatImage) -> float:
    return float(np.linalg.norm(x.pixels.data - ref.pixels.data) / np.linalg.norm(ref.pixels.data))


def missing_psnr(observed: QuatImage, mask: np.ndarray, truth: QuatImage) -> float:
    """PSNR of the zero-filled observation against the truth."""
    z = observed.rgb() * np.asarray(mask)[..., None]
    return psnr(z, truth.rgb())


def final_psnr(hist: CurHistory) -> float:
    return hist.psnr[-1] if hist.psnr else math.nan
