"""Lorenz trajectories as quaternion signals and FIR filter identification.

The three state variables become the ``i, j, k`` parts of a purely imaginary
quaternion signal.  A delayed, noisy copy is fed through an unknown FIR
filter, and the filter taps are recovered from the square shifted-sample
system ``X h = s`` with a pseudoinverse.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .pinv import pinv
from .qcore import QMat, frobenius, mat_mul

FILTER_BACKENDS = ("qsvd", "qns", "qsai")


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    delta: float = 8.0 / 3.0
    gamma: float = 28.0
    y0: tuple[float, float, float] = (1.0, 1.0, 1.0)
    t_span: tuple[float, float] = (0.0, 40.0)
    dt: float = 0.05

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_span[1] > self.t_span[0]:
            raise ValueError("t_span must be increasing")


def _rhs(y: np.ndarray, p: LorenzParams) -> np.ndarray:
    u, v, w = y
    return np.array([p.sigma * (v - u), u * (p.gamma - w) - v, u * v - p.delta * w])


def lorenz_integrate(p: LorenzParams) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4; returns ``(t, Y)`` with ``Y`` of shape ``(len(t), 3)``."""
    t0, t1 = p.t_span
    steps = int(round((t1 - t0) / p.dt))
    t = t0 + p.dt * np.arange(steps + 1)
    y = np.empty((steps + 1, 3))
    y[0] = p.y0
    h = p.dt
    for k in range(steps):
        yk = y[k]
        k1 = _rhs(yk, p)
        k2 = _rhs(yk + 0.5 * h * k1, p)
        k3 = _rhs(yk + 0.5 * h * k2, p)
        k4 = _rhs(yk + h * k3, p)
        y[k + 1] = yk + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return t, y


@dataclass(frozen=True)
class SignalFrame:
    t: np.ndarray
    s: np.ndarray  # (N, 4) clean signal, scalar part 0
    x: np.ndarray  # (N, 4) delayed and noisy, scalar part 0

    def __len__(self) -> int:
        return self.t.size


def pure(vectors: np.ndarray) -> np.ndarray:
    """``(N, 3)`` real rows to ``(N, 4)`` purely imaginary quaternions."""
    v = np.asarray(vectors, dtype=np.float64)
    return np.concatenate([np.zeros((v.shape[0], 1)), v], axis=1)


def make_frame(p: LorenzParams, tau: int = 1, noise: float = 1e-3, seed: int = 0) -> SignalFrame:
    """Clean signal ``s(t)`` and observation ``x(t) = s(t - tau) + n(t)``.

    The noise is Gaussian on the three imaginary parts with standard deviation
    ``noise`` times the signal RMS.  Samples before the start are clamped to
    the first one.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    t, y = lorenz_integrate(p)
    s = pure(y)
    idx = np.maximum(np.arange(t.size) - tau, 0)
    rms = float(np.sqrt(np.mean(y ** 2)))
    rng = np.random.default_rng(seed)
    x = s[idx].copy()
    x[:, 1:] += noise * rms * rng.standard_normal((t.size, 3))
    return SignalFrame(t, s, x)


def build_filter_system(frame: SignalFrame, order: int = 31, start: int | None = None) -> tuple[QMat, QMat]:
    """Square system with ``X[r, c] = x(t + r - c)`` and ``s = [s(t), ..., s(t + p)]``.

    ``start`` (default ``order``) is the sample index of ``t``; indices before
    zero are clamped to the first sample.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    t = order if start is None else start
    n = order + 1
    if t < 0 or t + order >= len(frame):
        raise ValueError(f"need samples up to index {t + order}, frame has {len(frame)}")
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    idx = np.maximum(t + r - c, 0)
    return QMat(frame.x[idx]), QMat(frame.s[t:t + n][:, None, :])


@dataclass
class FilterResult:
    h: QMat
    epsilon: float
    backend: str
    seconds: float
    iterations: int


def recovery_error(x: QMat, h: QMat, s: QMat) -> float:
    return frobenius(mat_mul(x, h) - s) / frobenius(s)


def solve_filter(x: QMat, s: QMat, backend: str = "qsai", tol: float = 1e-10,
                 max_iters: int = 500) -> FilterResult:
    """Taps ``h = X^+ s`` (applied on the right of the samples) and the error ``||X h - s|| / ||s||``."""
    if backend not in FILTER_BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {FILTER_BACKENDS}")
    t0 = time.perf_counter()
    rep = pinv(x, backend, tol=tol, max_iters=max_iters)
    if not (rep.converged or rep.stalled):
        raise RuntimeError(f"{backend} did not converge in {rep.iterations} iterations")
    h = mat_mul(rep.X, s)
    secs = time.perf_counter() - t0
    return FilterResult(h, recovery_error(x, h, s), backend, secs, rep.iterations)
