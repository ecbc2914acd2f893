"""Global FOM and GMRES for quaternion systems ``A X = B`` with block right-hand sides.

The global inner product ``<X, Y> = Re trace(X^H Y)`` equals the plain dot
product of the flattened real components, so the Krylov basis lives in a real
vector space and the Hessenberg matrix, Givens rotations and small solves are
all real.  Left preconditioning solves ``M A X = M B``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .pinv import PinvConfig, PinvReport, solve as pinv_solve
from .qcore import QMat, ShapeError, frobenius, mat_mul

SOLVERS = ("gl_qfom", "gl_qgmres")


@dataclass(frozen=True)
class KrylovConfig:
    solver: str = "gl_qgmres"
    rr_tol: float = 1e-6
    k_max: int = 3000
    restart: int | None = None
    precond: str | None = None
    precond_tol: float = 1e-2
    precond_max_iters: int = 10
    breakdown_tol: float = 1e-14

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if not self.rr_tol > 0:
            raise ValueError("rr_tol must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be positive")
        if self.restart is not None and self.restart < 1:
            raise ValueError("restart must be positive")
        if self.precond not in (None, "none", "qsai"):
            raise ValueError(f"unknown preconditioner {self.precond!r}")


@dataclass
class KrylovReport:
    X: QMat
    iterations: int
    rr_history: list[float]
    precond_time_split: tuple[float, float]
    converged: bool
    true_rr: float = math.nan
    system_rr: float = math.nan
    breakdown: bool = False
    skipped_steps: list[int] = field(default_factory=list)
    solver: str = ""
    preconditioned: bool = False

    @property
    def rr(self) -> float:
        return self.rr_history[-1] if self.rr_history else math.nan


class Breakdown(Exception):
    """Raised internally when the new Krylov block vanishes (lucky breakdown)."""


class GlobalArnoldi:
    """Incremental global Arnoldi process for a real-linear block operator.

    Basis blocks are stored flattened, one per row of ``V``.  New blocks are
    orthogonalized by two passes of classical Gram-Schmidt.
    """

    def __init__(self, op: Callable[[QMat], QMat], v0: QMat, capacity: int,
                 breakdown_tol: float = 1e-14):
        self.op = op
        self.shape = v0.shape
        beta = frobenius(v0)
        if beta == 0.0:
            raise ValueError("starting block must be nonzero")
        self.beta = beta
        size = v0.data.size
        self.V = np.zeros((capacity + 1, size))
        self.V[0] = v0.data.ravel() / beta
        self.H = np.zeros((capacity + 1, capacity))
        self.k = 0
        self.breakdown_tol = breakdown_tol

    def block(self, i: int) -> QMat:
        return QMat(self.V[i].reshape(*self.shape, 4))

    def combine(self, y: np.ndarray) -> QMat:
        flat = y @ self.V[: y.size]
        return QMat(flat.reshape(*self.shape, 4))

    def step(self) -> tuple[np.ndarray, bool]:
        """Extend the basis by one block; returns the new Hessenberg column.

        The flag is ``True`` on lucky breakdown, in which case no block is added.
        """
        j = self.k
        w = self.op(self.block(j)).data.ravel().copy()
        scale = np.linalg.norm(w)
        basis = self.V[: j + 1]
        h = basis @ w
        w -= h @ basis
        h2 = basis @ w
        w -= h2 @ basis
        h += h2
        nrm = np.linalg.norm(w)
        self.H[: j + 1, j] = h
        self.H[j + 1, j] = nrm
        self.k += 1
        if nrm <= self.breakdown_tol * max(scale, 1e-300):
            self.H[j + 1, j] = 0.0
            return self.H[: j + 2, j].copy(), True
        self.V[j + 1] = w / nrm
        return self.H[: j + 2, j].copy(), False


def global_arnoldi_step(a: QMat, basis: list[QMat], j: int, m: QMat | None = None,
                        breakdown_tol: float = 1e-14):
    """One global Arnoldi step on ``V -> (M) A V`` given an orthonormal ``basis``.

    Returns ``(basis, h, breakdown)`` with ``h`` the Hessenberg column of
    length ``j + 2``.  ``basis`` is extended in place unless breakdown occurs.
    """
    if len(basis) != j + 1:
        raise ValueError("basis must hold exactly j + 1 blocks")
    w = mat_mul(a, basis[j])
    if m is not None:
        w = mat_mul(m, w)
    scale = frobenius(w)
    flat = np.stack([b.data.ravel() for b in basis])
    v = w.data.ravel().copy()
    h = np.zeros(j + 2)
    for i in range(j + 1):  # modified Gram-Schmidt
        h[i] = flat[i] @ v
        v -= h[i] * flat[i]
    nrm = float(np.linalg.norm(v))
    if nrm <= breakdown_tol * max(scale, 1e-300):
        return basis, h, True
    h[j + 1] = nrm
    basis.append(QMat((v / nrm).reshape(*w.shape, 4)))
    return basis, h, False


def _givens(a: float, b: float) -> tuple[float, float, float]:
    if b == 0.0:
        return 1.0, 0.0, a
    r = math.hypot(a, b)
    return a / r, b / r, r


def _cycle(op, r0: QMat, cfg: KrylovConfig, steps: int, rr_scale: float,
           history: list[float], skipped: list[int], offset: int):
    """Run up to ``steps`` Arnoldi steps from residual ``r0``.

    Returns ``(correction, steps_done, converged, breakdown)``.
    """
    arn = GlobalArnoldi(op, r0, steps, cfg.breakdown_tol)
    beta = arn.beta
    cs = np.zeros(steps)
    sn = np.zeros(steps)
    g = np.zeros(steps + 1)
    g[0] = beta
    R = np.zeros((steps, steps))
    pre_diag = np.zeros(steps)
    pre_g = np.zeros(steps)
    gmres = cfg.solver == "gl_qgmres"
    done = 0
    conv = brk = False
    fom_ok = -1  # last step at which the FOM iterate exists
    for j in range(steps):
        h, brk = arn.step()
        col = h[: j + 2].copy()
        for i in range(j):
            t = cs[i] * col[i] + sn[i] * col[i + 1]
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1]
            col[i] = t
        pre_diag[j] = col[j]
        pre_g[j] = g[j]
        c, s, rdiag = _givens(col[j], col[j + 1])
        cs[j], sn[j] = c, s
        R[: j, j] = col[:j]
        R[j, j] = rdiag
        g[j + 1] = -s * g[j]
        g[j] = c * g[j]
        done = j + 1
        if gmres:
            res = abs(g[j + 1])
        else:
            if abs(pre_diag[j]) <= 1e-14 * max(abs(rdiag), 1e-300):
                skipped.append(offset + j + 1)
                history.append(history[-1] if history else 1.0)
                if brk:
                    break
                continue
            y_last = pre_g[j] / pre_diag[j]
            res = abs(h[j + 1] * y_last)
            fom_ok = j
        history.append(res / rr_scale)
        if brk or res / rr_scale <= cfg.rr_tol:
            conv = True
            break
    k = done
    if gmres or brk:
        y = solve_triangular(R[:k, :k], g[:k]) if k else np.zeros(0)
    else:
        k = fom_ok + 1
        if k == 0:
            return QMat.zeros(*r0.shape), done, False, brk
        Rf = R[:k, :k].copy()
        gf = g[:k].copy()
        Rf[k - 1, k - 1] = pre_diag[k - 1]
        gf[k - 1] = pre_g[k - 1]
        y = solve_triangular(Rf, gf)
    return arn.combine(y), done, conv, brk


def _global_krylov(a: QMat, b: QMat, cfg: KrylovConfig, m: QMat | None = None,
                   build_time: float = 0.0) -> KrylovReport:
    n, n2 = a.shape
    if n != n2:
        raise ShapeError(f"A must be square, got {n}x{n2}")
    if b.rows != n:
        raise ShapeError(f"B must have {n} rows, got {b.rows}")
    t0 = time.perf_counter()
    if m is None:
        op = lambda v: mat_mul(a, v)
        rhs = b
    else:
        op = lambda v: mat_mul(m, mat_mul(a, v))
        rhs = mat_mul(m, b)
    x = QMat.zeros(*b.shape)
    r = rhs  # X0 = 0
    rr_scale = frobenius(r)
    history: list[float] = []
    skipped: list[int] = []
    if rr_scale == 0.0:
        return KrylovReport(x, 0, [0.0], (build_time, 0.0), True, 0.0, 0.0,
                            solver=cfg.solver, preconditioned=m is not None)
    its = 0
    conv = brk = False
    while its < cfg.k_max and not conv:
        steps = cfg.k_max - its
        if cfg.restart is not None:
            steps = min(steps, cfg.restart)
        dx, done, conv, brk = _cycle(op, r, cfg, steps, rr_scale, history, skipped, its)
        its += done
        x = x + dx
        if conv or brk:
            break
        r = rhs - op(x)
    solve_time = time.perf_counter() - t0
    system_rr = frobenius(rhs - op(x)) / rr_scale
    true_rr = frobenius(b - mat_mul(a, x)) / frobenius(b)
    return KrylovReport(
        X=x,
        iterations=its,
        rr_history=history,
        precond_time_split=(build_time, solve_time),
        converged=conv,
        true_rr=true_rr,
        system_rr=system_rr,
        breakdown=brk,
        skipped_steps=skipped,
        solver=cfg.solver,
        preconditioned=m is not None,
    )


def precondition_qsai(a: QMat, tol: float = 1e-2, max_iters: int = 10) -> tuple[QMat, PinvReport]:
    """Approximate inverse ``M`` from a short, loosely converged QSAI run.

    The step tolerance is relative to ``||X||_F`` so that it does not depend
    on the scaling of ``A``.
    """
    if a.rows != a.cols:
        raise ShapeError(f"preconditioner needs a square matrix, got {a.rows}x{a.cols}")
    rep = pinv_solve(a, PinvConfig(method="qsai", tol=tol, max_iters=max_iters,
                                        relative_tol=True))
    return rep.X, rep


def gl_qfom(a: QMat, b: QMat, cfg: KrylovConfig | None = None, m: QMat | None = None) -> KrylovReport:
    cfg = cfg or KrylovConfig(solver="gl_qfom")
    return krylov_solve(a, b, _as(cfg, "gl_qfom"), m)


def gl_qgmres(a: QMat, b: QMat, cfg: KrylovConfig | None = None, m: QMat | None = None) -> KrylovReport:
    cfg = cfg or KrylovConfig(solver="gl_qgmres")
    return krylov_solve(a, b, _as(cfg, "gl_qgmres"), m)


def _as(cfg: KrylovConfig, solver: str) -> KrylovConfig:
    if cfg.solver == solver:
        return cfg
    fields = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    fields["solver"] = solver
    return KrylovConfig(**fields)


def krylov_solve(a: QMat, b: QMat, cfg: KrylovConfig, m: QMat | None = None) -> KrylovReport:
    """Solve ``A X = B``; builds a QSAI preconditioner when requested and none is given."""
    build = 0.0
    if m is None and cfg.precond == "qsai":
        t0 = time.perf_counter()
        m, _ = precondition_qsai(a, cfg.precond_tol, cfg.precond_max_iters)
        build = time.perf_counter() - t0
    return _global_krylov(a, b, cfg, m, build)
