"""Hyperpower-type iterations for the quaternion Moore-Penrose inverse.

Every method starts from ``X0 = alpha * A^H`` and repeats an update of the
form ``X <- X p(R)`` with ``R = I - A X``.  The update polynomials are

* ``qns``         ``I + R``                                     (order 2)
* ``hyperpower``  ``I + R + ... + R^(k-1)`` by Horner           (order k)
* ``qhon``        same as ``hyperpower``, named after the unfactorized baseline
* ``qsai``        ``(I + R)(I + b1 R^2 + R^4)(I + b2 R^2 + R^4)`` (order 10)
* ``qhpi19``      ``I + (R + R^2) Gamma`` with a factorized ``Gamma`` (order 19)
* ``qrapid``      nested divided-difference corrections        (order 5, 8, 12, ...)

All quaternion matrix products inside an update go through a per-run
:class:`~quatern.qcore.MulCounter`, so the reported counts are measured, not
assumed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qcore import MulCounter, QMat, ShapeError, adjoint, frobenius, fro_dist, mat_mul
from .spectral import qsvd_pinv, scaling_alpha, spectral_norm

METHODS = ("qns", "hyperpower", "qrapid", "qsai", "qhpi19", "qhon")
BACKENDS = METHODS + ("qsvd",)

# golden-ratio pair for the order-10 factorization
SQRT5 = math.sqrt(5.0)
BETA1 = (1.0 + SQRT5) / 2.0
BETA2 = (1.0 - SQRT5) / 2.0


@dataclass(frozen=True)
class HyperCoeffs:
    """Constants of the order-19 factorization ``Gamma = Gamma1 Gamma2 + c1 R^2 + c2 R^4``."""

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float
    c1: float
    c2: float
    d1: float
    d2: float
    d3: float
    e1: float
    e2: float
    beta1: float = BETA1
    beta2: float = BETA2

    @classmethod
    def default(cls) -> HyperCoeffs:
        r93 = math.sqrt(93.0)
        root = math.sqrt(27.0 - 2.0 * r93)
        return cls(
            a1=5.0 * (31.0 + r93) / 496.0,
            a2=(3.0 + r93) / 8.0,
            a3=0.5,
            b1=-5.0 * (r93 - 31.0) / 496.0,
            b2=(3.0 - r93) / 8.0,
            b3=0.5,
            c1=3.0 / 8.0,
            c2=321.0 / 1984.0,
            d1=(root + 1.0) / 4.0,
            d2=(1.0 - root) / 4.0,
            d3=(5.0 * r93 - 93.0) / 496.0,
            e1=(-93.0 - 5.0 * r93) / 496.0,
            e2=-r93 / 4.0,
        )


COEFFS = HyperCoeffs.default()


@dataclass(frozen=True)
class PinvConfig:
    """Solver settings.

    ``order`` is the parameter of the parametrized methods: ``k`` for
    ``hyperpower``, ``p`` for ``qhon`` and the nesting depth ``N`` for
    ``qrapid``.  ``alpha_mode`` is ``"spectral"``, ``"frobenius"`` or an
    explicit positive float.  With ``relative_tol`` the stopping test becomes
    ``||X_{j+1} - X_j||_F < tol * ||X_{j+1}||_F``.
    """

    method: str = "qsai"
    order: int | None = None
    tol: float = 1e-10
    max_iters: int = 500
    alpha_mode: str | float = "spectral"
    count_matmuls: bool = True
    keep_iterates: bool = False
    stall_patience: int = 5
    relative_tol: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.method in ("hyperpower", "qhon"):
            if self.order is None or self.order < 2:
                raise ValueError(f"{self.method} needs order >= 2")
        if self.method == "qrapid" and self.order is not None and self.order < 0:
            raise ValueError("qrapid needs N >= 0")
        if isinstance(self.alpha_mode, str):
            if self.alpha_mode not in ("spectral", "frobenius"):
                raise ValueError(f"unknown alpha mode {self.alpha_mode!r}")
        elif not float(self.alpha_mode) > 0:
            raise ValueError("explicit alpha must be positive")

    @property
    def rapid_n(self) -> int:
        return 1 if self.order is None else self.order

    def label(self) -> str:
        if self.method in ("hyperpower", "qhon", "qrapid"):
            return f"{self.method}({self.order if self.order is not None else self.rapid_n})"
        return self.method


@dataclass
class PinvReport:
    X: QMat
    method: str
    iterations: int
    step_history: list[float]
    penrose: tuple[float, float, float, float]
    matmuls: int
    matmuls_per_iter: list[int]
    alpha_used: float
    converged: bool
    stalled: bool = False
    seconds: float = 0.0
    iterates: list[QMat] = field(default_factory=list, repr=False)

    @property
    def max_penrose(self) -> float:
        return max(self.penrose)

    def summary(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "stalled": self.stalled,
            "E1": self.penrose[0],
            "E2": self.penrose[1],
            "E3": self.penrose[2],
            "E4": self.penrose[3],
            "matmuls": self.matmuls,
            "alpha": self.alpha_used,
            "time_s": self.seconds,
        }


# ---------------------------------------------------------------------------
# diagnostics

def penrose_errors(a: QMat, x: QMat) -> tuple[float, float, float, float]:
    """Frobenius defects of the four Penrose equations."""
    m, n = a.shape
    if x.shape != (n, m):
        raise ShapeError(f"X must be {n}x{m} for A of {m}x{n}, got {x.shape[0]}x{x.shape[1]}")
    ax = mat_mul(a, x)
    xa = mat_mul(x, a)
    e1 = fro_dist(mat_mul(ax, a), a)
    e2 = fro_dist(mat_mul(xa, x), x)
    e3 = fro_dist(adjoint(ax), ax)
    e4 = fro_dist(adjoint(xa), xa)
    return e1, e2, e3, e4


def cei(order: float, matmuls: float) -> float:
    """Computational efficiency index ``order ** (1 / matmuls)``."""
    if order < 2 or matmuls < 1:
        raise ValueError("need order >= 2 and matmuls >= 1")
    return order ** (1.0 / matmuls)


def rapid_exponents(n: int) -> tuple[int, int]:
    """Exponents ``(nu, a)`` with new residual ``R^nu (3I + R)^a / 4^a`` for QRAPID(N)."""
    # residual exponents (power of R, power of (3I+R)/4) of Y and W through the nesting
    y, w = (3, 1), (4, 1)
    for _ in range(n):
        y, w = w, (y[0] + w[0], y[1] + w[1])
    return w[0] + 1, w[1]


def convergence_order(errors, floor: float = 1e-12, last: int = 3) -> float:
    """Least-squares slope of ``log e[j+1]`` against ``log e[j]``.

    Only pairs with ``0 < e[j] < 1`` and ``e[j+1] > floor`` enter the fit, and
    of those the last ``last`` pairs are used.
    """
    e = [float(v) for v in errors]
    pairs = [(e[j], e[j + 1]) for j in range(len(e) - 1)
             if 0.0 < e[j] < 1.0 and e[j + 1] > floor]
    pairs = pairs[-last:]
    if not pairs:
        return float("nan")
    xs = np.log([p[0] for p in pairs])
    ys = np.log([p[1] for p in pairs])
    if len(pairs) == 1:
        return float(ys[0] / xs[0])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# single updates

Mul = Callable[[QMat, QMat], QMat]


def _mul(counter: MulCounter | None) -> Mul:
    if counter is None:
        return mat_mul
    return counter.mul


def residual(a: QMat, x: QMat, mul: Mul = mat_mul) -> QMat:
    """``I - A X``."""
    return (-mul(a, x)).add_identity(1.0)


def hyperpower_step(a: QMat, x: QMat, k: int, counter: MulCounter | None = None) -> QMat:
    """``X (I + R + ... + R^(k-1))`` with the sum evaluated by Horner's rule.

    Uses exactly ``k`` products: one for ``A X``, ``k - 2`` inside Horner and
    one for the final left factor.
    """
    if k < 2:
        raise ValueError("order k must be >= 2")
    mul = _mul(counter)
    r = residual(a, x, mul)
    s = r.add_identity(1.0)
    for _ in range(k - 2):
        s = mul(r, s).add_identity(1.0)
    return mul(x, s)


def qsai_step(a: QMat, x: QMat, counter: MulCounter | None = None) -> QMat:
    mul = _mul(counter)
    r = residual(a, x, mul)
    r2 = mul(r, r)
    r4 = mul(r2, r2)
    q = mul((r2 * BETA1 + r4).add_identity(), (r2 * BETA2 + r4).add_identity())
    return mul(mul(x, r.add_identity()), q)


def qhpi19_gamma(r2: QMat, r4: QMat, mul: Mul = mat_mul, c: HyperCoeffs = COEFFS) -> QMat:
    """``Gamma = V W + c1 R^2 + c2 R^4`` from the quadratic blocks; two products."""
    u = mul((r2 * c.d1 + r4).add_identity(), (r2 * c.d2 + r4).add_identity())
    v = u + r2 * c.d3
    w = u + r2 * c.e1 + r4 * c.e2
    return mul(v, w) + r2 * c.c1 + r4 * c.c2


def qhpi19_step(a: QMat, x: QMat, counter: MulCounter | None = None) -> QMat:
    mul = _mul(counter)
    r = residual(a, x, mul)
    r2 = mul(r, r)
    r4 = mul(r2, r2)
    gamma = qhpi19_gamma(r2, r4, mul)
    return mul(x, mul(r + r2, gamma).add_identity())


def qrapid_step(a: QMat, x: QMat, n: int = 1, counter: MulCounter | None = None) -> QMat:
    """One outer QRAPID update with ``n`` nested corrections.

    ``8 + 2 n`` products.
    """
    mul = _mul(counter)
    p = mul(a, x)
    inner = mul(p, (-p).add_identity(7.0))
    inner = mul(p, (-inner).add_identity(15.0))
    u = mul(x, (-inner).add_identity(13.0)) * 0.25
    v = u + mul(x, residual(a, u, mul))
    y, w = u, v
    z = v
    for _ in range(n):
        z = w + mul(y, residual(a, w, mul))
        y, w = w, z
    return z + mul(x, residual(a, z, mul))


def step_function(cfg: PinvConfig) -> Callable[[QMat, QMat, MulCounter | None], QMat]:
    m = cfg.method
    if m == "qns":
        return lambda a, x, c=None: hyperpower_step(a, x, 2, c)
    if m in ("hyperpower", "qhon"):
        k = cfg.order
        return lambda a, x, c=None: hyperpower_step(a, x, k, c)
    if m == "qsai":
        return qsai_step
    if m == "qhpi19":
        return qhpi19_step
    if m == "qrapid":
        n = cfg.rapid_n
        return lambda a, x, c=None: qrapid_step(a, x, n, c)
    raise ValueError(m)


# ---------------------------------------------------------------------------
# drivers

def resolve_alpha(a: QMat, alpha_mode) -> float:
    if isinstance(alpha_mode, str):
        return scaling_alpha(a, alpha_mode)
    return float(alpha_mode)


def _run(a: QMat, cfg: PinvConfig, x0: QMat, alpha: float, start: int = 0,
         iterates: list | None = None):
    step = step_function(cfg)
    counter = MulCounter(enabled=cfg.count_matmuls)
    x = x0
    history: list[float] = []
    per_iter: list[int] = []
    converged = stalled = False
    best_step, best_x = math.inf, x0
    no_progress = 0
    arm = 1e-6
    j = start
    while j < cfg.max_iters:
        before = counter.count
        x_new = step(a, x, counter)
        per_iter.append(counter.count - before)
        d = fro_dist(x_new, x)
        history.append(d)
        j += 1
        if iterates is not None:
            iterates.append(x_new)
        if not math.isfinite(d):
            x = x_new
            break
        if d < cfg.tol * (frobenius(x_new) if cfg.relative_tol else 1.0):
            x = x_new
            converged = True
            break
        # stagnation guard, armed only once steps are already small: a
        # converging iteration at least halves the best step every time,
        # while a roundoff plateau only jitters around it
        if d < arm * max(1.0, frobenius(x_new)):
            if d < 0.5 * best_step:
                no_progress = 0
            else:
                no_progress += 1
            if d < best_step:
                best_step, best_x = d, x_new
            if no_progress >= cfg.stall_patience:
                x = best_x
                stalled = True
                break
        x = x_new
    return x, j, history, per_iter, counter.count, converged, stalled


def solve(a: QMat, cfg: PinvConfig | None = None) -> PinvReport:
    """Run one iterative method from ``X0 = alpha A^H``.

    Non-convergence is reported through ``converged=False``; it never raises.
    """
    cfg = cfg or PinvConfig()
    t0 = time.perf_counter()
    alpha = resolve_alpha(a, cfg.alpha_mode)
    x0 = adjoint(a) * alpha
    iterates = [x0] if cfg.keep_iterates else None
    x, its, hist, per_iter, total, conv, stalled = _run(a, cfg, x0, alpha, iterates=iterates)
    secs = time.perf_counter() - t0
    return PinvReport(
        X=x,
        method=cfg.label(),
        iterations=its,
        step_history=hist,
        penrose=penrose_errors(a, x),
        matmuls=total,
        matmuls_per_iter=per_iter,
        alpha_used=alpha,
        converged=conv,
        stalled=stalled,
        seconds=secs,
        iterates=iterates or [],
    )


def qns(a: QMat, cfg: PinvConfig | None = None, **kw) -> PinvReport:
    return solve(a, _with(cfg, method="qns", **kw))


def qsai(a: QMat, cfg: PinvConfig | None = None, **kw) -> PinvReport:
    return solve(a, _with(cfg, method="qsai", **kw))


def qhpi19(a: QMat, cfg: PinvConfig | None = None, **kw) -> PinvReport:
    return solve(a, _with(cfg, method="qhpi19", **kw))


def qrapid(a: QMat, cfg: PinvConfig | None = None, n: int = 1, **kw) -> PinvReport:
    return solve(a, _with(cfg, method="qrapid", order=n, **kw))


def qhon(a: QMat, p: int, cfg: PinvConfig | None = None, **kw) -> PinvReport:
    return solve(a, _with(cfg, method="qhon", order=p, **kw))


def _with(cfg: PinvConfig | None, **kw) -> PinvConfig:
    base = {} if cfg is None else {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    base.update(kw)
    return PinvConfig(**base)


def pinv(a: QMat, backend: str = "qsai", tol: float = 1e-10, max_iters: int = 500,
         alpha_mode="spectral", order: int | None = None) -> PinvReport:
    """Pseudoinverse by name, including the direct ``qsvd`` baseline."""
    if backend == "qsvd":
        t0 = time.perf_counter()
        x = qsvd_pinv(a)
        return PinvReport(x, "qsvd", 1, [], penrose_errors(a, x), 0, [], 0.0, True,
                          seconds=time.perf_counter() - t0)
    if backend == "qhon" and order is None:
        order = 10
    return solve(a, PinvConfig(method=backend, order=order, tol=tol,
                               max_iters=max_iters, alpha_mode=alpha_mode))


# ---------------------------------------------------------------------------
# perturbation

@dataclass
class PerturbationRecord:
    growth: float
    bound: float
    residual_norm: float
    a_norm: float
    x_norm: float
    converged: bool
    penrose: tuple[float, float, float, float]
    iterations: int


def _perturbation_bound(cfg: PinvConfig, r: float, a: float, x: float) -> float:
    k = {"qns": 2, "qsai": 10, "qhpi19": 19}.get(cfg.method, cfg.order)
    if cfg.method == "qrapid":
        k = rapid_exponents(cfg.rapid_n)[0]
    return k * max(1.0, r ** (k - 1)) * (1.0 + (k - 1) * a * x)


def perturbation_probe(a: QMat, cfg: PinvConfig, j_inject: int, magnitude: float,
                       seed: int = 0) -> PerturbationRecord:
    """Inject a random ``dX`` of Frobenius size ``magnitude`` into iterate ``j_inject``.

    Records the one-step growth ``||dX_{j+1}||_F / ||dX_j||_F`` and then
    continues the perturbed run to see whether it still converges.
    """
    alpha = resolve_alpha(a, cfg.alpha_mode)
    step = step_function(cfg)
    x = adjoint(a) * alpha
    for _ in range(j_inject):
        x = step(a, x, None)
    rng = np.random.default_rng(seed)
    dx = QMat.random(*x.shape, rng)
    dx = dx * (magnitude / frobenius(dx)) if magnitude > 0 else dx * 0.0
    clean = step(a, x, None)
    dirty = step(a, x + dx, None)
    growth = fro_dist(dirty, clean) / magnitude if magnitude > 0 else 0.0
    r_norm = spectral_norm(residual(a, x))
    a_norm = spectral_norm(a)
    x_norm = spectral_norm(x)
    xf, its, _, _, _, conv, _ = _run(a, cfg, dirty, alpha, start=j_inject + 1)
    return PerturbationRecord(
        growth=growth,
        bound=_perturbation_bound(cfg, r_norm, a_norm, x_norm),
        residual_norm=r_norm,
        a_norm=a_norm,
        x_norm=x_norm,
        converged=conv,
        penrose=penrose_errors(a, xf),
        iterations=its,
    )


