"""Singular values of quaternion matrices through the complex embedding.

The Jacobi SVD processes column pairs in round-robin order so that every
rotation in a round touches disjoint columns and the whole round is applied
as one vectorized update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import QMat, embed, frobenius, unembed

EPS = np.finfo(np.float64).eps


class ZeroOperatorError(ValueError):
    def __init__(self):
        super().__init__("zero operator: scaling needs a nonzero matrix")


class SvdConvergenceError(RuntimeError):
    def __init__(self, sweeps: int, off: float):
        super().__init__(f"Jacobi SVD did not converge in {sweeps} sweeps "
                         f"(residual off-diagonal mass {off:.3e})")
        self.sweeps = sweeps
        self.off = off


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``C = U diag(sigma) V^H`` with ``sigma`` nonincreasing."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.conj().T


def sigma_max(a: QMat, iters: int = 200, seed: int = 42, rtol: float = 1e-10,
              history: list | None = None) -> float:
    """Largest singular value by power iteration on ``C C^H``, ``C = embed(a)``.

    The Rayleigh quotient never overshoots, so the estimate is a lower bound.
    """
    if frobenius(a) == 0.0:
        raise ZeroOperatorError()
    c = embed(a)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(c.shape[0]) + 1j * rng.standard_normal(c.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = c.conj().T @ v
        new = float(np.vdot(w, w).real)  # v^H C C^H v with ||v|| = 1
        if history is not None:
            history.append(np.sqrt(new))
        v = c @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            # start vector orthogonal to range; unlikely but possible for tiny cases
            v = rng.standard_normal(c.shape[0]) + 1j * rng.standard_normal(c.shape[0])
            v /= np.linalg.norm(v)
            continue
        v /= nv
        done = lam > 0.0 and abs(new - lam) <= rtol * new
        lam = max(lam, new)
        if done:
            break
    return float(np.sqrt(lam))


def scaling_alpha(a: QMat, mode: str = "spectral", **kw) -> float:
    """Initial scaling ``alpha`` for ``X0 = alpha * A^H``.

    ``spectral`` gives ``1/sigma_max^2``, ``frobenius`` gives ``1/||A||_F^2``.
    """
    if mode == "spectral":
        return 1.0 / sigma_max(a, **kw) ** 2
    if mode == "frobenius":
        f = frobenius(a)
        if f == 0.0:
            raise ZeroOperatorError()
        return 1.0 / f**2
    raise ValueError(f"unknown alpha mode {mode!r}")


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # circle method; index n (when n odd) is a bye
    m = n + (n % 2)
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array(idx[: m // 2])
        q = np.array(idx[m // 2:][::-1])
        keep = (p < n) & (q < n)
        p, q = p[keep], q[keep]
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        rounds.append((lo, hi))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def _jacobi_tall(c: np.ndarray, max_sweeps: int):
    a = np.array(c, dtype=np.complex128)
    rows, n = a.shape
    v = np.eye(n, dtype=np.complex128)
    tol = EPS * max(rows, n)
    # columns that have shrunk to roundoff level relative to the whole matrix
    # are numerically zero; rotating them against each other never settles
    negligible = (EPS * max(rows, n) * np.linalg.norm(a)) ** 2
    rounds = _round_robin(n)
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p, q in rounds:
            if p.size == 0:
                continue
            ap, aq = a[:, p], a[:, q]
            alpha = np.einsum("ij,ij->j", ap.conj(), ap).real
            beta = np.einsum("ij,ij->j", aq.conj(), aq).real
            g = np.einsum("ij,ij->j", ap.conj(), aq)
            ag = np.abs(g)
            act = ag > tol * np.sqrt(alpha * beta)
            act &= ag > np.finfo(np.float64).tiny
            act &= np.minimum(alpha, beta) > negligible
            if not act.any():
                continue
            rotated = True
            p, q, alpha, beta, g, ag = p[act], q[act], alpha[act], beta[act], g[act], ag[act]
            zeta = (beta - alpha) / (2.0 * ag)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            cs = 1.0 / np.sqrt(1.0 + t * t)
            sn = cs * t
            ph = np.conj(g / ag)
            for mat in (a, v):
                xp = mat[:, p]
                xq = mat[:, q] * ph
                mat[:, p] = cs * xp - sn * xq
                mat[:, q] = sn * xp + cs * xq
        if not rotated:
            return a, v, sweep
    gram = a.conj().T @ a
    off = float(np.linalg.norm(gram - np.diag(np.diag(gram))))
    raise SvdConvergenceError(max_sweeps, off)


def jacobi_svd(c, max_sweeps: int = 60) -> SvdResult:
    """One-sided (Hestenes) Jacobi SVD of a complex matrix.

    Wide matrices are handled through their conjugate transpose.  Returns the
    thin factorization with ``min(rows, cols)`` singular triplets.
    """
    c = np.atleast_2d(np.asarray(c, dtype=np.complex128))
    rows, cols = c.shape
    if rows < cols:
        r = jacobi_svd(c.conj().T, max_sweeps)
        return SvdResult(r.V, r.sigma, r.U, r.sweeps)
    a, v, sweeps = _jacobi_tall(c, max_sweeps)
    sigma = np.linalg.norm(a, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, a, v = sigma[order], a[:, order], v[:, order]
    u = np.zeros_like(a)
    small = sigma <= EPS * max(rows, cols) * (sigma[0] if sigma.size else 0.0)
    good = ~small
    u[:, good] = a[:, good] / sigma[good]
    if small.any():
        # complete U with an orthonormal basis of the remaining space
        k = int(good.sum())
        rng = np.random.default_rng(0)
        fill = rng.standard_normal((rows, cols - k)) + 1j * rng.standard_normal((rows, cols - k))
        q, _ = np.linalg.qr(np.hstack([u[:, good], fill]))
        # the first k columns of q span the same space as u[:, good]; keep ours exactly
        fill_q = q[:, k:]
        fill_q -= u[:, good] @ (u[:, good].conj().T @ fill_q)
        fill_q, _ = np.linalg.qr(fill_q)
        u[:, small] = fill_q
        sigma = np.where(small, 0.0, sigma)
    return SvdResult(u, sigma, v, sweeps)


def spectral_norm(a: QMat) -> float:
    s = jacobi_svd(embed(a)).sigma
    return float(s[0]) if s.size else 0.0


def singular_values(a: QMat) -> np.ndarray:
    """Quaternion singular values (the embedding repeats each one twice)."""
    return jacobi_svd(embed(a)).sigma[::2].copy()


def qsvd_pinv(a: QMat, rank_tol: float = 1e-10) -> QMat:
    """Moore-Penrose inverse ``V Sigma^+ U^H`` computed on the embedding."""
    r = jacobi_svd(embed(a))
    m, n = a.shape
    if r.sigma.size == 0 or r.sigma[0] == 0.0:
        return QMat.zeros(n, m)
    keep = r.sigma > rank_tol * r.sigma[0]
    # singular values come in equal pairs; a cut through a pair would break
    # the quaternion structure of the result, so both copies follow the larger
    keep[1::2] = keep[0::2][: keep[1::2].size]
    inv = np.zeros_like(r.sigma)
    inv[keep] = 1.0 / r.sigma[keep]
    xc = (r.V * inv) @ r.U.conj().T
    # roundoff in the structure grows with the condition of the kept spectrum
    kappa = r.sigma[0] / r.sigma[keep][-1]
    return unembed(xc, max(1e-8, 1e3 * EPS * kappa) * (1.0 + float(np.linalg.norm(xc))))
