"""Error sequences and fitted convergence orders for the hyperpower family.

Usage: python3 scripts/convergence_orders.py [--n 12] [--lo 0.05] [--seed 7]

Builds an n x n quaternion matrix with singular values spread evenly over
[lo, 1], runs each method from X0 = alpha A^H and prints the normalized
error ||X_j - A^+||_F / ||A^+||_F per iteration next to the fitted order.
"""

import argparse

import numpy as np

from quatern.pinv import PinvConfig, convergence_order, solve
from quatern.qcore import QMat, embed, fro_dist, frobenius, unembed
from quatern.spectral import qsvd_pinv

METHODS = [("qns", None, 2), ("qrapid", 0, 5), ("qrapid", 1, 8), ("qsai", None, 10), ("qhpi19", None, 19)]


def unitary_like(rng, n):
    u, _, vh = np.linalg.svd(embed(QMat(rng.standard_normal((n, n, 4)))))
    return unembed(u @ vh)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--lo", type=float, default=0.05, help="smallest singular value")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--alpha", default="spectral", choices=["spectral", "frobenius"])
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    s = QMat.from_components(np.diag(np.linspace(args.lo, 1.0, args.n)))
    a = unitary_like(rng, args.n) @ s @ unitary_like(rng, args.n)
    ref = qsvd_pinv(a)
    for method, order, k in METHODS:
        rep = solve(a, PinvConfig(method=method, order=order, keep_iterates=True, alpha_mode=args.alpha))
        errs = [fro_dist(x, ref) / frobenius(ref) for x in rep.iterates]
        name = method if order is None else f"{method}({order})"
        q = convergence_order(errs, floor=1e-12)
        print(f"{name:>10}  k={k:<3} fitted={q:6.2f}  products/iter={rep.matmuls_per_iter[0]}")
        print("            " + " ".join(f"{e:.1e}" for e in errs))


if __name__ == "__main__":
    main()
