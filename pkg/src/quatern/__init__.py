"""Quaternion Moore-Penrose inverses by high-order hyperpower iterations.

Also provides QSVD baselines, global Krylov solvers with QSAI
preconditioning, CUR image completion and Lorenz filter identification.
"""

__version__ = "0.1.0"

from .qcore import Quat, QMat, adjoint, embed, frobenius, identity, mat_mul, unembed  # noqa: E402
from .pinv import PinvConfig, PinvReport, penrose_errors, pinv, solve  # noqa: E402
from .spectral import jacobi_svd, qsvd_pinv, scaling_alpha, sigma_max  # noqa: E402

__all__ = [
    "Quat", "QMat", "adjoint", "embed", "frobenius", "identity", "mat_mul", "unembed",
    "PinvConfig", "PinvReport", "penrose_errors", "pinv", "solve",
    "jacobi_svd", "qsvd_pinv", "scaling_alpha", "sigma_max",
]
