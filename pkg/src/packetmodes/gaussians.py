"""Gaussian integrals of complex symmetric quadratic forms.

The branch of det(M)^(-1/2) is the analytic continuation from real positive
definite M through {Re M > 0}: the product of principal square roots of the
eigenvalues.  All eigenvalues of a complex symmetric matrix with positive
definite real part have positive real part, so every factor is unambiguous.
"""

from __future__ import annotations

import numpy as np

from .errors import QuadratureFailure


def invsqrt_det(M: np.ndarray) -> complex:
    """det(M)^(-1/2) on the branch continued from Re M > 0."""
    M = np.asarray(M, dtype=complex)
    sym_res = np.max(np.abs(M - M.T))
    if sym_res > 1e-10 * max(1.0, np.max(np.abs(M))):
        raise ValueError("matrix must be complex symmetric")
    evals = np.linalg.eigvals(0.5 * (M + M.T))
    if np.min(evals.real) <= 0:
        raise QuadratureFailure("quadratic form lacks positive definite real part")
    return complex(np.prod(evals ** -0.5))


def gaussian_integral(M: np.ndarray, b: np.ndarray | None = None, c: complex = 0.0) -> complex:
    """Integrate exp(-u.M u/2 + b.u + c) over R^n.

    M complex symmetric with Re M > 0; returns
    (2 pi)^(n/2) det(M)^(-1/2) exp(b.M^{-1}b/2 + c).
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    val = (2 * np.pi) ** (n / 2) * invsqrt_det(M)
    if b is not None:
        b = np.asarray(b, dtype=complex)
        val *= np.exp(0.5 * b @ np.linalg.solve(M, b) + c)
    elif c != 0.0:
        val *= np.exp(c)
    return complex(val)
