"""Phase-space ordering conventions.

Internally every phase-space vector is ordered momentum first, z = (p, q),
matching the frame block order (P, Q)^t and the operator vector
(p_hat, q_hat).  All public entry points take points in position-first
order (x, xi) and convert here; one conversion point prevents sign drift.
"""

from __future__ import annotations

import numpy as np


def swap_matrix(d: int) -> np.ndarray:
    """Return the 2d x 2d block swap T with T @ (a, b) = (b, a)."""
    T = np.zeros((2 * d, 2 * d))
    T[:d, d:] = np.eye(d)
    T[d:, :d] = np.eye(d)
    return T


def omega(d: int) -> np.ndarray:
    """Canonical symplectic matrix [[0, -I], [I, 0]] acting on (p, q)."""
    O = np.zeros((2 * d, 2 * d))
    O[:d, d:] = -np.eye(d)
    O[d:, :d] = np.eye(d)
    return O


def to_internal(z_pub: np.ndarray) -> np.ndarray:
    """(x, xi) -> (p, q) = (xi, x)."""
    z_pub = np.asarray(z_pub)
    d = z_pub.shape[-1] // 2
    return np.concatenate([z_pub[..., d:], z_pub[..., :d]], axis=-1)


def to_public(z_int: np.ndarray) -> np.ndarray:
    """(p, q) -> (x, xi) = (q, p)."""
    return to_internal(z_int)


def matrix_to_internal(m_pub: np.ndarray) -> np.ndarray:
    """Conjugate a matrix on public vectors into internal ordering."""
    d = m_pub.shape[0] // 2
    T = swap_matrix(d)
    return T @ m_pub @ T


matrix_to_public = matrix_to_internal
