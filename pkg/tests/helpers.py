"""Shared test utilities."""

import numpy as np
from scipy.linalg import expm

from packetmodes.ordering import omega


def random_symplectic(d, rng, scale=0.6):
    """Random real symplectic matrix exp(Omega S), S symmetric."""
    S = rng.standard_normal((2 * d, 2 * d)) * scale
    S = 0.5 * (S + S.T)
    return expm(omega(d) @ S)


def random_frame(d, rng, scale=0.6):
    from packetmodes.frames import frame_from_symplectic
    return frame_from_symplectic(random_symplectic(d, rng, scale))


def random_unitary(d, rng):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
