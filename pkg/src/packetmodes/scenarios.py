"""Bundled desk scenarios."""

from __future__ import annotations

import numpy as np

from .quasimode import QuasimodeScenario
from .symbols import polynomial


def t1_cubic_airy(cubic: float = 0.0, **kw) -> QuasimodeScenario:
    """V = xi, A = x^2 (+ optional cubic tail), z0 = 0, d = 1.

    The finite-type constant is gamma0 = 2; with cubic = 0 the symbol is
    exactly quadratic and the tail bands vanish identically.
    """
    V = polynomial(1, {(0, 1): 1.0})
    A_coeffs = {(2, 0): 1.0}
    if cubic:
        A_coeffs[(3, 0)] = cubic
    A = polynomial(1, A_coeffs)
    defaults = dict(mode="t1", V=V, A=A, z0=np.zeros(2), n_taylor=2 if not cubic else 3,
                    cutoff_K=8 if not cubic else 10)
    defaults.update(kw)
    return QuasimodeScenario(**defaults)


def t2_resonant_angular(**kw) -> QuasimodeScenario:
    """d = 2, omega = (1, 1): V = H_1, A = (x2 xi1 - x1 xi2)^2, z0 = (1,1,0,0).

    Both symbols are invariant along the diagonal flow, so their averages
    coincide with themselves; the minimal torus through z0 is the diagonal
    circle, A vanishes on it quadratically transversally, and gamma0 = 2.
    """
    V = polynomial(2, {(2, 0, 0, 0): 0.5, (0, 0, 2, 0): 0.5})   # H_1
    # (x2 xi1 - x1 xi2)^2 = x2^2 xi1^2 - 2 x1 x2 xi1 xi2 + x1^2 xi2^2
    A = polynomial(2, {
        (0, 2, 2, 0): 1.0,
        (1, 1, 1, 1): -2.0,
        (2, 0, 0, 2): 1.0,
    })
    defaults = dict(mode="t2-normal-form", V=V, A=A,
                    z0=np.array([1.0, 1.0, 0.0, 0.0]), omega=(1.0, 1.0),
                    n_taylor=4, cutoff_K=8)
    defaults.update(kw)
    return QuasimodeScenario(**defaults)
