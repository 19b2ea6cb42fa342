"""The smooth bump used for symbol truncation and time windows.

chi is supported in (-1, 3) and equals one on (-1/2, 2): a product of two
rational-exponential smoothsteps 1/(1 + exp(1/a - 1/b)).  Derivatives of
any order are produced by truncated Taylor-series (jet) arithmetic, which
is exact to machine precision and fast enough to call inside quadratures.
"""

from __future__ import annotations

import numpy as np

SUPPORT = (-1.0, 3.0)
PLATEAU = (-0.5, 2.0)

_EXP_CLAMP = 500.0


# -- jet arithmetic: arrays of shape (J+1, n) of Taylor coefficients --------


def _jet_const(c, J, n):
    out = np.zeros((J + 1, n))
    out[0] = c
    return out


def _jet_var(t, J):
    out = np.zeros((J + 1, len(t)))
    out[0] = t
    if J >= 1:
        out[1] = 1.0
    return out


def _jet_mul(a, b):
    J = a.shape[0] - 1
    out = np.zeros_like(a)
    for n in range(J + 1):
        for k in range(n + 1):
            out[n] += a[k] * b[n - k]
    return out


def _jet_div(p, q):
    J = p.shape[0] - 1
    out = np.zeros_like(p)
    out[0] = p[0] / q[0]
    for n in range(1, J + 1):
        acc = p[n].copy()
        for k in range(1, n + 1):
            acc -= q[k] * out[n - k]
        out[n] = acc / q[0]
    return out


def _jet_exp(x):
    J = x.shape[0] - 1
    out = np.zeros_like(x)
    out[0] = np.exp(x[0])
    for n in range(1, J + 1):
        acc = np.zeros_like(x[0])
        for k in range(1, n + 1):
            acc += k * x[k] * out[n - k]
        out[n] = acc / n
    return out


def _smoothstep_jet(s):
    """1/(1 + exp(1/s - 1/(1-s))) on 0 < s0 < 1, as a jet."""
    J = s.shape[0] - 1
    n = s.shape[1]
    one = _jet_const(1.0, J, n)
    w = _jet_div(one, s) - _jet_div(one, one - s)
    return _jet_div(one, one + _jet_exp(w))


def _edge(out, mask, s0, ds, J, saturate_high):
    """Fill one smoothstep edge; points deep in the tails are saturated."""
    w0 = 1.0 / s0 - 1.0 / (1.0 - s0)
    mid = np.abs(w0) < 30.0
    if saturate_high is not None:
        sat = np.where(w0 <= -30.0)[0]
        idx_all = np.where(mask)[0]
        out[0][idx_all[sat]] = 1.0
    if np.any(mid):
        s = np.zeros((J + 1, int(mid.sum())))
        s[0] = s0[mid]
        if J >= 1:
            s[1] = ds
        jet = _smoothstep_jet(s)
        cols = np.where(mask)[0][mid]
        fact = 1.0
        for j in range(J + 1):
            out[j][cols] = jet[j] * fact
            fact *= j + 1


def bump_jet(t, max_order: int) -> np.ndarray:
    """All chi^(j)(t) for j = 0..max_order; shape (max_order+1, len(t))."""
    t = np.asarray(t, dtype=float).ravel()
    J = max_order
    n = len(t)
    out = np.zeros((J + 1, n))
    out[0][(t >= PLATEAU[0]) & (t <= PLATEAU[1])] = 1.0
    lo = (t > SUPPORT[0]) & (t < PLATEAU[0])
    hi = (t > PLATEAU[1]) & (t < SUPPORT[1])
    if np.any(lo):
        _edge(out, lo, 2.0 * (t[lo] + 1.0), 2.0, J, saturate_high=True)
    if np.any(hi):
        _edge(out, hi, 3.0 - t[hi], -1.0, J, saturate_high=True)
    return out


def bump(t, order: int = 0) -> np.ndarray:
    """chi^(order)(t), elementwise, exactly zero outside the support."""
    t = np.asarray(t, dtype=float)
    return bump_jet(t.ravel(), order)[order].reshape(t.shape)


def bump_scalar(t: float, order: int = 0) -> float:
    return float(bump(np.array([t]), order)[0])
