"""Brute-force verification tools: grid quantization, grid Wigner
transforms, quadrature Gram matrices and dense propagation.

Deliberately simple and slow; used to cross-check the closed-form and
band-structured production paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import GridTooCoarse
from .multiindex import mi_factorial, order


# ---------------------------------------------------------------------------
# position grids


@dataclass(frozen=True)
class GridFunction:
    """Complex values on a uniform tensor position grid."""

    axes: tuple  # tuple of 1d arrays
    values: np.ndarray
    hbar: float

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> tuple:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def norm(self) -> float:
        w = np.prod(self.spacing)
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * w))

    def inner(self, other: "GridFunction") -> complex:
        w = np.prod(self.spacing)
        return complex(np.sum(self.values * np.conj(other.values)) * w)


def make_grid(extents, n_points, hbar: float) -> tuple:
    """Axes for a uniform grid; extents is a list of (lo, hi)."""
    return tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(extents, n_points))


def sample(func, axes, hbar: float) -> GridFunction:
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.asarray(func(pts)).reshape([len(a) for a in axes])
    return GridFunction(axes=tuple(axes), values=vals, hbar=hbar)


def check_grid(grid: GridFunction, center_q, orbit_diameter: float = 0.0):
    """Spacing <= sqrt(hbar)/6 near the packet, extent >= 12 sqrt(hbar) + orbit."""
    s = np.sqrt(grid.hbar)
    for ax, dq, c in zip(grid.axes, grid.spacing, np.atleast_1d(center_q)):
        if dq > s / 6:
            raise GridTooCoarse(f"spacing {dq:.3g} > sqrt(hbar)/6 = {s / 6:.3g}")
        if c - ax[0] < 6 * s or ax[-1] - c < 6 * s:
            raise GridTooCoarse("grid extent does not cover the packet")
        if ax[-1] - ax[0] < 12 * s + orbit_diameter:
            raise GridTooCoarse("grid extent below 12 sqrt(hbar) + orbit diameter")


# ---------------------------------------------------------------------------
# spectral derivatives and Weyl application (symbols polynomial in xi)


def _spectral_derivative(values: np.ndarray, axes, axis: int) -> np.ndarray:
    a = axes[axis]
    n = len(a)
    dx = a[1] - a[0]
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    shape = [1] * values.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(values, axis=axis) * (1j * k).reshape(shape), axis=axis)


def weyl_apply_grid(symbol, psi: GridFunction) -> GridFunction:
    """Apply the Weyl quantization of a symbol polynomial in xi.

    `symbol` must provide d, xi_degree and xi_coefficient(k) -> callable
    c_k(x) on position points, representing  P(x, xi) = sum_k c_k(x) xi^k
    with multi-index k.  Weyl ordering of c(x) xi^k is realized by the exact
    local formulas (k of order <= 2 per axis arises in practice):

        c xi_j     ->  -i hbar (c d_j + (d_j c)/2)
        c xi_j^2   ->  -hbar^2 (c d_j^2 + (d_j c) d_j + (d_j^2 c)/4)
        c xi_j xi_l -> -hbar^2 (c d_j d_l + (d_l c)/2 d_j + (d_j c)/2 d_l
                                + (d_j d_l c)/4)        (j != l)
    """
    hbar = psi.hbar
    axes = psi.axes
    pts = psi.points()
    shape = psi.values.shape
    out = np.zeros(shape, dtype=complex)
    for k in symbol.xi_monomials():
        total = int(sum(k))
        if total > 2:
            raise NotImplementedError("xi-degree above 2 not needed at desk scale")
        c = symbol.xi_coefficient(k)
        cvals = np.asarray(c(pts)).reshape(shape)
        if total == 0:
            out += cvals * psi.values
            continue
        if total == 1:
            j = int(np.argmax(k))
            dpsi = _spectral_derivative(psi.values, axes, j)
            dc = _spectral_derivative(cvals, axes, j)
            out += -1j * hbar * (cvals * dpsi + 0.5 * dc * psi.values)
            continue
        # total == 2
        nz = [i for i, ki in enumerate(k) if ki > 0]
        if len(nz) == 1:
            j = nz[0]
            d1 = _spectral_derivative(psi.values, axes, j)
            d2 = _spectral_derivative(d1, axes, j)
            c1 = _spectral_derivative(cvals, axes, j)
            c2 = _spectral_derivative(c1, axes, j)
            out += -(hbar ** 2) * (cvals * d2 + c1 * d1 + 0.25 * c2 * psi.values)
        else:
            j, l = nz
            dj = _spectral_derivative(psi.values, axes, j)
            dl = _spectral_derivative(psi.values, axes, l)
            djl = _spectral_derivative(dj, axes, l)
            cj = _spectral_derivative(cvals, axes, j)
            cl = _spectral_derivative(cvals, axes, l)
            cjl = _spectral_derivative(cj, axes, l)
            out += -(hbar ** 2) * (
                cvals * djl + 0.5 * cl * dj + 0.5 * cj * dl + 0.25 * cjl * psi.values
            )
    return GridFunction(axes=axes, values=out, hbar=hbar)


def refine_error(symbol, func, axes, hbar: float) -> float:
    """Discretization estimate: apply on the grid and on a doubled grid."""
    coarse = weyl_apply_grid(symbol, sample(func, axes, hbar))
    fine_axes = tuple(np.linspace(a[0], a[-1], 2 * len(a) - 1) for a in axes)
    fine = weyl_apply_grid(symbol, sample(func, fine_axes, hbar))
    sl = tuple(slice(None, None, 2) for _ in axes)
    w = np.prod(coarse.spacing)
    return float(np.sqrt(np.sum(np.abs(fine.values[sl] - coarse.values) ** 2) * w))


# ---------------------------------------------------------------------------
# grid Wigner transform (d = 1)


def wigner_grid(phi: GridFunction, psi: GridFunction, x_out, xi_out) -> np.ndarray:
    """W_hbar[phi, psi](x, xi) by quadrature of the defining integral, d=1.

    W(x, xi) = (2 pi)^{-1} Int e^{i xi v} phi(x - hbar v/2) conj(psi(x + hbar v/2)) dv.
    """
    if phi.d != 1:
        raise NotImplementedError("grid Wigner oracle is 1d")
    from scipy.interpolate import CubicSpline

    a = phi.axes[0]
    hbar = phi.hbar
    L = a[-1] - a[0]
    vmax = 2 * L / hbar
    nv = 4 * len(a)
    v = np.linspace(-vmax, vmax, nv)
    sp_phi = CubicSpline(a, phi.values)
    sp_psi = CubicSpline(a, psi.values)
    phi_i = lambda x: np.where((x >= a[0]) & (x <= a[-1]), sp_phi(x), 0.0)
    psi_i = lambda x: np.where((x >= a[0]) & (x <= a[-1]), sp_psi(x), 0.0)
    out = np.empty((len(x_out), len(xi_out)), dtype=complex)
    for i, x in enumerate(x_out):
        prod = phi_i(x - hbar * v / 2) * np.conj(psi_i(x + hbar * v / 2))
        ker = np.exp(1j * np.outer(xi_out, v))
        out[i] = np.trapezoid(ker * prod[None, :], v, axis=1) / (2 * np.pi)
    return out


# ---------------------------------------------------------------------------
# quadrature Gram matrices


def gauss_hermite_points(basis, n_nodes: int):
    """Tensor Gauss-Hermite rule adapted to a packet basis.

    Returns (points (n, d), base_weight (n,), t2 (n,)) such that for a
    function f localized at the packet scale,

        Int f dx ~ sum_i base_weight_i exp(t2_i) f(x_i).

    Callers avoid overflow by folding exp(t2/2) into each Gaussian factor.
    """
    t, w = np.polynomial.hermite.hermgauss(n_nodes)
    d = basis.d
    ImB = basis.frame.B.imag
    evals, vecs = np.linalg.eigh(ImB)
    scale = np.sqrt(basis.hbar / evals)
    mesh = np.meshgrid(*[t * s for s in scale], indexing="ij")
    local = np.stack([m.ravel() for m in mesh], axis=-1)
    pts = basis.q + local @ vecs.T
    wmesh = np.meshgrid(*[w] * d, indexing="ij")
    base = np.prod([m.ravel() for m in wmesh], axis=0) * float(np.prod(scale))
    tmesh = np.meshgrid(*[t] * d, indexing="ij")
    t2 = np.sum([m.ravel() ** 2 for m in tmesh], axis=0)
    return pts, base, t2


def gram_matrix(basis, alphas, n_nodes: int = 140) -> np.ndarray:
    """Gram matrix of excited states by Gauss-Hermite quadrature."""
    from .hagedorn import eval_excited_state, hermite_table

    pts, base, t2 = gauss_hermite_points(basis, n_nodes)
    boost = np.exp(0.5 * t2)
    K = max(order(a) for a in alphas)
    table = hermite_table(basis, K)
    vals = [eval_excited_state(basis, a, pts, table) * boost for a in alphas]
    G = np.empty((len(alphas), len(alphas)), dtype=complex)
    for i, vi in enumerate(vals):
        for j, vj in enumerate(vals):
            G[i, j] = np.sum(base * vi * np.conj(vj))
    return G


def quadrature_inner(basis, f_vals_at, g_vals_at, n_nodes: int = 140) -> complex:
    """<f, g> over packet-scale functions given as point evaluators."""
    pts, base, t2 = gauss_hermite_points(basis, n_nodes)
    boost = np.exp(0.5 * t2)
    return complex(np.sum(base * (f_vals_at(pts) * boost) * np.conj(g_vals_at(pts) * boost)))


# ---------------------------------------------------------------------------
# dense propagation of truncated generators


def dense_propagate(generator, c0: np.ndarray, t: float, rtol: float = 1e-12,
                    time_dependent: bool = True) -> np.ndarray:
    """Propagate dc/dt = A(t) c with dense linear algebra.

    `generator` is either a constant matrix or a callable t -> matrix.
    """
    c0 = np.asarray(c0, dtype=complex)
    if not callable(generator):
        return expm(float(t) * np.asarray(generator, dtype=complex)) @ c0

    n = len(c0)

    def rhs(s, y):
        c = y[:n] + 1j * y[n:]
        dc = generator(s) @ c
        return np.concatenate([dc.real, dc.imag])

    y0 = np.concatenate([c0.real, c0.imag])
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=rtol,
                    dense_output=False)
    if not sol.success:
        raise RuntimeError(f"dense propagation failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:n] + 1j * y[n:]
