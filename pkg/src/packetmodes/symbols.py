"""Symbol models: smooth phase-space functions with point evaluation of
derivatives up to a declared order.

Users write symbols in public (x, xi) coordinates.  Derivative queries take
multi-indices over (x_1..x_d, xi_1..xi_d); the dynamics layer converts to
its momentum-first internal ordering through `deriv_internal`.
"""

from __future__ import annotations

import numpy as np
import sympy as sp

from .errors import OrderUnavailable
from .multiindex import add, multi_indices, order


class SymbolModel:
    """Base class; subclasses implement `derivative(gamma_pub, points_pub)`."""

    d: int
    max_order: int

    def value(self, points_pub):
        return self.derivative((0,) * (2 * self.d), points_pub)

    def derivative(self, gamma_pub, points_pub):  # pragma: no cover - interface
        raise NotImplementedError

    # -- internal-ordering adapters (momentum first) --------------------

    def _gamma_to_public(self, gamma_int):
        d = self.d
        return tuple(gamma_int[d:]) + tuple(gamma_int[:d])

    def _points_to_public(self, z_int):
        z_int = np.atleast_2d(np.asarray(z_int, dtype=float))
        d = self.d
        return np.concatenate([z_int[:, d:], z_int[:, :d]], axis=1)

    def deriv_internal(self, gamma_int, z_int):
        """d^gamma at internal points, gamma over (p_1..p_d, q_1..q_d)."""
        return self.derivative(self._gamma_to_public(gamma_int), self._points_to_public(z_int))

    def value_internal(self, z_int):
        return self.deriv_internal((0,) * (2 * self.d), z_int)

    def grad_internal(self, z_int):
        z_int = np.atleast_2d(np.asarray(z_int, dtype=float))
        n = len(z_int)
        g = np.empty((n, 2 * self.d))
        zero = [0] * (2 * self.d)
        for j in range(2 * self.d):
            gamma = list(zero)
            gamma[j] = 1
            g[:, j] = np.real(self.deriv_internal(tuple(gamma), z_int))
        return g[0] if n == 1 else g

    def hess_internal(self, z_int):
        z_int = np.atleast_2d(np.asarray(z_int, dtype=float))
        m = 2 * self.d
        H = np.empty((m, m))
        for j in range(m):
            for k in range(j, m):
                gamma = [0] * m
                gamma[j] += 1
                gamma[k] += 1
                H[j, k] = H[k, j] = float(np.real(self.deriv_internal(tuple(gamma), z_int)[0]))
        return H


class PolynomialSymbol(SymbolModel):
    """Polynomial in (x, xi) given by {multi_index: coefficient}."""

    def __init__(self, d: int, coefficients: dict, max_order: int = 64):
        self.d = d
        self.max_order = max_order
        self.coefficients = {tuple(k): complex(v) for k, v in coefficients.items() if v != 0}

    def derivative(self, gamma_pub, points_pub):
        pts = np.atleast_2d(np.asarray(points_pub, dtype=float))
        gamma = tuple(int(g) for g in gamma_pub)
        out = np.zeros(len(pts), dtype=complex)
        for mono, c in self.coefficients.items():
            fac = 1.0
            red = []
            ok = True
            for m, g in zip(mono, gamma):
                if g > m:
                    ok = False
                    break
                for i in range(g):
                    fac *= m - i
                red.append(m - g)
            if not ok:
                continue
            term = np.full(len(pts), c * fac, dtype=complex)
            for j, r in enumerate(red):
                if r:
                    term = term * pts[:, j] ** r
            out += term
        return out

    def __add__(self, other):
        coeffs = dict(self.coefficients)
        for k, v in other.coefficients.items():
            coeffs[k] = coeffs.get(k, 0.0) + v
        return PolynomialSymbol(self.d, coeffs)

    def scaled(self, factor):
        return PolynomialSymbol(self.d, {k: factor * v for k, v in self.coefficients.items()})


class SympySymbol(SymbolModel):
    """Symbol defined by a sympy expression in x0..x{d-1}, xi0..xi{d-1}."""

    def __init__(self, d: int, expr, max_order: int = 12):
        self.d = d
        self.max_order = max_order
        self.vars = [sp.Symbol(f"x{j}", real=True) for j in range(d)] + [
            sp.Symbol(f"xi{j}", real=True) for j in range(d)
        ]
        names = {v.name: v for v in self.vars}
        expr = sp.sympify(expr, locals=names) if isinstance(expr, str) else sp.sympify(expr)
        # unify any same-named symbols carrying different assumptions
        expr = expr.subs({s: names[s.name] for s in expr.free_symbols if s.name in names})
        self.expr = expr
        self._cache: dict = {}

    def derivative(self, gamma_pub, points_pub):
        gamma = tuple(int(g) for g in gamma_pub)
        if order(gamma) > self.max_order:
            raise OrderUnavailable(f"derivative order {order(gamma)} above {self.max_order}")
        fn = self._cache.get(gamma)
        if fn is None:
            e = self.expr
            for v, g in zip(self.vars, gamma):
                if g:
                    e = sp.diff(e, v, g)
            fn = sp.lambdify(self.vars, e, modules="numpy")
            self._cache[gamma] = fn
        pts = np.atleast_2d(np.asarray(points_pub, dtype=float))
        vals = fn(*[pts[:, j] for j in range(2 * self.d)])
        return np.broadcast_to(np.asarray(vals, dtype=complex), (len(pts),)).copy()


def zero_symbol(d: int) -> PolynomialSymbol:
    return PolynomialSymbol(d, {})


class ComplexSymbol:
    """P = V + iA with the real parts individually addressable.

    The propagation and quasimode layers work with the Schroedinger
    generator V - iA of the forward-in-time damped evolution; the sign
    bookkeeping lives in the dynamics module, not here.
    """

    def __init__(self, V: SymbolModel, A: SymbolModel | None = None):
        if A is None:
            A = zero_symbol(V.d)
        if V.d != A.d:
            raise ValueError("V and A must share dimension")
        self.V = V
        self.A = A
        self.d = V.d
        self.negative_a_report: list = []

    @property
    def max_order(self) -> int:
        return min(self.V.max_order, self.A.max_order)

    def check_damping(self, z_int) -> None:
        """Opportunistic A >= 0 monitoring; violations recorded, not fatal."""
        vals = np.real(self.A.value_internal(z_int))
        bad = np.min(vals)
        if bad < -1e-12:
            self.negative_a_report.append(float(bad))

    def deriv_internal(self, gamma_int, z_int):
        """Derivative of P = V + iA in internal ordering."""
        return self.V.deriv_internal(gamma_int, z_int) + 1j * self.A.deriv_internal(
            gamma_int, z_int
        )

    def q_deriv_internal(self, gamma_int, z_int):
        """Derivative of the generator Q = V - iA."""
        return self.V.deriv_internal(gamma_int, z_int) - 1j * self.A.deriv_internal(
            gamma_int, z_int
        )


# -- convenience builders ----------------------------------------------------


def polynomial(d: int, coefficients: dict) -> PolynomialSymbol:
    return PolynomialSymbol(d, coefficients)


def from_expression(d: int, expr, max_order: int = 12) -> SympySymbol:
    return SympySymbol(d, expr, max_order)


def harmonic_oscillator(d: int, weights=None) -> PolynomialSymbol:
    """H = sum_j w_j (xi_j^2 + x_j^2)/2."""
    w = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    coeffs = {}
    for j in range(d):
        ex = [0] * (2 * d)
        ex[j] = 2
        coeffs[tuple(ex)] = 0.5 * w[j]
        ex = [0] * (2 * d)
        ex[d + j] = 2
        coeffs[tuple(ex)] = 0.5 * w[j]
    return PolynomialSymbol(d, coeffs)


def mode_energy(d: int, j: int) -> PolynomialSymbol:
    """H_j = (xi_j^2 + x_j^2)/2."""
    c = {}
    ex = [0] * (2 * d)
    ex[j] = 2
    c[tuple(ex)] = 0.5
    ex = [0] * (2 * d)
    ex[d + j] = 2
    c[tuple(ex)] = 0.5
    return PolynomialSymbol(d, c)
