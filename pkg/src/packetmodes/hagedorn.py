"""Hagedorn coherent and excited states, their Fourier transforms and
Wigner lifts.

The ground state of a normalized Lagrangian frame Z = (P, Q)^t at center
z = (p, q) is

    phi_0(x) = (pi hbar)^(-d/4) det(Q)^(-1/2)
               exp( (i/2 hbar) B(x-q).(x-q) + (i/hbar) p.(x - q/2) ),

with B = P Q^{-1}.  Excited states carry the polynomial prefactor

    phi_a = (2^|a| a!)^(-1/2) p_a( Q^{-1}(x-q)/sqrt(hbar) ) phi_0,

generated by p_{a+e_j} = 2 y_j p_a - sum_k M_kj d_k p_a with M = Q^{-1} conj(Q).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange
from .frames import LagrangianFrame, make_frame
from .gaussians import invsqrt_det
from .multiindex import add, mi_factorial, multi_indices, order
from .ordering import omega, to_internal


# ---------------------------------------------------------------------------
# basis bundle


@dataclass(frozen=True)
class WavePacketBasis:
    """Frame + center + hbar + excitation cutoff.

    The center is stored momentum-first; use `at` to build from a public
    (x, xi) point.
    """

    frame: LagrangianFrame
    z: np.ndarray  # internal (p, q)
    hbar: float
    cutoff: int = 16

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        z = np.asarray(self.z, dtype=float).copy()
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @classmethod
    def at(cls, frame: LagrangianFrame, center, hbar: float, cutoff: int = 16):
        """Build from a center given in public (x, xi) order."""
        return cls(frame, to_internal(np.asarray(center, dtype=float)), hbar, cutoff)

    @property
    def d(self) -> int:
        return self.frame.d

    @property
    def p(self) -> np.ndarray:
        return self.z[: self.d]

    @property
    def q(self) -> np.ndarray:
        return self.z[self.d:]


# ---------------------------------------------------------------------------
# Hermite-type polynomial tables


class HermitePolynomialTable:
    """Coefficient store of the polynomials p_alpha.

    Built by the generalized recurrence

        b_{a+e_j, b} = 2 sum_k N_kj b_{a, b-e_k} - 2 sum_k Mt_kj (b_k+1) b_{a, b+e_k}

    with Mt = M/2, N = Id reproducing p_{a+e_j} = 2 y_j p_a - (M^T grad p_a)_j.
    The stored coefficients satisfy
    |b_{a b}| <= m^|a| |a|! / (((|a|-|b|)/2)! b!) with m = 2d sup(|Mt|, |N|).
    """

    def __init__(self, M: np.ndarray, max_order: int, N: np.ndarray | None = None):
        M = np.asarray(M, dtype=complex)
        d = M.shape[0]
        if N is None:
            N = np.eye(d, dtype=complex)
        self.M = M
        self.N = N
        self.d = d
        self.max_order = max_order
        Mt = 0.5 * M
        table = {(0,) * d: {(0,) * d: 1.0 + 0.0j}}
        for n in range(max_order):
            for target in multi_indices(d, n + 1):
                if order(target) != n + 1 or target in table:
                    continue
                j = next(i for i in range(d) if target[i] > 0)
                coeffs = table[add(target, j, -1)]
                new: dict = {}
                for beta, c in coeffs.items():
                    for k in range(d):
                        if N[k, j] != 0:
                            bb = add(beta, k)
                            new[bb] = new.get(bb, 0.0) + 2.0 * N[k, j] * c
                        if Mt[k, j] != 0 and beta[k] >= 1:
                            bb = add(beta, k, -1)
                            new[bb] = new.get(bb, 0.0) - 2.0 * Mt[k, j] * beta[k] * c
                table[target] = new
        self.coefficients = table

    def polynomial(self, alpha) -> dict:
        try:
            return self.coefficients[tuple(alpha)]
        except KeyError:
            raise IndexOutOfRange(f"|alpha| > table order {self.max_order}")

    def bound_margin(self) -> float:
        """max |b_ab| / bound over all entries; <= 1 when the bound holds."""
        from math import factorial
        m = 2 * self.d * max(np.max(np.abs(0.5 * self.M)), np.max(np.abs(self.N)))
        worst = 0.0
        for alpha, coeffs in self.coefficients.items():
            na = order(alpha)
            for beta, c in coeffs.items():
                nb = order(beta)
                if (na - nb) % 2 != 0 or nb > na:
                    if abs(c) > 1e-12:
                        return np.inf
                    continue
                bound = m ** na * factorial(na) / (
                    factorial((na - nb) // 2) * mi_factorial(beta)
                )
                if bound > 0:
                    worst = max(worst, abs(c) / bound)
        return worst


def _power_products(y: np.ndarray, betas) -> dict:
    """y^beta for every needed beta; y has shape (n, d)."""
    n, d = y.shape
    out = {(0,) * d: np.ones(n, dtype=complex)}

    def build(beta):
        val = out.get(beta)
        if val is None:
            j = next(i for i in range(d) if beta[i] > 0)
            val = build(add(beta, j, -1)) * y[:, j]
            out[beta] = val
        return val

    for beta in betas:
        build(beta)
    return out


# ---------------------------------------------------------------------------
# evaluators


def _prepare_points(points, d: int) -> np.ndarray:
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[-1] != d:
        raise ValueError(f"points must have last dimension {d}")
    return x


def eval_ground_state(basis: WavePacketBasis, points) -> np.ndarray:
    """Evaluate phi_0 at position points (n, d) -> (n,) complex."""
    x = _prepare_points(points, basis.d)
    f = basis.frame
    B = f.B
    u = x - basis.q
    quad = np.einsum("ni,ij,nj->n", u, B, u)
    lin = u @ basis.p + 0.5 * basis.q @ basis.p
    pref = (np.pi * basis.hbar) ** (-basis.d / 4) * f.det_q_branch
    return pref * np.exp(1j * (0.5 * quad + lin) / basis.hbar)


def hermite_table(basis: WavePacketBasis, max_order: int | None = None) -> HermitePolynomialTable:
    K = basis.cutoff if max_order is None else max_order
    return HermitePolynomialTable(basis.frame.M, K)


def eval_excited_state(basis: WavePacketBasis, alpha, points,
                       table: HermitePolynomialTable | None = None) -> np.ndarray:
    """Evaluate phi_alpha at position points."""
    alpha = tuple(int(a) for a in alpha)
    if order(alpha) > basis.cutoff:
        raise IndexOutOfRange(f"|alpha| = {order(alpha)} exceeds cutoff {basis.cutoff}")
    if table is None:
        table = hermite_table(basis, order(alpha))
    x = _prepare_points(points, basis.d)
    ground = eval_ground_state(basis, x)
    y = np.linalg.solve(basis.frame.Q_block, (x - basis.q).T).T / np.sqrt(basis.hbar)
    coeffs = table.polynomial(alpha)
    powers = _power_products(y, coeffs.keys())
    poly = sum(c * powers[beta] for beta, c in coeffs.items())
    norm = 1.0 / np.sqrt(2.0 ** order(alpha) * mi_factorial(alpha))
    return norm * poly * ground


def eval_packet(basis: WavePacketBasis, coefficients: dict, points,
                table: HermitePolynomialTable | None = None) -> np.ndarray:
    """Evaluate sum_a c_a phi_a with one shared ground-state evaluation."""
    if not coefficients:
        return np.zeros(len(_prepare_points(points, basis.d)), dtype=complex)
    K = max(order(a) for a in coefficients)
    if table is None or table.max_order < K:
        table = hermite_table(basis, K)
    x = _prepare_points(points, basis.d)
    ground = eval_ground_state(basis, x)
    y = np.linalg.solve(basis.frame.Q_block, (x - basis.q).T).T / np.sqrt(basis.hbar)
    needed = set()
    for a in coefficients:
        needed.update(table.polynomial(a).keys())
    powers = _power_products(y, needed)
    acc = np.zeros(len(x), dtype=complex)
    for a, c in coefficients.items():
        if c == 0:
            continue
        poly = sum(bc * powers[beta] for beta, bc in table.polynomial(a).items())
        acc += c / np.sqrt(2.0 ** order(a) * mi_factorial(a)) * poly
    return acc * ground


# independent construction path: apply the raising operator as a differential
# operator on (polynomial) x gaussian representations; used by tests.

def raise_polynomial(frame: LagrangianFrame, hbar: float, poly: dict, j: int) -> dict:
    """Apply A^dagger_j to f(y) phi_0 where y = Q^{-1}(x-q)/sqrt(hbar).

    Returns the polynomial of A_j^dagger (f phi_0) / phi_0 in y, using
    A^dagger_j (f phi_0) = 2^{-1/2} [2 y_j f - (M^T grad f)_j] phi_0.
    """
    M = frame.M
    d = frame.d
    out: dict = {}
    for beta, c in poly.items():
        bb = add(beta, j)
        out[bb] = out.get(bb, 0.0) + 2.0 * c / np.sqrt(2.0)
        for k in range(d):
            if beta[k] >= 1:
                bb = add(beta, k, -1)
                out[bb] = out.get(bb, 0.0) - M[k, j] * beta[k] * c / np.sqrt(2.0)
    return out


# ---------------------------------------------------------------------------
# ladder action on coefficient vectors


def ladder_apply(kind: str, j: int, coefficients: dict, cutoff: int):
    """Raising/lowering bookkeeping on a coefficient dict.

    Returns (new_coefficients, leakage); raising amplitudes pushed beyond the
    cutoff are dropped and accumulated (l2) into the leakage scalar.
    """
    if kind not in ("raise", "lower"):
        raise ValueError("kind must be 'raise' or 'lower'")
    out: dict = {}
    leak = 0.0
    for alpha, c in coefficients.items():
        if c == 0:
            continue
        if kind == "raise":
            target = add(alpha, j)
            amp = np.sqrt(alpha[j] + 1.0) * c
            if order(target) > cutoff:
                leak += abs(amp) ** 2
                continue
        else:
            if alpha[j] == 0:
                continue
            target = add(alpha, j, -1)
            amp = np.sqrt(alpha[j]) * c
        out[target] = out.get(target, 0.0) + amp
    return out, np.sqrt(leak)


# ---------------------------------------------------------------------------
# Fourier transform

def fourier_frame(frame: LagrangianFrame) -> LagrangianFrame:
    """Frame Omega Z of the hbar-scaled Fourier transform."""
    d = frame.d
    f = make_frame(-frame.Q_block, frame.P_block)
    # keep a branch consistent with the input frame rather than re-principal
    return f


def packet_fourier_transform(basis: WavePacketBasis, alpha):
    """Closed-form evaluator of the hbar-scaled Fourier transform.

    Convention: FT(phi)(xi) = (2 pi hbar)^(-d/2) Int phi(x) exp(-i x.xi/hbar) dx.
    The transform of a Hagedorn state is the Hagedorn state of frame Omega Z
    at center Omega z, times an alpha-independent constant fixed by the
    ground-state Gaussian integral.
    """
    alpha = tuple(int(a) for a in alpha)
    if order(alpha) > basis.cutoff:
        raise IndexOutOfRange("excitation order above basis cutoff")
    d, hbar = basis.d, basis.hbar
    f = basis.frame
    B = f.B
    new_frame = fourier_frame(f)
    O = omega(d)
    z_new = O @ basis.z
    new_basis = WavePacketBasis(new_frame, z_new, hbar, basis.cutoff)
    # c0 = hbar^{-d/2} det(Q)^{-1/2} det(-i B)^{-1/2} / det(P)^{-1/2}
    c0 = (
        f.det_q_branch
        * invsqrt_det(-1j * B)
        / new_frame.det_q_branch
        * hbar ** 0  # scale cancels: det(-iB/hbar)^{-1/2} = hbar^{d/2} det(-iB)^{-1/2}
    )

    def evaluator(xi_points):
        return c0 * eval_excited_state(new_basis, alpha, xi_points)

    evaluator.basis = new_basis
    evaluator.prefactor = c0
    return evaluator


def line_l1_norm(evaluator, direction, r_max: float = 12.0, n: int = 4001) -> float:
    """Quadrature of Int |f(r v)| dr along a line through the origin."""
    v = np.asarray(direction, dtype=float)
    r = np.linspace(-r_max, r_max, n)
    pts = r[:, None] * v[None, :]
    vals = np.abs(evaluator(pts))
    return float(np.trapezoid(vals, r))


# ---------------------------------------------------------------------------
# Wigner lift


@dataclass(frozen=True)
class LiftedFrame:
    """Doubled-dimension frame of the Wigner transform of a packet pair."""

    Zcal: LagrangianFrame
    mixed_metric: np.ndarray
    d: int


def lifted_frame(Z1: LagrangianFrame, Z2: LagrangianFrame) -> LiftedFrame:
    """Frame of W[phi[Z1], phi[Z2]] in phase-space dimension 2d.

    Raising the left Wigner slot along frame column l lifts to the doubled
    column (Omega l, l/2); raising the (conjugated) right slot along m lifts
    to (-Omega conj(m), conj(m)/2).  Excitation indices concatenate as
    (alpha, beta) over the two blocks.
    """
    if Z1.d != Z2.d:
        raise ValueError("frames must share dimension")
    d = Z1.d
    O = omega(d)
    Pcal = np.hstack([O @ Z1.Z, -O @ np.conj(Z2.Z)])
    Qcal = np.hstack([0.5 * Z1.Z, 0.5 * np.conj(Z2.Z)])
    Zcal = make_frame(Pcal, Qcal)
    G = (Pcal @ np.linalg.inv(Qcal)) / 2j
    G.flags.writeable = False
    return LiftedFrame(Zcal=Zcal, mixed_metric=G, d=d)


def _wigner_ground_closed_form(Z1: LagrangianFrame, Z2: LagrangianFrame, hbar: float):
    """Exact cross-Wigner of two centered ground states.

    Returns a callable on internal phase-space points w = (p, q); the
    amplitude and phase come from the defining Gaussian integral, so no
    branch guessing is involved.
    """
    d = Z1.d
    B1, B2 = Z1.B, np.conj(Z2.B)
    Mv = -0.25j * hbar * (B1 - B2)
    det_fac = (2 * np.pi) ** (d / 2) * invsqrt_det(Mv)
    Minv = np.linalg.inv(Mv)
    pref = (
        (2 * np.pi) ** (-d)
        * (np.pi * hbar) ** (-d / 2)
        * Z1.det_q_branch
        * np.conj(Z2.det_q_branch)
        * det_fac
    )
    C = (0.5j / hbar) * (B1 - B2)

    def evaluate(w_int: np.ndarray) -> np.ndarray:
        w = np.atleast_2d(w_int)
        p, x = w[:, :d], w[:, d:]
        b = 1j * p - 0.5j * x @ (B1 + B2).T
        quad = 0.5 * np.einsum("ni,ij,nj->n", b, Minv, b)
        cxx = np.einsum("ni,ij,nj->n", x, C, x)
        return pref * np.exp(quad + cxx)

    return evaluate


def wigner_lift_eval(Z1: LagrangianFrame, Z2: LagrangianFrame, alpha, beta,
                     hbar: float, points, z1=None, z2=None) -> np.ndarray:
    """Evaluate W_hbar[phi_alpha[Z1, z1], phi_beta[Z2, z2]] at phase-space points.

    Points are public (x, xi); centers z1, z2 are public too (default 0).
    """
    d = Z1.d
    alpha = tuple(int(a) for a in alpha)
    beta = tuple(int(a) for a in beta)
    w = to_internal(np.atleast_2d(np.asarray(points, dtype=float)))
    zi1 = np.zeros(2 * d) if z1 is None else to_internal(np.asarray(z1, dtype=float))
    zi2 = np.zeros(2 * d) if z2 is None else to_internal(np.asarray(z2, dtype=float))
    O = omega(d)
    mid = 0.5 * (zi1 + zi2)
    wt = w - mid
    delta = zi1 - zi2
    phase = np.exp(
        (1j / hbar) * (wt @ (O @ delta)) - (0.5j / hbar) * (zi1 @ O @ zi2)
    )
    ground = _wigner_ground_closed_form(Z1, Z2, hbar)(wt)
    lift = lifted_frame(Z1, Z2)
    idx = alpha + beta
    if order(idx) == 0:
        return phase * ground
    table = HermitePolynomialTable(lift.Zcal.M, order(idx))
    y = np.linalg.solve(lift.Zcal.Q_block, wt.T).T / np.sqrt(hbar)
    coeffs = table.polynomial(idx)
    powers = _power_products(y, coeffs.keys())
    poly = sum(c * powers[b] for b, c in coeffs.items())
    norm = 1.0 / np.sqrt(2.0 ** order(idx) * mi_factorial(idx))
    return phase * ground * norm * poly


def wigner_lift_packet(Z1, Z2, coeffs1: dict, coeffs2: dict, hbar, points,
                       z1=None, z2=None) -> np.ndarray:
    """W[sum_a c1_a phi_a[Z1,z1], sum_b c2_b phi_b[Z2,z2]] sharing the tables."""
    d = Z1.d
    w = to_internal(np.atleast_2d(np.asarray(points, dtype=float)))
    zi1 = np.zeros(2 * d) if z1 is None else to_internal(np.asarray(z1, dtype=float))
    zi2 = np.zeros(2 * d) if z2 is None else to_internal(np.asarray(z2, dtype=float))
    O = omega(d)
    mid = 0.5 * (zi1 + zi2)
    wt = w - mid
    delta = zi1 - zi2
    phase = np.exp((1j / hbar) * (wt @ (O @ delta)) - (0.5j / hbar) * (zi1 @ O @ zi2))
    ground = _wigner_ground_closed_form(Z1, Z2, hbar)(wt)
    lift = lifted_frame(Z1, Z2)
    K = max((order(a) for a in coeffs1), default=0) + max((order(b) for b in coeffs2), default=0)
    table = HermitePolynomialTable(lift.Zcal.M, K)
    y = np.linalg.solve(lift.Zcal.Q_block, wt.T).T / np.sqrt(hbar)
    needed = set()
    pairs = []
    for a, c1 in coeffs1.items():
        for b, c2 in coeffs2.items():
            amp = c1 * np.conj(c2)
            if amp == 0:
                continue
            idx = tuple(a) + tuple(b)
            pairs.append((idx, amp))
            needed.update(table.polynomial(idx).keys())
    powers = _power_products(y, needed)
    acc = np.zeros(len(wt), dtype=complex)
    for idx, amp in pairs:
        poly = sum(c * powers[bb] for bb, c in table.polynomial(idx).items())
        acc += amp / np.sqrt(2.0 ** order(idx) * mi_factorial(idx)) * poly
    return phase * ground * acc
