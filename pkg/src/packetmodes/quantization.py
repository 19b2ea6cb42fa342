"""Weyl <-> anti-Wick conversion, Bargmann-space matrix elements, and the
coupling bands kappa (quadratic part) and mu (anti-Wick truncated tail)
driving the coefficient evolution.

Conventions.  All phase-space polynomials are in internal (p, q) order and
centered at the trajectory point.  Matrix elements are

    E[row, col] = <phi_row | Op phi_col>   (physics bracket),

and both stored bands are generator entries: dc_row/dt = sum_col
(kappa + mu)[row, col] c_col after the scalar gauge is removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma

import numpy as np
from scipy.special import gammaincc

from .cutoffs import bump
from .errors import BandOverflow, QuadratureFailure
from .frames import LagrangianFrame, symplectic_of_frame
from .multiindex import add, mi_factorial, multi_indices, order
from .ordering import omega


# ---------------------------------------------------------------------------
# Gaussian moments and the Weyl->anti-Wick coefficient tables


def gaussian_moments(Sigma: np.ndarray, max_order: int) -> dict:
    """E[y^alpha] for y ~ N(0, Sigma), by the Wick recursion."""
    n = Sigma.shape[0]
    moments = {(0,) * n: 1.0 + 0.0j}
    for m in range(1, max_order + 1):
        for alpha in multi_indices(n, m):
            if order(alpha) != m or alpha in moments:
                continue
            j = next(i for i in range(n) if alpha[i] > 0)
            beta = add(alpha, j, -1)
            val = 0.0
            for k in range(n):
                if beta[k] >= 1:
                    val += Sigma[j, k] * beta[k] * moments[add(beta, k, -1)]
            moments[alpha] = val
    return moments


@dataclass(frozen=True)
class MomentTable:
    """lambda_alpha and mu_alpha of a frame, |alpha| <= 2N over 2d indices."""

    frame: LagrangianFrame
    order2n: int
    lam: dict
    mu: dict

    def triangular_residual(self) -> float:
        """Max violation of the defining inverse identity."""
        n = 2 * self.frame.d
        worst = 0.0
        for gamma in multi_indices(n, self.order2n):
            if order(gamma) % 2 != 0:
                continue
            acc = 0.0
            for alpha in multi_indices(n, order(gamma)):
                if order(alpha) % 2 != 0:
                    continue
                rest = tuple(g - a for g, a in zip(gamma, alpha))
                if min(rest) < 0:
                    continue
                acc += (
                    (-1.0) ** (order(alpha) // 2)
                    * self.mu[alpha]
                    * self.lam[rest]
                    / (mi_factorial(alpha) * mi_factorial(rest))
                )
            target = 1.0 if order(gamma) == 0 else 0.0
            worst = max(worst, abs(acc - target))
        return worst


def moment_table(Z: LagrangianFrame, N: int) -> MomentTable:
    """Moments of the ground-state Wigner gaussian and their inverses.

    lambda_alpha = Int y^alpha (pi)^-d det-normalized exp(-G y.y) dy, i.e.
    Gaussian moments with covariance G^{-1}/2; mu_alpha solves the
    triangular inversion making the anti-Wick correction series invert the
    Weyl smoothing at order hbar^N.
    """
    d = Z.d
    O = omega(d)
    Gi = (Z.Z @ Z.Z.conj().T).real  # G^{-1}
    Sigma = 0.5 * Gi
    lam = gaussian_moments(Sigma, 2 * N)
    mu: dict = {}
    n = 2 * d
    for gamma in multi_indices(n, 2 * N):
        if order(gamma) % 2 != 0:
            mu[gamma] = 0.0 + 0.0j
            continue
        if order(gamma) == 0:
            mu[gamma] = 1.0 + 0.0j
            continue
        acc = 0.0
        for alpha in multi_indices(n, order(gamma) - 2):
            if order(alpha) % 2 != 0:
                continue
            rest = tuple(g - a for g, a in zip(gamma, alpha))
            if min(rest) < 0:
                continue
            acc += (
                (-1.0) ** (order(alpha) // 2)
                * mu[alpha]
                * lam[rest]
                / (mi_factorial(alpha) * mi_factorial(rest))
            )
        sign = (-1.0) ** (order(gamma) // 2)
        mu[gamma] = -acc * mi_factorial(gamma) * sign
    # odd lambda entries are exactly zero by parity; enforce bit-zero
    lam = {a: (0.0 + 0.0j if order(a) % 2 else complex(v)) for a, v in lam.items()}
    return MomentTable(frame=Z, order2n=2 * N, lam=lam, mu=mu)


# ---------------------------------------------------------------------------
# cutoff-polynomial algebra: sum_j chi^(j)(u.W u) * P_j(u)


@dataclass
class CutoffPolynomial:
    """Finite sum chi^(j)(u.W u) P_j(u) closed under differentiation."""

    n: int
    W: np.ndarray | None           # metric of the cutoff argument; None = no cutoff
    terms: dict = field(default_factory=dict)  # j -> {multiindex: coeff}

    def copy(self):
        return CutoffPolynomial(self.n, self.W, {j: dict(p) for j, p in self.terms.items()})

    def add_term(self, j: int, mono, coeff):
        if coeff == 0:
            return
        poly = self.terms.setdefault(j, {})
        poly[mono] = poly.get(mono, 0.0) + coeff
        if poly[mono] == 0:
            del poly[mono]

    def diff(self, k: int) -> "CutoffPolynomial":
        out = CutoffPolynomial(self.n, self.W)
        for j, poly in self.terms.items():
            for mono, c in poly.items():
                if mono[k] >= 1:
                    out.add_term(j, add(mono, k, -1), c * mono[k])
                if self.W is not None:
                    # chain rule through chi^(j)(u.W u): d_k -> 2 (W u)_k
                    for m in range(self.n):
                        if self.W[k, m] != 0:
                            out.add_term(j + 1, add(mono, m), 2.0 * self.W[k, m] * c)
        return out

    def compose_linear(self, F: np.ndarray) -> "CutoffPolynomial":
        """Substitute u = F v; the cutoff metric becomes F^T W F."""
        W_new = None if self.W is None else F.T @ self.W @ F
        out = CutoffPolynomial(self.n, W_new)
        for j, poly in self.terms.items():
            for mono, c in poly.items():
                expanded = {(0,) * self.n: c}
                for axis, power in enumerate(mono):
                    for _ in range(power):
                        nxt: dict = {}
                        for mm, cc in expanded.items():
                            for m in range(self.n):
                                if F[axis, m] != 0:
                                    key = add(mm, m)
                                    nxt[key] = nxt.get(key, 0.0) + cc * F[axis, m]
                        expanded = nxt
                for mm, cc in expanded.items():
                    out.add_term(j, mm, cc)
        return out

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        vals = np.zeros(len(u), dtype=complex)
        if self.W is not None:
            arg = np.einsum("ni,ij,nj->n", u, self.W, u)
        for j, poly in self.terms.items():
            acc = np.zeros(len(u), dtype=complex)
            for mono, c in poly.items():
                term = np.full(len(u), c, dtype=complex)
                for axis, power in enumerate(mono):
                    if power:
                        term = term * u[:, axis] ** power
                acc += term
            if self.W is None:
                vals += acc
            else:
                vals += acc * bump(np.real(arg), j)
        return vals

    def max_degree(self) -> int:
        return max((order(m) for p in self.terms.values() for m in p), default=0)


def anti_wick_symbol(q: CutoffPolynomial, table: MomentTable, N: int, hbar: float
                     ) -> CutoffPolynomial:
    """sigma^AW = sum_{m<=N} (-hbar)^m sum_{|a|=2m} mu_a D^a q / a!."""
    out = q.copy()
    n = q.n
    for alpha in multi_indices(n, 2 * N):
        m2 = order(alpha)
        if m2 == 0 or m2 % 2 != 0 or m2 // 2 > N:
            continue
        mu_a = table.mu[alpha]
        if mu_a == 0:
            continue
        deriv = q
        for axis, power in enumerate(alpha):
            for _ in range(power):
                deriv = deriv.diff(axis)
        scale = (-1.0) ** (m2 // 2) * hbar ** (m2 // 2) * mu_a / mi_factorial(alpha)
        for j, poly in deriv.terms.items():
            for mono, c in poly.items():
                out.add_term(j, mono, scale * c)
    return out


# ---------------------------------------------------------------------------
# Bargmann matrix elements of radial-cutoff polynomials in the standard frame


def _monomials_zzbar(poly: dict, d: int) -> dict:
    """Convert {(p,q) multiindex: coeff} to {(a, b): coeff} over z^a zbar^b.

    Identification per axis: fz = q - i p (so that multiplication by fz is
    the raising symbol in this ladder convention): q = (fz + cfz)/2 and
    p = (cfz - fz)/(2i).
    """
    out: dict = {}

    def distribute(acc, axis, remaining):
        nonlocal out
        if axis == 2 * d:
            for (a, b), c in acc.items():
                out[(a, b)] = out.get((a, b), 0.0) + c
            return
        power = remaining[axis]
        new = acc
        is_p = axis < d
        j = axis % d
        for _ in range(power):
            nxt: dict = {}
            for (a, b), c in new.items():
                # multiply by p_j or q_j
                ca = c * (0.5j if is_p else 0.5)
                cb = c * (-0.5j if is_p else 0.5)
                ka = (add(a, j), b)
                kb = (a, add(b, j))
                nxt[ka] = nxt.get(ka, 0.0) + ca
                nxt[kb] = nxt.get(kb, 0.0) + cb
            new = nxt
        distribute(new, axis + 1, remaining)

    for mono, coeff in poly.items():
        zero = (0,) * d
        distribute({(zero, zero): complex(coeff)}, 0, mono)
    return out


class RadialMoments:
    """Normalized radial integrals of chi^(j)(R^2) weights.

    moment(j, m) = Int_0^inf R^m chi^(j)(R^2) exp(-R^2/2 hbar) dR for j >= 1,
    and for j = 0 the same with chi(R^2) (full Gaussian moment minus the
    cutoff tail).  Values are returned as (log_magnitude, sign) pairs via
    log_moment, so the Gamma normalizations cancel stably.
    """

    def __init__(self, hbar: float, n_nodes: int = 64):
        self.hbar = hbar
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        # edge integration over u = R^2 in [2, 3]
        self.u_nodes = 2.0 + 0.5 * (x + 1.0)
        self.u_weights = 0.5 * w
        self._cache: dict = {}

    def _edge_integral(self, j: int, m: int) -> float:
        u = self.u_nodes
        R = np.sqrt(u)
        chij = bump(u, j)
        vals = R ** m * chij * np.exp(-u / (2 * self.hbar)) / (2 * R)
        return float(np.sum(self.u_weights * vals))

    def full_moment(self, m: int) -> float:
        """Plain Gaussian radial moment, no cutoff."""
        s = (m + 1) / 2.0
        return 0.5 * float(np.exp(lgamma(s) + s * np.log(2 * self.hbar)))

    def moment(self, j: int, m: int) -> float:
        key = (j, m)
        if key in self._cache:
            return self._cache[key]
        if j >= 1:
            val = self._edge_integral(j, m)
        else:
            s = (m + 1) / 2.0
            full = 0.5 * np.exp(lgamma(s) + s * np.log(2 * self.hbar))
            tail_beyond3 = full * gammaincc(s, 3.0 / (2 * self.hbar))
            # on [2, 3]: chi = 1 - (1 - chi); integrate (1 - chi) there
            u = self.u_nodes
            R = np.sqrt(u)
            one_minus = (1.0 - bump(u, 0)) * R ** m * np.exp(-u / (2 * self.hbar)) / (2 * R)
            edge = float(np.sum(self.u_weights * one_minus))
            val = full - tail_beyond3 - edge
        self._cache[key] = val
        return val

    def check_resolution(self):
        """Doubling check on a representative edge integral."""
        fine = RadialMoments(self.hbar, n_nodes=128)
        a, b = self.moment(1, 3), fine.moment(1, 3)
        if abs(a - b) > 1e-10 * max(1.0, abs(b)):
            raise QuadratureFailure("radial cutoff quadrature unresolved")


def _log_angular(powers) -> float:
    """log of 2^{1-d} prod Gamma((m_j+2)/2) / Gamma((M+2d)/2), m_j >= 0."""
    d = len(powers)
    M = sum(powers)
    val = (1 - d) * np.log(2.0)
    for m in powers:
        val += lgamma((m + 2) / 2.0)
    val -= lgamma((M + 2 * d) / 2.0)
    return val


def bargmann_matrix_element(symbol: CutoffPolynomial, row, col, hbar: float,
                            radial: RadialMoments | None = None) -> complex:
    """<phi_row | Op_AW(symbol) phi_col> for the canonical frame.

    The symbol must carry a cutoff metric equal to the identity (radial
    argument); elements are exactly zero when no monomial matches the
    angular selection rule row + b = col + a.
    """
    d = len(row)
    no_cutoff = symbol.W is None
    if not no_cutoff and np.max(np.abs(symbol.W - np.eye(2 * d))) > 1e-12:
        raise ValueError("bargmann elements need a radial cutoff argument")
    if radial is None:
        radial = RadialMoments(hbar)
    total = 0.0 + 0.0j
    # normalization: m_alpha = prod pi a_j! (2 hbar)^(a_j + 1)
    def log_norm(alpha):
        out = 0.0
        for a in alpha:
            out += np.log(np.pi) + lgamma(a + 1) + (a + 1) * np.log(2 * hbar)
        return out

    log_norms = 0.5 * (log_norm(row) + log_norm(col))
    for j, poly in symbol.terms.items():
        for (a, b), c in _monomials_zzbar(poly, d).items():
            if c == 0:
                continue
            ok = all(col[k] + a[k] == row[k] + b[k] for k in range(d))
            if not ok:
                continue
            powers = tuple(col[k] + a[k] + row[k] + b[k] for k in range(d))
            M = sum(powers)
            # angular: (2 pi)^d from the tau-integrals over the matched mode
            if no_cutoff:
                if j != 0:
                    continue
                rad = radial.full_moment(M + 2 * d - 1)
            else:
                rad = radial.moment(j, M + 2 * d - 1)
            if rad == 0.0:
                continue
            log_ang = _log_angular(powers)
            log_val = np.log(abs(rad)) + log_ang + d * np.log(2 * np.pi) - log_norms
            total += c * np.sign(rad) * np.exp(log_val)
    return complex(total)


# ---------------------------------------------------------------------------
# dense ladder matrices over a truncated index set


class IndexSet:
    """Multi-indices |alpha| <= K with dense matrix bookkeeping."""

    def __init__(self, d: int, K: int):
        self.d = d
        self.K = K
        self.indices = list(multi_indices(d, K))
        self.position = {a: i for i, a in enumerate(self.indices)}
        self._ladders: dict = {}

    def __len__(self):
        return len(self.indices)

    def raising(self, j: int) -> np.ndarray:
        M = self._ladders.get(j)
        if M is None:
            n = len(self.indices)
            M = np.zeros((n, n))
            for col, a in enumerate(self.indices):
                b = add(a, j)
                row = self.position.get(b)
                if row is not None:
                    M[row, col] = np.sqrt(a[j] + 1.0)
            M.flags.writeable = False
            self._ladders[j] = M
        return M

    def lowering(self, j: int) -> np.ndarray:
        return self.raising(j).T


def _ladder_polynomial_matrix(idx: IndexSet, val, lin_low, lin_raise,
                              m_low, m_raise, m_mixed, tr_mixed) -> np.ndarray:
    """Dense matrix of val + lin.A + lin'.A^+ + quadratic ladder terms.

    Quadratic terms: (A^T m_low A + A^+T m_raise A^+ + 2 sum m_mixed[j,k]
    A^+_k A_j + tr_mixed)/1; all coefficients precomputed by the caller.
    """
    n = len(idx)
    A = [idx.lowering(j) for j in range(idx.d)]
    Ad = [idx.raising(j) for j in range(idx.d)]
    M = (complex(val) + complex(tr_mixed)) * np.eye(n, dtype=complex)
    for j in range(idx.d):
        if lin_low is not None and lin_low[j] != 0:
            M = M + lin_low[j] * A[j]
        if lin_raise is not None and lin_raise[j] != 0:
            M = M + lin_raise[j] * Ad[j]
    for j in range(idx.d):
        for k in range(idx.d):
            if m_low is not None and m_low[j, k] != 0:
                M = M + m_low[j, k] * (A[j] @ A[k])
            if m_raise is not None and m_raise[j, k] != 0:
                M = M + m_raise[j, k] * (Ad[j] @ Ad[k])
            if m_mixed is not None and m_mixed[j, k] != 0:
                M = M + 2.0 * m_mixed[j, k] * (Ad[k] @ A[j])
    return M


def quadratic_operator_matrix(frame: LagrangianFrame, z_center: np.ndarray,
                              value: complex, grad: np.ndarray, hess: np.ndarray,
                              hbar: float, idx: IndexSet) -> np.ndarray:
    """Matrix of the Weyl quantization of a quadratic symbol in the basis
    {phi_alpha[frame, z_center]}, built from the exact ladder decomposition

        zhat - z = sqrt(hbar/2) (conj(Z) A + Z A^+).

    `grad`, `hess` are taken at z_center in internal ordering; `value` is the
    symbol value there.  Exact for quadratic symbols, rows/cols |alpha|<=K.
    """
    Z = frame.Z
    Zb = np.conj(Z)
    g = np.asarray(grad, dtype=complex)
    Mh = np.asarray(hess, dtype=complex)
    lin_low = np.sqrt(hbar / 2.0) * (Zb.T @ g)
    lin_raise = np.sqrt(hbar / 2.0) * (Z.T @ g)
    m_low = (hbar / 4.0) * (Zb.T @ Mh @ Zb)
    m_raise = (hbar / 4.0) * (Z.T @ Mh @ Z)
    m_mixed = (hbar / 4.0) * (Zb.T @ Mh @ Z)
    tr_mixed = np.trace(m_mixed)
    return _ladder_polynomial_matrix(idx, value, lin_low, lin_raise,
                                     m_low, m_raise, m_mixed, tr_mixed)


def basis_drift_matrix(point, hbar: float, idx: IndexSet) -> np.ndarray:
    """D[row, col] = <phi_row | d/dt phi_col[Z_t, z_t]>.

    Built by the graded recursion phi_{b+e_j} = (b_j+1)^{-1/2} Ad_j phi_b,
    with the operator derivative Ad_j' = sum_k P[j,k] Ad_k + R[j,k] A_k + s_j
    and the explicit ground-state drift.
    """
    d = idx.d
    Z = point.frame.Z
    Zd = point.Zdot
    O = omega(d)
    Pmat = -0.5j * (Zd.conj().T @ O @ Z)
    Rmat = -0.5j * (Zd.conj().T @ O @ np.conj(Z))
    svec = (1j / np.sqrt(2 * hbar)) * (Z.conj().T @ O @ point.zdot)

    n = len(idx)
    A = [idx.lowering(j) for j in range(d)]
    Ad = [idx.raising(j) for j in range(d)]
    Adot = [
        sum(Pmat[j, k] * Ad[k] + Rmat[j, k] * A[k] for k in range(d))
        + svec[j] * np.eye(n)
        for j in range(d)
    ]

    # ground-state drift in ladder form
    Q = point.frame.Q_block
    Qinv = np.linalg.inv(Q)
    B = point.frame.B
    Pb, Qb = Z[:d], Z[d:]
    Pdot_b, Qdot_b = Zd[:d], Zd[d:]
    Bdot = (Pdot_b - B @ Qdot_b) @ Qinv
    p, q = point.z[:d], point.z[d:]
    pdot, qdot = point.zdot[:d], point.zdot[d:]
    QQs = Q @ Q.conj().T
    c_quad = 0.25j * (Q.T @ Bdot @ Q)
    c_lin = (1j / np.sqrt(2 * hbar)) * (Q.T @ (pdot - B @ qdot))
    scalar = (
        -0.5 * np.trace(Qdot_b @ Qinv)
        + 0.25j * np.einsum("jk,jk->", Bdot, QQs)
        + (0.5j / hbar) * (np.dot(pdot, q) - np.dot(p, qdot))
    )
    ground_col = scalar * np.eye(n, dtype=complex)
    for j in range(d):
        if c_lin[j] != 0:
            ground_col = ground_col + c_lin[j] * Ad[j]
        for k in range(d):
            if c_quad[j, k] != 0:
                ground_col = ground_col + c_quad[j, k] * (Ad[j] @ Ad[k])
    e0 = np.zeros(n, dtype=complex)
    e0[idx.position[(0,) * d]] = 1.0
    D = np.zeros((n, n), dtype=complex)
    D[:, idx.position[(0,) * d]] = ground_col @ e0
    # graded recursion
    for K_level in range(idx.K):
        for target in multi_indices(d, K_level + 1):
            if order(target) != K_level + 1:
                continue
            j = next(i for i in range(d) if target[i] > 0)
            pred = add(target, j, -1)
            cp = idx.position[pred]
            ct = idx.position[target]
            epred = np.zeros(n, dtype=complex)
            epred[cp] = 1.0
            D[:, ct] = (Adot[j] @ epred + Ad[j] @ D[:, cp]) / np.sqrt(target[j])
    return D


# ---------------------------------------------------------------------------
# coupling assembly


@dataclass
class CouplingBand:
    """Generator bands at one time: dc/dt = (gauge + kappa + mu) c."""

    t: float
    gauge: complex
    kappa: np.ndarray
    mu: np.ndarray
    idx: IndexSet
    hbar: float
    n_taylor: int
    leakage: float
    kappa_column_residual: float


def assemble_couplings(symbol, traj, t: float, N: int, K: int, hbar: float,
                       radial: RadialMoments | None = None,
                       idx: IndexSet | None = None) -> CouplingBand:
    """Build the quadratic band and the anti-Wick tail band at time t.

    `symbol` is a ComplexSymbol; the generator is its Q = V - iA view.
    The kappa band couples |row - col| <= 2 with vanishing ground column;
    mu couples |row - col| <= deg(P_N) <= N and is exactly zero beyond.
    """
    from .dynamics import taylor_split
    from .ordering import to_public

    if K < 2 * N:
        raise BandOverflow(f"K = {K} below 2N = {2 * N}")
    d = symbol.d
    if idx is None:
        idx = IndexSet(d, K)
    point = traj.point(t)
    # --- quadratic part on an extended set, restricted after products
    ext = IndexSet(d, K + 2)
    hQ = (symbol.V.hess_internal(point.z) - 1j * symbol.A.hess_internal(point.z))
    gQ = (symbol.V.grad_internal(point.z) - 1j * symbol.A.grad_internal(point.z))
    vQ = complex(symbol.V.value_internal(point.z)[0] - 1j * symbol.A.value_internal(point.z)[0])
    Q2 = quadratic_operator_matrix(point.frame, point.z, vQ, gQ, hQ, hbar, ext)
    Dr = basis_drift_matrix(point, hbar, ext)
    T_ext = Q2 / (1j * hbar) - Dr
    sel = [ext.position[a] for a in idx.indices]
    T = T_ext[np.ix_(sel, sel)]
    leak = float(np.linalg.norm(np.delete(T_ext, sel, axis=0)[:, sel]))
    gauge = complex(T[idx.position[(0,) * d], idx.position[(0,) * d]])
    kappa = T - gauge * np.eye(len(idx))
    col0 = float(np.max(np.abs(kappa[:, idx.position[(0,) * d]])))
    # --- anti-Wick tail band
    mu = np.zeros((len(idx), len(idx)), dtype=complex)
    split = taylor_split(_QView(symbol), to_public(point.z), N)
    if split.tail:
        cp = CutoffPolynomial(2 * d, W=_cutoff_metric(point), terms={0: dict(split.tail)})
        table = moment_table(point.frame, N)
        aw = anti_wick_symbol(cp, table, N, hbar)
        Ft = symplectic_of_frame(point.frame) @ (-omega(d))  # F sigma with sigma = -Omega
        rotated = aw.compose_linear(Ft)
        if radial is None:
            radial = RadialMoments(hbar)
        zz = {}
        for j, poly in rotated.terms.items():
            zz[j] = _monomials_zzbar(poly, d)
        for ci, col in enumerate(idx.indices):
            for j, monos in zz.items():
                for (a, b), c in monos.items():
                    if c == 0:
                        continue
                    row = tuple(col[k] + a[k] - b[k] for k in range(d))
                    if min(row) < 0:
                        continue
                    # enforce the band |row - col|_1 <= 2N; contributions
                    # beyond come only from repeated cutoff derivatives and
                    # carry exp(-c/hbar)-small radial weights
                    if sum(abs(a[k] - b[k]) for k in range(d)) > 2 * N:
                        continue
                    ri = idx.position.get(row)
                    if ri is None:
                        continue
                    powers = tuple(col[k] + a[k] + row[k] + b[k] for k in range(d))
                    M = sum(powers)
                    rad = radial.moment(j, M + 2 * d - 1)
                    if rad == 0.0:
                        continue
                    log_ang = _log_angular(powers)
                    ln = 0.5 * (_log_m_norm(row, hbar) + _log_m_norm(col, hbar))
                    val = c * np.sign(rad) * np.exp(np.log(abs(rad)) + log_ang
                                                    + d * np.log(2 * np.pi) - ln)
                    mu[ri, ci] += val
        mu /= 1j * hbar
    return CouplingBand(t=t, gauge=gauge, kappa=kappa, mu=mu, idx=idx, hbar=hbar,
                        n_taylor=N, leakage=leak, kappa_column_residual=col0)


def _log_m_norm(alpha, hbar):
    out = 0.0
    for a in alpha:
        out += np.log(np.pi) + lgamma(a + 1) + (a + 1) * np.log(2 * hbar)
    return out


def _cutoff_metric(point) -> np.ndarray:
    """Metric of the cutoff argument |F_t^{-1}(z - z_t)|^2 = u.G u."""
    return point.G


class _QView:
    """Adapter presenting the generator Q = V - iA to taylor_split."""

    def __init__(self, symbol):
        self.symbol = symbol
        self.d = symbol.d
        self.max_order = symbol.max_order

    def deriv_internal(self, gamma, z_int):
        return self.symbol.q_deriv_internal(gamma, z_int)


def oscillator_matrix(frame: LagrangianFrame, z_center: np.ndarray, hbar: float,
                      idx: IndexSet, weights=None) -> np.ndarray:
    """Matrix of Op(H) = sum_j w_j Op((p_j^2 + q_j^2)/2) in the packet basis."""
    d = frame.d
    w = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    z = np.asarray(z_center, dtype=float)
    val = 0.0
    grad = np.zeros(2 * d)
    hess = np.zeros((2 * d, 2 * d))
    for j in range(d):
        val += 0.5 * w[j] * (z[j] ** 2 + z[d + j] ** 2)
        grad[j] += w[j] * z[j]
        grad[d + j] += w[j] * z[d + j]
        hess[j, j] += w[j]
        hess[d + j, d + j] += w[j]
    ext = IndexSet(d, idx.K + 2)
    M_ext = quadratic_operator_matrix(frame, z, val, grad, hess, hbar, ext)
    sel = [ext.position[a] for a in idx.indices]
    return M_ext[np.ix_(sel, sel)]
