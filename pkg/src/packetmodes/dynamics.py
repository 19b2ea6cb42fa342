"""Classical non-Hermitian flow.

The packet center follows the forward Hamiltonian flow of V with a metric
friction along grad A,

    dz/dt = Omega grad V(z) - G^{-1} grad A(z)          (momentum first),

coupled to the Riccati flow of the metric and the linearization S_t,

    dG/dt = d2V Omega G - G Omega d2V + d2A + G Omega d2A Omega G,
    dS/dt = Omega d2Q(z_t) S,   Q = V - iA,   S_0 = Id.

The frame is Z_t = S_t Z_0 N_t with N_t = ((1/2i) W* Omega W)^(-1/2),
W = S_t Z_0.  Scalar gauge:

    dLambda/dt = (q'.p - p'.q)/2 - V(z) + i A(z),
    drho/dt    = -(1/4) tr(G^{-1} d2A(z)),

so that the ground-state amplitude is exp(i Lambda/hbar + rho) with
|exp(i Lambda/hbar)| = exp(-int A / hbar) decaying in the damped region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import OrderUnavailable, PositivityLost, StepFailure
from .frames import LagrangianFrame, canonical_frame, make_frame
from .multiindex import mi_factorial, multi_indices, order
from .ordering import omega, to_internal, to_public
from .symbols import ComplexSymbol, SymbolModel


# ---------------------------------------------------------------------------
# harmonic oscillator flow


def oscillator_flow(z_pub, tau) -> np.ndarray:
    """Rotate each (x_j, xi_j) plane by angle tau_j (period 2 pi).

    Orientation fixed so that (x, xi) = (1, 0) goes to (0, -1) at tau = pi/2,
    matching integrate_flow on P = H.
    """
    z = np.atleast_2d(np.asarray(z_pub, dtype=float))
    d = z.shape[1] // 2
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (d,))
    x, xi = z[:, :d], z[:, d:]
    c, s = np.cos(tau), np.sin(tau)
    x_new = c * x + s * xi
    xi_new = -s * x + c * xi
    out = np.concatenate([x_new, xi_new], axis=1)
    return out[0] if np.asarray(z_pub).ndim == 1 else out


def oscillator_rotation(tau, d: int) -> np.ndarray:
    """Internal-ordering linearization of oscillator_flow (symplectic)."""
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (d,))
    R = np.zeros((2 * d, 2 * d))
    for j in range(d):
        c, s = np.cos(tau[j]), np.sin(tau[j])
        # internal (p, q): dp/dt = -q, dq/dt = p
        R[j, j] = c
        R[j, d + j] = -s
        R[d + j, j] = s
        R[d + j, d + j] = c
    return R


# ---------------------------------------------------------------------------
# finite-type constant


def finite_type_constant(V: SymbolModel, A: SymbolModel, z0_pub):
    """gamma0 = <Omega grad V, d2A Omega grad V> at z0, with hypothesis checks.

    Returns (gamma0, warnings).  A quadratic form in the flow direction, so
    the sign convention of Omega is immaterial.
    """
    z0 = to_internal(np.asarray(z0_pub, dtype=float))
    d = V.d
    O = omega(d)
    Xv = O @ V.grad_internal(z0)
    H = A.hess_internal(z0)
    gamma0 = float(Xv @ H @ Xv)
    warnings = []
    a0 = float(np.real(A.value_internal(z0)[0]))
    ga = A.grad_internal(z0)
    if abs(a0) > 1e-9:
        warnings.append(f"A(z0) = {a0:.3e} is not zero")
    if np.max(np.abs(ga)) > 1e-9:
        warnings.append(f"grad A(z0) has norm {np.max(np.abs(ga)):.3e}")
    if gamma0 <= 0:
        warnings.append("NotFiniteType: gamma0 <= 0")
    return gamma0, warnings


# ---------------------------------------------------------------------------
# Taylor splitting


@dataclass(frozen=True)
class TaylorSplit:
    """P = P2 + PN + RN around a center, internal ordering throughout."""

    z_center: np.ndarray        # internal
    value: complex
    gradient: np.ndarray        # (2d,) complex
    hessian: np.ndarray         # (2d, 2d) complex
    tail: dict                  # beta -> d^beta P / beta!, 3 <= |beta| <= N
    n_taylor: int
    _symbol: object
    _n_quad: int = 24

    def p2(self, z_int) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z_int, dtype=float))
        u = z - self.z_center
        return (
            self.value
            + u @ self.gradient
            + 0.5 * np.einsum("ni,ij,nj->n", u, self.hessian, u)
        )

    def pn(self, z_int) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z_int, dtype=float))
        u = z - self.z_center
        out = np.zeros(len(z), dtype=complex)
        for beta, c in self.tail.items():
            term = np.full(len(z), c, dtype=complex)
            for j, b in enumerate(beta):
                if b:
                    term = term * u[:, j] ** b
            out += term
        return out

    def rn(self, z_int) -> np.ndarray:
        """Integral-form remainder by Gauss-Legendre quadrature in s."""
        z = np.atleast_2d(np.asarray(z_int, dtype=float))
        u = z - self.z_center
        nodes, weights = np.polynomial.legendre.leggauss(self._n_quad)
        s = 0.5 * (nodes + 1.0)
        w = 0.5 * weights
        N = self.n_taylor
        out = np.zeros(len(z), dtype=complex)
        m = z.shape[1]
        for beta in multi_indices(m, N + 1):
            if order(beta) != N + 1:
                continue
            mono = np.ones(len(z))
            for j, b in enumerate(beta):
                if b:
                    mono = mono * u[:, j] ** b
            inner = np.zeros(len(z), dtype=complex)
            for si, wi in zip(s, w):
                pts = self.z_center + si * u
                inner += wi * (1 - si) ** N * self._symbol.deriv_internal(beta, pts)
            out += (N + 1) / mi_factorial(beta) * mono * inner
        return out


def taylor_split(symbol, z_center_pub, N: int, n_quad: int = 24) -> TaylorSplit:
    """Split a symbol near a center; symbol needs deriv_internal and d."""
    if getattr(symbol, "max_order", N + 1) < N + 1:
        raise OrderUnavailable(f"symbol supplies derivatives only to order {symbol.max_order}")
    z = to_internal(np.asarray(z_center_pub, dtype=float))
    m = 2 * symbol.d
    value = complex(symbol.deriv_internal((0,) * m, z)[0])
    grad = np.array(
        [complex(symbol.deriv_internal(_unit(m, j), z)[0]) for j in range(m)]
    )
    hess = np.empty((m, m), dtype=complex)
    for j in range(m):
        for k in range(j, m):
            gamma = [0] * m
            gamma[j] += 1
            gamma[k] += 1
            hess[j, k] = hess[k, j] = complex(symbol.deriv_internal(tuple(gamma), z)[0])
    tail = {}
    for beta in multi_indices(m, N):
        if order(beta) < 3:
            continue
        c = complex(symbol.deriv_internal(beta, z)[0]) / mi_factorial(beta)
        if c != 0:
            tail[beta] = c
    return TaylorSplit(
        z_center=z, value=value, gradient=grad, hessian=hess,
        tail=tail, n_taylor=N, _symbol=symbol, _n_quad=n_quad,
    )


def _unit(m, j):
    g = [0] * m
    g[j] = 1
    return tuple(g)


# ---------------------------------------------------------------------------
# trajectory integration


@dataclass(frozen=True)
class TrajectoryPoint:
    """All per-node data needed by the coupling assembly."""

    t: float
    z: np.ndarray             # internal (p, q)
    zdot: np.ndarray
    S: np.ndarray
    Sdot: np.ndarray
    G: np.ndarray             # Riccati metric
    N: np.ndarray
    Ndot: np.ndarray
    frame: LagrangianFrame    # Z_t = S_t Z0 N_t with tracked branch
    Zdot: np.ndarray
    Lambda: complex
    Lambda_dot: complex
    rho: float
    rho_dot: float

    @property
    def gauge_rate(self):
        """d/dt log of the scalar gauge, up to the 1/hbar on Lambda."""
        return self.Lambda_dot, self.rho_dot


class Trajectory:
    """Dense-output record of the coupled center/metric/linearization flow."""

    def __init__(self, symbol: ComplexSymbol, Z0: LagrangianFrame, sol_minus, sol_plus,
                 t_min: float, t_max: float, tol_flow: float, stats: dict):
        self.symbol = symbol
        self.Z0 = Z0
        self._sol_minus = sol_minus
        self._sol_plus = sol_plus
        self.t_min = t_min
        self.t_max = t_max
        self.tol_flow = tol_flow
        self.stats = stats
        self.d = Z0.d
        self._branch_grid = None

    # -- state access --------------------------------------------------

    @property
    def times(self) -> np.ndarray:
        ts = [-self._sol_minus.t[::-1], self._sol_plus.t] if self._sol_minus else [self._sol_plus.t]
        return np.unique(np.concatenate(ts))

    def _raw_state(self, t: float) -> np.ndarray:
        if t >= 0 or self._sol_minus is None:
            if t > self.t_max + 1e-12 or (self._sol_minus is None and t < -1e-12):
                raise ValueError(f"t = {t} outside trajectory range")
            return self._sol_plus.sol(min(t, self.t_max))
        if t < self.t_min - 1e-12:
            raise ValueError(f"t = {t} outside trajectory range")
        return self._sol_minus.sol(min(-t, -self.t_min))

    def point(self, t: float) -> TrajectoryPoint:
        d = self.d
        y = self._raw_state(t)
        z, S, G, Lam, rho = _unpack(y, d)
        # the flow is autonomous: physical derivatives come from the RHS
        # regardless of which integration branch stored the state
        dy = _rhs(0.0, y, self.symbol, d)
        zdot, Sdot, _, Lamdot, rhodot = _unpack_dot(dy, d)
        W = S @ self.Z0.Z
        O = omega(d)
        Y = (W.conj().T @ O @ W) / 2j
        Y = 0.5 * (Y + Y.conj().T)
        evals, vecs = np.linalg.eigh(Y)
        if np.min(evals) < 1e-14:
            raise PositivityLost(t)
        N = vecs @ np.diag(evals ** -0.5) @ vecs.conj().T
        # Ndot = -N Rdot N with Rdot solving the Sylvester equation in the Y basis
        A_h = self.symbol.A.hess_internal(z)
        Ydot = W.conj().T @ A_h @ W
        Yd = vecs.conj().T @ Ydot @ vecs
        sq = np.sqrt(evals)
        Rdot = Yd / (sq[:, None] + sq[None, :])
        Rdot = vecs @ Rdot @ vecs.conj().T
        Ndot = -N @ Rdot @ N
        Wdot = Sdot @ self.Z0.Z
        Zmat = W @ N
        Zdot = Wdot @ N + W @ Ndot
        branch = self._branch_at(t, W, N)
        frame = LagrangianFrame(Zmat[:d], Zmat[d:], 0.0, 0.0, branch)
        return TrajectoryPoint(
            t=t, z=z, zdot=zdot, S=S, Sdot=Sdot, G=G, N=N, Ndot=Ndot,
            frame=frame, Zdot=Zdot, Lambda=Lam, Lambda_dot=Lamdot,
            rho=rho, rho_dot=rhodot,
        )

    # -- continuous branch of det(Q_t)^(-1/2) ----------------------------

    def _ensure_branch_grid(self, n: int = 1024):
        if self._branch_grid is not None:
            return
        ts = np.linspace(self.t_min, self.t_max, n)
        args = np.empty(n)
        d = self.d
        for i, t in enumerate(ts):
            y = self._raw_state(t)
            _, S, _, _, _ = _unpack(y, d)
            W = S @ self.Z0.Z
            args[i] = np.angle(np.linalg.det(W[d:]))
        unwrapped = np.unwrap(args)
        # pin the grid so that its value at t = 0 is the principal argument
        i0 = int(np.argmin(np.abs(ts)))
        arg0 = np.angle(np.linalg.det(self.Z0.Q_block))
        self._branch_grid = (ts, unwrapped - unwrapped[i0] + arg0)

    def _branch_at(self, t: float, W: np.ndarray, N: np.ndarray) -> complex:
        """Continuously tracked det(Q_t)^(-1/2), matching Z0's sheet at t=0."""
        self._ensure_branch_grid()
        ts, phi_grid = self._branch_grid
        d = self.d
        detQw = np.linalg.det(W[d:])
        detN = float(np.real(np.linalg.det(N)))
        phi_ref = np.interp(t, ts, phi_grid)
        phi = np.angle(detQw) + 2 * np.pi * np.round((phi_ref - np.angle(detQw)) / (2 * np.pi))
        mag = np.abs(detQw) * detN
        D0 = np.linalg.det(self.Z0.Q_block)
        sheet = self.Z0.det_q_branch / (np.abs(D0) ** -0.5 * np.exp(-0.5j * np.angle(D0)))
        return complex(sheet * mag ** -0.5 * np.exp(-0.5j * phi))

    # -- consistency diagnostics ----------------------------------------

    def invariant_report(self, ts=None) -> dict:
        if ts is None:
            ts = np.linspace(self.t_min, self.t_max, 41)
        O = omega(self.d)
        sym = symp = cons = rho_two = 0.0
        posdef = np.inf
        for t in ts:
            p = self.point(t)
            G = p.G
            sym = max(sym, float(np.max(np.abs(G - G.T))))
            symp = max(symp, float(np.max(np.abs(G.T @ O @ G - O))))
            posdef = min(posdef, float(np.min(np.linalg.eigvalsh(G))))
            Z = p.frame.Z
            G_frame = O.T @ (Z @ Z.conj().T).real @ O
            cons = max(cons, float(np.max(np.abs(G - G_frame))))
            rho_two = max(rho_two, abs(p.rho - 0.5 * np.log(np.real(np.linalg.det(p.N)))))
        return {
            "symmetry": sym,
            "symplecticity": symp,
            "min_eig": posdef,
            "metric_consistency": cons,
            "rho_consistency": rho_two,
        }


def _pack(z, S, G, Lam, rho, d):
    m = 2 * d
    return np.concatenate([
        z, S.real.ravel(), S.imag.ravel(), G.ravel(),
        [Lam.real, Lam.imag, rho],
    ])


def _unpack(y, d):
    m = 2 * d
    z = y[:m]
    o = m
    Sr = y[o:o + m * m].reshape(m, m); o += m * m
    Si = y[o:o + m * m].reshape(m, m); o += m * m
    G = y[o:o + m * m].reshape(m, m); o += m * m
    Lam = complex(y[o], y[o + 1])
    rho = y[o + 2]
    return z, Sr + 1j * Si, G, Lam, rho


def _unpack_dot(dy, d):
    z, S, G, Lam, rho = _unpack(dy, d)
    return z, S, G, Lam, rho


def _rhs(t, y, symbol: ComplexSymbol, d: int) -> np.ndarray:
    z, S, G, _, _ = _unpack(y, d)
    O = omega(d)
    gV = symbol.V.grad_internal(z)
    gA = symbol.A.grad_internal(z)
    hV = symbol.V.hess_internal(z)
    hA = symbol.A.hess_internal(z)
    symbol.check_damping(z)
    zdot = O @ gV - np.linalg.solve(G, gA)
    hQ = hV - 1j * hA
    Sdot = O @ hQ @ S
    # metric response: damping sharpens the packet along grad^2 A directions
    Gdot = hV @ O @ G - G @ O @ hV + hA + G @ O @ hA @ O @ G
    p, q = z[:d], z[d:]
    pdot, qdot = zdot[:d], zdot[d:]
    V0 = float(np.real(symbol.V.value_internal(z)[0]))
    A0 = float(np.real(symbol.A.value_internal(z)[0]))
    Lamdot = 0.5 * (np.dot(qdot, p) - np.dot(pdot, q)) - V0 + 1j * A0
    rhodot = -0.25 * float(np.trace(np.linalg.solve(G, hA)))
    return _pack(zdot, Sdot, Gdot, complex(Lamdot), rhodot, d)


_orientation_ok = False


def _check_orientation():
    """Startup self-test: integrate_flow on P = H matches oscillator_flow."""
    global _orientation_ok
    if _orientation_ok:
        return
    from .symbols import harmonic_oscillator, zero_symbol

    P = ComplexSymbol(harmonic_oscillator(1), zero_symbol(1))
    traj = _integrate(P, np.array([0.0, 1.0]), canonical_frame(1), 0.0, np.pi / 2, 1e-10)
    z_end = to_public(traj.point(np.pi / 2).z)
    ref = oscillator_flow(np.array([1.0, 0.0]), np.pi / 2)
    if np.max(np.abs(z_end - ref)) > 1e-8:
        raise AssertionError("orientation self-test failed: flow does not match oscillator")
    _orientation_ok = True


def integrate_flow(P: ComplexSymbol, z0_pub, Z0: LagrangianFrame | None = None,
                   t_max: float = 0.5, t_min: float | None = None,
                   tol_flow: float = 1e-10) -> Trajectory:
    """Integrate the coupled flow over [t_min, t_max] (t_min defaults to -t_max)."""
    _check_orientation()
    if Z0 is None:
        Z0 = canonical_frame(P.d)
    if t_min is None:
        t_min = -t_max
    z0 = to_internal(np.asarray(z0_pub, dtype=float))
    return _integrate(P, z0, Z0, t_min, t_max, tol_flow)


def _integrate(P: ComplexSymbol, z0_int, Z0: LagrangianFrame, t_min, t_max, tol_flow):
    d = P.d
    O = omega(d)
    Z = Z0.Z
    G0 = O.T @ (Z @ Z.conj().T).real @ O
    y0 = _pack(z0_int, np.eye(2 * d, dtype=complex), G0, 0.0 + 0.0j, 0.0, d)

    def posdef_event(t, y):
        _, _, G, _, _ = _unpack(y, d)
        return float(np.min(np.linalg.eigvalsh(0.5 * (G + G.T)))) - 1e-10

    posdef_event.terminal = True
    posdef_event.direction = -1

    def run(sign, t_end):
        if t_end == 0.0:
            return None
        rhs = lambda t, y: sign * _rhs(t, y, P, d)
        sol = solve_ivp(
            rhs, (0.0, abs(t_end)), y0, method="DOP853",
            rtol=tol_flow, atol=tol_flow, dense_output=True, events=posdef_event,
        )
        if sol.status == 1:  # event: positivity lost
            raise PositivityLost(sign * float(sol.t_events[0][0]))
        if not sol.success:
            raise StepFailure(sol.message)
        return sol

    sol_plus = run(+1.0, t_max if t_max > 0 else 1e-12)
    sol_minus = run(-1.0, t_min) if t_min < 0 else None
    stats = {
        "nfev_plus": sol_plus.nfev if sol_plus else 0,
        "nfev_minus": sol_minus.nfev if sol_minus else 0,
    }
    return Trajectory(P, Z0, sol_minus, sol_plus, min(t_min, 0.0), max(t_max, 0.0),
                      tol_flow, stats)
