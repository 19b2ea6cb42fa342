import numpy as np
import pytest

from packetmodes.dynamics import (
    finite_type_constant,
    integrate_flow,
    oscillator_flow,
    oscillator_rotation,
    taylor_split,
)
from packetmodes.frames import canonical_frame
from packetmodes.ordering import to_public
from packetmodes.symbols import (
    ComplexSymbol,
    from_expression,
    harmonic_oscillator,
    mode_energy,
    polynomial,
    zero_symbol,
)

# shared desk symbols: V = xi, A = x^2 in d = 1 (public ordering (x, xi))
V_XI = polynomial(1, {(0, 1): 1.0})
A_X2 = polynomial(1, {(2, 0): 1.0})


def test_oscillator_flow_identity_and_quarter_turn():
    z = np.array([1.0, 0.0])
    assert np.allclose(oscillator_flow(z, 0.0), z)
    assert np.allclose(oscillator_flow(z, np.pi / 2), [0.0, -1.0], atol=1e-15)


def test_oscillator_flow_preserves_mode_energies():
    rng = np.random.default_rng(0)
    z = rng.standard_normal(4)
    tau = rng.uniform(0, 2 * np.pi, 2)
    H = mode_energy(2, 0)
    out = oscillator_flow(z, tau)
    for j in range(2):
        Hj = mode_energy(2, j)
        assert np.isclose(
            np.real(Hj.value(out[None, :])[0]), np.real(Hj.value(z[None, :])[0]), atol=1e-13
        )


def test_oscillator_rotation_matches_flow():
    rng = np.random.default_rng(1)
    z = rng.standard_normal(4)
    tau = np.array([0.7, -0.4])
    from packetmodes.ordering import to_internal

    R = oscillator_rotation(tau, 2)
    assert np.allclose(
        R @ to_internal(z), to_internal(oscillator_flow(z, tau)), atol=1e-14
    )


def test_oscillator_flow_matches_integrate_flow():
    P = ComplexSymbol(harmonic_oscillator(1))
    traj = integrate_flow(P, [1.0, 0.0], t_max=2 * np.pi, tol_flow=1e-12)
    z_end = to_public(traj.point(2 * np.pi).z)
    assert np.max(np.abs(z_end - [1.0, 0.0])) < 1e-8
    for t in (0.5, 1.5, 4.0):
        assert np.max(np.abs(to_public(traj.point(t).z) - oscillator_flow([1.0, 0.0], t))) < 1e-8
    # G stays the identity, rho stays 0
    p = traj.point(3.0)
    assert np.max(np.abs(p.G - np.eye(2))) < 1e-9
    assert abs(p.rho) < 1e-10
    assert abs(p.Lambda.imag) < 1e-10


def test_finite_type_constant_desk_scenario():
    g0, warns = finite_type_constant(V_XI, A_X2, [0.0, 0.0])
    assert np.isclose(g0, 2.0, atol=1e-12)
    assert warns == []


def test_finite_type_constant_flat_direction():
    # A = xi^2 has no growth along the flow of V = xi
    A = polynomial(1, {(0, 2): 1.0})
    g0, warns = finite_type_constant(V_XI, A, [0.0, 0.0])
    assert abs(g0) < 1e-12
    assert any("NotFiniteType" in w for w in warns)


def test_finite_type_constant_2d():
    V = polynomial(2, {(0, 0, 1, 0): 1.0})       # xi_1
    A = polynomial(2, {(2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1.0})  # x1^2 + x2^2
    g0, _ = finite_type_constant(V, A, np.zeros(4))
    assert np.isclose(g0, 2.0, atol=1e-12)


def test_finite_type_invariant_under_constant_shift():
    V2 = polynomial(1, {(0, 1): 1.0, (0, 0): 3.7})
    g0a, _ = finite_type_constant(V_XI, A_X2, [0.0, 0.0])
    g0b, _ = finite_type_constant(V2, A_X2, [0.0, 0.0])
    assert np.isclose(g0a, g0b, atol=1e-14)


def test_initial_derivatives_desk_scenario():
    P = ComplexSymbol(V_XI, A_X2)
    traj = integrate_flow(P, [0.0, 0.0], t_max=0.5, t_min=-0.4, tol_flow=1e-10)
    p0 = traj.point(0.0)
    # zdot(0) = (1, 0) in (x, xi)
    zdot_pub = to_public(p0.zdot)
    assert np.max(np.abs(zdot_pub - [1.0, 0.0])) < 1e-8
    # For the forward damped evolution the x-width sharpens: the exact
    # quadratic model has B_t = i(1 + 2t), so G(t) = diag(1/(1+2t), 1+2t)
    # internally and Gdot(0) = diag(-2, 2) in (p, q) = diag(2, -2) in (x, xi).
    eps = 1e-5
    Gp = traj.point(eps).G
    Gm = traj.point(-eps).G
    Gdot_int = (Gp - Gm) / (2 * eps)
    assert np.max(np.abs(Gdot_int - np.diag([-2.0, 2.0]))) < 1e-6
    # and the metric follows the exact solution over the whole window
    t = 0.35
    Gt = traj.point(t).G
    assert np.max(np.abs(Gt - np.diag([1 / (1 + 2 * t), 1 + 2 * t]))) < 1e-8


def test_flow_invariants_desk_scenario():
    # the exact metric of this scenario degenerates at t = -1/2 (backward
    # caustic of the damped squeeze), so the maximal window stops there
    from packetmodes.errors import PositivityLost

    P = ComplexSymbol(V_XI, A_X2)
    with pytest.raises(PositivityLost):
        integrate_flow(P, [0.0, 0.0], t_max=0.5, tol_flow=1e-10).point(-0.5)
    traj = integrate_flow(P, [0.0, 0.0], t_max=0.5, t_min=-0.45, tol_flow=1e-10)
    rep = traj.invariant_report(np.linspace(-0.45, 0.5, 41))
    assert rep["symmetry"] < 1e-8
    assert rep["symplecticity"] < 1e-8
    assert rep["min_eig"] > 0
    assert rep["metric_consistency"] < 1e-8
    assert rep["rho_consistency"] < 1e-9


def test_selfadjoint_degeneration():
    P = ComplexSymbol(V_XI, zero_symbol(1))
    traj = integrate_flow(P, [0.3, -0.2], t_max=0.5)
    for t in np.linspace(-0.5, 0.5, 11):
        p = traj.point(t)
        assert abs(p.rho) < 1e-9
        assert abs(p.Lambda.imag) < 1e-9


def test_damping_accumulates_forward():
    from scipy.integrate import quad

    P = ComplexSymbol(V_XI, A_X2)
    traj = integrate_flow(P, [0.0, 0.0], t_max=0.5, t_min=-0.4, tol_flow=1e-12)
    lam = traj.point(0.4).Lambda
    # Im Lambda = int_0^t A(z_s) ds >= 0, so |exp(i Lambda/hbar)| <= 1 forward
    assert lam.imag > 0
    # exact frictioned center: q_s = (s + s^2)/(1 + 2s)
    ref, _ = quad(lambda s: ((s + s * s) / (1 + 2 * s)) ** 2, 0.0, 0.4)
    assert np.isclose(lam.imag, ref, atol=1e-9)


def test_branch_continuity_oscillator():
    # det Q_t = e^{it} for the rotating canonical frame: branch e^{-it/2}
    P = ComplexSymbol(harmonic_oscillator(1))
    traj = integrate_flow(P, [1.0, 0.0], t_max=2 * np.pi, tol_flow=1e-12)
    for t in (0.5, 2.0, np.pi, 5.0, 2 * np.pi):
        b = traj.point(t).frame.det_q_branch
        assert abs(b - np.exp(-0.5j * t)) < 1e-8
    # after a full period the Maslov sheet has flipped
    assert abs(traj.point(2 * np.pi).frame.det_q_branch + 1.0) < 1e-8


def test_taylor_split_quadratic_exact():
    P = ComplexSymbol(V_XI, A_X2)
    split = taylor_split(P, [0.2, -0.1], N=4)
    assert split.tail == {}
    z = np.array([[0.3, 0.25]])  # internal (p, q)
    total = split.p2(z) + split.pn(z) + split.rn(z)
    direct = P.deriv_internal((0, 0), z)
    assert np.max(np.abs(total - direct)) < 1e-12


def test_taylor_split_cubic_exact():
    sym = from_expression(1, "x0**3")
    split = taylor_split(sym, [0.0, 0.0], N=3)
    z = np.array([[0.0, 0.4]])  # internal: q = 0.4
    assert abs(split.p2(z)[0]) < 1e-14
    assert np.isclose(split.pn(z)[0], 0.4 ** 3, atol=1e-14)
    assert abs(split.rn(z)[0]) < 1e-14


def test_taylor_split_sin_remainder():
    sym = from_expression(1, "sin(x0)", max_order=8)
    split = taylor_split(sym, [0.0, 0.0], N=3)
    z = np.array([[0.0, 0.1]])
    lhs = sym.deriv_internal((0, 0), z)[0] - split.p2(z)[0] - split.pn(z)[0]
    assert abs(lhs - split.rn(z)[0]) < 1e-12


def test_taylor_reconstruction_random_points():
    sym = from_expression(1, "sin(x0)*cos(xi0)", max_order=9)
    split = taylor_split(sym, [0.3, -0.2], N=4)
    rng = np.random.default_rng(2)
    z = split.z_center + 0.1 * rng.standard_normal((20, 2))
    total = split.p2(z) + split.pn(z) + split.rn(z)
    direct = sym.deriv_internal((0, 0), z)
    assert np.max(np.abs(total - direct)) < 1e-9
