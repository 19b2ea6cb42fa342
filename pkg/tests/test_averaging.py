import numpy as np
import pytest

from packetmodes.averaging import (
    average,
    diophantine_check,
    energy_lattice,
    frequency_vector,
    resonant_average_residual,
    solve_cohomological,
    time_average_periodic,
    torus_fourier,
)
from packetmodes.dynamics import oscillator_flow
from packetmodes.symbols import harmonic_oscillator, mode_energy, polynomial


def test_frequency_vector_resonant():
    fv = frequency_vector([1.0, 1.0], kmax=8)
    assert fv.d_omega == 1
    assert all(abs(np.dot(k, fv.omega)) < 1e-12 for k in fv.resonance_basis)
    fv2 = frequency_vector([1.0, np.sqrt(2)], kmax=8)
    assert fv2.d_omega == 2
    assert len(fv2.resonance_basis) == 0


def test_average_of_x1_squared_is_H1():
    # d=2, omega=(1,1): I_{x1^2} = H1
    a = polynomial(2, {(2, 0, 0, 0): 1.0})
    H1 = mode_energy(2, 0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = rng.standard_normal(4)
        got = average(a, z, [1.0, 1.0], kmax=8)
        expect = float(np.real(H1.value(z[None, :])[0]))
        assert abs(got - expect) < 1e-10


def test_average_of_H_is_H():
    H = harmonic_oscillator(2)
    z = np.array([0.3, -0.7, 0.2, 0.9])
    got = average(H, z, [1.0, 1.0], kmax=6)
    expect = float(np.real(H.value(z[None, :])[0]))
    assert abs(got - expect) < 1e-10


def test_average_x1x2_nonresonant_for_1_2():
    a = polynomial(2, {(1, 1, 0, 0): 1.0})
    z = np.array([0.8, -0.5, 0.1, 0.6])
    got = average(a, z, [1.0, 2.0], kmax=8)
    ref = time_average_periodic(a, z, omega=[1.0, 2.0], period=2 * np.pi, n=512)
    assert abs(got) < 1e-10
    assert abs(ref) < 1e-10


def test_periodic_route_matches_module_route():
    a = polynomial(2, {(2, 0, 0, 0): 1.0, (1, 1, 0, 0): 0.5, (0, 0, 1, 1): -0.3})
    z = np.array([0.4, 0.2, -0.6, 0.5])
    module_route = average(a, z, [1.0, 1.0], kmax=10)
    time_route = time_average_periodic(a, z, n=1024)
    assert abs(module_route - time_route) < 1e-10


def test_average_is_projection():
    a = polynomial(2, {(2, 0, 0, 0): 1.0, (1, 0, 0, 1): 0.7})

    class Avg:
        d = 2
        def value(self, pts):
            return np.array([average(a, z, [1.0, 1.0], kmax=8, check_resolution=False)
                             for z in np.atleast_2d(pts)])

    rng = np.random.default_rng(1)
    for _ in range(3):
        z = rng.standard_normal(4)
        once = average(a, z, [1.0, 1.0], kmax=8)
        twice = average(Avg(), z, [1.0, 1.0], kmax=8, check_resolution=False)
        assert abs(once - twice) < 1e-8


def test_average_invariant_along_flow():
    a = polynomial(2, {(2, 0, 0, 0): 1.0, (1, 1, 0, 0): -0.4})
    rng = np.random.default_rng(2)
    eps = 1e-5
    for _ in range(5):
        z = rng.standard_normal(4) * 0.8
        f = lambda t: np.real(average(a, oscillator_flow(z, np.full(2, t)),
                                      [1.0, 1.0], kmax=8, check_resolution=False))
        deriv = (f(eps) - f(-eps)) / (2 * eps)
        assert abs(deriv) < 1e-8


def _directional_derivative(f, z, omega, eps=1e-4):
    """(d/dt) f(Phi_{t omega}(z)) at t = 0 by 4th-order central differences."""
    om = np.asarray(omega, dtype=float)
    vals = []
    for k in (-2, -1, 1, 2):
        vals.append(f(oscillator_flow(z, k * eps * om)))
    return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * eps)


def test_cohomological_zero():
    zero = polynomial(2, {})
    f = solve_cohomological(zero, [1.0, 1.0], kmax=6)
    assert abs(f(np.array([0.5, 0.2, -0.1, 0.4]))[0]) < 1e-14


def test_cohomological_residual_resonant_case():
    # g = x1^2 - H1 has zero average under omega = (1, 1)
    g = polynomial(2, {(2, 0, 0, 0): 1.0,
                       (0, 0, 1, 0): 0.0})
    H1 = mode_energy(2, 0)
    gm = polynomial(2, dict(g.coefficients))
    for k, v in H1.coefficients.items():
        gm.coefficients[k] = gm.coefficients.get(k, 0.0) - v
    assert resonant_average_residual(gm, [1.0, 1.0],
                                     np.random.default_rng(3).standard_normal((5, 4)),
                                     kmax=8) < 1e-9
    f = solve_cohomological(gm, [1.0, 1.0], kmax=8)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        z = rng.standard_normal(4)
        z *= min(1.0, 2.0 / np.linalg.norm(z))
        lhs = _directional_derivative(lambda w: float(np.real(f(w)[0])), z, [1.0, 1.0])
        rhs = float(np.real(gm.value(z[None, :])[0]))
        worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-8


def test_cohomological_solution_has_zero_average():
    g = polynomial(2, {(1, 0, 0, 1): 1.0})  # x1 xi2: nonresonant under (1,1)?
    f = solve_cohomological(g, [1.0, 1.0], kmax=8)

    class F:
        d = 2
        def value(self, pts):
            return np.real(f(pts))

    rng = np.random.default_rng(5)
    for _ in range(3):
        z = rng.standard_normal(4)
        assert abs(average(F(), z, [1.0, 1.0], kmax=8, check_resolution=False)) < 1e-8


def test_cohomological_diophantine_frequency():
    g = polynomial(2, {(1, 1, 0, 0): 1.0})  # x1 x2, nonresonant for (1, sqrt 2)
    om = [1.0, np.sqrt(2.0)]
    f = solve_cohomological(g, om, kmax=12)
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        z = rng.standard_normal(4)
        z *= min(1.0, 2.0 / np.linalg.norm(z))
        lhs = _directional_derivative(lambda w: float(np.real(f(w)[0])), z, om)
        rhs = float(np.real(g.value(z[None, :])[0]))
        worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-8


def test_diophantine_check_integers():
    s, gamma, _ = diophantine_check([1.0, 1.0], 8)
    assert np.isclose(s, 1.0) and gamma == 0.0
    s2, g2, _ = diophantine_check([1.0, 2.0], 10)
    assert np.isclose(s2, 1.0) and g2 == 0.0


def test_diophantine_golden_ratio_fibonacci():
    phi = (1 + np.sqrt(5)) / 2
    s, gamma, k = diophantine_check([1.0, phi], 30)
    # binding k follows consecutive Fibonacci pairs (up to sign)
    fib = [1, 1, 2, 3, 5, 8, 13, 21, 34]
    pairs = {(a, b) for a, b in zip(fib, fib[1:])}
    ka, kb = abs(k[0]), abs(k[1])
    assert (kb, ka) in pairs or (ka, kb) in pairs


def test_energy_lattice_rules():
    # H_j = 1/2, hbar = 0.1: H/hbar - 1/2 = 4.5 -> round-half-up N = 5
    E = energy_lattice([1.0, 0.0], 0.1, [1.0])
    assert np.isclose(E[0], 0.1 * 5.5)
    # z0 = 0: N = 0
    E0 = energy_lattice([0.0, 0.0], 0.05, [1.0])
    assert np.isclose(E0[0], 0.025)
    # lattice distance
    z0 = np.array([1.0, 1.0, 0.0, 0.0])
    for hbar in (0.01, 0.004):
        E = energy_lattice(z0, hbar, [1.0, 1.0])
        assert abs(np.dot([1, 1], E) - 1.0) <= 2 * hbar
    # unclipped indices stay within hbar of the classical action
    Egen = energy_lattice([0.9, 0.3, 0.2, -0.4], 0.02, [1.0, 1.0])
    H = 0.5 * np.array([0.9 ** 2 + 0.2 ** 2, 0.3 ** 2 + 0.4 ** 2])
    assert np.max(np.abs(Egen - H)) <= 0.01 + 1e-12
