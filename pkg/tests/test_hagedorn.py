import numpy as np
import pytest

from packetmodes.errors import IndexOutOfRange
from packetmodes.frames import canonical_frame, normalize_frame
from packetmodes.hagedorn import (
    WavePacketBasis,
    eval_excited_state,
    eval_ground_state,
    eval_packet,
    hermite_table,
    ladder_apply,
    lifted_frame,
    line_l1_norm,
    packet_fourier_transform,
    raise_polynomial,
    wigner_lift_eval,
)
from packetmodes.multiindex import mi_factorial, multi_indices, order
from packetmodes.oracle import gram_matrix, sample, wigner_grid

from helpers import random_frame


Z0 = canonical_frame(1)


def std_basis(hbar=1.0, center=None, cutoff=12, d=1):
    frame = canonical_frame(d)
    if center is None:
        center = np.zeros(2 * d)
    return WavePacketBasis.at(frame, np.asarray(center, dtype=float), hbar, cutoff)


def test_ground_state_peak_value():
    b = std_basis()
    val = eval_ground_state(b, [[0.0]])[0]
    assert np.isclose(val, np.pi ** -0.25, atol=1e-12)
    assert np.isclose(abs(val), 0.75112554, atol=1e-7)


def test_ground_state_translation_invariance():
    b = std_basis(center=(2.0, 0.0))  # (x, xi) = (2, 0)
    val = eval_ground_state(b, [[2.0]])[0]
    assert np.isclose(abs(val), np.pi ** -0.25, atol=1e-12)


def test_ground_state_l2_norm_squeezed_small_hbar():
    f, _ = normalize_frame(np.array([[2j], [0.5]]))
    b = WavePacketBasis.at(f, [0.3, -0.2], 0.01)
    x = np.linspace(-1.5, 2.1, 4001)[:, None]
    vals = eval_ground_state(b, x)
    norm = np.trapezoid(np.abs(vals) ** 2, x[:, 0])
    assert abs(norm - 1.0) < 1e-8


def test_first_excited_matches_hermite():
    b = std_basis()
    val = eval_excited_state(b, (1,), [[1.0]])[0]
    expect = np.sqrt(2.0) * 1.0 * np.pi ** -0.25 * np.exp(-0.5)
    assert np.isclose(val, expect, atol=1e-12)


def test_zeroth_excited_is_ground():
    b = std_basis(hbar=0.37, center=(0.4, -1.1))
    x = np.linspace(-1, 2, 7)[:, None]
    assert np.allclose(
        eval_excited_state(b, (0,), x), eval_ground_state(b, x), atol=1e-14
    )


def test_cutoff_enforced():
    b = std_basis(cutoff=3)
    with pytest.raises(IndexOutOfRange):
        eval_excited_state(b, (4,), [[0.0]])


@pytest.mark.parametrize("hbar", [1.0, 0.01])
def test_gram_identity_1d(hbar):
    b = std_basis(hbar=hbar, center=(0.1, -0.3))
    alphas = [(n,) for n in range(9)]
    G = gram_matrix(b, alphas, n_nodes=160)
    assert np.max(np.abs(G - np.eye(9))) < 1e-8


def test_gram_identity_2d_random_frame():
    rng = np.random.default_rng(5)
    f = random_frame(2, rng, scale=0.4)
    b = WavePacketBasis.at(f, [0.2, -0.1, 0.05, 0.3], 1.0)
    alphas = [a for a in multi_indices(2, 4)]
    G = gram_matrix(b, alphas, n_nodes=60)
    assert np.max(np.abs(G - np.eye(len(alphas)))) < 1e-8


def test_gram_entry_2d_experiment():
    b = std_basis(d=2)
    G = gram_matrix(b, [(1, 1)], n_nodes=80)
    assert abs(G[0, 0] - 1.0) < 1e-8


def test_recurrence_matches_ladder_differential_path():
    """p_alpha from the table == repeated raising as a differential operator."""
    rng = np.random.default_rng(9)
    for d in (1, 2):
        f = random_frame(d, rng, scale=0.5)
        table = hermite_table(WavePacketBasis(f, np.zeros(2 * d), 1.0), 6)
        for alpha in multi_indices(d, 6):
            poly = {(0,) * d: 1.0 + 0j}
            for j in range(d):
                for _ in range(alpha[j]):
                    poly = raise_polynomial(f, 1.0, poly, j)
            # poly == p_alpha / sqrt(2^|a|); the 1/sqrt(a!) is shared
            ref = table.polynomial(alpha)
            scale = 1.0 / np.sqrt(2.0 ** order(alpha))
            for beta in set(ref) | set(poly):
                assert abs(poly.get(beta, 0.0) - scale * ref.get(beta, 0.0)) < 1e-10


def test_coefficient_bound_holds():
    rng = np.random.default_rng(13)
    for d in (1, 2):
        f = random_frame(d, rng)
        table = hermite_table(WavePacketBasis(f, np.zeros(2 * d), 1.0), 8)
        assert table.bound_margin() <= 1.0 + 1e-12


def test_ladder_apply_basics():
    e0 = {(0,): 1.0}
    lowered, _ = ladder_apply("lower", 0, e0, cutoff=8)
    assert lowered == {}
    c = dict(e0)
    for _ in range(3):
        c, leak = ladder_apply("raise", 0, c, cutoff=8)
        assert leak == 0.0
    assert np.isclose(c[(3,)], np.sqrt(mi_factorial((3,))), atol=1e-14)
    up, _ = ladder_apply("raise", 0, {(2,): 1.0}, cutoff=8)
    down, _ = ladder_apply("lower", 0, up, cutoff=8)
    assert np.isclose(down[(2,)], 3.0)  # (alpha_j + 1) e_alpha


def test_ladder_leakage_reported():
    c = {(8,): 1.0}
    out, leak = ladder_apply("raise", 0, c, cutoff=8)
    assert out == {}
    assert np.isclose(leak, 3.0)  # sqrt(alpha_j + 1)


def test_packet_evaluation_linear():
    b = std_basis(hbar=0.5)
    x = np.linspace(-2, 2, 11)[:, None]
    coeffs = {(0,): 0.3 + 0.1j, (2,): -0.7j}
    direct = 0.3 + 0.1j
    vals = eval_packet(b, coeffs, x)
    ref = (0.3 + 0.1j) * eval_excited_state(b, (0,), x) - 0.7j * eval_excited_state(b, (2,), x)
    assert np.allclose(vals, ref, atol=1e-13)


# ---------------------------------------------------------------------------
# Fourier transform


def _ft_oracle(basis, alpha, xi_pts, x_extent=14.0, n=6001):
    """Direct quadrature of the hbar-scaled Fourier integral (d=1)."""
    hbar = basis.hbar
    x = np.linspace(-x_extent, x_extent, n)
    vals = eval_excited_state(basis, alpha, x[:, None])
    out = []
    for xi in xi_pts[:, 0]:
        ker = np.exp(-1j * x * xi / hbar)
        out.append(np.trapezoid(vals * ker, x) / np.sqrt(2 * np.pi * hbar))
    return np.array(out)


@pytest.mark.parametrize("alpha", [(0,), (1,), (3,)])
def test_fourier_transform_matches_quadrature(alpha):
    rng = np.random.default_rng(2)
    f = random_frame(1, rng, scale=0.4)
    b = WavePacketBasis.at(f, [0.3, -0.4], 1.0)
    ft = packet_fourier_transform(b, alpha)
    xi = np.linspace(-2, 2, 9)[:, None]
    ref = _ft_oracle(b, alpha, xi)
    assert np.max(np.abs(ft(xi) - ref)) < 1e-8


def test_fourier_at_zero_equals_integral():
    b = std_basis()
    ft = packet_fourier_transform(b, (0,))
    x = np.linspace(-10, 10, 4001)
    integral = np.trapezoid(eval_ground_state(b, x[:, None]), x) / np.sqrt(2 * np.pi)
    assert np.isclose(ft(np.zeros((1, 1)))[0], integral, atol=1e-10)


def test_fourier_l1_growth_bounded():
    b = std_basis(cutoff=10)
    vals = []
    for n in range(1, 11):
        ft = packet_fourier_transform(b, (n,))
        vals.append(line_l1_norm(ft, [1.0]) ** (1.0 / n))
    assert max(vals) < 8.0  # |alpha|-th root stays bounded


# ---------------------------------------------------------------------------
# Wigner lift


def test_lift_is_normalized_frame():
    rng = np.random.default_rng(4)
    Z1 = random_frame(1, rng)
    Z2 = random_frame(1, rng)
    lf = lifted_frame(Z1, Z2)
    assert lf.Zcal.isotropy_residual < 1e-10
    assert lf.Zcal.normalization_residual < 1e-10


def test_lift_equal_frames_metric_real_unit_det():
    rng = np.random.default_rng(8)
    Z = random_frame(1, rng)
    lf = lifted_frame(Z, Z)
    assert np.max(np.abs(lf.mixed_metric.imag)) < 1e-10
    assert np.isclose(np.linalg.det(lf.mixed_metric.real), 1.0, atol=1e-10)


def test_ground_lift_peak_and_mass():
    # Z0, hbar=1: W(0,0) = 1/pi; integral over phase space = 1
    val = wigner_lift_eval(Z0, Z0, (0,), (0,), 1.0, [[0.0, 0.0]])[0]
    assert np.isclose(val, 1 / np.pi, atol=1e-12)
    n = 121
    xs = np.linspace(-4.5, 4.5, n)
    X, XI = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([X.ravel(), XI.ravel()], axis=-1)
    vals = wigner_lift_eval(Z0, Z0, (0,), (0,), 1.0, pts).reshape(n, n)
    mass = np.trapezoid(np.trapezoid(vals, xs, axis=1), xs)
    assert abs(mass - 1.0) < 1e-8


@pytest.mark.parametrize("ab", [((0,), (0,)), ((1,), (0,)), ((2,), (1,)), ((3,), (3,))])
def test_lift_matches_grid_wigner(ab):
    alpha, beta = ab
    rng = np.random.default_rng(17)
    Z1 = random_frame(1, rng, scale=0.3)
    Z2 = random_frame(1, rng, scale=0.3)
    hbar = 0.8
    b1 = WavePacketBasis(Z1, np.array([0.2, 0.1]), hbar)   # internal (p, q)
    b2 = WavePacketBasis(Z2, np.array([-0.1, 0.3]), hbar)
    axes = (np.linspace(-6.5, 6.5, 2081),)
    g1 = sample(lambda p: eval_excited_state(b1, alpha, p), axes, hbar)
    g2 = sample(lambda p: eval_excited_state(b2, beta, p), axes, hbar)
    x_out = np.linspace(-1.2, 1.4, 7)
    xi_out = np.linspace(-1.0, 1.1, 7)
    ref = wigner_grid(g1, g2, x_out, xi_out)
    pts = np.stack(np.meshgrid(x_out, xi_out, indexing="ij"), axis=-1).reshape(-1, 2)
    # centers: public = (q, p)
    z1 = np.array([b1.q[0], b1.p[0]])
    z2 = np.array([b2.q[0], b2.p[0]])
    vals = wigner_lift_eval(Z1, Z2, alpha, beta, hbar, pts, z1, z2).reshape(7, 7)
    assert np.max(np.abs(vals - ref)) < 2e-6
