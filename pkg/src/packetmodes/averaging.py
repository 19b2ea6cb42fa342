"""Classical averaging along the harmonic-oscillator flow.

Averages, torus Fourier data, the cohomological equation {H, f} = g (with
{H, f} realized as the derivative along oscillator_flow), an empirical
Diophantine check, and the eigenvalue-lattice selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ResolutionTooLow, SmallDivisor
from .dynamics import oscillator_flow

SHELL_DECAY_GATE = 1e-8


@dataclass(frozen=True)
class FrequencyVector:
    """omega with its resonance module and effective torus dimension."""

    omega: np.ndarray
    resonance_basis: np.ndarray   # (r, d) integer rows spanning k.omega = 0
    d_omega: int
    kmax: int

    @property
    def d(self) -> int:
        return len(self.omega)


def frequency_vector(omega, kmax: int = 16) -> FrequencyVector:
    om = np.asarray(omega, dtype=float)
    d = len(om)
    found = []
    for k in product(range(-kmax, kmax + 1), repeat=d):
        if all(v == 0 for v in k):
            continue
        if abs(np.dot(k, om)) <= 1e-12:
            found.append(k)
    if found:
        M = np.array(found, dtype=float)
        rank = np.linalg.matrix_rank(M, tol=1e-9)
        # reduce to a basis by greedy rank growth
        basis = []
        for row in found:
            cand = np.array(basis + [row], dtype=float)
            if np.linalg.matrix_rank(cand, tol=1e-9) > len(basis):
                basis.append(row)
            if len(basis) == rank:
                break
        B = np.array(basis, dtype=int)
    else:
        B = np.zeros((0, d), dtype=int)
        rank = 0
    return FrequencyVector(omega=om, resonance_basis=B, d_omega=d - rank, kmax=kmax)


def _torus_samples(d: int, n: int) -> np.ndarray:
    taus = [np.arange(n) * (2 * np.pi / n)] * d
    mesh = np.meshgrid(*taus, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class TorusFourierData:
    """Fourier coefficients a_k(z) of tau -> a(Phi_z(tau)), |k|_inf <= kmax."""

    z: np.ndarray                 # public (x, xi)
    coefficients: dict            # k tuple -> complex, convention a_k = FFT/N^d
    kmax: int
    shell_decay: float

    def conjugate_symmetry_residual(self) -> float:
        worst = 0.0
        for k, v in self.coefficients.items():
            mk = tuple(-ki for ki in k)
            if mk in self.coefficients:
                worst = max(worst, abs(np.conj(self.coefficients[mk]) - v))
        return worst


def _eval_symbol(a, pts):
    if hasattr(a, "value"):
        return np.real(a.value(pts))
    return np.asarray(a(pts), dtype=float)


def _flow_many_taus(z: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Phi_z(tau) vectorized over a batch of torus angles."""
    d = len(z) // 2
    x, xi = z[:d], z[d:]
    c, s = np.cos(taus), np.sin(taus)
    return np.concatenate([c * x + s * xi, -s * x + c * xi], axis=1)


def torus_fourier(a, z_pub, kmax: int = 16) -> TorusFourierData:
    """a_k(z) := (2 pi)^{-d} Int a(Phi_z(tau)) e^{-i k.tau} d tau, by FFT."""
    z = np.asarray(z_pub, dtype=float)
    d = len(z) // 2
    n = max(4 * kmax + 4, 16)
    taus = _torus_samples(d, n)
    pts = _flow_many_taus(z, taus)
    vals = _eval_symbol(a, pts).reshape([n] * d)
    F = np.fft.fftn(vals) / n ** d
    coeffs = {}
    shell = 0.0
    for k in product(range(-kmax, kmax + 1), repeat=d):
        v = F[tuple(ki % n for ki in k)]
        coeffs[k] = complex(v)
        if max(abs(ki) for ki in k) == kmax:
            shell = max(shell, abs(v))
    return TorusFourierData(z=z, coefficients=coeffs, kmax=kmax, shell_decay=shell)


def average(a, z_pub, omega, kmax: int = 16, check_resolution: bool = True):
    """Flow average I_a(z) = sum over the resonant module of a_k(z).

    For a periodic frequency vector this equals the single-period time
    average; both routes are spectrally accurate.
    """
    fv = omega if isinstance(omega, FrequencyVector) else frequency_vector(omega, kmax)
    z = np.atleast_2d(np.asarray(z_pub, dtype=float))
    out = np.empty(len(z), dtype=complex)
    for i, zz in enumerate(z):
        data = torus_fourier(a, zz, kmax)
        if check_resolution and data.shell_decay > SHELL_DECAY_GATE:
            raise ResolutionTooLow(
                f"torus Fourier shell at kmax={kmax} has mass {data.shell_decay:.3e}"
            )
        acc = 0.0 + 0.0j
        for k, v in data.coefficients.items():
            if all(ki == 0 for ki in k) or _in_module(k, fv):
                acc += v
        out[i] = acc
    return out if len(out) > 1 else complex(out[0])


def _in_module(k, fv: FrequencyVector) -> bool:
    return abs(np.dot(k, fv.omega)) <= 1e-12


class AveragedSymbol:
    """Symbol-like wrapper exposing I_a with derivatives by averaging the
    derivative flow: d^gamma I_a requires averaging the transported
    derivatives; realized spectrally through finite differences on the
    smooth averaged field (adequate at desk scale for the hypothesis checks).
    """

    def __init__(self, a, omega, kmax: int = 16):
        self.a = a
        self.fv = omega if isinstance(omega, FrequencyVector) else frequency_vector(omega, kmax)
        self.kmax = kmax
        self.d = a.d

    def value(self, pts):
        pts = np.atleast_2d(pts)
        return np.array([average(self.a, z, self.fv, self.kmax, False) for z in pts])


def time_average_periodic(a, z_pub, omega=None, period: float = 2 * np.pi,
                          n: int = 256):
    """Trapezoid average of a over one flow period along tau = t omega."""
    z = np.asarray(z_pub, dtype=float)
    d = len(z) // 2
    om = np.ones(d) if omega is None else np.asarray(omega, dtype=float)
    ts = np.arange(n) * (period / n)
    pts = _flow_many_taus(z, ts[:, None] * om[None, :])
    return complex(np.mean(_eval_symbol(a, pts)))


def solve_cohomological(g, omega, kmax: int = 16, divisor_floor_scale: float = 1e-10):
    """Return f (as a callable on public points) with d/dt f(Phi_t) = g.

    Fourier synthesis f_k = g_k/(i k.omega) over non-resonant modes; the
    resonant part of g must vanish (it is subtracted and reported).
    Periodic omega = (1,...,1): equivalent to the double time integral
    -(1/2 pi) Int_0^{2 pi} Int_0^t g(phi_s) ds dt.
    """
    fv = omega if isinstance(omega, FrequencyVector) else frequency_vector(omega, kmax)
    sigma_emp, _, _ = diophantine_check(fv.omega, max(2, min(kmax, 12)))
    floor = divisor_floor_scale * sigma_emp

    def f(z_pub):
        z = np.atleast_2d(np.asarray(z_pub, dtype=float))
        out = np.empty(len(z), dtype=complex)
        for i, zz in enumerate(z):
            data = torus_fourier(g, zz, kmax)
            if data.shell_decay > SHELL_DECAY_GATE:
                raise ResolutionTooLow(
                    f"shell mass {data.shell_decay:.3e} at kmax={kmax}"
                )
            acc = 0.0 + 0.0j
            for k, v in data.coefficients.items():
                if all(ki == 0 for ki in k) or _in_module(k, fv):
                    continue  # average part: must be zero for solvability
                kw = np.dot(k, fv.omega)
                if abs(kw) < floor:
                    raise SmallDivisor(f"|k.omega| = {abs(kw):.3e} below floor for k={k}")
                acc += v / (1j * kw)
            out[i] = acc
        return out.real if np.max(np.abs(out.imag)) < 1e-9 else out

    return f


def resonant_average_residual(g, omega, z_samples, kmax: int = 16) -> float:
    """Max |I_g| over samples; must be ~0 for the cohomological equation."""
    fv = omega if isinstance(omega, FrequencyVector) else frequency_vector(omega, kmax)
    worst = 0.0
    for z in np.atleast_2d(z_samples):
        worst = max(worst, abs(average(g, z, fv, kmax, False)))
    return worst


def diophantine_check(omega, kmax: int):
    """Fit the largest sigma with |k.omega| >= sigma/|k|^gamma off the module.

    Returns (sigma, gamma, binding_k); a finite check, not a proof.
    """
    if kmax < 2:
        raise ValueError("kmax must be at least 2")
    om = np.asarray(omega, dtype=float)
    d = len(om)
    table = {}
    for gamma in (0.0, 1.0, 2.0, 4.0):
        sigma = np.inf
        binding = None
        for k in product(range(-kmax, kmax + 1), repeat=d):
            if all(v == 0 for v in k):
                continue
            kw = abs(np.dot(k, om))
            if kw <= 1e-12:
                continue  # resonant module
            knorm = np.max(np.abs(k))
            s = kw * knorm ** gamma
            if s < sigma:
                sigma = s
                binding = k
        table[gamma] = (float(sigma), binding)
    # headline: the smallest exponent already giving a healthy constant
    for gamma in (0.0, 1.0, 2.0, 4.0):
        sigma, binding = table[gamma]
        if sigma >= 0.1:
            return float(sigma), gamma, binding
    gamma = 4.0
    sigma, binding = table[gamma]
    return float(sigma), gamma, binding


def energy_lattice(z0_pub, hbar: float, omega) -> np.ndarray:
    """E = hbar (N_j + 1/2) with N_j = round-half-up(H_j(z0)/hbar - 1/2), N_j >= 0."""
    z = np.asarray(z0_pub, dtype=float)
    d = len(z) // 2
    H = 0.5 * (z[:d] ** 2 + z[d:] ** 2)
    N = np.floor(H / hbar - 0.5 + 0.5).astype(int)  # round half up
    N = np.maximum(N, 0)
    return hbar * (N + 0.5)
