"""Complex-symplectic linear algebra: normalized Lagrangian frames.

A normalized Lagrangian frame is a 2d x d complex matrix Z = (P, Q)^t with

    Z^T Omega Z = 0         (isotropy)
    Z^* Omega Z = 2i Id     (normalization)

where Omega = [[0, -I], [I, 0]] acts on momentum-first vectors z = (p, q).
Each frame carries a symplectic metric G, a complex structure J and the
orthogonal projections onto the spanned positive Lagrangian plane and its
conjugate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotIsotropic, NotNormalized, NotPositive, NotSymplectic, Singular
from .ordering import omega

TOL_FRAME = 1e-10

#: eigenvalue floor for the Hermitian square root in normalize_frame
SQRT_FLOOR = 1e-14


def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


@dataclass(frozen=True)
class SymplecticForm:
    """Canonical symplectic matrix in dimension d."""

    d: int
    Omega: np.ndarray = field(init=False)

    def __post_init__(self):
        O = omega(self.d)
        O.flags.writeable = False
        object.__setattr__(self, "Omega", O)


@dataclass(frozen=True)
class LagrangianFrame:
    """Normalized Lagrangian frame with stored invariant residuals.

    Attributes
    ----------
    P_block, Q_block : (d, d) complex
        Frame blocks, Z = (P, Q)^t.
    isotropy_residual, normalization_residual : float
        Max-norm residuals of the two defining conditions.
    det_q_branch : complex
        Value of det(Q)^(-1/2).  Principal branch by default; trajectory
        code replaces it by the continuously tracked branch.
    """

    P_block: np.ndarray
    Q_block: np.ndarray
    isotropy_residual: float = 0.0
    normalization_residual: float = 0.0
    det_q_branch: complex | None = None

    def __post_init__(self):
        P = np.array(self.P_block, dtype=complex)
        Q = np.array(self.Q_block, dtype=complex)
        P.flags.writeable = False
        Q.flags.writeable = False
        object.__setattr__(self, "P_block", P)
        object.__setattr__(self, "Q_block", Q)
        if self.det_q_branch is None:
            object.__setattr__(self, "det_q_branch", _principal_invsqrt_det(Q))

    @property
    def d(self) -> int:
        return self.P_block.shape[0]

    @property
    def Z(self) -> np.ndarray:
        """The 2d x d frame matrix."""
        return np.vstack([self.P_block, self.Q_block])

    @property
    def B(self) -> np.ndarray:
        """B = P Q^{-1}, the Siegel upper half-space matrix."""
        return self.P_block @ np.linalg.inv(self.Q_block)

    @property
    def M(self) -> np.ndarray:
        """M = Q^{-1} conj(Q), driving the Hermite-type recurrence."""
        return np.linalg.solve(self.Q_block, np.conj(self.Q_block))

    def with_branch(self, det_q_branch: complex) -> "LagrangianFrame":
        return LagrangianFrame(
            self.P_block, self.Q_block,
            self.isotropy_residual, self.normalization_residual,
            det_q_branch,
        )

    def unitary_rotate(self, U: np.ndarray) -> "LagrangianFrame":
        """Frame Z U spanning the same plane (U unitary)."""
        return make_frame(self.P_block @ U, self.Q_block @ U)


@dataclass(frozen=True)
class FrameGeometry:
    """Metric, complex structure and projections attached to a frame."""

    G: np.ndarray
    J: np.ndarray
    pi_L: np.ndarray
    pi_Lbar: np.ndarray


def _principal_invsqrt_det(Q: np.ndarray) -> complex:
    det = np.linalg.det(Q)
    if det == 0:
        raise Singular("Q block is singular")
    return complex(det ** (-0.5))


def make_frame(P_block, Q_block, tol_frame: float = TOL_FRAME) -> LagrangianFrame:
    """Build a frame from its blocks, verifying both invariants.

    Raises NotIsotropic / NotNormalized with the offending residual, or
    Singular when a block is not invertible.
    """
    P = np.asarray(P_block, dtype=complex)
    Q = np.asarray(Q_block, dtype=complex)
    if P.shape != Q.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("frame blocks must be square matrices of equal shape")
    d = P.shape[0]
    O = omega(d)
    Z = np.vstack([P, Q])
    iso = _maxabs(Z.T @ O @ Z)
    nrm = _maxabs(Z.conj().T @ O @ Z - 2j * np.eye(d))
    if iso > tol_frame:
        raise NotIsotropic(iso)
    if nrm > tol_frame:
        raise NotNormalized(nrm)
    for name, blk in (("Q", Q), ("P", P)):
        if np.linalg.matrix_rank(blk, tol=1e-12 * max(1.0, _maxabs(blk))) < d:
            raise Singular(f"{name} block is singular")
    return LagrangianFrame(P, Q, iso, nrm)


def canonical_frame(d: int) -> LagrangianFrame:
    """The frame Z0 = (i Id, Id)^t of the standard ground state."""
    return make_frame(1j * np.eye(d), np.eye(d))


def frame_from_symplectic(F, tol_frame: float = TOL_FRAME) -> LagrangianFrame:
    """Frame Z = U - iV of a real symplectic F = (U, V) in column blocks."""
    F = np.asarray(F, dtype=float)
    d = F.shape[0] // 2
    O = omega(d)
    res = _maxabs(F.T @ O @ F - O)
    if res > tol_frame:
        raise NotSymplectic(res)
    U, V = F[:, :d], F[:, d:]
    return make_frame(U[:d] - 1j * V[:d], U[d:] - 1j * V[d:], tol_frame)


def symplectic_of_frame(frame: LagrangianFrame) -> np.ndarray:
    """Inverse of frame_from_symplectic: F = (Re Z, -Im Z)."""
    Z = frame.Z
    return np.hstack([Z.real, -Z.imag])


def normalize_frame(W, tol_frame: float = TOL_FRAME):
    """Normalize a 2d x d matrix W spanning a positive Lagrangian plane.

    Returns (frame, N) with N = ((1/2i) W* Omega W)^(-1/2) taken as the
    principal square root of the Hermitian positive definite Gram matrix,
    and frame Z = W N.
    """
    W = np.asarray(W, dtype=complex)
    d = W.shape[1]
    O = omega(d)
    Y = (W.conj().T @ O @ W) / 2j
    herm_res = _maxabs(Y - Y.conj().T)
    if herm_res > 1e-8 * max(1.0, _maxabs(Y)):
        raise NotPositive(f"W* Omega W / 2i is not Hermitian (residual {herm_res:.3e})")
    Y = 0.5 * (Y + Y.conj().T)
    evals, vecs = np.linalg.eigh(Y)
    if np.min(evals) < SQRT_FLOOR:
        raise NotPositive(
            f"range of W is not a positive Lagrangian (min eigenvalue {np.min(evals):.3e})"
        )
    N = vecs @ np.diag(evals ** -0.5) @ vecs.conj().T
    frame = make_frame(W[:d] @ N, W[d:] @ N, tol_frame)
    return frame, N


def geometry_of(frame: LagrangianFrame) -> FrameGeometry:
    """Metric G = Omega^T Re(Z Z*) Omega, J = -Omega G, and projections."""
    d = frame.d
    O = omega(d)
    Z = frame.Z
    ZZs = Z @ Z.conj().T
    G = O.T @ ZZs.real @ O
    J = -O @ G
    pi_L = 0.5j * ZZs @ O.T
    pi_Lbar = -0.5j * np.conj(Z) @ Z.T @ O.T
    for a in (G, J, pi_L, pi_Lbar):
        a.flags.writeable = False
    return FrameGeometry(G=G, J=J, pi_L=pi_L, pi_Lbar=pi_Lbar)


def metric_inverse(frame: LagrangianFrame) -> np.ndarray:
    """G^{-1} = Re(Z Z*), without forming G."""
    Z = frame.Z
    return (Z @ Z.conj().T).real
