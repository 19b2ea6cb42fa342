"""Hagedorn wave-packet propagation under non-selfadjoint semiclassical
symbols, with quasimode assembly and pseudospectral diagnostics."""

__version__ = "0.1.0"

from .frames import (  # noqa: F401
    LagrangianFrame,
    FrameGeometry,
    SymplecticForm,
    canonical_frame,
    frame_from_symplectic,
    geometry_of,
    make_frame,
    normalize_frame,
)
from .hagedorn import (  # noqa: F401
    WavePacketBasis,
    eval_excited_state,
    eval_ground_state,
    ladder_apply,
    packet_fourier_transform,
    wigner_lift_eval,
)
