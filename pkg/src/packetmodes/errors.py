"""Exception hierarchy shared across the package."""


class PacketmodesError(Exception):
    """Base class for all package errors."""


# frames
class FrameError(PacketmodesError):
    pass


class NotIsotropic(FrameError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"frame is not isotropic: |Z^T Omega Z| = {residual:.3e}")


class NotNormalized(FrameError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"frame is not normalized: |Z* Omega Z - 2i| = {residual:.3e}")


class Singular(FrameError):
    pass


class NotSymplectic(FrameError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"matrix is not symplectic: |F^T Omega F - Omega| = {residual:.3e}")


class NotPositive(FrameError):
    pass


# hagedorn
class IndexOutOfRange(PacketmodesError):
    pass


# dynamics
class PositivityLost(PacketmodesError):
    def __init__(self, t_star):
        self.t_star = t_star
        super().__init__(f"metric lost positive definiteness near t = {t_star:.6g}")


class StepFailure(PacketmodesError):
    pass


class OrderUnavailable(PacketmodesError):
    pass


# averaging
class ResolutionTooLow(PacketmodesError):
    pass


class SmallDivisor(PacketmodesError):
    pass


# quantization
class BandOverflow(PacketmodesError):
    pass


class QuadratureFailure(PacketmodesError):
    pass


# propagation
class NoContraction(PacketmodesError):
    pass


class NotConverged(PacketmodesError):
    pass


# quasimode
class ScenarioInvalid(PacketmodesError):
    pass


class OracleUnavailable(PacketmodesError):
    pass


# oracle
class GridTooCoarse(PacketmodesError):
    pass


# cli
class ConfigInvalid(PacketmodesError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"config field '{path}': {message}")


class ComputeFailed(PacketmodesError):
    def __init__(self, module, message):
        self.module = module
        super().__init__(f"[{module}] {message}")
