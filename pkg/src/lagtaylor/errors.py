"""Exception types raised across the package."""


class LagTaylorError(Exception):
    """Base class for all package errors."""


class DomainError(LagTaylorError, ValueError):
    """Invalid domain specification or mismatched domains."""


class UnknownPreset(LagTaylorError, ValueError):
    pass


class PresetDomainMismatch(LagTaylorError, ValueError):
    pass


class SobolevOrderError(LagTaylorError, ValueError):
    pass


class IncompatibleNeumannData(LagTaylorError):
    """Neumann data violates the divergence-theorem compatibility condition."""


class IncompatibleFluxData(LagTaylorError):
    pass


class MissingCirculation(LagTaylorError):
    pass


class InsufficientOrders(LagTaylorError):
    pass


class NonFiniteCoefficient(LagTaylorError):
    pass


class EmptyLedger(LagTaylorError):
    pass


class InsufficientData(LagTaylorError):
    pass


class RadiusExceeded(LagTaylorError):
    pass


class SnapshotFormatError(LagTaylorError):
    pass


class ConfigError(LagTaylorError, ValueError):
    pass
