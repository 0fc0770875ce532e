"""Exception types shared across the package."""


class PhmixError(Exception):
    """Base class for all library errors."""


class GeometryError(PhmixError):
    """Invalid domain or mesh construction parameters."""


class ConfigurationError(PhmixError):
    """Invalid configuration value (quadrature degree, config file, ...)."""


class MaterialError(PhmixError):
    """Non-physical material parameter or coefficient."""


class MeshCompatibilityError(PhmixError):
    """Two meshes that must coincide node-for-node do not."""


class UnsupportedBasisError(PhmixError):
    """Operation requires a basis kind it does not support."""


class StateValidityError(PhmixError):
    """A state violates positivity (temperature or specific volume)."""

    def __init__(self, field: str, node: int, value: float):
        self.field = field
        self.node = node
        self.value = value
        super().__init__(f"invalid state: {field}[{node}] = {value!r}")


class StepFailureError(PhmixError):
    """Implicit time step did not converge."""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
