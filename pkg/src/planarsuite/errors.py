"""Exception hierarchy shared by every planarsuite module.

Each class also derives from the builtin a caller would naturally catch, so
``except ValueError`` keeps working for configuration mistakes.
"""

from typing import Optional


class PlanarError(Exception):
    """Base class for all planarsuite errors."""


class ParameterError(PlanarError, ValueError):
    """Invalid numeric parameters (tolerance bounds, margins, agent settings)."""


class ModelParseError(PlanarError, ValueError):
    """A model document could not be parsed or failed validation."""

    def __init__(self, message: str, location: Optional[str] = None) -> None:
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class NameLookupError(PlanarError, LookupError):
    """Unknown element name, index, category or axis label."""

    def __str__(self) -> str:
        # LookupError subclasses would otherwise inherit KeyError-style quoting.
        return str(self.args[0]) if self.args else ""


class UnknownTaskError(NameLookupError):
    """A (domain, task) pair that is not in the catalog."""


class ContractError(PlanarError, ValueError):
    """Array shapes that violate an environment or physics contract."""


class EpisodeProtocolError(PlanarError, RuntimeError):
    """``step`` called before ``reset`` or after the LAST time step."""


class PhysicsDivergenceError(PlanarError, RuntimeError):
    """The simulation produced non-finite positions or velocities."""


class NumericalError(PlanarError, ArithmeticError):
    """A linear-algebra routine failed (e.g. a singular mass matrix)."""


class UnsupportedModelError(PlanarError, ValueError):
    """The operation does not apply to this model."""


class SolverError(PlanarError, RuntimeError):
    """The Riccati iteration did not converge."""

    def __init__(self, message: str, residual: float, iterations: int) -> None:
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")


class ConfigurationError(PlanarError, ValueError):
    """Invalid configuration: bench documents, cameras, agents, backends."""
