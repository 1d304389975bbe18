"""Exception types shared across the package."""


class LogboundError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(LogboundError):
    """Bad potential source text.

    Carries the byte offset of the failure and the set of token kinds that
    would have been accepted there.
    """

    def __init__(self, message: str, position: int, expected: set[str]):
        super().__init__(f"{message} at offset {position} (expected one of {sorted(expected)})")
        self.position = position
        self.expected = expected


class UnknownIdentifier(LogboundError):
    def __init__(self, name: str):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name


class DomainError(LogboundError):
    """Evaluation left the domain of a sub-expression (log of a non-positive
    number, division by zero, overflow to non-finite)."""


class NoConvergence(LogboundError):
    def __init__(self, iterations: int, residual: float, what: str = "iteration"):
        super().__init__(f"{what} did not converge after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class NoBracket(LogboundError):
    """Ray scan found no sign change of the manifold constraint.

    ``trace`` holds the (t, value) pairs of the scan for diagnosis.
    """

    def __init__(self, trace):
        super().__init__(f"no sign change along the scaling ray (scanned {len(trace)} points up to t={trace[-1][0]:.3g})")
        self.trace = trace


class TrivialCollapse(LogboundError):
    """Iterate fell below the manifold norm floor (converging to zero)."""


class BadEndpoint(LogboundError):
    """Path endpoint does not reach the required low energy level."""


class EmptyAnnulus(LogboundError):
    """Too few usable nodes in the requested fit annulus."""


class ZeroMass(LogboundError):
    """Windowed moment has vanishing denominator."""


class ConfigError(LogboundError):
    """Malformed or inconsistent run configuration."""
