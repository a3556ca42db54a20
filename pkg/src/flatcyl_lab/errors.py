"""Exception types shared across the lab."""


class FlatCylError(Exception):
    """Base class for all flatcyl-lab errors."""


class DomainError(FlatCylError, ValueError):
    """Coordinate outside the surface of revolution."""


class DirectionError(FlatCylError, ValueError):
    """Vector does not point toward the flat cylinder."""


class KindError(FlatCylError, ValueError):
    """Operation applied to the wrong geodesic kind (e.g. asymptotic input)."""


class QuadratureError(FlatCylError, RuntimeError):
    """Adaptive quadrature failed to meet its tolerance."""


class ConvergenceError(FlatCylError, RuntimeError):
    """Iterative scheme (horizon doubling, step control) did not converge."""


class InfeasibleTowerError(FlatCylError, ValueError):
    """Tower specification carries more mass than a probability allows."""


class ConfigError(FlatCylError, ValueError):
    """Malformed experiment configuration."""
