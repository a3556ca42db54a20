"""Profile function, curvature and Clairaut data for the surface of revolution.

The surface is a cylinder of radius 1 for |s| <= L, continued by the profile
xi(s) = 1 + (|s| - L)^r out to |s| = eps0.  Everything downstream (transition
maps, Riccati curvatures, flux sampling) is parameterised by ProfileParams.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DirectionError, DomainError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ProfileParams:
    """Surface data plus model constants.

    r        profile exponent (> 4; warn below 5)
    L        half-length of the flat cylinder
    eps0     half-length of the surface of revolution
    kappa_cap constant curvature magnitude of the model extension outside
    n0       smallest tracked homogeneity band
    chi      section half-width, carried for documentation only
    """

    r: float = 5.0
    L: float = 0.5
    eps0: float = 1.0
    kappa_cap: float = 1.0
    n0: int = 10
    chi: float | None = None

    def __post_init__(self):
        if not self.r > 4:
            raise ValueError(f"require r > 4, got r={self.r}")
        if self.r < 5:
            warnings.warn(
                f"r={self.r} < 5: Lipschitz regularity of the invariant "
                "foliations is not guaranteed", stacklevel=2)
        if not 0 < self.L < self.eps0:
            raise ValueError(f"require 0 < L < eps0, got L={self.L}, eps0={self.eps0}")
        if not self.kappa_cap > 0:
            raise ValueError("kappa_cap must be positive")
        if self.n0 < 2:
            raise ValueError("n0 must be >= 2")
        if self.chi is None:
            object.__setattr__(self, "chi", 0.05 * (self.eps0 - self.L))

    @property
    def eps1(self) -> float:
        return 0.5 * (self.L + self.eps0)

    @property
    def xi_eps1(self) -> float:
        """Profile radius at the transition section |s| = eps1."""
        return 1.0 + (self.eps1 - self.L) ** self.r


@dataclass(frozen=True)
class UnitVector:
    """Point of the unit tangent bundle in Clairaut coordinates (s, theta, psi)."""

    s: float
    theta: float
    psi: float

    def __post_init__(self):
        for name in ("s", "theta", "psi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite coordinate {name}")
        object.__setattr__(self, "theta", self.theta % TWO_PI)
        object.__setattr__(self, "psi", self.psi % TWO_PI)

    def reversed(self) -> "UnitVector":
        return UnitVector(self.s, self.theta, self.psi + math.pi)


class GeodesicKind(Enum):
    ASYMPTOTIC = "asymptotic"
    BOUNCING = "bouncing"
    CROSSING = "crossing"


def profile(params: ProfileParams, s):
    """Return (xi, xi', xi'') at s; s may be a scalar or an array.

    Raises DomainError when |s| > eps0.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(np.abs(s_arr) > params.eps0 * (1 + 1e-12)):
        raise DomainError(f"|s| exceeds eps0={params.eps0}")
    a = np.maximum(np.abs(s_arr) - params.L, 0.0)
    r = params.r
    xi = 1.0 + a ** r
    xi_p = np.sign(s_arr) * r * a ** (r - 1)
    xi_pp = r * (r - 1) * a ** (r - 2)
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(xi), float(xi_p), float(xi_pp)
    return xi, xi_p, xi_pp


def curvature(params: ProfileParams, s):
    """Gaussian curvature K(s) on the surface of revolution; K <= 0."""
    xi, xi_p, xi_pp = profile(params, s)
    return -xi_pp / (xi * (1.0 + xi_p ** 2) ** 2)


def clairaut(params: ProfileParams, x: UnitVector) -> float:
    """Clairaut constant c = xi(s) cos(psi)."""
    xi, _, _ = profile(params, x.s)
    return xi * math.cos(x.psi)


def points_toward_cylinder(params: ProfileParams, x: UnitVector) -> bool:
    """True when the s-velocity of x is directed toward the flat cylinder."""
    sin_psi = math.sin(x.psi)
    if x.s > params.L:
        return sin_psi < 0
    if x.s < -params.L:
        return sin_psi > 0
    return True  # already over the cylinder


def classify(params: ProfileParams, x: UnitVector, tol_c: float = 1e-12) -> GeodesicKind:
    """Classify an entry vector as asymptotic / bouncing / crossing by |c|."""
    if tol_c <= 0:
        raise ValueError("tol_c must be positive")
    if not points_toward_cylinder(params, x):
        raise DirectionError(f"vector {x} points away from the cylinder")
    c = abs(clairaut(params, x))
    if c > 1.0 + tol_c:
        return GeodesicKind.BOUNCING
    if c < 1.0 - tol_c:
        return GeodesicKind.CROSSING
    return GeodesicKind.ASYMPTOTIC


def asymptotic_angle(params: ProfileParams) -> float:
    """The unique psi0 in (0, pi/2) with xi(eps1) cos(psi0) = 1."""
    return math.acos(1.0 / params.xi_eps1)
