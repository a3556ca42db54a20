"""Geodesic integration and the closed-form transition map through the
surface of revolution.

Everything here works with the Clairaut constant c = xi(s) cos(psi).  An
excursion enters at |s| = eps1 heading toward the cylinder and either turns
around in the neck (|c| > 1, "bouncing") or traverses the cylinder and exits
on the far side (|c| < 1, "crossing").  The deflection zeta, the neck time
Upsilon1 and the cylinder time Upsilon2 are one-dimensional integrals in s;
adaptive quadrature after desingularization is the authoritative path, the
ODE integrator serves as an independent oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate as spi

from .errors import DirectionError, DomainError, KindError, QuadratureError
from .stats import StatReport, geometric_mean, loglog_fit
from .surface import GeodesicKind, ProfileParams, UnitVector, clairaut, classify

_TWO_PI = 2.0 * math.pi


@dataclass
class GeodesicState:
    t: float
    s: float
    theta: float
    psi: float


@dataclass
class BandIndex:
    """Homogeneity band: 1/(n+1)^2 < ||c|-1| < 1/n^2, split by kind and by
    the sign of c."""

    n: int
    kind: GeodesicKind
    side: int  # sign of c

    def c_interval(self) -> tuple:
        lo, hi = 1.0 / (self.n + 1) ** 2, 1.0 / self.n ** 2
        if self.kind is GeodesicKind.BOUNCING:
            return 1.0 + lo, 1.0 + hi
        return 1.0 - hi, 1.0 - lo


@dataclass
class TransitionResult:
    kind: GeodesicKind
    exit: UnitVector
    upsilon0: float
    upsilon1: float
    upsilon2: float
    zeta: float
    band: BandIndex | None
    turning_s: float | None


# ---------------------------------------------------------------------------
# geodesic ODE
# ---------------------------------------------------------------------------

def _rhs(t, y, r, L):
    s, theta, psi = y
    a = abs(s) - L
    if a > 0.0:
        xi = 1.0 + a ** r
        xi_p = math.copysign(r * a ** (r - 1.0), s)
    else:
        xi, xi_p = 1.0, 0.0
    g = math.sqrt(1.0 + xi_p * xi_p)
    cpsi = math.cos(psi)
    return (math.sin(psi) / g, cpsi / xi, xi_p * cpsi / (xi * g))


def integrate(params: ProfileParams, x: UnitVector, T: float, tol: float = 1e-12):
    """Integrate the geodesic ODE from x for time T (halting at |s| = eps0).

    Returns the list of accepted GeodesicState steps.  The Clairaut constant
    drift along the output is the caller's accuracy check.
    """
    sol = _solve_geodesic(params, x, T, tol, stop_at=params.eps0)
    return [GeodesicState(t, *y) for t, y in zip(sol.t, sol.y.T)]


def _solve_geodesic(params, x, T, tol, stop_at, dense=False):
    def boundary(t, y, *args):
        return abs(y[0]) - stop_at

    boundary.terminal = True
    boundary.direction = 1

    y0 = (x.s, x.theta, math.atan2(math.sin(x.psi), math.cos(x.psi)))
    with warnings.catch_warnings():
        warnings.simplefilter("error", category=RuntimeWarning)
        sol = spi.solve_ivp(
            _rhs, (0.0, T), y0, method="DOP853", rtol=tol, atol=tol,
            args=(params.r, params.L), events=boundary, dense_output=dense)
    if not sol.success:
        raise DomainError(f"geodesic integration failed: {sol.message}")
    return sol


def transition_via_ode(params: ProfileParams, x: UnitVector, tol: float = 1e-11):
    """ODE oracle for one excursion: integrate from the entry section until
    the geodesic returns to |s| = eps1 moving outward.

    Returns (delta_theta, total_time, exit_psi, exit_s); delta_theta is the
    unwrapped theta-advance, signed like c.
    """
    # The event threshold sits a hair inside eps1 so that the entry point
    # itself (exactly on the section, moving inward) is not an event.
    target = params.eps1 - 1e-13

    def back_out(t, y, *args):
        return abs(y[0]) - target

    back_out.terminal = True
    back_out.direction = 1

    c = clairaut(params, x)
    # generous horizon: Upsilon0 grows ~ n near |c| = 1
    dist = max(abs(abs(c) - 1.0), 1e-9)
    horizon = 64.0 + 40.0 / math.sqrt(dist)
    y0 = (x.s, x.theta, math.atan2(math.sin(x.psi), math.cos(x.psi)))
    sol = spi.solve_ivp(
        _rhs, (0.0, horizon), y0, method="DOP853", rtol=tol, atol=tol,
        args=(params.r, params.L), events=back_out)
    if not sol.success or len(sol.t_events[0]) == 0:
        raise DomainError("oracle excursion did not return to the section")
    t_exit = float(sol.t_events[0][0])
    s_e, th_e, psi_e = (float(v) for v in sol.y_events[0][0])
    return th_e - x.theta, t_exit, psi_e, s_e


# ---------------------------------------------------------------------------
# closed-form transition quantities
# ---------------------------------------------------------------------------

def turning_point(params: ProfileParams, c: float) -> float:
    """Turning radius s0 (right side) of a bouncing excursion: xi(s0) = |c|."""
    cc = abs(c)
    if cc <= 1.0:
        raise KindError(f"no turning point for |c|={cc} <= 1")
    s0 = params.L + (cc - 1.0) ** (1.0 / params.r)
    if s0 > params.eps1:
        raise DomainError(
            f"turning point s0={s0} beyond the section eps1={params.eps1}")
    return s0


def _quad(f, a, b, quad_tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", category=spi.IntegrationWarning)
        try:
            val, err = spi.quad(f, a, b, epsabs=1e-14, epsrel=quad_tol, limit=400)
        except spi.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge: {exc}") from exc
    if err > 10.0 * max(quad_tol * abs(val), 1e-12):
        raise QuadratureError(
            f"quadrature error estimate {err} too large for value {val}")
    return val


def _neck_scalar(r, L, s):
    """(xi, xi', sqrt(1+xi'^2)) at s >= L."""
    a = s - L
    ap = a ** (r - 1.0)
    xi = 1.0 + a * ap
    xi_p = r * ap
    return xi, xi_p, math.sqrt(1.0 + xi_p * xi_p)


def _xi_minus_c_bouncing(r, b, du):
    """xi(s0 + du) - |c| for a bouncing excursion with b = s0 - L = (|c|-1)^{1/r}.

    Computed as b^r * expm1(r*log1p(du/b)) to dodge the cancellation when du
    is small against b.
    """
    return b ** r * math.expm1(r * math.log1p(du / b))


def zeta_deflection(params: ProfileParams, c: float, quad_tol: float = 1e-10) -> float:
    """Angular deflection |zeta| of one excursion with Clairaut constant c.

    zeta = 2 * int (|c|/xi) sqrt((1+xi'^2)/(xi^2-c^2)) ds from the turning
    point (bouncing) or the cylinder midline (crossing) out to eps1.  The
    bouncing endpoint singularity is removed by s = s0 + u^2.
    """
    r, L, eps1 = params.r, params.L, params.eps1
    cc = abs(c)
    if cc == 0.0:
        return 0.0
    if abs(cc - 1.0) < 1e-15:
        raise KindError("zeta diverges on the asymptotic set |c| = 1")
    if cc < 1.0:
        # cylinder part in closed form (xi = 1), neck part by quadrature
        cyl = 2.0 * L * cc / math.sqrt((1.0 - cc) * (1.0 + cc))

        def f(s):
            xi, _, g = _neck_scalar(r, L, s)
            ximc = (1.0 - cc) + (s - L) ** r
            return cc * g / (xi * math.sqrt(ximc * (xi + cc)))

        return cyl + 2.0 * _quad(f, L, eps1, quad_tol)

    s0 = turning_point(params, cc)
    b = s0 - L
    U = math.sqrt(eps1 - s0)

    def f(u):
        s = s0 + u * u
        xi, _, g = _neck_scalar(r, L, s)
        ximc = _xi_minus_c_bouncing(r, b, u * u)
        return 2.0 * u * cc * g / (xi * math.sqrt(ximc * (xi + cc)))

    return 2.0 * _quad(f, 0.0, U, quad_tol)


def upsilon1(params: ProfileParams, c: float, quad_tol: float = 1e-10) -> float:
    """Neck time: int xi sqrt(1+xi'^2)/sqrt(xi^2-c^2) ds over [L, eps1]
    (crossing) or [s0, eps1] (bouncing, desingularized)."""
    r, L, eps1 = params.r, params.L, params.eps1
    cc = abs(c)
    if abs(cc - 1.0) < 1e-15:
        raise KindError("Upsilon1 diverges on the asymptotic set")
    if cc < 1.0:
        def f(s):
            xi, _, g = _neck_scalar(r, L, s)
            ximc = (1.0 - cc) + (s - L) ** r
            return xi * g / math.sqrt(ximc * (xi + cc))

        return _quad(f, L, eps1, quad_tol)

    s0 = turning_point(params, cc)
    b = s0 - L
    U = math.sqrt(eps1 - s0)

    def f(u):
        s = s0 + u * u
        xi, _, g = _neck_scalar(r, L, s)
        ximc = _xi_minus_c_bouncing(r, b, u * u)
        return 2.0 * u * xi * g / math.sqrt(ximc * (xi + cc))

    return _quad(f, 0.0, U, quad_tol)


def upsilon2(params: ProfileParams, c: float) -> float:
    """Cylinder half-time L/sqrt(1-c^2) for crossing, 0 for bouncing."""
    cc = abs(c)
    if cc >= 1.0:
        return 0.0
    return params.L / math.sqrt((1.0 - cc) * (1.0 + cc))


def _eta(r, xim1):
    """xi' as a function of xi - 1 on the neck."""
    return r * xim1 ** ((r - 1.0) / r)


def _zeta_dc_bouncing(params, cc, quad_tol):
    """d zeta / d|c| for bouncing, via the substitution xi = sqrt(u^2+c^2):
    zeta(c) = 2c int_0^U G(xi) du with G = sqrt(1+eta^2)/(xi^2 eta),
    U = sqrt(a^2-c^2), eta = xi' as a function of xi."""
    r = params.r
    a = params.xi_eps1
    U = math.sqrt((a - cc) * (a + cc))

    def xi_of(u):
        xi = math.sqrt(u * u + cc * cc)
        # xi - 1 without cancellation near the turning point
        xim1 = (u * u + (cc - 1.0) * (cc + 1.0)) / (1.0 + xi)
        return xi, xim1

    def G(xi, xim1):
        eta = _eta(r, xim1)
        return math.sqrt(1.0 + eta * eta) / (xi * xi * eta)

    def g0(u):
        return G(*xi_of(u))

    def g1(u):
        xi, xim1 = xi_of(u)
        eta = _eta(r, xim1)
        eta_p = (r - 1.0) * xim1 ** (-1.0 / r)
        gval = math.sqrt(1.0 + eta * eta) / (xi * xi * eta)
        gp = gval * (eta * eta_p / (1.0 + eta * eta) - 2.0 / xi - eta_p / eta)
        return gp / xi

    I0 = _quad(g0, 0.0, U, quad_tol)
    I1 = _quad(g1, 0.0, U, quad_tol)
    a_xim1 = (a - 1.0)
    Ga = G(a, a_xim1)
    return 2.0 * I0 - 2.0 * cc * cc * Ga / U + 2.0 * cc * cc * I1


def zeta_derivatives(params: ProfileParams, psi: float, quad_tol: float = 1e-10):
    """(zeta', zeta'') with respect to the entry angle psi on |s| = eps1.

    The angle is read through |cos psi|: both signs of c give the same
    magnitudes, and zeta' < 0 for the crossing branch.
    """
    r, L, eps1 = params.r, params.L, params.eps1
    a = params.xi_eps1
    cc = a * abs(math.cos(psi))
    if abs(cc - 1.0) < 1e-13:
        raise KindError("zeta derivatives undefined at the asymptotic angle")
    sin_t = math.sqrt((a - cc) * (a + cc)) / a  # sin of the reference angle

    if cc < 1.0:
        # cylinder contribution in closed form (xi = 1, A = 1)
        m32_cyl = L * ((1.0 - cc) * (1.0 + cc)) ** -1.5

        def f32(s):
            xi, _, g = _neck_scalar(r, L, s)
            ximc = (1.0 - cc) + (s - L) ** r
            return (g / xi) * xi * xi * (ximc * (xi + cc)) ** -1.5

        zeta_p = -2.0 * a * sin_t * (m32_cyl + _quad(f32, L, eps1, quad_tol))

        asq = (a - cc) * (a + cc)  # a^2 sin^2 psi
        m52_cyl = (L * (3.0 * asq + cc * cc - 1.0)
                   * ((1.0 - cc) * (1.0 + cc)) ** -2.5)

        def f52(s):
            xi, _, g = _neck_scalar(r, L, s)
            ximc = (1.0 - cc) + (s - L) ** r
            return ((g / xi) * xi * xi * (3.0 * asq + cc * cc - xi * xi)
                    * (ximc * (xi + cc)) ** -2.5)

        zeta_pp = 2.0 * cc * (m52_cyl + _quad(f52, L, eps1, quad_tol))
        return zeta_p, zeta_pp

    # bouncing: zeta'(psi) = -a sin(psi) * dzeta/dc, analytic; zeta'' by a
    # tight central difference of the analytic zeta'
    def zp(c_val):
        st = math.sqrt((a - c_val) * (a + c_val))
        return -st * _zeta_dc_bouncing(params, c_val, quad_tol)

    zeta_p = zp(cc)
    psi_t = math.acos(cc / a)
    gap = math.acos(1.0 / a) - psi_t  # distance to the asymptotic angle
    h = max(1e-8, 1e-3 * gap)
    c_hi = a * math.cos(psi_t + h)
    c_lo = a * math.cos(psi_t - h)
    if c_hi <= 1.0 or c_lo >= a:
        raise KindError("finite-difference stencil leaves the bouncing range")
    zeta_pp = (zp(c_hi) - zp(c_lo)) / (2.0 * h)
    return zeta_p, zeta_pp


# ---------------------------------------------------------------------------
# the transition map and bands
# ---------------------------------------------------------------------------

def band_of_c(params: ProfileParams, c: float) -> BandIndex | None:
    """Band containing |c|, or None (boundary, untracked, or too far from 1)."""
    gap = abs(c) - 1.0
    if gap == 0.0:
        return None
    kind = GeodesicKind.BOUNCING if gap > 0 else GeodesicKind.CROSSING
    x = abs(gap)
    if x >= 1.0 / params.n0 ** 2:
        return None
    n = int(math.floor(1.0 / math.sqrt(x)))
    lo, hi = 1.0 / (n + 1) ** 2, 1.0 / n ** 2
    if x <= lo or x >= hi:
        return None  # exact boundary
    return BandIndex(n=n, kind=kind, side=1 if c > 0 else -1)


def band_of(params: ProfileParams, x: UnitVector) -> BandIndex | None:
    return band_of_c(params, clairaut(params, x))


def band_midpoint_c(params: ProfileParams, n: int, kind: GeodesicKind,
                    frac: float = 0.5) -> float:
    """A |c| value at relative position frac inside band n of the given kind."""
    lo, hi = 1.0 / (n + 1) ** 2, 1.0 / n ** 2
    x = lo + frac * (hi - lo)
    return 1.0 + x if kind is GeodesicKind.BOUNCING else 1.0 - x


def transition(params: ProfileParams, x: UnitVector, quad_tol: float = 1e-10,
               tol_c: float = 1e-12) -> TransitionResult:
    """One application of the transition map to an entry vector on |s| = eps1.

    Bouncing: exit (s, theta + sgn(c) zeta, -psi).
    Crossing: exit (-s, theta + sgn(c) zeta, psi).
    The deflection winds in the direction of travel, hence the sign(c).
    """
    if abs(abs(x.s) - params.eps1) > 1e-9:
        raise DomainError(f"entry vector must sit on |s| = eps1, got s={x.s}")
    kind = classify(params, x, tol_c)  # raises DirectionError if outbound
    if kind is GeodesicKind.ASYMPTOTIC:
        raise KindError("transition undefined for asymptotic vectors")
    c = clairaut(params, x)
    cc = abs(c)
    zeta = zeta_deflection(params, c, quad_tol)
    u1 = upsilon1(params, c, quad_tol)
    u2 = upsilon2(params, c)
    dtheta = math.copysign(zeta, c) if c != 0.0 else 0.0

    if kind is GeodesicKind.BOUNCING:
        exit_vec = UnitVector(x.s, x.theta + dtheta, -x.psi)
        turning = math.copysign(turning_point(params, cc), x.s)
    else:
        exit_vec = UnitVector(-x.s, x.theta + dtheta, x.psi)
        turning = None

    return TransitionResult(
        kind=kind, exit=exit_vec, upsilon0=u1 + u2, upsilon1=u1, upsilon2=u2,
        zeta=zeta, band=band_of_c(params, c), turning_s=turning)


# ---------------------------------------------------------------------------
# scaling and distortion experiments
# ---------------------------------------------------------------------------

class ScalingQuantity(Enum):
    UPSILON1 = "upsilon1"
    UPSILON2 = "upsilon2"
    ZETA_PRIME = "zeta_prime"
    ZETA_DOUBLE_PRIME = "zeta_double_prime"


def _band_quantity(params, quantity, kind, c, quad_tol):
    if quantity is ScalingQuantity.UPSILON1:
        return upsilon1(params, c, quad_tol)
    if quantity is ScalingQuantity.UPSILON2:
        if kind is GeodesicKind.BOUNCING:
            raise KindError("Upsilon2 vanishes identically for bouncing")
        return upsilon2(params, c)
    psi = math.acos(c / params.xi_eps1)
    zp, zpp = zeta_derivatives(params, psi, quad_tol)
    if quantity is ScalingQuantity.ZETA_PRIME:
        return zp
    return zpp


def scaling_report(params: ProfileParams, quantity: ScalingQuantity,
                   kind: GeodesicKind, n_range, samples_per_band: int = 3,
                   quad_tol: float = 1e-10) -> StatReport:
    """Log-log fit of the per-band geometric mean of a transition quantity
    against the band index n."""
    n_list = sorted(set(int(n) for n in n_range))
    if len(n_list) < 3:
        raise ValueError("need at least 3 bands for a fit")
    if samples_per_band < 3:
        raise ValueError("samples_per_band must be >= 3")
    rows = []
    gmeans = []
    for n in n_list:
        vals = []
        for j in range(samples_per_band):
            frac = (j + 0.5) / samples_per_band
            c = band_midpoint_c(params, n, kind, frac)
            vals.append(_band_quantity(params, quantity, kind, c, quad_tol))
        gm = geometric_mean(vals)
        gmeans.append(gm)
        rows.append({"band_n": n, "kind": kind.value,
                     "quantity": quantity.value, "value": gm})
    slope, intercept, r2 = loglog_fit(n_list, gmeans)
    return StatReport(
        name=f"scaling_{quantity.value}_{kind.value}",
        values={"slope": slope, "intercept": intercept, "r_squared": r2},
        rows=rows)


def distortion_check(params: ProfileParams, band: BandIndex, pairs: int,
                     seed: int = 0, quad_tol: float = 1e-10) -> StatReport:
    """Empirical distortion and time-Lipschitz suprema over angle pairs in
    one band: |log|zeta'| - log|zeta'bar|| <= C d^{1/3} with
    d = |zeta - zetabar| + |psi - psibar|, and |2U0 - 2U0bar| <= C(|dpsi| + d).
    """
    rng = np.random.default_rng(seed)
    a = params.xi_eps1
    lo, hi = band.c_interval()
    sup_dist = 0.0
    sup_time = 0.0
    for _ in range(pairs):
        c1, c2 = rng.uniform(lo, hi, size=2)
        if c1 == c2:
            continue
        p1, p2 = math.acos(c1 / a), math.acos(c2 / a)
        z1 = zeta_deflection(params, c1, quad_tol)
        z2 = zeta_deflection(params, c2, quad_tol)
        zp1, _ = zeta_derivatives(params, p1, quad_tol)
        zp2, _ = zeta_derivatives(params, p2, quad_tol)
        d_img = abs(z1 - z2) + abs(p1 - p2)
        if d_img > 0:
            sup_dist = max(sup_dist,
                           abs(math.log(abs(zp1)) - math.log(abs(zp2)))
                           / d_img ** (1.0 / 3.0))
        t1 = 2.0 * (upsilon1(params, c1, quad_tol) + upsilon2(params, c1))
        t2 = 2.0 * (upsilon1(params, c2, quad_tol) + upsilon2(params, c2))
        denom = abs(p1 - p2) + d_img
        if denom > 0:
            sup_time = max(sup_time, abs(t1 - t2) / denom)
    return StatReport(
        name=f"distortion_band_{band.n}_{band.kind.value}",
        values={"sup_distortion_ratio": sup_dist,
                "sup_time_lipschitz_ratio": sup_time},
        seed=seed)
