import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatcyl_lab.errors import DomainError, KindError
from flatcyl_lab.surface import (GeodesicKind, ProfileParams, UnitVector,
                                 clairaut, profile)
from flatcyl_lab.transit import (ScalingQuantity, band_midpoint_c, band_of,
                                 band_of_c, distortion_check, integrate,
                                 scaling_report, transition,
                                 transition_via_ode, turning_point,
                                 upsilon1, upsilon2, zeta_deflection,
                                 zeta_derivatives)

WIDE = ProfileParams(L=2.0, eps0=3.7)


def entry(params, c, theta=0.3):
    psi = math.acos(c / params.xi_eps1)
    return UnitVector(-params.eps1, theta, psi)


# frozen oracle values: high-accuracy geodesic ODE integration of one
# crossing and one bouncing excursion at L=2, eps0=3.7, band n=12
ORACLE = {
    "crossing": {"c": 0.99356919789612097,
                 "zeta": 44.095809407849273, "time": 45.010138093509227},
    "bouncing": {"c": 1.006430802103879,
                 "zeta": 4.962553577812522, "time": 5.6060941714912618},
}


def test_zeta_and_times_against_frozen_ode_oracle():
    for kind, ref in ORACLE.items():
        c = ref["c"]
        assert zeta_deflection(WIDE, c) == pytest.approx(ref["zeta"],
                                                         abs=2e-9)
        total = 2.0 * (upsilon1(WIDE, c) + upsilon2(WIDE, c))
        assert total == pytest.approx(ref["time"], abs=2e-9)


def test_transition_via_ode_agrees_with_closed_form():
    for kind in (GeodesicKind.CROSSING, GeodesicKind.BOUNCING):
        c = band_midpoint_c(WIDE, 25, kind)
        x = entry(WIDE, c)
        res = transition(WIDE, x)
        dtheta, t_ode, psi_exit, s_exit = transition_via_ode(WIDE, x, 1e-12)
        assert abs(dtheta) == pytest.approx(res.zeta, abs=1e-8)
        assert t_ode == pytest.approx(2.0 * res.upsilon0, abs=1e-8)
        assert s_exit == pytest.approx(res.exit.s, abs=1e-7)


def test_turning_point_definition():
    c = 1.004
    s0 = turning_point(WIDE, c)
    xi, _, _ = profile(WIDE, s0)
    assert xi == pytest.approx(c, abs=1e-14)
    assert WIDE.L < s0 < WIDE.eps1
    with pytest.raises(KindError):
        turning_point(WIDE, 0.9)


def test_exit_formulas():
    cb = band_midpoint_c(WIDE, 15, GeodesicKind.BOUNCING)
    xb = entry(WIDE, cb)
    rb = transition(WIDE, xb)
    assert rb.exit.s == xb.s
    assert rb.exit.psi == pytest.approx((-xb.psi) % (2 * math.pi))
    assert rb.upsilon2 == 0.0
    assert rb.turning_s is not None and rb.turning_s < 0  # entered at -eps1

    cc = band_midpoint_c(WIDE, 15, GeodesicKind.CROSSING)
    xc = entry(WIDE, cc)
    rc = transition(WIDE, xc)
    assert rc.exit.s == -xc.s
    assert rc.exit.psi == xc.psi
    assert rc.turning_s is None
    assert rc.upsilon2 == pytest.approx(
        WIDE.L / math.sqrt(1.0 - cc ** 2), rel=1e-13)


def test_transition_entry_off_section_rejected():
    with pytest.raises(DomainError):
        transition(WIDE, UnitVector(0.5, 0.0, 1.0))


def test_band_indexing():
    n0 = WIDE.n0
    for n in (n0, 17, 400):
        for kind in (GeodesicKind.CROSSING, GeodesicKind.BOUNCING):
            c = band_midpoint_c(WIDE, n, kind)
            b = band_of_c(WIDE, c)
            assert b is not None and b.n == n and b.kind is kind
            lo, hi = b.c_interval()
            assert lo < abs(c) < hi
    # boundaries and untracked values; 2^-10 = 1/32^2 survives the float
    # roundtrip exactly, so it sits exactly on a band boundary
    assert band_of_c(WIDE, 1.0 + 2.0 ** -10) is None
    assert band_of_c(WIDE, 1.0 - 1.0 / (n0 - 1) ** 2) is None  # n < n0
    x = entry(WIDE, band_midpoint_c(WIDE, 20, GeodesicKind.CROSSING))
    assert band_of(WIDE, x).n == 20


def test_zeta_derivatives_match_finite_differences():
    for kind in (GeodesicKind.CROSSING, GeodesicKind.BOUNCING):
        c = band_midpoint_c(WIDE, 30, kind)
        psi = math.acos(c / WIDE.xi_eps1)
        zp, zpp = zeta_derivatives(WIDE, psi)
        h = 1e-6

        def zeta_of_psi(p):
            return zeta_deflection(WIDE, WIDE.xi_eps1 * math.cos(p))

        fd1 = (zeta_of_psi(psi + h) - zeta_of_psi(psi - h)) / (2 * h)
        fd2 = (zeta_of_psi(psi + h) - 2 * zeta_of_psi(psi)
               + zeta_of_psi(psi - h)) / h ** 2
        assert zp == pytest.approx(fd1, rel=1e-5)
        assert zpp == pytest.approx(fd2, rel=1e-3)


def test_upsilon1_positive_and_diverges_near_one():
    vals = [upsilon1(WIDE, 1.0 - x) for x in (1e-2, 1e-4, 1e-6)]
    assert all(v > 0 for v in vals)
    assert vals[0] < vals[1] < vals[2]
    assert upsilon2(WIDE, 1.004) == 0.0  # bouncing never crosses the cylinder


def test_scaling_report_shapes_and_errors():
    rep = scaling_report(WIDE, ScalingQuantity.UPSILON2,
                         GeodesicKind.CROSSING, range(10, 30))
    assert rep.values["slope"] == pytest.approx(1.0, abs=0.1)
    assert len(rep.rows) == 20
    with pytest.raises(ValueError):
        scaling_report(WIDE, ScalingQuantity.UPSILON1,
                       GeodesicKind.CROSSING, [10, 20])
    with pytest.raises(KindError):
        scaling_report(WIDE, ScalingQuantity.UPSILON2,
                       GeodesicKind.BOUNCING, range(10, 20))


def test_distortion_check_finite():
    b = band_of_c(WIDE, band_midpoint_c(WIDE, 15, GeodesicKind.CROSSING))
    rep = distortion_check(WIDE, b, pairs=20, seed=0)
    for v in rep.values.values():
        assert np.isfinite(v)


def test_integrate_conserves_clairaut():
    x = entry(WIDE, 0.62)
    states = integrate(WIDE, x, 30.0)
    s = np.array([st_.s for st_ in states])
    psi = np.array([st_.psi for st_ in states])
    xi = 1.0 + np.maximum(np.abs(s) - WIDE.L, 0.0) ** WIDE.r
    c = xi * np.cos(psi)
    assert np.max(np.abs(c - c[0])) < 1e-10


@given(n=st.integers(10, 200), frac=st.floats(0.05, 0.95),
       bounce=st.booleans())
@settings(max_examples=40, deadline=None)
def test_transition_preserves_clairaut_property(n, frac, bounce):
    kind = GeodesicKind.BOUNCING if bounce else GeodesicKind.CROSSING
    c = band_midpoint_c(WIDE, n, kind, frac)
    x = entry(WIDE, c)
    res = transition(WIDE, x)
    assert res.kind is kind
    assert clairaut(WIDE, res.exit) == pytest.approx(clairaut(WIDE, x),
                                                     abs=1e-12)
    assert res.upsilon0 > 0 and res.zeta > 0
