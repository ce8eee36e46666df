import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import dblquad, quad

from patholab.errors import DomainError
from patholab.families import FamilyParams, profile_arrays, radial_field
from patholab.weak_form import (
    TestFunction as Bump,
    annulus_integral,
    boundary_term,
    bound_value,
    decay_fit,
    weak_form_check,
)

PHI2 = Bump((0.1, 0.05), 0.6)


def flux_polar(p, phi, r, th):
    """grad(phi) . A grad(u) at polar (r, th) written out by hand for n = 2."""
    x = np.array([r * math.cos(th), r * math.sin(th)])
    v, dv, _, a = (float(t) for t in profile_arrays(p, r))
    xh = x / r
    g = np.array([v, 0.0]) + x[0] * dv * xh
    rad = xh @ g
    F = g + a * (g - rad * xh)
    return float(phi.gradient(x[None, :])[0] @ F)


@pytest.mark.parametrize("fam", ["lipschitz-log", "w11"])
def test_volume_integral_against_dblquad(fam):
    p = FamilyParams(fam, 2, beta=2.0 if fam == "w11" else None).resolve()
    rho = 2.0**-6
    c, R = PHI2.c, PHI2.radius
    # support of phi in polar coordinates about the origin
    def r_exit(th):
        d = np.array([math.cos(th), math.sin(th)])
        cd = d @ c
        return cd + math.sqrt(cd * cd - c @ c + R * R)

    ref, _ = dblquad(lambda r, th: flux_polar(p, PHI2, r, th) * r, 0, 2 * math.pi, lambda th: rho, r_exit,
                     epsabs=1e-12, epsrel=1e-11)
    got = annulus_integral(PHI2, p, rho)
    assert_allclose(got.value, ref, rtol=1e-8, atol=1e-12)


def test_boundary_term_against_quad():
    p = FamilyParams("w11", 2, beta=2.0).resolve()
    rho = 2.0**-8
    v, dv, _, _ = (float(t) for t in profile_arrays(p, rho))
    phi0 = float(PHI2.value(np.zeros((1, 2)))[0])

    def integrand(th):
        x = rho * np.array([[math.cos(th), math.sin(th)]])
        return (float(PHI2.value(x)[0]) - phi0) * math.cos(th) * (v + rho * dv)

    ref = -quad(integrand, 0, 2 * math.pi, epsabs=1e-16, epsrel=1e-13, limit=200)[0] * rho
    assert_allclose(boundary_term(PHI2, p, rho).value, ref, rtol=1e-10)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("fam", ["w11", "lipschitz-log", "bmo-logsq"])
def test_weak_form_identity(fam, n):
    p = FamilyParams(fam, n, beta=2.0 if fam == "w11" else None).resolve()
    phi = Bump((0.1, 0.05, -0.08)[:n], 0.6)
    for k in (4, 10, 16, 20):
        chk = weak_form_check(phi, p, 2.0**-k)
        assert chk.discrepancy <= 1e-6 * abs(chk.boundary_term) + chk.quadrature_error_estimate


def test_w11_relative_agreement():
    p = FamilyParams("w11", 2, beta=2.0).resolve()
    for k in range(4, 21, 4):
        chk = weak_form_check(PHI2, p, 2.0**-k)
        assert chk.discrepancy <= 1e-6 * abs(chk.boundary_term)


def test_decay_fit_and_log_power_exponent():
    p = FamilyParams("w11", 2, beta=2.0).resolve()
    fit = decay_fit(PHI2, p, [2.0**-k for k in range(4, 21)])
    assert fit.verdict == "PASS"
    assert fit.ratio_spread <= 1.0
    assert 1.8 <= fit.beta_hat <= 2.2


@pytest.mark.parametrize("beta", [1.5, 3.0])
def test_log_power_exponent_tracks_beta(beta):
    p = FamilyParams("w11", 3, beta=beta).resolve()
    fit = decay_fit(Bump((0.1, 0.05, -0.08), 0.6), p)
    assert abs(fit.beta_hat - beta) <= 0.1 * beta


def test_bound_value_closed_form():
    p = FamilyParams("lipschitz-log", 2).resolve()
    rho = 1e-3
    assert_allclose(bound_value(p, rho), rho**2 * (math.log(p.r0 / rho) + 1.0), rtol=1e-14)


def test_bump_properties():
    phi = Bump((0.2, 0.0), 0.5)
    X = np.array([[0.2, 0.0], [0.7, 0.0], [0.2, 0.1]])
    assert_allclose(phi.value(X), [1.0, 0.0, (1 - 0.04) ** 3], atol=1e-15)
    # maximum gradient attained at distance R / sqrt(5)
    s = 0.5 / math.sqrt(5)
    g = np.linalg.norm(phi.gradient(np.array([[0.2 + s, 0.0]]))[0])
    assert_allclose(g, phi.lipschitz, rtol=1e-12)
    assert_allclose(phi.reflected().value(-X), phi.value(X))


@settings(max_examples=50, deadline=None)
@given(x=st.lists(st.floats(-0.6, 0.6), min_size=2, max_size=2))
def test_minus_origin_value_matches_difference(x):
    phi = Bump((0.1, 0.05), 0.6)
    X = np.array([x])
    direct = phi.value(X) - phi.value(np.zeros((1, 2)))
    assert_allclose(phi.minus_origin_value(X), direct, atol=1e-14)


def test_gradient_matches_finite_difference():
    phi = Bump((0.1, 0.05, 0.0), 0.6)
    X = np.random.default_rng(2).uniform(-0.4, 0.4, (10, 3))
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        assert_allclose(phi.gradient(X)[:, i], (phi.value(X + e) - phi.value(X - e)) / (2 * h), atol=1e-8)


def test_domain_errors():
    with pytest.raises(DomainError):
        Bump((0.5, 0.0), 0.6)
    with pytest.raises(DomainError):
        Bump((0.0, 0.0), -1.0)
    p = FamilyParams("lipschitz-log", 3).resolve()
    with pytest.raises(DomainError):
        weak_form_check(PHI2, p, 0.01)
    with pytest.raises(DomainError):
        annulus_integral(PHI2, radial_field(FamilyParams("lipschitz-log", 2)), 1.5)
