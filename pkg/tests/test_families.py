import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from patholab.errors import DomainError, ParameterError
from patholab.families import (
    Family,
    FamilyParams,
    alpha_coefficients,
    alpha_from_profile,
    alpha_infimum,
    alpha_values,
    choose_r0,
    eval_profile,
    log_profile,
    power_alpha,
    profile_arrays,
    radial_field,
)


def fd_derivatives(params, r, h=1e-5):
    """Central differences of v in log r: independent of the closed-form derivatives."""
    f = lambda s: profile_arrays(params, s)[0]
    up, mid, dn = f(r * math.exp(h)), f(r), f(r * math.exp(-h))
    vy = (up - dn) / (2 * h)
    vyy = (up - 2 * mid + dn) / h**2
    dv = vy / r
    ddv = (vyy - vy) / r**2
    return dv, ddv


CASES = [
    FamilyParams("w11", 2, beta=2.0),
    FamilyParams("w11", 3, beta=1.5),
    FamilyParams("lipschitz-log", 2),
    FamilyParams("bmo-logsq", 3),
    FamilyParams("power", 2, a=0.5),
    FamilyParams("power", 3, a=-0.5),
]


@pytest.mark.parametrize("params", CASES, ids=lambda p: p.label)
def test_closed_form_derivatives_match_finite_differences(params):
    p = params.resolve()
    r = np.array([0.01, 0.1, 0.3, 0.7])
    _, dv, ddv, _ = profile_arrays(p, r)
    fdv, fddv = fd_derivatives(p, r)
    assert_allclose(dv, fdv, rtol=1e-7)
    assert_allclose(ddv, fddv, rtol=1e-4)


@pytest.mark.parametrize("params", CASES, ids=lambda p: p.label)
def test_balance_relation_recovers_alpha(params):
    p = params.resolve()
    for r in (1e-6, 1e-3, 0.2, 0.9):
        prof = eval_profile(p, r)
        assert_allclose(alpha_from_profile(p.n, r, prof.v, prof.dv, prof.ddv), prof.alpha, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize(
    "n,a,expected",
    [(2, 1.0, 3.0), (3, 0.5, 0.5 * 3.5 / 2), (2, 0.0, 0.0), (3, -2.5, -2.5 * 0.5 / 2)],
)
def test_power_alpha(n, a, expected):
    assert_allclose(power_alpha(n, a), expected, rtol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_alpha_coefficients(n):
    b = 1.7
    c1, c2 = alpha_coefficients(FamilyParams("w11", n, beta=b))
    assert_allclose([c1, c2], [-b * n / (n - 1), b * (b + 1) / (n - 1)])
    assert_allclose(alpha_coefficients(FamilyParams("lipschitz-log", n)), [-n / (n - 1), 0.0])
    assert_allclose(alpha_coefficients(FamilyParams("bmo-logsq", n)), [-2 * n / (n - 1), 2 / (n - 1)])


def test_r0_lipschitz_n2_is_e4():
    # alpha = -2 s with s = 1/log(r0/r) <= 1/log r0; -2 s >= -1/2 needs log r0 >= 4
    r0 = choose_r0(FamilyParams("lipschitz-log", 2), 0.5)
    assert_allclose(r0, math.exp(4.0), rtol=1e-6)


def test_r0_bmo_n2_root_of_quadratic():
    # 2 s^2 - 4 s + 1/2 = 0 has smaller root 1 - sqrt(3)/2
    s = 1.0 - math.sqrt(3.0) / 2.0
    assert_allclose(choose_r0(FamilyParams("bmo-logsq", 2), 0.5), math.exp(1.0 / s), rtol=1e-9)


def test_r0_w11_n2_beta2_is_e6():
    # alpha = -4 s + 6 s^2 reaches -2/3 at s = 1/3; the crossing of -1/2 is at s = 1/6
    assert_allclose(choose_r0(FamilyParams("w11", 2, beta=2.0), 0.5), math.exp(6.0), rtol=1e-9)


@pytest.mark.parametrize("fam", ["w11", "lipschitz-log", "bmo-logsq"])
@pytest.mark.parametrize("n", [2, 3])
def test_auto_r0_meets_margin(fam, n):
    p = FamilyParams(fam, n, beta=2.0 if fam == "w11" else None).resolve(0.5)
    assert alpha_infimum(p) >= -0.5 - 1e-12
    r = np.geomspace(1e-12, 1.0, 20001)[:-1]
    assert alpha_values(p, r).min() >= -0.5 - 1e-12


def test_explicit_r0_validation():
    with pytest.raises(ParameterError):
        FamilyParams("lipschitz-log", 2, r0=2.0)
    with pytest.raises(ParameterError):
        FamilyParams("lipschitz-log", 2, r0=10.0).resolve(0.5)
    p = FamilyParams("lipschitz-log", 2, r0=100.0).resolve(0.5)
    assert p.r0 == 100.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="w11", n=2, beta=1.0),
        dict(family="w11", n=2),
        dict(family="w11", n=1, beta=2.0),
        dict(family="w11", n=2.5, beta=2.0),
        dict(family="power", n=2),
        dict(family="power", n=2, a=float("nan")),
    ],
)
def test_parameter_errors(kwargs):
    with pytest.raises(ParameterError):
        FamilyParams(**kwargs)


def test_power_ellipticity_rejected():
    # 1 + alpha = 0.25 for (n, a) = (2, -0.5) and -0.125 for (3, -1.5)
    FamilyParams("power", 2, a=-0.5).resolve()
    with pytest.raises(ParameterError):
        FamilyParams("power", 3, a=-1.5).resolve()


def test_radial_field_domain():
    f = radial_field(FamilyParams("lipschitz-log", 2))
    with pytest.raises(DomainError):
        eval_profile(FamilyParams("lipschitz-log", 2).resolve(), 0.0)
    assert f.n == 2


@settings(max_examples=60, deadline=None)
@given(
    beta=st.floats(1.05, 4.0),
    n=st.integers(2, 5),
    logr=st.floats(-200.0, -0.01),
)
def test_log_profile_consistent_with_closed_forms(beta, n, logr):
    p = FamilyParams("w11", n, beta=beta).resolve()
    r = math.exp(logr)
    logv, d1, d2 = log_profile(p, r)
    with np.errstate(over="ignore", invalid="ignore"):
        v, dv, ddv, _ = profile_arrays(p, r)
    if np.isfinite(v) and v > 0 and np.isfinite(ddv):
        assert_allclose(logv, math.log(v), rtol=1e-12, atol=1e-12)
        assert_allclose(d1, r * dv / v, rtol=1e-10, atol=1e-12)
        assert_allclose(d2, r * r * ddv / v, rtol=1e-10, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 6), margin=st.floats(0.05, 0.95), fam=st.sampled_from(["w11", "lipschitz-log", "bmo-logsq"]))
def test_choose_r0_is_minimal(n, margin, fam):
    p = FamilyParams(fam, n, beta=2.0 if fam == "w11" else None)
    r0 = choose_r0(p, margin)
    c1, c2 = alpha_coefficients(p)
    s = np.linspace(0.0, 1.0 / math.log(r0), 2001)
    assert np.min(c1 * s + c2 * s * s) >= -margin - 1e-12
    if r0 > math.e * (1 + 1e-9):
        # a slightly smaller r0 widens the s-range and breaks the bound
        s2 = np.linspace(0.0, 1.0 / math.log(r0 * 0.999), 2001)
        assert np.min(c1 * s2 + c2 * s2 * s2) < -margin


def test_family_enum_values():
    assert {f.value for f in Family} == {"power", "w11", "lipschitz-log", "bmo-logsq"}
    assert not Family.POWER.is_log
