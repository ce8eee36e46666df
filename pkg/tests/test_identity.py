import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from patholab import harmonics
from patholab.errors import DomainError, ParameterError, StencilError
from patholab.families import FamilyParams
from patholab.identity import (
    bracket,
    div_A_grad_analytic,
    div_A_grad_numeric,
    identity_residual_sweep,
    matched_alpha,
)


def symbolic_divergence(n, poly, v, alpha):
    """div(A grad(P v)) by sympy for symbolic v(r), alpha(r); returns a callable."""
    xs = sp.symbols(f"x1:{n + 1}", real=True)
    r = sp.sqrt(sum(x**2 for x in xs))
    u = poly(*xs) * v(r)
    grad = [sp.diff(u, x) for x in xs]
    radial = sum(x * g for x, g in zip(xs, grad)) / r
    flux = [g + alpha(r) * (g - radial * x / r) for g, x in zip(grad, xs)]
    div = sum(sp.diff(f, x) for f, x in zip(flux, xs))
    return sp.lambdify(xs, div, "numpy")


SYM_CASES = [
    # (n, degree-k harmonic, catalog id)
    (2, lambda x1, x2: x1, "x1"),
    (3, lambda x1, x2, x3: x1, "x1"),
    (3, lambda x1, x2, x3: x1 * x2, "x1*x2"),
    (2, lambda x1, x2: x1**2 - x2**2, "re(x1+ix2)^2"),
    (3, lambda x1, x2, x3: x1 * x2 * x3, "x1*x2*x3"),
]


@pytest.mark.parametrize("n,poly,pid", SYM_CASES)
def test_closed_form_bracket_against_sympy(n, poly, pid):
    """Arbitrary (non-matched) v and alpha: the bracket formula must hold identically."""
    p = FamilyParams("lipschitz-log", n).resolve()
    r0 = p.r0
    v_sym = lambda r: sp.log(r0 / r) ** 2 + r
    a_sym = lambda r: sp.Rational(1, 3) * r**2 - sp.Rational(1, 5)
    f = symbolic_divergence(n, poly, v_sym, a_sym)
    P = harmonics.get(n, pid)
    rng = np.random.default_rng(0)
    X = rng.uniform(-0.5, 0.5, (20, n))
    r = np.linalg.norm(X, axis=1)
    v = np.log(r0 / r) ** 2 + r
    dv = -2 * np.log(r0 / r) / r + 1
    ddv = 2 / r**2 + 2 * np.log(r0 / r) / r**2
    a = r**2 / 3 - 0.2
    k = P.k
    closed = P.value(X) * (ddv + (n + 2 * k - 1) * dv / r - k * (n + k - 2) * a * v / r**2)
    assert_allclose(closed, f(*X.T), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("params", [
    FamilyParams("w11", 2, beta=2.0), FamilyParams("w11", 3, beta=1.5),
    FamilyParams("lipschitz-log", 2), FamilyParams("bmo-logsq", 3), FamilyParams("power", 3, a=0.7),
], ids=lambda p: p.label)
def test_family_solves_equation(params):
    p = params.resolve()
    r = np.geomspace(1e-4, 0.99, 50)
    b, mag = bracket(p, 1, r)
    assert np.max(np.abs(b) / mag) <= 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_sweep_order_and_residual(n):
    p = FamilyParams("w11", n, beta=2.0).resolve()
    rep = identity_residual_sweep(p, harmonics.x1(n), samples=300, seed=3)
    assert rep.sup_analytic <= 1e-9
    assert 1.7 <= rep.convergence_order <= 2.3
    assert rep.sample_count + rep.skipped == 300


def test_matched_alpha_for_degree_two():
    p = FamilyParams("bmo-logsq", 3).resolve()
    P = harmonics.get(3, "zonal2")
    al = matched_alpha(p, 2)
    rep = identity_residual_sweep(p, P, samples=200, alpha=al)
    assert rep.sup_analytic <= 1e-9
    # without matching, degree 2 does not solve the equation
    rep_bad = identity_residual_sweep(p, P, samples=200)
    assert rep_bad.sup_analytic > 1e-3


def test_matched_alpha_degree_zero_rejected():
    with pytest.raises(ValueError):
        matched_alpha(FamilyParams("lipschitz-log", 2), 0)


def test_numeric_divergence_single_point():
    p = FamilyParams("lipschitz-log", 2).resolve()
    P = harmonics.x1(2)
    x = np.array([0.3, 0.2])
    # both sides vanish; the numeric value is O(h^2) relative to term sizes
    assert abs(div_A_grad_analytic(x, p, P)) < 1e-12
    assert abs(div_A_grad_numeric(x, p, P)) < 1e-4


def test_domain_and_stencil_errors():
    p = FamilyParams("lipschitz-log", 2).resolve()
    P = harmonics.x1(2)
    with pytest.raises(DomainError):
        div_A_grad_analytic(np.zeros(2), p, P)
    with pytest.raises(StencilError):
        div_A_grad_numeric(np.array([0.99999, 0.0]), p, P, h=1e-3)
    with pytest.raises(DomainError):
        identity_residual_sweep(p, P, region=(0.5, 1.2))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_catalog_is_harmonic(n):
    rng = np.random.default_rng(n)
    X = rng.uniform(-1, 1, (30, n))
    for P in harmonics.catalog(n).values():
        # one Richardson step removes the h^2 term, exact for degree <= 5
        lap = (4 * harmonics.fd_laplacian(P, X, h=5e-3) - harmonics.fd_laplacian(P, X, h=1e-2)) / 3
        scale = 1 + np.abs(P.value(X))
        assert np.max(np.abs(lap) / scale) < 1e-8, P.id


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.1, 3.0), seed=st.integers(0, 1000), n=st.integers(2, 4))
def test_catalog_homogeneous(t, seed, n):
    X = np.random.default_rng(seed).uniform(-1, 1, (5, n))
    for P in harmonics.catalog(n).values():
        assert_allclose(P.value(t * X), t**P.k * P.value(X), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_catalog_gradients(n):
    X = np.random.default_rng(5).uniform(-1, 1, (10, n))
    h = 1e-6
    for P in harmonics.catalog(n).values():
        G = P.gradient(X)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            assert_allclose(G[:, i], (P.value(X + e) - P.value(X - e)) / (2 * h), atol=1e-7)


def test_unknown_polynomial():
    with pytest.raises(ParameterError):
        harmonics.get(2, "x1*x2*x3")
