"""Integration by parts on ``B(0,1) \\ B(0,rho)`` for ``u = x_1 v(|x|)``.

For a classical solution away from the origin,

    int_{B \\ B_rho} grad(phi) . A grad(u) = - int_{dB_rho} (phi - phi(0)) x_1 (v/rho + v') ds,

and the right-hand side is bounded by ``C rho^n (|v(rho)| + rho |v'(rho)|)``.
Both sides are computed by independent quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from patholab.errors import DomainError, QuadratureError
from patholab.families import EPS, Family, FamilyParams, RadialField, _numeric, as_radial_field
from patholab.quadrature import QuadResult, ball_minus_hole, sphere_area, sphere_rule


ROUNDOFF = 1000 * EPS


@dataclass(frozen=True)
class TestFunction:
    """Bump ``(1 - |x - c|^2 / R^2)^3`` on B(c, R), zero outside; C^2."""

    __test__ = False  # not a pytest class

    center: tuple
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", tuple(float(t) for t in c))
        if self.radius <= 0:
            raise DomainError("bump radius must be positive")
        if np.linalg.norm(c) + self.radius >= 1.0:
            raise DomainError("test function support must lie strictly inside B(0,1)")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center)

    def _q(self, X):
        d = np.atleast_2d(X) - self.c
        return np.einsum("ij,ij->i", d, d) / self.radius**2

    def value(self, X):
        q = self._q(X)
        return np.where(q < 1.0, (1.0 - np.minimum(q, 1.0)) ** 3, 0.0)

    def gradient(self, X):
        X = np.atleast_2d(X)
        q = self._q(X)
        fac = np.where(q < 1.0, -6.0 * (1.0 - np.minimum(q, 1.0)) ** 2 / self.radius**2, 0.0)
        return fac[:, None] * (X - self.c)

    def minus_origin_value(self, X):
        """``phi(x) - phi(0)`` without cancellation when both points are in the support."""
        X = np.atleast_2d(X)
        q = self._q(X)
        q0 = float(self.c @ self.c) / self.radius**2
        if q0 >= 1.0:
            return self.value(X)
        dq = (np.einsum("ij,ij->i", X, X) - 2.0 * X @ self.c) / self.radius**2  # q - q0
        a, b = 1.0 - q, 1.0 - q0
        inside = q < 1.0
        diff = -dq * (a * a + a * b + b * b)
        return np.where(inside, diff, -(b**3))

    @property
    def lipschitz(self) -> float:
        """max |grad phi| = 96 / (25 sqrt(5) R), attained at |x - c| = R / sqrt(5)."""
        return 96.0 / (25.0 * math.sqrt(5.0) * self.radius)

    def reflected(self) -> "TestFunction":
        """``x -> phi(-x)``."""
        return TestFunction(tuple(-self.c), self.radius)


@dataclass(frozen=True)
class AnnulusQuadratureResult:
    rho: float
    volume_integral: float
    boundary_term: float
    bound_value: float
    quadrature_error_estimate: float
    lipschitz_bound: float

    @property
    def discrepancy(self) -> float:
        return abs(self.volume_integral - self.boundary_term)


@dataclass
class DecayFit:
    rhos: np.ndarray
    terms: np.ndarray
    model: np.ndarray
    constant: float
    ratio_spread: float
    bound_ok: bool
    monotone: bool
    beta_hat: float | None
    naive_slope: float | None
    verdict: str


def _grad_u_flux(field: RadialField, X: np.ndarray):
    """``A grad u`` for ``u = x_1 v(|x|)``."""
    r = np.linalg.norm(X, axis=1)
    v = field.v(r)
    dv = field.dv(r)
    a = np.broadcast_to(field.alpha(r), r.shape)
    xhat = X / r[:, None]
    g = (X[:, 0] * dv)[:, None] * xhat
    g[:, 0] += v
    radial = np.einsum("ij,ij->i", xhat, g)
    return g + a[:, None] * (g - radial[:, None] * xhat)


def _annulus_once(phi: TestFunction, field: RadialField, rho: float, m_r: int, m_ang: int):
    X, W = ball_minus_hole(phi.c, phi.radius, rho, field.n, m_r, m_ang)
    F = _grad_u_flux(field, X)
    G = phi.gradient(X)
    terms = W * np.einsum("ij,ij->i", G, F)
    return float(np.sum(terms)), float(np.sum(np.abs(terms)))


def _check(phi: TestFunction, field: RadialField, rho: float):
    if phi.n != field.n:
        raise DomainError("test function and field dimensions differ")
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")


def annulus_integral(phi: TestFunction, params, rho: float, rule=(16, 32), tol: float | None = None) -> QuadResult:
    """``int_{B(0,1) \\ B(0,rho)} grad(phi) . A grad(u)`` with a nested-rule error estimate.

    The estimate also carries a roundoff floor ``ROUNDOFF * int |integrand|``,
    which dominates once the integral itself is tiny compared with the
    integrand (e.g. the Lipschitz family at small rho).
    """
    field = as_radial_field(params)
    _check(phi, field, rho)
    m_r, m_ang = rule
    try:
        coarse, _ = _annulus_once(phi, field, rho, m_r, m_ang)
        fine, absint = _annulus_once(phi, field, rho, m_r + m_r // 2, m_ang + m_ang // 2)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    err = abs(fine - coarse) + ROUNDOFF * absint
    if tol is not None and err > tol:
        raise QuadratureError(f"annulus quadrature discrepancy {err:.3e} exceeds {tol:.3e}")
    return QuadResult(fine, err)


def _boundary_once(phi: TestFunction, field: RadialField, rho: float, m: int) -> float:
    dirs, w = sphere_rule(field.n, m)
    X = rho * dirs
    radial = float(field.v(rho)) / rho + float(field.dv(rho))
    vals = phi.minus_origin_value(X) * X[:, 0] * radial
    return -float(np.sum(w * vals)) * rho ** (field.n - 1)


def boundary_term(phi: TestFunction, params, rho: float, m: int = 16) -> QuadResult:
    """``-int_{dB_rho} (phi - phi(0)) x_1 (v/rho + v') ds`` on the sphere of radius rho."""
    field = as_radial_field(params)
    _check(phi, field, rho)
    coarse = _boundary_once(phi, field, rho, m)
    fine = _boundary_once(phi, field, rho, m + m // 2)
    return QuadResult(fine, abs(fine - coarse))


def bound_value(params, rho: float) -> float:
    """``rho^n (|v(rho)| + rho |v'(rho)|)``."""
    field = as_radial_field(params)
    return rho**field.n * (abs(float(field.v(rho))) + rho * abs(float(field.dv(rho))))


def weak_form_check(phi: TestFunction, params, rho: float) -> AnnulusQuadratureResult:
    field = as_radial_field(params)
    vol = annulus_integral(phi, field, rho)
    bt = boundary_term(phi, field, rho)
    bv = bound_value(field, rho)
    return AnnulusQuadratureResult(
        rho=rho,
        volume_integral=vol.value,
        boundary_term=bt.value,
        bound_value=bv,
        quadrature_error_estimate=vol.error + bt.error,
        lipschitz_bound=phi.lipschitz * sphere_area(field.n) * bv,
    )


DEFAULT_RHOS = tuple(2.0**-k for k in range(4, 25))


def _fit_log_power(params: FamilyParams, rhos, terms):
    """Exponent of the leading boundary asymptotics ``L^-b ((n-1) - b/L)``, ``L = log(r0/rho)``."""
    p = _numeric(params)
    L = math.log(p.r0) - np.log(rhos)
    lt = np.log(np.abs(terms))
    n = p.n

    def spread(b):
        inner = (n - 1) - b / L
        if np.any(inner <= 0):
            return np.inf
        res = lt + b * np.log(L) - np.log(inner)
        return float(np.var(res))

    hi = min(10.0, float((n - 1) * L.min()) - 1e-9)
    out = minimize_scalar(spread, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10})
    naive = -float(np.polyfit(np.log(L), lt, 1)[0])
    return float(out.x), naive


def decay_fit(phi: TestFunction, params, rho_sequence=DEFAULT_RHOS) -> DecayFit:
    """Compare boundary terms with ``rho^n (|v| + rho|v'|)`` along a geometric sequence.

    PASS needs: every ratio within a factor 2 of the geometric-mean constant,
    the Lipschitz bound ``|term| <= Lip(phi) |S^{n-1}| model`` at each rho,
    and terms nonincreasing towards zero.
    """
    field = as_radial_field(params)
    rhos = np.asarray(sorted(rho_sequence, reverse=True), dtype=float)
    if rhos.size < 3:
        raise ValueError("need at least three radii")
    terms = np.array([boundary_term(phi, field, r).value for r in rhos])
    model = np.array([bound_value(field, r) for r in rhos])
    if np.any(terms == 0) or np.any(model == 0):
        return DecayFit(rhos, terms, model, 0.0, math.inf, True, True, None, None, "DEGENERATE")
    ratios = np.abs(terms) / model
    C = float(np.exp(np.mean(np.log(ratios))))
    spread = float(np.max(np.abs(np.log(ratios / C))) / math.log(2.0))  # in factors of 2
    bound_ok = bool(np.all(np.abs(terms) <= phi.lipschitz * sphere_area(field.n) * model * (1 + 1e-9)))
    mags = np.abs(terms)
    monotone = bool(np.all(np.diff(mags) <= 1e-12 * mags[:-1]))
    beta_hat = naive = None
    if isinstance(params, FamilyParams) and params.family is Family.W11_LOGPOW:
        beta_hat, naive = _fit_log_power(params, rhos, terms)
    ok = spread <= 1.0 and bound_ok and monotone and mags[-1] < mags[0]
    return DecayFit(rhos, terms, model, C, spread, bound_ok, monotone, beta_hat, naive, "PASS" if ok else "FAIL")
