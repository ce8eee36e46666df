"""Checks of the divergence identity for ``u = P(x) v(|x|)``.

For a homogeneous harmonic polynomial P of degree k and
``A = I + alpha (I - xx^T/|x|^2)``,

    div(A grad(P v)) = P (v'' + (n+2k-1) v'/r - k(n+k-2) alpha v / r^2).

The right-hand side is evaluated in closed form and compared against a
second-order central difference of the flux ``A grad u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from patholab.errors import DomainError, StencilError
from patholab.families import FamilyParams, _numeric, profile_arrays
from patholab.harmonics import HarmonicPolynomial

AlphaFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class ResidualReport:
    sup_residual: float
    mean_residual: float
    fd_step: float
    convergence_order: float
    sample_count: int
    region: tuple[float, float]
    sup_analytic: float = 0.0
    sup_numeric: float = 0.0
    skipped: int = 0
    step_errors: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)


def _alpha(params, r, alpha: AlphaFn | None):
    if alpha is None:
        return profile_arrays(params, r)[3]
    return np.broadcast_to(np.asarray(alpha(r), dtype=float), np.shape(r))


def matched_alpha(params: FamilyParams, k: int) -> AlphaFn:
    """The alpha that makes the degree-k bracket vanish for this profile."""
    p = _numeric(params)
    n = p.n
    if k * (n + k - 2) == 0:
        raise ValueError("degree-k bracket has no alpha term")

    def alpha(r):
        v, dv, ddv, _ = profile_arrays(p, r)
        return (r * r * ddv + (n + 2 * k - 1) * r * dv) / (k * (n + k - 2) * v)

    return alpha


def bracket(params: FamilyParams, k: int, r, alpha: AlphaFn | None = None):
    """Radial bracket and the sum of the magnitudes of its three terms."""
    p = _numeric(params)
    n = p.n
    v, dv, ddv, a = profile_arrays(p, r)
    a = _alpha(p, r, alpha)
    t1 = ddv
    t2 = (n + 2 * k - 1) * dv / r
    t3 = -k * (n + k - 2) * a * v / (r * r)
    return t1 + t2 + t3, np.abs(t1) + np.abs(t2) + np.abs(t3)


def _points(x) -> np.ndarray:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(X, axis=1)
    if np.any(r == 0) or np.any(r >= 1):
        raise DomainError("identity is stated on B(0,1) minus the origin")
    return X


def div_A_grad_analytic(x, params: FamilyParams, P: HarmonicPolynomial, alpha: AlphaFn | None = None):
    """Closed-form ``div(A grad(P v))`` at x (a point or an (m, n) array)."""
    X = _points(x)
    r = np.linalg.norm(X, axis=1)
    b, _ = bracket(params, P.k, r, alpha)
    out = P.value(X) * b
    return float(out[0]) if np.ndim(x) == 1 else out


def flux(X: np.ndarray, params: FamilyParams, P: HarmonicPolynomial, alpha: AlphaFn | None = None) -> np.ndarray:
    """``A(x) grad u(x)`` with ``grad u = v grad P + P v' x/|x|`` in closed form."""
    p = _numeric(params)
    r = np.linalg.norm(X, axis=1)
    v, dv, _, _ = profile_arrays(p, r)
    a = _alpha(p, r, alpha)
    xhat = X / r[:, None]
    g = v[:, None] * P.gradient(X) + (P.value(X) * dv)[:, None] * xhat
    radial = np.einsum("ij,ij->i", xhat, g)
    return g + a[:, None] * (g - radial[:, None] * xhat)


def default_step(r, factor: float = 1e-3, floor: float = 1e-5):
    return np.maximum(floor, factor * np.asarray(r))


def div_A_grad_numeric(x, params: FamilyParams, P: HarmonicPolynomial, h=None, alpha: AlphaFn | None = None):
    """Central-difference divergence of the flux; O(h^2) accurate.

    ``h`` may be a scalar or one step per point; by default
    ``max(1e-5, 1e-3 |x|)``.
    """
    X = _points(x)
    m, n = X.shape
    r = np.linalg.norm(X, axis=1)
    h = default_step(r) if h is None else np.broadcast_to(np.asarray(h, dtype=float), (m,))
    reach = (1.0 + math.sqrt(n)) * h
    if np.any(r <= reach) or np.any(r + reach >= 1.0):
        raise StencilError("finite-difference stencil leaves B(0,1) minus the origin")
    out = np.zeros(m)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        Fp = flux(X + h[:, None] * e, params, P, alpha)[:, i]
        Fm = flux(X - h[:, None] * e, params, P, alpha)[:, i]
        out += (Fp - Fm) / (2.0 * h)
    return float(out[0]) if np.ndim(x) == 1 else out


def term_scale(X, params: FamilyParams, P: HarmonicPolynomial, alpha: AlphaFn | None = None):
    """Magnitude used to make residuals relative: ``(|P| + r|grad P|)`` times the bracket terms."""
    r = np.linalg.norm(X, axis=1)
    _, mag = bracket(params, P.k, r, alpha)
    grad = np.linalg.norm(P.gradient(X), axis=1)
    return (np.abs(P.value(X)) + r * grad) * mag + 1e-300


def sample_annulus(n: int, r_min: float, r_max: float, samples: int, seed: int = 0) -> np.ndarray:
    """Points with log|x| uniform on [log r_min, log r_max] and uniform directions."""
    rng = np.random.default_rng(seed)
    rad = np.exp(rng.uniform(math.log(r_min), math.log(r_max), samples))
    g = rng.standard_normal((samples, n))
    return rad[:, None] * g / np.linalg.norm(g, axis=1, keepdims=True)


def fit_order(steps, errors) -> float:
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = errors > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(steps[ok]), np.log(errors[ok]), 1)[0])


def identity_residual_sweep(
    params: FamilyParams,
    P: HarmonicPolynomial,
    region=(0.05, 0.9),
    samples: int = 1000,
    steps=(1e-3, 5e-4, 2.5e-4),
    seed: int = 0,
    alpha: AlphaFn | None = None,
    floor: float = 1e-5,
) -> ResidualReport:
    """Compare the analytic and finite-difference divergence on an annulus.

    ``steps`` are relative step factors: at a point x the step is
    ``max(floor * f / steps[0], f |x|)`` so consecutive steps keep an exact
    ratio.  Points whose stencil leaves the region are counted as skipped.
    """
    r_min, r_max = region
    if not 0 < r_min < r_max < 1:
        raise DomainError("region must be an annulus inside B(0,1)")
    p = _numeric(params)
    X = sample_annulus(p.n, r_min, r_max, samples, seed)
    r = np.linalg.norm(X, axis=1)
    scale = term_scale(X, p, P, alpha)
    analytic = div_A_grad_analytic(X, p, P, alpha)
    _, mag = bracket(p, P.k, r, alpha)
    b, _ = bracket(p, P.k, r, alpha)
    sup_analytic = float(np.max(np.abs(b) / (mag + 1e-300)))

    reach = (1.0 + math.sqrt(p.n)) * max(steps) * r
    valid = (r > reach) & (r + reach < 1.0)
    Xv, av, sv = X[valid], analytic[valid], scale[valid]
    errs, step_sup = [], []
    numeric = None
    for f in steps:
        h = np.maximum(floor * f / steps[0], f * np.linalg.norm(Xv, axis=1))
        numeric = div_A_grad_numeric(Xv, p, P, h, alpha)
        e = np.abs(numeric - av) / sv
        errs.append(e)
        step_sup.append(float(e.max()) if e.size else 0.0)
    finest = errs[-1]
    return ResidualReport(
        sup_residual=float(finest.max()) if finest.size else 0.0,
        mean_residual=float(finest.mean()) if finest.size else 0.0,
        fd_step=float(steps[-1]),
        convergence_order=fit_order(steps, step_sup),
        sample_count=int(valid.sum()),
        region=(float(r_min), float(r_max)),
        sup_analytic=sup_analytic,
        sup_numeric=float(np.max(np.abs(numeric) / sv)) if numeric is not None and numeric.size else 0.0,
        skipped=int((~valid).sum()),
        step_errors=step_sup,
        steps=[float(s) for s in steps],
    )
