"""Coefficient matrices, ellipticity bounds, modulus of continuity, Dini integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from patholab.errors import DomainError
from patholab.families import (
    EPS,
    Family,
    FamilyParams,
    _numeric,
    alpha_values,
    power_alpha,
)


@dataclass(frozen=True)
class CoefficientMatrix:
    """A(x) with, when known, its offset ``A(x) - I`` kept at full relative precision."""

    n: int
    entries: np.ndarray
    x: np.ndarray
    offset: np.ndarray | None = None

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True)
class EllipticityBounds:
    lam: float
    Lam: float
    region: tuple[float, float]
    inf_alpha: float
    sup_alpha: float

    @property
    def elliptic(self) -> bool:
        return self.lam > 0


@dataclass(frozen=True)
class ModulusSample:
    t: float
    omega: float
    alpha_at_t: float
    pairs: int

    @property
    def ratio(self) -> float:
        """Measured ``omega / |alpha(t)|``; the constant ``c`` in ``omega >= c |alpha(t)|``."""
        return self.omega / abs(self.alpha_at_t) if self.alpha_at_t else math.inf


@dataclass(frozen=True)
class ModulusModel:
    """``omega_A(t) ~ c |alpha(t)|`` fitted on a grid of scales."""

    c: float
    samples: tuple[ModulusSample, ...]
    rel_residual: float


@dataclass(frozen=True)
class DiniPartial:
    delta: float
    value: float
    model: ModulusModel


@dataclass(frozen=True)
class DiniGrowthFit:
    deltas: np.ndarray
    values: np.ndarray
    coefficient: float
    intercept: float
    r_squared: float
    difference_ratios: np.ndarray = field(repr=False)

    @property
    def diverges(self) -> bool:
        return self.coefficient > 0 and self.r_squared >= 0.99


def _as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("x must be a point in R^n with n >= 2")
    if not np.any(x):
        raise DomainError("A(x) is not defined by the formula at x = 0")
    return x


def _complement_projector(x: np.ndarray) -> np.ndarray:
    """``I - x x^T / |x|^2`` with diagonal entries summed from the other coordinates."""
    sq = x * x
    r2 = sq.sum()
    P = -np.outer(x, x) / r2
    np.fill_diagonal(P, [np.delete(sq, i).sum() / r2 for i in range(x.size)])
    return P


def assemble_A(x, alpha_at_r: float) -> CoefficientMatrix:
    """``a_ij = delta_ij + alpha (delta_ij - x_i x_j / |x|^2)``."""
    x = _as_point(x)
    n = x.size
    off = alpha_at_r * _complement_projector(x)
    return CoefficientMatrix(n, np.eye(n) + off, x.copy(), off)


def assemble_A_kappa(x, kappa_at_r: float) -> CoefficientMatrix:
    """``a_ij = delta_ij + kappa (delta_ij - n delta_i1 delta_j1 x_1^2 / |x|^2)``."""
    x = _as_point(x)
    n = x.size
    m = np.eye(n)
    m[0, 0] -= n * x[0] ** 2 / np.dot(x, x)
    return CoefficientMatrix(n, np.eye(n) + kappa_at_r * m, x.copy(), kappa_at_r * m)


def continuous_at_origin(params: FamilyParams) -> bool:
    """True when ``alpha(0+) = 0`` so that ``A(0) = I`` extends A continuously."""
    if params.family is Family.POWER:
        return power_alpha(params.n, params.a) == 0.0
    return True


def coefficient_batch(params: FamilyParams, X: np.ndarray) -> np.ndarray:
    """A at each row of ``X`` (shape (m, n)); rows equal to 0 get the continuity extension."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m, n = X.shape
    r2 = np.einsum("ij,ij->i", X, X)
    zero = r2 == 0
    if np.any(zero) and not continuous_at_origin(params):
        raise DomainError("A has no continuous extension to the origin for these parameters")
    out = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    nz = ~zero
    if np.any(nz):
        Xn = X[nz]
        r = np.sqrt(r2[nz])
        alpha = np.broadcast_to(alpha_values(params, r), r.shape)
        proj = Xn[:, :, None] * Xn[:, None, :] / r2[nz][:, None, None]
        out[nz] += alpha[:, None, None] * (np.eye(n) - proj)
    return out


def ellipticity_bounds(params: FamilyParams, r_interval=(0.0, 1.0), grid: int = 10_000) -> EllipticityBounds:
    """Two-sided bounds ``lam |xi|^2 <= A xi . xi <= Lam |xi|^2`` over a radius interval.

    alpha is scanned on a log-uniform and a uniform grid inside the open
    interval, together with its one-sided limits at the endpoints.  A
    non-positive ``lam`` is reported, never raised.
    """
    lo, hi = float(r_interval[0]), float(r_interval[1])
    if not 0.0 <= lo < hi <= 1.0:
        raise DomainError("radius interval must satisfy 0 <= lo < hi <= 1")
    p = _numeric(params)
    lo_in = max(lo, 1e-300)
    r_log = np.geomspace(max(lo_in, 1e-15), hi, grid // 2 + 2)[1:-1]
    r_lin = np.linspace(lo, hi, grid // 2 + 2)[1:-1]
    r = np.concatenate([r_log, r_lin])
    r = r[(r > lo) & (r < hi)]
    vals = [alpha_values(p, r)]
    # one-sided limits at the endpoints
    if p.family.is_log:
        vals.append(np.array([0.0 if lo == 0.0 else float(alpha_values(p, lo))]))
        vals.append(np.array([float(alpha_values(p, hi))]))
    else:
        vals.append(np.array([power_alpha(p.n, p.a)]))
    a = np.concatenate(vals)
    inf_a, sup_a = float(a.min()), float(a.max())
    return EllipticityBounds(min(1.0, 1.0 + inf_a), max(1.0, 1.0 + sup_a), (lo, hi), inf_a, sup_a)


def _unit_vectors(rng, m, n):
    g = rng.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _pair_norms(params, X, Y) -> np.ndarray:
    D = coefficient_batch(params, X) - coefficient_batch(params, Y)
    return np.abs(np.linalg.eigvalsh(D)).max(axis=1)


def modulus_of_continuity(params: FamilyParams, t: float, sample_budget: int = 2000, seed: int = 0) -> ModulusSample:
    """Lower-bound estimate of ``sup_{|x-y|<=t} ||A(x) - A(y)||_2`` on B(0, 1).

    Structured pairs (the origin paired with ``t e_1`` when A extends
    continuously, orthogonal pairs at radius ``t/sqrt 2``, pairs straddling
    radius ``t/2``) are combined with random pairs concentrated near the
    origin, where alpha varies fastest.
    """
    if not 0 < t <= 1:
        raise DomainError("t must lie in (0, 1]")
    p = _numeric(params)
    n = p.n
    rng = np.random.default_rng(seed)
    e1 = np.eye(n)[0]
    e2 = np.eye(n)[1]
    xs, ys = [], []
    if continuous_at_origin(p):
        xs.append(t * (1 - 1e-12) * e1)
        ys.append(np.zeros(n))
    s = t / math.sqrt(2.0)
    xs += [s * e1, 0.5 * t * e1]
    ys += [s * e2, 0.5 * t * e2]
    X0 = np.array(xs)
    Y0 = np.array(ys)

    m = max(int(sample_budget), 8)
    m_near = m // 2
    # near the origin: base radius log-uniform in [1e-3 t, 2t] (capped inside the ball)
    rad = np.exp(rng.uniform(math.log(1e-3 * t), math.log(min(2 * t, 0.999)), m_near))
    X1 = rad[:, None] * _unit_vectors(rng, m_near, n)
    Y1 = X1 + (t * rng.uniform(0.5, 1.0, m_near))[:, None] * _unit_vectors(rng, m_near, n)
    # anywhere in the ball
    m_far = m - m_near
    rad = rng.uniform(0, 1, m_far) ** (1.0 / n)
    X2 = rad[:, None] * _unit_vectors(rng, m_far, n)
    Y2 = X2 + (t * rng.uniform(0, 1, m_far))[:, None] * _unit_vectors(rng, m_far, n)
    X = np.vstack([X0, X1, X2])
    Y = np.vstack([Y0, Y1, Y2])
    keep = (np.linalg.norm(Y, axis=1) < 1.0) & (np.linalg.norm(X, axis=1) < 1.0)
    keep &= np.linalg.norm(X - Y, axis=1) <= t
    if not continuous_at_origin(p):
        keep &= (np.linalg.norm(X, axis=1) > 0) & (np.linalg.norm(Y, axis=1) > 0)
    X, Y = X[keep], Y[keep]
    omega = float(_pair_norms(p, X, Y).max()) if len(X) else 0.0
    a_t = float(alpha_values(p, min(t, 1 - EPS)))
    return ModulusSample(t, omega, a_t, int(len(X)))


DEFAULT_T_GRID = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def fit_modulus_model(params: FamilyParams, t_grid=DEFAULT_T_GRID, sample_budget: int = 2000, seed: int = 0) -> ModulusModel:
    samples = tuple(modulus_of_continuity(params, t, sample_budget, seed + i) for i, t in enumerate(t_grid))
    om = np.array([s.omega for s in samples])
    al = np.abs(np.array([s.alpha_at_t for s in samples]))
    den = float(np.dot(al, al))
    if den == 0.0:
        return ModulusModel(0.0, samples, 0.0)
    c = float(np.dot(om, al) / den)
    resid = float(np.linalg.norm(om - c * al) / max(np.linalg.norm(om), 1e-300))
    return ModulusModel(c, samples, resid)


def dini_partial(params: FamilyParams, delta: float, model: ModulusModel | None = None) -> DiniPartial:
    """``int_delta^1 omega_hat(s) / s ds`` with ``omega_hat = c |alpha|`` from the fitted model."""
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    p = _numeric(params)
    if model is None:
        model = fit_modulus_model(p)
    if model.c == 0.0:
        return DiniPartial(delta, 0.0, model)
    # substitute s = exp(-y)
    ymax = -math.log(delta)
    f = lambda y: abs(float(alpha_values(p, math.exp(-y))))
    val, _ = quad(f, 0.0, ymax, limit=400, epsabs=1e-13, epsrel=1e-12)
    return DiniPartial(delta, model.c * val, model)


DEFAULT_DELTAS = tuple(10.0 ** -k for k in np.arange(2.0, 8.01, 0.5))


def dini_growth_fit(params: FamilyParams, deltas=DEFAULT_DELTAS, model: ModulusModel | None = None) -> DiniGrowthFit:
    """Regress Dini partials on ``log log(r0/delta)``.

    A positive slope with R^2 near one is the divergence signature: the
    partial integrals keep growing like a double logarithm.
    """
    p = _numeric(params)
    if model is None:
        model = fit_modulus_model(p)
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=float)
    values = np.array([dini_partial(p, d, model).value for d in deltas])
    r0 = p.r0 if p.family.is_log else 1.0
    xvar = np.log(np.log(r0 / deltas)) if p.family.is_log else np.log(np.log(1.0 / deltas))
    A = np.vstack([xvar, np.ones_like(xvar)]).T
    coef, intercept = np.linalg.lstsq(A, values, rcond=None)[0]
    pred = A @ np.array([coef, intercept])
    ss_res = float(np.sum((values - pred) ** 2))
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    diffs = np.diff(values)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = diffs[1:] / diffs[:-1]
    return DiniGrowthFit(deltas, values, float(coef), float(intercept), float(r2), ratios)
