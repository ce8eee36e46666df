"""Integrability of ``grad u`` over dyadic annuli and the resulting verdicts.

Because ``|grad u|`` and ``|D^2 u|`` depend on ``r = |x|`` and
``t = x_1/|x|`` only, every annulus integral reduces to

    |S^{n-2}| int r^{n-1} int_{-1}^{1} f(r, t) (1 - t^2)^{(n-3)/2} dt dr,

which is evaluated with a Gauss-Legendre rule in ``log r`` and a
Gauss-Jacobi rule in ``t``.  All sums are carried in log space so the
exponential functional cannot overflow.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from patholab.errors import DomainError, ParameterError, QuadratureError
from patholab.families import Family, FamilyParams, _numeric, log_profile, profile_arrays
from patholab.quadrature import ball_minus_hole, jacobi_sym, legendre, sphere_area

LOG2 = math.log(2.0)
CONVERGES = "CONVERGES"
DIVERGES = "DIVERGES"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_P_GRID = (1.0, 1.01, 1.05, 1.5, 2.0, 4.0, 10.0)
DEFAULT_C_GRID = (0.1, 1.0, 10.0)
DEFAULT_J = 48
J_MAX = 400
WINDOW = 15


@dataclass(frozen=True)
class Functional:
    """Integrand built from the gradient (or Hessian) magnitude.

    kind is one of ``"lp"`` (``|grad u|^p``), ``"llogl"``
    (``|grad u| log(e + |grad u|)``), ``"exp"`` (``exp(c |grad u|)``) and
    ``"hess_lp"`` (``|D^2 u|^p``, Frobenius norm).
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lp", "llogl", "exp", "hess_lp"):
            raise ParameterError(f"unknown functional {self.kind!r}")
        if self.kind in ("lp", "hess_lp") and not self.param >= 1.0:
            raise ParameterError("p must be >= 1")
        if self.kind == "exp" and not self.param > 0:
            raise ParameterError("c must be positive")

    @property
    def label(self) -> str:
        if self.kind == "lp":
            return f"L^{self.param:g}"
        if self.kind == "llogl":
            return "LlogL"
        if self.kind == "exp":
            return f"exp({self.param:g}|Du|)"
        return f"D2u in L^{self.param:g}"

    @classmethod
    def lp(cls, p: float) -> "Functional":
        return cls("lp", float(p))

    @classmethod
    def llogl(cls) -> "Functional":
        return cls("llogl", 1.0)

    @classmethod
    def exp(cls, c: float) -> "Functional":
        return cls("exp", float(c))

    @classmethod
    def hess_lp(cls, p: float) -> "Functional":
        return cls("hess_lp", float(p))


@dataclass(frozen=True)
class GradientField:
    """``grad u(x) = v(|x|) e_1 + x_1 v'(|x|) x / |x|`` in closed form."""

    params: FamilyParams

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = np.linalg.norm(X, axis=1)
        if np.any(r == 0):
            raise DomainError("grad u is not defined at the origin")
        v, dv, _, _ = profile_arrays(_numeric(self.params), r)
        G = (X[:, 0] * dv / r)[:, None] * X
        G[:, 0] += v
        return G


@dataclass
class AnnulusTable:
    """Partials over ``2^{-j-1} <= |x| <= 2^{-j}`` for ``j = 1..J``."""

    functional: Functional
    j: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    log_partial: np.ndarray
    rel_error: np.ndarray
    overflow: np.ndarray

    @property
    def partial(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_partial)

    @property
    def J(self) -> int:
        return int(self.j[-1])

    def rows(self):
        for k in range(len(self.j)):
            yield {
                "j": int(self.j[k]),
                "inner": float(self.inner[k]),
                "outer": float(self.outer[k]),
                "partial": float(self.partial[k]),
                "log_partial": float(self.log_partial[k]),
                "rel_error": float(self.rel_error[k]),
            }


@dataclass
class DivergenceVerdict:
    verdict: str
    tail_model: dict
    evidence: np.ndarray = field(repr=False)
    J: int = DEFAULT_J
    table: AnnulusTable | None = field(default=None, repr=False)


def _log_sphere(m: int) -> float:
    """log of the surface measure of S^m (m >= 0)."""
    return math.log(sphere_area(m + 1))


def _log_integrand(params: FamilyParams, functional: Functional, r, t):
    """log f(r, t) with r of shape (..., 1) and t of shape (m_t,)."""
    p = _numeric(params)
    logv, d1, d2 = log_profile(p, r)
    t2 = t * t
    if functional.kind == "hess_lp":
        e = d2 - d1
        q = 2 * d1 * d1 + t2 * (2 * d1 * d1 + e * e + p.n * d1 * d1 + 6 * d1 * e + 4 * d1 * d1)
        logh = logv - np.log(r) + 0.5 * np.log(np.maximum(q, 0.0))
        return functional.param * logh
    q = 1.0 + t2 * (2 * d1 + d1 * d1)
    logg = logv + 0.5 * np.log(np.maximum(q, 0.0))
    if functional.kind == "lp":
        return functional.param * logg
    if functional.kind == "llogl":
        return logg + np.log(np.logaddexp(1.0, logg))
    with np.errstate(over="ignore"):
        return functional.param * np.exp(logg)


def _log_partials(params, functional, js, m_r, m_t):
    p = _numeric(params)
    n = p.n
    x, w = legendre(m_r)
    t, wt = jacobi_sym(m_t, n)
    js = np.asarray(js, dtype=float)
    # y = log r on [-(j+1) log 2, -j log 2]
    y = -(js[:, None] + 0.5) * LOG2 + 0.5 * LOG2 * x[None, :]
    r = np.exp(y)
    logf = _log_integrand(p, functional, r[:, :, None], t[None, None, :])
    logw = np.log(0.5 * LOG2 * w)[None, :, None] + n * y[:, :, None] + np.log(wt)[None, None, :]
    total = logf + logw
    out = logsumexp(total.reshape(len(js), -1), axis=1) + _log_sphere(n - 2)
    return out, ~np.isfinite(logf).all(axis=(1, 2))


def annulus_functional(params: FamilyParams, functional: Functional, j: int, rule=(24, 24)) -> float:
    """Integral of the functional over the j-th dyadic annulus (may be ``inf``)."""
    if j < 1:
        raise DomainError("annulus index starts at 1")
    lp, _ = _log_partials(params, functional, [j], *rule)
    with np.errstate(over="ignore"):
        return float(np.exp(lp[0]))


def annulus_table(params: FamilyParams, functional: Functional, J: int = DEFAULT_J, rule=(24, 24), threads: int = 1) -> AnnulusTable:
    """Partials for j = 1..J with a nested-rule relative error estimate."""
    if J < 1:
        raise ParameterError("J must be >= 1")
    js = np.arange(1, J + 1)
    m_r, m_t = rule
    chunks = np.array_split(js, max(1, min(threads, J)))

    def work(chunk):
        fine, over = _log_partials(params, functional, chunk, m_r + m_r // 2, m_t + m_t // 2)
        coarse, _ = _log_partials(params, functional, chunk, m_r, m_t)
        return fine, coarse, over

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    fine = np.concatenate([a for a, _, _ in parts])
    coarse = np.concatenate([b for _, b, _ in parts])
    over = np.concatenate([c for _, _, c in parts])
    with np.errstate(invalid="ignore"):
        rel = np.where(np.isfinite(fine), np.abs(np.expm1(coarse - fine)), np.inf)
    return AnnulusTable(functional, js, 2.0 ** -(js + 1.0), 2.0 ** -js.astype(float), fine, rel, over)


def _ell(params: FamilyParams, js) -> np.ndarray:
    """``log(r0 / r)`` at the geometric midpoint of each annulus (r0 = 1 for POWER)."""
    p = _numeric(params)
    base = math.log(p.r0) if p.family.is_log else 0.0
    return base + (np.asarray(js, dtype=float) + 0.5) * LOG2


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def _tail_model(lp, ell, j, log_weight, j0: int = 5):
    """Fit ``log P_j - log w_j = a + kappa j - gamma log ell + d1/ell + d2/ell^2`` for j >= j0.

    This is the exact asymptotic shape of the Lebesgue partials for every
    family in the catalog; ``w_j`` carries the slowly varying
    ``log(e + |grad u|)`` factor of the L log L functional.
    """
    sel = j >= j0
    y = lp[sel] - log_weight[sel]
    e = ell[sel]
    jj = j[sel].astype(float)
    A = np.vstack([np.ones_like(jj), jj, np.log(e), 1.0 / e, 1.0 / e**2]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(y - A @ coef)))
    return float(coef[1]), -float(coef[2]), resid


def _model_log_sum(kappa, gamma, lp_last, ell_last, step_ell, mu, horizon: int = 5000) -> float:
    """Log of the model tail sum over ``horizon`` further annuli, anchored at the last partial."""
    k = np.arange(1, horizon + 1, dtype=float)
    ell = ell_last + k * step_ell
    terms = lp_last + kappa * k - (gamma - mu) * np.log(ell / ell_last)
    return float(logsumexp(terms))


def apply_rules(
    log_partials, ell, window: int = WINDOW, log_weight=None, mu: float | None = None, kappa_tol: float = 1e-3
) -> tuple[str, dict]:
    """Verdict from a log-partial sequence.

    First a closed-form tail model ``C e^{kappa j} ell^{-gamma}`` (with
    ``ell = log(r0/r)``) is fitted to all annuli from j = 5 on.  When it fits
    to 1e-3 in log:

    * kappa >= kappa_tol: the asymptotic per-annulus factor exceeds 1, so
      DIVERGES once the observed or model-extrapolated partial sums exceed
      10 times the first partial.
    * kappa <= -kappa_tol: geometric decay, CONVERGES when the model tail is
      at most 1% of the accumulated sum.
    * otherwise an algebraic tail with effective exponent gamma - mu (mu is
      the growth of the slowly varying weight): at least 1.1 CONVERGES, at
      most 0.9 DIVERGES (again with the 10x growth).

    When the model does not fit, the window rules are used: a fitted factor
    over the last ``window`` annuli of at least 1 with 10x growth DIVERGES, a
    factor of at most 0.95 with a geometric tail of at most 1% CONVERGES.
    """
    lp = np.asarray(log_partials, dtype=float)
    if lp.size < window:
        raise ValueError("need at least `window` annuli")
    if np.any(np.isposinf(lp)) or np.any(np.isnan(lp)):
        return DIVERGES, {"kind": "overflow", "note": "exceeds representable range"}
    ell = np.asarray(ell, dtype=float)[: lp.size]
    lw = np.zeros_like(lp) if log_weight is None else np.asarray(log_weight, dtype=float)[: lp.size]
    j = np.arange(1, lp.size + 1)
    log_sum = float(logsumexp(lp))
    ten = lp[0] + math.log(10.0)
    step_ell = float(ell[-1] - ell[-2])

    kappa, gamma, resid = _tail_model(lp, ell, j, lw)
    if mu is None:
        mu = _linfit(np.log(ell[-window:]), lw[-window:])[0] if log_weight is not None else 0.0
    if resid <= 1e-3:
        model = {"kind": "closed-form tail", "kappa": kappa, "ratio": math.exp(kappa), "gamma": gamma, "mu": mu, "fit_residual": resid}
        tail = _model_log_sum(kappa, gamma, lp[-1], ell[-1], step_ell, mu) if kappa < kappa_tol else math.inf
        grows = log_sum >= ten or (np.logaddexp(log_sum, tail) >= ten)
        if kappa >= kappa_tol:
            return (DIVERGES, model)
        if kappa <= -kappa_tol:
            model["tail_fraction"] = math.exp(min(tail - log_sum, 700.0))
            if tail <= log_sum + math.log(0.01):
                return CONVERGES, model
            return INCONCLUSIVE, model
        geff = gamma - mu
        model["kind"] = "algebraic tail"
        model["gamma_eff"] = geff
        if geff >= 1.1:
            model["tail_fraction"] = math.exp(min(tail - log_sum, 700.0))
            return CONVERGES, model
        if geff <= 0.9 and grows:
            return DIVERGES, model
        return INCONCLUSIVE, model

    tail = lp[-window:]
    log_q, _, r2g = _linfit(j[-window:].astype(float), tail)
    q = math.exp(min(log_q, 700.0))
    model = {"kind": "geometric", "ratio": q, "r_squared": r2g, "fit_residual": resid}
    if log_q >= 0.0 and log_sum >= ten:
        return DIVERGES, model
    if q <= 0.95:
        log_tail = lp[-1] + log_q - math.log1p(-q)
        model["tail_fraction"] = math.exp(log_tail - log_sum)
        if log_tail <= log_sum + math.log(0.01):
            return CONVERGES, model
    return INCONCLUSIVE, model


def _llogl_weight(params: FamilyParams, table: AnnulusTable, deep=(500, 1000)):
    """Exact weights ``P_j(L log L) / P_j(L^1)`` and their growth exponent in ``ell``.

    The exponent is read off between two deep annuli so that it reflects the
    asymptotic behaviour of ``log(e + |grad u|)`` rather than the first few
    dozen scales.
    """
    l1 = annulus_table(params, Functional.lp(1.0), table.J).log_partial
    lw = table.log_partial - l1
    dj = np.asarray(deep)
    a = _log_partials(params, Functional.llogl(), dj, 36, 36)[0] - _log_partials(params, Functional.lp(1.0), dj, 36, 36)[0]
    e = _ell(params, dj)
    mu = float((a[1] - a[0]) / (math.log(e[1]) - math.log(e[0])))
    return lw, mu


def classify(
    params: FamilyParams,
    functional: Functional,
    J: int = DEFAULT_J,
    window: int = WINDOW,
    J_max: int = J_MAX,
    step: int = 10,
    threads: int = 1,
) -> DivergenceVerdict:
    """Build the annulus table, fit the tail and apply the verdict rules.

    A verdict is accepted only if the table deepened by ``step`` annuli
    gives the same verdict.  Otherwise J grows by ``step`` up to ``J_max``.
    """
    if J < 40:
        raise ParameterError("J must be >= 40")
    top = max(J, J_max) + step
    table = annulus_table(params, functional, top, threads=threads)
    lp = table.log_partial
    ell = _ell(params, table.j)
    lw, mu = _llogl_weight(params, table) if functional.kind == "llogl" else (None, None)
    cur = J
    verdict, model = INCONCLUSIVE, {}
    while cur + step <= top:
        verdict, model = apply_rules(lp[:cur], ell, window, lw, mu)
        v2, _ = apply_rules(lp[: cur + step], ell, window, lw, mu)
        if verdict != INCONCLUSIVE and verdict == v2:
            break
        cur += step
    else:
        cur -= step
        verdict = INCONCLUSIVE
    model = dict(model, stable_at=cur + step)
    with np.errstate(over="ignore"):
        evidence = np.exp(np.logaddexp.accumulate(lp[:cur]))
    sub = AnnulusTable(
        functional, table.j[:cur], table.inner[:cur], table.outer[:cur],
        lp[:cur], table.rel_error[:cur], table.overflow[:cur],
    )
    return DivergenceVerdict(verdict, model, evidence, cur, sub)


def sup_gradient(params: FamilyParams, j: int, grid: int = 257) -> float:
    """``sup |grad u|`` over the j-th annulus.

    In t the maximum of ``v^2 (1 + t^2 (2d + d^2))`` sits at an endpoint, so
    it equals ``|v| max(1, |1 + d|)`` with ``d = r v'/v``; in r a grid is
    used, including both radii.
    """
    if j < 1:
        raise DomainError("annulus index starts at 1")
    y = np.linspace(-(j + 1) * LOG2, -j * LOG2, grid)
    logv, d1, _ = log_profile(_numeric(params), np.exp(y))
    vals = logv + np.log(np.maximum(1.0, np.abs(1.0 + d1)))
    with np.errstate(over="ignore"):
        return float(np.exp(vals.max()))


@dataclass
class GrowthFit:
    values: np.ndarray
    slope: float
    curvature: float
    r_squared: float
    verdict: str  # "bounded", "unbounded", "inconclusive"


def _growth_verdict(values, rel_tol: float = 0.05) -> GrowthFit:
    """Boundedness of a scale sequence by fits in the index.

    Bounded: the second half never exceeds the first-half maximum by more
    than ``rel_tol`` and the linear trend is flat or falling.  Unbounded: a
    rising trend with R^2 >= 0.95 in the values or in their logarithms.
    """
    vals = np.asarray(values, dtype=float)
    j = np.arange(1, vals.size + 1, dtype=float)
    slope, _, r2 = _linfit(j, vals)
    curv = float(np.polyfit(j, vals, 2)[0])
    mean = float(np.mean(np.abs(vals))) or 1.0
    half = vals.size // 2
    head, tail = np.abs(vals[:half]).max(), np.abs(vals[half:]).max()
    r2_log = _linfit(j, np.log(vals))[2] if np.all(vals > 0) else 0.0
    if tail <= (1 + rel_tol) * head and slope * vals.size <= rel_tol * mean:
        verdict = "bounded"
    elif slope > 0 and max(r2, r2_log) >= 0.95 and vals[-1] >= 1.5 * vals[0]:
        verdict = "unbounded"
    else:
        verdict = "inconclusive"
    return GrowthFit(vals, slope, curv, r2, verdict)


def sup_growth(params: FamilyParams, J: int = DEFAULT_J) -> GrowthFit:
    """Sup of |grad u| over annuli 1..J with a growth classification."""
    vals = np.array([sup_gradient(params, j) for j in range(1, J + 1)])
    if not np.all(np.isfinite(vals)):
        return GrowthFit(vals, math.inf, math.inf, 1.0, "unbounded")
    return _growth_verdict(vals)


class BudgetExceeded(QuadratureError):
    """Quadrature budget too small; ``partial`` carries the coarse result."""

    def __init__(self, msg, partial):
        super().__init__(msg)
        self.partial = partial


def _centered_oscillation(params: FamilyParams, radius: float, m_r: int, m_th: int, panels: int = 60) -> float:
    """Mean oscillation of each component of grad u on B(0, radius), max over components.

    Uses the reduced variables with ``t = cos(theta)``; the kink of
    ``|g_1 - mean|`` in theta is located per radius and the theta integral is
    split there, so each piece is smooth.
    """
    p = _numeric(params)
    n = p.n
    x, w = legendre(m_r)
    # radial panels [R 2^{-k-1}, R 2^{-k}], k = 0..panels-1
    k = np.arange(panels, dtype=float)
    y = math.log(radius) - (k[:, None] + 0.5) * LOG2 + 0.5 * LOG2 * x[None, :]
    y = y.ravel()
    wy = np.tile(0.5 * LOG2 * w, panels)
    r = np.exp(y)
    v, dv, _, _ = profile_arrays(p, r)
    d = r * dv  # r v'
    wr = wy * r**n  # r^{n-1} dr
    log_ball = math.log(sphere_area(n)) - math.log(n) + n * math.log(radius)
    vol = math.exp(log_ball)
    s_m = sphere_area(n - 1) if n >= 2 else 1.0

    xt, wt = legendre(m_th)

    def theta_int(func, a, b):
        # int_a^b func(theta) sin^{n-2}(theta) dtheta for arrays a, b of shape (N,)
        th = 0.5 * (b - a)[:, None] * xt[None, :] + 0.5 * (b + a)[:, None]
        ww = 0.5 * (b - a)[:, None] * wt[None, :] * np.sin(th) ** (n - 2)
        return np.sum(func(th) * ww, axis=1)

    zero = np.zeros_like(r)
    pi = np.full_like(r, math.pi)
    # first component g1 = v + t^2 r v'
    g1 = lambda th: v[:, None] + np.cos(th) ** 2 * d[:, None]
    mean1 = s_m * np.sum(wr * theta_int(g1, zero, pi)) / vol
    # kink: cos^2 = (mean - v) / (r v')
    with np.errstate(divide="ignore", invalid="ignore"):
        c2 = np.where(d != 0, (mean1 - v) / d, -1.0)
    has = (c2 > 0) & (c2 < 1)
    th_star = np.where(has, np.arccos(np.sqrt(np.clip(c2, 0, 1))), 0.5 * math.pi)
    f1 = lambda th: np.abs(g1(th) - mean1)
    osc1 = theta_int(f1, zero, th_star) + theta_int(f1, th_star, pi - th_star) + theta_int(f1, pi - th_star, pi)
    osc1 = s_m * np.sum(wr * osc1) / vol
    if n < 2:
        return float(osc1)
    # g_i = r v' t sqrt(1-t^2) xi_i, mean zero; angular factor int_{S^{n-2}} |xi_1| = 2 |B^{n-2}|
    ball_m = math.exp((n - 2) / 2 * math.log(math.pi) - gammaln((n - 2) / 2 + 1))
    gi = lambda th: np.abs(d[:, None] * np.cos(th) * np.sin(th))
    half = np.full_like(r, 0.5 * math.pi)
    osc2 = theta_int(gi, zero, half) + theta_int(gi, half, pi)
    osc2 = 2.0 * ball_m * np.sum(wr * osc2) / vol
    return float(max(osc1, osc2))


def _direct_oscillation(params: FamilyParams, center, radius, m_r: int, m_ang: int) -> float:
    """Direct product quadrature for an off-center ball (n in {2, 3})."""
    c = np.asarray(center, dtype=float)
    n = c.size
    # a ball around the origin needs a tiny hole for the log-radial panels
    hole = radius * 1e-12 if np.linalg.norm(c) < radius else 0.0
    X, W = ball_minus_hole(c, radius, hole, n, m_r, m_ang)
    G = GradientField(params)(X)
    vol = W.sum()
    mean = (W[:, None] * G).sum(axis=0) / vol
    osc = (W[:, None] * np.abs(G - mean)).sum(axis=0) / vol
    return float(osc.max())


def mean_oscillation(params: FamilyParams, center, radius: float, quadrature_budget: int = 200_000) -> float:
    """``max_i (1/|B|) int_B |g_i - (g_i)_B|`` for ``g = grad u`` and ``B = B(center, radius)``.

    Centered balls use the reduced quadrature; off-center balls use direct
    product quadrature and are supported for n in {2, 3}.  A budget too small
    for the nested error check raises BudgetExceeded carrying the result.
    """
    p = _numeric(params)
    c = np.asarray(center, dtype=float)
    if c.size != p.n:
        raise DomainError("center dimension differs from n")
    if not radius > 0 or np.linalg.norm(c) + radius > 0.5 + 1e-15:
        raise DomainError("ball must lie in B(0, 1/2)")
    if not np.any(c):
        m_r, m_th = 16, 48
        fine = _centered_oscillation(p, radius, m_r, m_th)
        if quadrature_budget < 60 * m_r * m_th:
            raise BudgetExceeded("quadrature budget too small for the centered rule", fine)
        return fine
    if p.n not in (2, 3):
        raise DomainError("off-center balls are supported for n in {2, 3}")
    per = max(4, int(round((quadrature_budget / (4 if p.n == 2 else 8)) ** (1.0 / p.n))))
    m_r = m_ang = per
    coarse = _direct_oscillation(p, c, radius, m_r, m_ang)
    fine = _direct_oscillation(p, c, radius, m_r + m_r // 2, m_ang + m_ang // 2)
    if abs(fine - coarse) > 0.05 * abs(fine) + 1e-12:
        raise BudgetExceeded(f"off-center oscillation not converged ({coarse:.4g} vs {fine:.4g})", fine)
    return fine


def oscillation_growth(params: FamilyParams, scales: int = 20) -> GrowthFit:
    """Centered-ball oscillation on ``B(0, 2^{-j})``, ``j = 1..scales``."""
    vals = np.array([mean_oscillation(params, np.zeros(params.n), 2.0**-j) for j in range(1, scales + 1)])
    return _growth_verdict(vals)


def off_center_balls(n: int):
    """A fixed set of balls that avoid or contain the origin off-center."""
    base = [((0.1, 0.0), 0.05), ((0.05, 0.05), 0.02), ((0.02, 0.0), 0.1), ((-0.2, 0.1), 0.15)]
    return [(tuple(c) + (0.0,) * (n - 2), R) for c, R in base]


@dataclass
class MembershipRow:
    label: str
    expected: bool | None
    verdict: str
    member: bool | None
    match: bool | None
    details: dict = field(default_factory=dict)


def _expected_lp(p: FamilyParams, q: float) -> bool:
    fam = p.family
    if fam is Family.W11_LOGPOW:
        return q == 1.0
    if fam is Family.POWER:
        return p.n + q * p.a > 0
    return True


def _expected_llogl(p: FamilyParams) -> bool:
    if p.family is Family.W11_LOGPOW:
        return p.beta > 2
    if p.family is Family.POWER:
        return p.n + p.a > 0
    return True


def _expected_exp(p: FamilyParams, c: float) -> bool:
    fam = p.family
    if fam is Family.BMO_LOGSQ:
        return False
    if fam is Family.LIPSCHITZ_LOG:
        # exp(c L) ~ (r0/r)^c is integrable iff c < n
        return c < p.n
    if fam is Family.W11_LOGPOW:
        return False
    return p.a >= 0


def expected_sup_bounded(p: FamilyParams) -> bool:
    return p.family is Family.POWER and p.a >= 0


def expected_oscillation_bounded(p: FamilyParams) -> bool | None:
    if p.family is Family.LIPSCHITZ_LOG:
        return True
    if p.family is Family.BMO_LOGSQ:
        return False
    if p.family is Family.POWER and p.a >= 0:
        return True
    return None


def membership_matrix(
    params: FamilyParams,
    J: int = DEFAULT_J,
    p_grid=DEFAULT_P_GRID,
    c_grid=DEFAULT_C_GRID,
    threads: int = 1,
) -> list[MembershipRow]:
    """One row per functional with the computed verdict against the expected pattern.

    Lebesgue rows for every p, the L log L row, and the sup row are always
    present.  Exponential rows are added for the Lipschitz and BMO families,
    Hessian rows for the Lipschitz family, and centered-ball oscillation for
    families where its boundedness is known.
    """
    p = _numeric(params)
    rows: list[MembershipRow] = []

    def add(fn: Functional, expected: bool | None):
        dv = classify(p, fn, J, threads=threads)
        member = None if dv.verdict == INCONCLUSIVE else dv.verdict == CONVERGES
        match = None if expected is None or member is None else member == expected
        if expected is not None and member is None:
            match = False
        rows.append(MembershipRow(fn.label, expected, dv.verdict, member, match, {"tail_model": dv.tail_model, "J": dv.J}))

    for q in p_grid:
        add(Functional.lp(q), _expected_lp(p, q))
    add(Functional.llogl(), _expected_llogl(p))
    if p.family in (Family.LIPSCHITZ_LOG, Family.BMO_LOGSQ):
        for c in c_grid:
            add(Functional.exp(c), _expected_exp(p, c))
    if p.family is Family.LIPSCHITZ_LOG:
        for q in p_grid:
            add(Functional.hess_lp(q), q < p.n)

    sg = sup_growth(p, J)
    exp_b = expected_sup_bounded(p)
    got_b = None if sg.verdict == "inconclusive" else sg.verdict == "bounded"
    rows.append(MembershipRow(
        "sup|Du|", exp_b, sg.verdict, got_b, got_b == exp_b if got_b is not None else False,
        {"slope": sg.slope, "curvature": sg.curvature, "r_squared": sg.r_squared},
    ))
    exp_o = expected_oscillation_bounded(p)
    if exp_o is not None:
        og = oscillation_growth(p)
        got_o = None if og.verdict == "inconclusive" else og.verdict == "bounded"
        rows.append(MembershipRow(
            "oscillation(centered)", exp_o, og.verdict, got_o, got_o == exp_o if got_o is not None else False,
            {"slope": og.slope, "r_squared": og.r_squared, "max": float(og.values.max())},
        ))
    return rows


def monte_carlo_annulus(params: FamilyParams, functional: Functional, j: int, samples: int = 20_000, seed: int = 0):
    """Plain Monte Carlo over the j-th annulus from Cartesian gradients; returns (mean, standard error)."""
    if functional.kind == "hess_lp":
        raise ParameterError("Monte Carlo oracle covers gradient functionals only")
    p = _numeric(params)
    n = p.n
    rng = np.random.default_rng(seed)
    lo, hi = 2.0 ** -(j + 1), 2.0**-j
    # uniform in the annulus volume
    u = rng.uniform(lo**n, hi**n, samples)
    rad = u ** (1.0 / n)
    g = rng.standard_normal((samples, n))
    X = rad[:, None] * g / np.linalg.norm(g, axis=1, keepdims=True)
    G = np.linalg.norm(GradientField(p)(X), axis=1)
    if functional.kind == "lp":
        f = G**functional.param
    elif functional.kind == "llogl":
        f = G * np.log(math.e + G)
    else:
        f = np.exp(functional.param * G)
    vol = sphere_area(n) / n * (hi**n - lo**n)
    return float(vol * f.mean()), float(vol * f.std(ddof=1) / math.sqrt(samples))


def power_ratio(n: int, a: float, p: float) -> float:
    """Exact ratio of consecutive L^p partials for ``u = x_1 |x|^a``: ``2^{-(n + p a)}``."""
    return 2.0 ** -(n + p * a)
