"""Energy-class solution with the same boundary data as the singular one.

In ``y = log r`` the radial equation for ``w = x_1 w~(|x|)`` reads

    w~_yy + n w~_y - (n - 1) alpha(e^y) w~ = 0.

Near the origin its two behaviours are ``w~ ~ const`` (up to slowly varying
factors) and ``w~ ~ r^-n``.  The first is selected at the inner cutoff
``eps`` through the Robin condition ``w~_y = g w~``, where ``g`` solves the
Riccati equation ``g' = (n-1) alpha - n g - g^2`` integrated forward (its
stable direction) from far below ``log eps``.  The boundary value problem is
then solved by collocation on a uniform mesh in ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.special import gammaincc, gammaln

from patholab.errors import BranchContaminationError, DomainError, ParameterError, QuadratureError
from patholab.families import Family, FamilyParams, RadialField, _numeric, profile_arrays
from patholab.quadrature import jacobi_sym, legendre, sphere_area

RICCATI_LEAD = 30.0


@dataclass(frozen=True)
class RadialBVP:
    """Radial problem on ``[eps, 1]`` with ``w~(1) = boundary_value`` (default ``v(1)``)."""

    params: FamilyParams
    eps: float = 1e-8
    mesh_ratio: float = 1.2
    boundary_value: float | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.eps < 1e-2:
            raise DomainError("eps must lie in (0, 1e-2)")
        if not 1 < self.mesh_ratio <= 1.2:
            raise ParameterError("mesh ratio must lie in (1, 1.2]")
        object.__setattr__(self, "params", self.params.resolve())

    @property
    def target(self) -> float:
        if self.boundary_value is not None:
            return float(self.boundary_value)
        return float(profile_arrays(self.params, 1.0)[0])

    @property
    def grid(self) -> np.ndarray:
        """Geometric radii from eps to 1 with ratio at most ``mesh_ratio``."""
        span = -math.log(self.eps)
        m = int(math.ceil(span / math.log(self.mesh_ratio)))
        return np.exp(np.linspace(-span, 0.0, m + 1))


@dataclass
class ODESolution:
    bvp: RadialBVP
    r: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    residual: float
    energy: float
    local_exponent: float
    robin_g: float
    interpolant: object = field(repr=False, default=None)

    def __call__(self, r):
        """``(w~, w~')`` at radii in ``[eps, 1]``."""
        r = np.asarray(r, dtype=float)
        if np.any(r < self.bvp.eps * (1 - 1e-12)) or np.any(r > 1 + 1e-12):
            raise DomainError("solution is defined on [eps, 1]")
        Y = self.interpolant(np.log(r))
        return Y[0], Y[1] / r

    def field(self) -> RadialField:
        """``v - w~`` as a radial field with the family's alpha."""
        p = self.bvp.params

        def v(r):
            return profile_arrays(p, r)[0] - self(r)[0]

        def dv(r):
            return profile_arrays(p, r)[1] - self(r)[1]

        return RadialField(p.n, v, dv, lambda r: profile_arrays(p, r)[3], f"{p.label} minus energy solution")


def _alpha(params: FamilyParams):
    return lambda y: profile_arrays(params, np.exp(y))[3]


def robin_coefficient(params: FamilyParams, y_eps: float, lead: float = RICCATI_LEAD) -> float:
    """``w~_y / w~`` of the bounded branch at ``y_eps``.

    Started from the two-term expansion ``g1 - (g1' + g1^2)/n`` with
    ``g1 = (n-1) alpha / n`` at ``y_eps - lead``; errors there decay like
    ``exp(-n lead)`` by the time ``y_eps`` is reached.
    """
    p = _numeric(params)
    n = p.n
    al = _alpha(p)
    y0 = y_eps - lead
    h = 1e-4
    g1 = lambda y: (n - 1) * al(y) / n
    dg1 = (g1(y0 + h) - g1(y0 - h)) / (2 * h)
    g0 = float(g1(y0) - (dg1 + g1(y0) ** 2) / n)
    sol = solve_ivp(
        lambda y, g: (n - 1) * al(y) - n * g - g * g,
        (y0, y_eps), [g0], method="DOP853", rtol=1e-13, atol=1e-15,
    )
    if not sol.success:
        raise QuadratureError(f"Riccati integration failed: {sol.message}")
    return float(sol.y[0, -1])


def riccati_branch(params: FamilyParams, r, boundary_value: float | None = None, eps: float = 1e-8) -> np.ndarray:
    """Bounded branch by integrating ``(log w~)' = g`` with the Riccati g; an oracle for the collocation solve."""
    p = _numeric(params)
    n = p.n
    al = _alpha(p)
    y_eps = math.log(eps)
    g_eps = robin_coefficient(p, y_eps)
    y = np.log(np.asarray(r, dtype=float))
    if np.any(y < y_eps - 1e-12) or np.any(y > 1e-12):
        raise DomainError("radii must lie in [eps, 1]")
    sol = solve_ivp(
        lambda s, z: [(n - 1) * al(s) - n * z[0] - z[0] ** 2, z[0]],
        (y_eps, 0.0), [g_eps, 0.0], method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True,
    )
    G0 = sol.y[1, -1]
    bv = float(profile_arrays(p, 1.0)[0]) if boundary_value is None else boundary_value
    return bv * np.exp(sol.sol(y)[1] - G0)


def gamma_branch(params: FamilyParams, r) -> np.ndarray:
    """Closed-form bounded branch for the W11 family, normalized to ``v(1)`` at r = 1.

    Reduction of order from ``v = r^-n L^-beta`` gives
    ``w~ ~ r^-n L^-beta Gamma(2 beta + 1, n L)`` with ``L = log(r0/r)``.
    """
    p = _numeric(params)
    if p.family is not Family.W11_LOGPOW:
        raise ParameterError("closed-form branch is available for the W11 family only")
    n, b = p.n, p.beta
    lr0 = math.log(p.r0)

    def logw(rr):
        L = lr0 - np.log(rr)
        return -n * np.log(rr) - b * np.log(L) + np.log(gammaincc(2 * b + 1, n * L)) + gammaln(2 * b + 1)

    r = np.asarray(r, dtype=float)
    return float(profile_arrays(p, 1.0)[0]) * np.exp(logw(r) - logw(np.array(1.0)))


def _energy(n: int, y, w, wy) -> float:
    """``int |grad(x_1 w~)|^2`` over the shell ``eps < |x| < 1``."""
    integrand = np.exp(n * y) * (w * w + (2.0 * w * wy + wy * wy) / n)
    return float(sphere_area(n) * np.trapezoid(integrand, y))


def _local_exponent(sol, y_eps: float, width: float = math.log(10.0)) -> float:
    ys = np.linspace(y_eps, y_eps + width, 41)
    w = sol(ys)[0]
    if np.any(w == 0):
        return math.inf
    return float(np.polyfit(ys, np.log(np.abs(w)), 1)[0])


def solve_bounded_branch(bvp: RadialBVP) -> ODESolution:
    """Collocation solve of the radial problem on the bounded branch."""
    p = bvp.params
    n = p.n
    al = _alpha(p)
    y_eps = math.log(bvp.eps)
    g_eps = robin_coefficient(p, y_eps)
    bv = bvp.target
    y = np.log(bvp.grid)

    def fun(yy, Y):
        return np.vstack([Y[1], -n * Y[1] + (n - 1) * al(yy) * Y[0]])

    def bc(ya, yb):
        return np.array([ya[1] - g_eps * ya[0], yb[0] - bv])

    guess = np.vstack([np.full_like(y, bv), np.zeros_like(y)])
    res = solve_bvp(fun, bc, y, guess, tol=bvp.tol, max_nodes=200_000, bc_tol=1e-13)
    if not res.success:
        raise QuadratureError(f"collocation failed: {res.message}")
    sol = res.sol

    # collocation makes the residual vanish at nodes and midpoints, so probe the quarter points
    h = np.diff(res.x)
    ym = np.concatenate([res.x[:-1] + 0.25 * h, res.x[:-1] + 0.75 * h])
    W, Wy = sol(ym)
    Wyy = sol(ym, 1)[1]
    a = al(ym)
    resid = Wyy + n * Wy - (n - 1) * a * W
    scale = np.abs(Wyy) + n * np.abs(Wy) + (n - 1) * np.abs(a * W) + 1e-300
    residual = float(np.max(np.abs(resid) / np.maximum(scale, np.abs(W))))

    yy = np.linspace(y_eps, 0.0, 20 * len(res.x) + 1)
    Wd, Wyd = sol(yy)
    energy = _energy(n, yy, Wd, Wyd)
    expo = _local_exponent(sol, y_eps)
    if abs(expo) > 0.5:
        raise BranchContaminationError(f"local exponent {expo:.3f} near eps indicates the r^-n branch")
    r = np.exp(res.x)
    return ODESolution(bvp, r, res.y[0], res.y[1] / r, residual, energy, expo, g_eps, sol)


def _grad_l1(n: int, r, vt, dvt, wr) -> float:
    """``int |grad(x_1 v~)|`` over shells with radial nodes r and weights wr (dr included)."""
    t, wt = jacobi_sym(24, n)
    q = vt[:, None] ** 2 + t[None, :] ** 2 * (2 * r * vt * dvt + (r * dvt) ** 2)[:, None]
    inner = np.sqrt(np.maximum(q, 0.0)) @ wt
    return float(sphere_area(n - 1) * np.sum(wr * r ** (n - 1) * inner))


def _shell_nodes(lo: float, hi: float, m: int = 24):
    x, w = legendre(m)
    K = max(1, int(math.ceil(math.log(hi / lo) / math.log(2.0))))
    edges = np.geomspace(lo, hi, K + 1)
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        la, lb = math.log(a), math.log(b)
        yy = 0.5 * (lb - la) * x + 0.5 * (lb + la)
        rr = np.exp(yy)
        rs.append(rr)
        ws.append(0.5 * (lb - la) * w * rr)
    return np.concatenate(rs), np.concatenate(ws)


@dataclass
class Clause:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


@dataclass
class Certificate:
    clauses: list[Clause]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.clauses if not c.passed]


def nontriviality_certificate(
    params: FamilyParams,
    solution: ODESolution,
    eps_probe: float = 1e-6,
    separation: float = 1e3,
    gap_fraction: float = 1e-2,
    divergence_verdict: str | None = None,
) -> Certificate:
    """Check that ``u - w`` is a nontrivial solution vanishing on the unit sphere.

    Clauses: (a) boundary match, (b) separation ``|u|/|w|`` at
    ``|x| = eps_probe``, (c) gap ``||grad(u - w)||_{L^1(B_1/2)}`` at least
    ``gap_fraction`` times ``||grad u||_{L^1}`` on the same shells, (d) finite
    energy of w against a diverging L^2 annulus sum for ``grad u``.
    ``divergence_verdict`` may be passed in to avoid recomputing (d).
    """
    from patholab.norms import DIVERGES, Functional, classify

    p = solution.bvp.params
    n = p.n
    v1 = float(profile_arrays(p, 1.0)[0])
    w1 = float(solution(1.0)[0])
    a = Clause("boundary match", abs(w1 - v1) <= 1e-12 * max(1.0, abs(v1)), abs(w1 - v1), 1e-12)

    if eps_probe < solution.bvp.eps:
        raise DomainError("probe radius lies below the solution cutoff")
    vu = abs(float(profile_arrays(p, eps_probe)[0]))
    vw = abs(float(solution(eps_probe)[0]))
    ratio = vu / vw if vw > 0 else math.inf
    b = Clause("separation", ratio >= separation, ratio, separation, "NO GAP" if ratio < separation else "")

    r, wr = _shell_nodes(max(solution.bvp.eps, 1e-8), 0.5)
    v, dv, _, _ = profile_arrays(p, r)
    wt, dwt = solution(r)
    gap = _grad_l1(n, r, v - wt, dv - dwt, wr)
    ref = _grad_l1(n, r, v, dv, wr)
    c = Clause("gap", gap >= gap_fraction * ref and gap > 0, gap, gap_fraction * ref)

    verdict = divergence_verdict
    if verdict is None:
        verdict = classify(p, Functional.lp(2.0)).verdict
    finite = math.isfinite(solution.energy)
    d = Clause(
        "energy dichotomy",
        finite and verdict == DIVERGES,
        solution.energy,
        math.inf,
        f"grad u in L^2: {verdict}",
    )
    return Certificate([a, b, c, d])


def linearity_check(bvp: RadialBVP, factor: float = 2.0) -> float:
    """Relative sup difference between ``solve(factor * g)`` and ``factor * solve(g)``."""
    base = solve_bounded_branch(bvp)
    scaled = solve_bounded_branch(replace(bvp, boundary_value=factor * bvp.target))
    r = base.r
    return float(np.max(np.abs(scaled(r)[0] - factor * base(r)[0])) / np.max(np.abs(factor * base(r)[0])))


def eps_stability(params: FamilyParams, eps_values=(1e-6, 1e-8, 1e-10), probe=None) -> float:
    """Sup change of w~ on the common range across inner cutoffs."""
    sols = [solve_bounded_branch(RadialBVP(params, eps=e)) for e in eps_values]
    lo = max(eps_values)
    r = np.geomspace(lo, 1.0, 400) if probe is None else np.asarray(probe)
    vals = [s(r)[0] for s in sols]
    return float(max(np.max(np.abs(v - vals[0])) for v in vals[1:]))


def mesh_refinement(params: FamilyParams, eps: float = 1e-8) -> float:
    """Sup change of w~ when the mesh ratio is replaced by its square root."""
    coarse = solve_bounded_branch(RadialBVP(params, eps=eps, mesh_ratio=1.2))
    fine = solve_bounded_branch(RadialBVP(params, eps=eps, mesh_ratio=math.sqrt(1.2)))
    r = np.geomspace(eps, 1.0, 400)
    return float(np.max(np.abs(coarse(r)[0] - fine(r)[0])))
