"""Catalog of radial profiles v(r) and the matching coefficient functions.

Every solution in the catalog has the form ``u(x) = x_1 v(|x|)`` and solves
``div(A grad u) = 0`` away from the origin, where

    A(x) = I + alpha(|x|) (I - x x^T / |x|^2).

The coefficient function is tied to the profile by the balance relation

    alpha = (r^2 v'' + (n + 1) r v') / ((n - 1) v).

For the three logarithmic families alpha is a quadratic polynomial in
``s = 1 / log(r0 / r)``, which is what makes the choice of ``r0`` a
one-dimensional root-finding problem.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from patholab.errors import DomainError, ParameterError

EPS = np.finfo(float).eps
AUTO = "auto"


class Family(str, enum.Enum):
    POWER = "power"
    W11_LOGPOW = "w11"
    LIPSCHITZ_LOG = "lipschitz-log"
    BMO_LOGSQ = "bmo-logsq"

    @property
    def is_log(self) -> bool:
        return self is not Family.POWER


@dataclass(frozen=True)
class FamilyParams:
    """Parameters of one counterexample family.

    ``beta`` is used by W11_LOGPOW only, ``a`` by POWER only.  ``r0`` is a
    float or the string ``"auto"``; it is ignored by POWER.
    """

    family: Family
    n: int = 2
    beta: float | None = None
    a: float | None = None
    r0: float | str = AUTO

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"dimension n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        fam = self.family
        if fam is Family.W11_LOGPOW:
            if self.beta is None or not math.isfinite(self.beta) or self.beta <= 1:
                raise ParameterError(f"W11_LOGPOW requires beta > 1, got {self.beta}")
        if fam is Family.POWER:
            if self.a is None or not math.isfinite(self.a):
                raise ParameterError("POWER requires a finite exponent a")
        if fam.is_log and self.r0 != AUTO:
            r0 = float(self.r0)
            if not math.isfinite(r0) or r0 <= math.e:
                raise ParameterError(f"explicit r0 must exceed e for log families, got {r0}")
            object.__setattr__(self, "r0", r0)

    @property
    def is_auto(self) -> bool:
        return self.family.is_log and self.r0 == AUTO

    @property
    def label(self) -> str:
        fam = self.family
        if fam is Family.POWER:
            return f"power(n={self.n}, a={self.a:g})"
        extra = f", beta={self.beta:g}" if fam is Family.W11_LOGPOW else ""
        r0 = self.r0 if isinstance(self.r0, str) else f"{self.r0:.6g}"
        return f"{fam.value}(n={self.n}{extra}, r0={r0})"

    def with_r0(self, margin: float = 0.5) -> "FamilyParams":
        """Return a copy with AUTO replaced by ``choose_r0(self, margin)``."""
        if not self.is_auto:
            return self
        return replace(self, r0=choose_r0(self, margin))

    def resolve(self, margin: float = 0.5) -> "FamilyParams":
        """Resolve AUTO and reject parameters that break ellipticity.

        An explicit ``r0`` must satisfy ``inf alpha >= -margin``; a POWER
        exponent must satisfy ``1 + alpha > 0``.
        """
        if self.family is Family.POWER:
            if 1.0 + power_alpha(self.n, self.a) <= 0:
                raise ParameterError(
                    f"power exponent a={self.a} is not elliptic: need a > -1 or a < {1 - self.n}"
                )
            return self
        if self.is_auto:
            return self.with_r0(margin)
        if alpha_infimum(self) < -margin:
            raise ParameterError(
                f"r0={self.r0} gives inf alpha = {alpha_infimum(self):.6g} < -{margin}"
            )
        return self


@dataclass(frozen=True)
class RadialProfile:
    r: float
    v: float
    dv: float
    ddv: float
    alpha: float


@dataclass(frozen=True)
class RadialField:
    """A radial profile and coefficient function, as plain callables.

    Used wherever a computation only needs ``v``, ``v'`` and ``alpha``; this
    lets numerically computed profiles (e.g. ``v - w`` in the non-uniqueness
    check) go through the same code as the closed-form catalog.
    """

    n: int
    v: Callable[[np.ndarray], np.ndarray]
    dv: Callable[[np.ndarray], np.ndarray]
    alpha: Callable[[np.ndarray], np.ndarray]
    label: str = "field"


def power_alpha(n: int, a: float) -> float:
    return a * (a + n) / (n - 1)


def alpha_coefficients(params: FamilyParams) -> tuple[float, float]:
    """Coefficients ``(c1, c2)`` with ``alpha = c1 s + c2 s^2``, ``s = 1/log(r0/r)``."""
    n = params.n
    fam = params.family
    if fam is Family.W11_LOGPOW:
        b = params.beta
        return -b * n / (n - 1), b * (b + 1) / (n - 1)
    if fam is Family.LIPSCHITZ_LOG:
        return -n / (n - 1), 0.0
    if fam is Family.BMO_LOGSQ:
        return -2.0 * n / (n - 1), 2.0 / (n - 1)
    raise ParameterError("POWER has no logarithmic alpha")


def _log_offset(params: FamilyParams, r):
    """``log(r0 / r)`` computed so that it never drops below ``log(r0)`` for r <= 1."""
    return math.log(params.r0) - np.log(r)


def _numeric(params: FamilyParams) -> FamilyParams:
    return params.with_r0() if params.is_auto else params


def profile_arrays(params: FamilyParams, r):
    """Vectorized closed forms ``(v, v', v'', alpha)``; no domain check."""
    p = _numeric(params)
    r = np.asarray(r, dtype=float)
    n = p.n
    fam = p.family
    if fam is Family.POWER:
        a = p.a
        v = r**a
        dv = a * r ** (a - 1)
        ddv = a * (a - 1) * r ** (a - 2)
        alpha = np.full_like(r, power_alpha(n, a))
        return v, dv, ddv, alpha
    L = _log_offset(p, r)
    s = 1.0 / L
    c1, c2 = alpha_coefficients(p)
    alpha = c1 * s + c2 * s * s
    if fam is Family.W11_LOGPOW:
        b = p.beta
        v = r ** (-n) * L ** (-b)
        dv = r ** (-n - 1) * L ** (-b) * (-n + b * s)
        ddv = r ** (-n - 2) * L ** (-b) * (n * (n + 1) - (2 * n + 1) * b * s + b * (b + 1) * s * s)
    elif fam is Family.LIPSCHITZ_LOG:
        v = L
        dv = -1.0 / r
        ddv = 1.0 / (r * r)
    else:
        v = L * L
        dv = -2.0 * L / r
        ddv = (2.0 + 2.0 * L) / (r * r)
    return v, dv, ddv, alpha


def alpha_values(params: FamilyParams, r):
    """Coefficient function only; valid for any ``0 < r <= 1``."""
    return profile_arrays(params, r)[3]


def log_profile(params: FamilyParams, r):
    """``(log v, r v'/v, r^2 v''/v)`` in closed form, safe for radii far below 1e-100."""
    p = _numeric(params)
    r = np.asarray(r, dtype=float)
    n = p.n
    fam = p.family
    logr = np.log(r)
    if fam is Family.POWER:
        a = p.a
        return a * logr, np.full_like(r, a), np.full_like(r, a * (a - 1))
    L = math.log(p.r0) - logr
    s = 1.0 / L
    if fam is Family.W11_LOGPOW:
        b = p.beta
        d2 = n * (n + 1) - (2 * n + 1) * b * s + b * (b + 1) * s * s
        return -n * logr - b * np.log(L), -n + b * s, d2
    if fam is Family.LIPSCHITZ_LOG:
        return np.log(L), -s, s
    return 2.0 * np.log(L), -2.0 * s, 2.0 * s * s + 2.0 * s


def check_radius(r) -> None:
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r <= EPS) or np.any(r >= 1.0 - EPS):
        raise DomainError("radius must lie strictly inside (eps, 1 - eps)")


def eval_profile(params: FamilyParams, r: float) -> RadialProfile:
    """Closed-form ``v, v', v''`` and ``alpha`` at a single radius in (0, 1)."""
    check_radius(r)
    v, dv, ddv, alpha = profile_arrays(params, float(r))
    return RadialProfile(float(r), float(v), float(dv), float(ddv), float(alpha))


def alpha_from_profile(n: int, r: float, v: float, dv: float, ddv: float) -> float:
    """Balance relation ``(r^2 v'' + (n+1) r v') / ((n-1) v)``."""
    if n < 2:
        raise ParameterError("n must be >= 2")
    if v == 0:
        raise ZeroDivisionError("alpha_from_profile: v = 0")
    return (r * r * ddv + (n + 1) * r * dv) / ((n - 1) * v)


def radial_field(params: FamilyParams) -> RadialField:
    p = _numeric(params)
    return RadialField(
        n=p.n,
        v=lambda r: profile_arrays(p, r)[0],
        dv=lambda r: profile_arrays(p, r)[1],
        alpha=lambda r: profile_arrays(p, r)[3],
        label=p.label,
    )


def as_radial_field(obj) -> RadialField:
    return obj if isinstance(obj, RadialField) else radial_field(obj)


def _min_on_unit(c1: float, c2: float, s_max: float) -> tuple[float, float]:
    """Location and value of min of ``c1 s + c2 s^2`` over ``(0, s_max]``."""
    if c2 > 0:
        s_star = min(-c1 / (2 * c2), s_max)
    else:
        s_star = s_max
    s_star = max(s_star, 0.0)
    return s_star, c1 * s_star + c2 * s_star * s_star


def alpha_infimum(params: FamilyParams) -> float:
    """``inf alpha`` over r in (0, 1) for a numeric r0 (or constant alpha for POWER)."""
    if params.family is Family.POWER:
        return power_alpha(params.n, params.a)
    p = _numeric(params)
    c1, c2 = alpha_coefficients(p)
    return _min_on_unit(c1, c2, 1.0 / math.log(p.r0))[1]


def alpha_supremum(params: FamilyParams) -> float:
    if params.family is Family.POWER:
        return power_alpha(params.n, params.a)
    p = _numeric(params)
    c1, c2 = alpha_coefficients(p)
    s_max = 1.0 / math.log(p.r0)
    # quadratic with zero at s=0: sup over (0, s_max] is max(0^+, endpoint)
    return max(0.0, c1 * s_max + c2 * s_max * s_max)


def choose_r0(params: FamilyParams, margin: float = 0.5) -> float:
    """Smallest ``r0 >= e`` with ``inf_{0<r<1} alpha(r) >= -margin``.

    alpha is ``f(s) = c1 s + c2 s^2`` with ``s = 1/log(r0/r)`` ranging over
    ``(0, 1/log r0)``.  f is checked to be decreasing on ``(0, s_min]`` on a
    grid; the bound is then met exactly when ``f(1/log r0) >= -margin``.
    """
    if params.family is Family.POWER:
        raise ParameterError("POWER family has no log offset r0")
    if not 0 < margin < 1:
        raise ParameterError("margin must lie in (0, 1)")
    return _choose_r0(*alpha_coefficients(params), float(margin))


@functools.lru_cache(maxsize=256)
def _choose_r0(c1: float, c2: float, margin: float) -> float:

    def f(s):
        return c1 * s + c2 * s * s

    s_min, f_min = _min_on_unit(c1, c2, 1.0)
    grid = np.linspace(0.0, 1.0, 10_001)
    fg = f(grid)
    if f_min >= -margin and fg.min() >= -margin:
        return math.e
    head = fg[grid <= s_min]
    if np.any(np.diff(head) > 1e-14):
        # not monotone on (0, s_min]: fall back to the first grid crossing
        idx = int(np.argmax(fg < -margin))
        s_root = brentq(lambda s: f(s) + margin, grid[idx - 1], grid[idx], xtol=1e-15, rtol=4 * EPS)
    else:
        s_root = brentq(lambda s: f(s) + margin, 0.0, s_min, xtol=1e-15, rtol=4 * EPS)
    r0 = math.exp(1.0 / s_root)
    while f(1.0 / math.log(r0)) < -margin:
        r0 = np.nextafter(r0, np.inf)
    return float(max(r0, math.e))
