"""Asymptotic kernel for odd solutions near an isolated point and profile checks.

For a coefficient field with a continuous extension ``A(0)`` the kernel is

    R(x) = [(e1.D e1)(x.A0^-1 x) - n (e1.D A0^-1 x)(e1.x)]
           / (|S^{n-1}| |det A0|^(1/2) (x.A0^-1 x)^(n/2 + 1)),

with ``D = A(x) - A(0)``.  Odd solutions then behave like
``x_1 |x|^-n exp(int_{B \\ B_|x|} R)`` (singular branch) or
``x_1 exp(-int_{B \\ B_|x|} R)`` (regular branch).  For
``A = I + alpha (I - xx^T/|x|^2)`` the shell integral reduces to
``(n-1)/n int_|x|^1 alpha(s) ds/s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from patholab.coefficients import CoefficientMatrix, assemble_A, assemble_A_kappa, coefficient_batch
from patholab.errors import DomainError, ParameterError
from patholab.families import (
    Family,
    FamilyParams,
    _numeric,
    alpha_coefficients,
    alpha_values,
    power_alpha,
    profile_arrays,
)
from patholab.quadrature import legendre, sphere_area, sphere_rule


def surface_area_unit_sphere(n: int) -> float:
    """``|S^{n-1}| = 2 pi^(n/2) / Gamma(n/2)``."""
    if int(n) != n or n < 2:
        raise ParameterError("n must be an integer >= 2")
    return sphere_area(int(n))


@dataclass(frozen=True)
class RKernelInput:
    x: np.ndarray
    A_at_x: CoefficientMatrix
    A_at_0: CoefficientMatrix
    n: int

    @classmethod
    def from_family(cls, params: FamilyParams, x) -> "RKernelInput":
        """Catalog field at x with the continuity extension ``A(0) = I``."""
        x = np.asarray(x, dtype=float)
        p = _numeric(params)
        if p.family is Family.POWER and power_alpha(p.n, p.a) != 0.0:
            raise DomainError("A has no continuous extension to the origin for these parameters")
        a = float(alpha_values(p, np.linalg.norm(x)))
        n = x.size
        return cls(x, assemble_A(x, a), CoefficientMatrix(n, np.eye(n), np.zeros(n)), n)

    @classmethod
    def from_alpha(cls, x, alpha_at_r: float) -> "RKernelInput":
        x = np.asarray(x, dtype=float)
        n = x.size
        return cls(x, assemble_A(x, alpha_at_r), CoefficientMatrix(n, np.eye(n), np.zeros(n)), n)

    @classmethod
    def from_kappa(cls, x, kappa_at_r: float) -> "RKernelInput":
        x = np.asarray(x, dtype=float)
        n = x.size
        return cls(x, assemble_A_kappa(x, kappa_at_r), CoefficientMatrix(n, np.eye(n), np.zeros(n)), n)


def R_eval(inp: RKernelInput) -> float:
    """Direct evaluation of the kernel formula."""
    x = np.asarray(inp.x, dtype=float)
    n = inp.n
    if not np.any(x):
        raise DomainError("the kernel is evaluated at x != 0")
    if n > 8:
        raise ParameterError("kernel evaluation supports n <= 8")
    A0 = np.asarray(inp.A_at_0.entries, dtype=float)
    det = float(np.linalg.det(A0))
    if det == 0.0 or np.linalg.cond(A0) > 1e14:
        raise DomainError("A(0) is singular")
    if inp.A_at_x.offset is not None and np.array_equal(A0, np.eye(n)):
        D = np.asarray(inp.A_at_x.offset, dtype=float)  # avoids forming I + small - I
    else:
        D = np.asarray(inp.A_at_x.entries, dtype=float) - A0
    A0inv_x = np.linalg.solve(A0, x)
    q = float(x @ A0inv_x)
    num = D[0, 0] * q - n * float(D[0] @ A0inv_x) * x[0]
    return num / (surface_area_unit_sphere(n) * math.sqrt(abs(det)) * q ** (n / 2 + 1))


def R_eval_batch(X, A_x: np.ndarray, A0: np.ndarray) -> np.ndarray:
    """Vectorized kernel for rows of X with matrices ``A_x`` of shape (m, n, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    det = float(np.linalg.det(A0))
    if det == 0.0 or np.linalg.cond(A0) > 1e14:
        raise DomainError("A(0) is singular")
    D = A_x - A0
    Y = np.linalg.solve(A0, X.T).T
    q = np.einsum("ij,ij->i", X, Y)
    num = D[:, 0, 0] * q - n * np.einsum("ij,ij->i", D[:, 0, :], Y) * X[:, 0]
    return num / (surface_area_unit_sphere(n) * math.sqrt(abs(det)) * q ** (n / 2 + 1))


def R_closed_form(alpha_at_r, X) -> np.ndarray:
    """``alpha(|x|) (|x|^2 - x_1^2) / (|S^{n-1}| |x|^{n+2})`` at the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    r2 = np.einsum("ij,ij->i", X, X)
    perp = np.einsum("ij,ij->i", X[:, 1:], X[:, 1:])  # |x|^2 - x_1^2 without cancellation
    return alpha_at_r * perp / (surface_area_unit_sphere(n) * r2 ** ((n + 2) / 2))


def kappa_alternative_form(kappa_at_r, X) -> np.ndarray:
    """Alternative closed form ``kappa (|x|^2 - n x_1^2)^2 / (|S^{n-1}| |x|^{n+2})``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    r2 = np.einsum("ij,ij->i", X, X)
    return kappa_at_r * (r2 - n * X[:, 0] ** 2) ** 2 / (surface_area_unit_sphere(n) * r2 ** ((n + 2) / 2))


def kappa_direct_closed_form(kappa_at_r, X) -> np.ndarray:
    """What the kernel formula gives on the kappa field: ``kappa (|x|^2 - n x_1^2)^2 / (|S^{n-1}| |x|^{n+4})``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    r2 = np.einsum("ij,ij->i", X, X)
    return kappa_alternative_form(kappa_at_r, X) / r2


@dataclass
class KappaReport:
    n: int
    points: np.ndarray
    direct: np.ndarray
    alternative: np.ndarray
    max_rel_discrepancy: float
    ratio_power: float  # fitted exponent q in alternative/direct ~ |x|^q
    agree: bool

    def summary(self) -> dict:
        return {
            "n": self.n,
            "samples": int(len(self.direct)),
            "max_rel_discrepancy": self.max_rel_discrepancy,
            "alternative_over_direct_power": self.ratio_power,
            "agree": self.agree,
        }


def kappa_discrepancy_report(
    kappa: Callable[[float], float] | None = None, n: int = 2, samples: int = 200, seed: int = 0, tol: float = 1e-10
) -> KappaReport:
    """Evaluate the kernel on the kappa field and compare with the alternative closed form.

    Nothing is asserted: the report carries both values and the fitted power
    of ``|x|`` in their ratio.
    """
    if kappa is None:
        kappa = lambda r: -0.25 / math.log(math.e**2 / r)
    rng = np.random.default_rng(seed)
    rad = np.exp(rng.uniform(math.log(1e-4), math.log(0.9), samples))
    g = rng.standard_normal((samples, n))
    X = rad[:, None] * g / np.linalg.norm(g, axis=1, keepdims=True)
    direct = np.array([R_eval(RKernelInput.from_kappa(x, kappa(np.linalg.norm(x)))) for x in X])
    kap = np.array([kappa(r) for r in rad])
    alternative = kappa_alternative_form(kap, X)
    scale = np.maximum(np.abs(direct), np.abs(alternative))
    ok = scale > 0
    rel = np.abs(direct - alternative)[ok] / scale[ok]
    both = (np.abs(direct) > 1e-300) & (np.abs(alternative) > 1e-300)
    q = float(np.polyfit(np.log(rad[both]), np.log(np.abs(alternative[both] / direct[both])), 1)[0]) if both.sum() > 2 else math.nan
    mrd = float(rel.max()) if rel.size else 0.0
    return KappaReport(n, X, direct, alternative, mrd, q, mrd <= tol)


def shell_integral_numeric(params: FamilyParams, r: float, m_ang: int = 16, m_r: int = 24) -> float:
    """``int_{B(0,1) \\ B(0,r)} R(y) dy`` by product quadrature of the direct kernel."""
    p = _numeric(params)
    n = p.n
    dirs, wd = sphere_rule(n, m_ang)
    x, w = legendre(m_r)
    span = -math.log(r)
    K = max(1, int(math.ceil(span / math.log(2.0))))
    tau = ((np.arange(K)[:, None] + 0.5 * (x[None, :] + 1.0)) / K).ravel()
    wt = np.tile(w / (2.0 * K), K) * span
    rad = r * np.exp(tau * span)
    X = (rad[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    vals = R_eval_batch(X, coefficient_batch(p, X), np.eye(n)).reshape(len(rad), -1)
    return float(np.sum(wt * rad**n * (vals @ wd)))


def _alpha_fn(params: FamilyParams, leading: bool):
    p = _numeric(params)
    if leading and p.family.is_log:
        c1, _ = alpha_coefficients(p)
        lr0 = math.log(p.r0)
        return lambda s: c1 / (lr0 - math.log(s))
    return lambda s: float(alpha_values(p, s))


def asymptotic_exponent_integral(params: FamilyParams, r: float, leading: bool = False, method: str = "closed") -> float:
    """``(n-1)/n int_r^1 alpha(s) ds/s``.

    ``leading`` keeps only the ``1/log(r0/s)`` part of alpha, which is the
    form the profile asymptotics are stated for.  ``method`` is ``"closed"``
    or ``"quad"`` (adaptive quadrature in ``log s``).
    """
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    p = _numeric(params)
    n = p.n
    fac = (n - 1) / n
    if method == "quad":
        f = _alpha_fn(p, leading)
        val, _ = quad(lambda y: f(math.exp(-y)), 0.0, -math.log(r), limit=400, epsabs=1e-14, epsrel=1e-13)
        return fac * val
    if method != "closed":
        raise ParameterError("method must be 'closed' or 'quad'")
    if p.family is Family.POWER:
        return fac * power_alpha(n, p.a) * (-math.log(r))
    c1, c2 = alpha_coefficients(p)
    if leading:
        c2 = 0.0
    lr0 = math.log(p.r0)
    Lr = lr0 - math.log(r)
    # substitute L = log(r0/s): int (c1/L + c2/L^2) dL over [log r0, L_r]
    return fac * (c1 * math.log(Lr / lr0) + c2 * (1.0 / lr0 - 1.0 / Lr))


@dataclass
class ProfileMatch:
    r: np.ndarray
    ratio: np.ndarray
    branch: str
    reference: float
    max_rel_deviation: float
    expected_constant: float | None
    fitted_power: float | None = None
    predicted_power: float | None = None


def _branch(params: FamilyParams) -> str:
    return "regular" if params.family in (Family.LIPSCHITZ_LOG, Family.BMO_LOGSQ) else "singular"


def expected_ratio(params: FamilyParams) -> float | None:
    """Closed-form value of the profile ratio with the leading-order alpha."""
    p = _numeric(params)
    if p.family is Family.POWER:
        return None
    lr0 = math.log(p.r0)
    if p.family is Family.W11_LOGPOW:
        return lr0 ** (-p.beta)
    if p.family is Family.LIPSCHITZ_LOG:
        return lr0
    return lr0**2


def profile_match(params: FamilyParams, r_sequence=None, leading: bool = True, method: str = "closed") -> ProfileMatch:
    """Ratio of the profile to the predicted asymptotic form along ``r_sequence``.

    Singular branch: ``v / (r^-n exp(I))``; regular branch: ``v / exp(-I)``,
    where ``I`` is the exponent integral.  The deviation is measured
    relative to the ratio at the smallest radius.
    """
    p = _numeric(params)
    r = np.geomspace(1e-6, 0.5, 61) if r_sequence is None else np.asarray(sorted(r_sequence), dtype=float)
    if r.min() <= 0 or r.max() >= 0.5 + 1e-15:
        raise DomainError("radii must lie in (0, 1/2)")
    if math.log10(r.max() / r.min()) < 5 - 1e-9:
        raise DomainError("radii must span at least five decades")
    v = profile_arrays(p, r)[0]
    I = np.array([asymptotic_exponent_integral(p, float(s), leading, method) for s in r])
    branch = _branch(p)
    if branch == "singular":
        log_ratio = np.log(np.abs(v)) + p.n * np.log(r) - I
    else:
        log_ratio = np.log(np.abs(v)) + I
    ratio = np.exp(log_ratio)
    ref = float(ratio[0])
    dev = float(np.max(np.abs(ratio / ref - 1.0)))
    fitted = predicted = None
    if p.family is Family.POWER:
        fitted = float(np.polyfit(np.log(r), np.log(np.abs(v)), 1)[0])
        # singular form r^-n exp(I) has exponent -n - (n-1) alpha / n
        predicted = -p.n - (p.n - 1) * power_alpha(p.n, p.a) / p.n
    return ProfileMatch(r, ratio, branch, ref, dev, expected_ratio(p), fitted, predicted)
