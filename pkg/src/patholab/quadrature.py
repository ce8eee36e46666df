"""Product quadrature rules on spheres, balls and dyadic shells."""

from __future__ import annotations

import functools
import math
from typing import NamedTuple

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre


class QuadResult(NamedTuple):
    value: float
    error: float

    def __float__(self):
        return float(self.value)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@functools.lru_cache(maxsize=64)
def legendre(m: int):
    x, w = roots_legendre(m)
    return x, w


@functools.lru_cache(maxsize=64)
def jacobi_sym(m: int, n: int):
    """Gauss rule for weight ``(1 - t^2)^((n-3)/2)`` on [-1, 1]."""
    a = (n - 3) / 2.0
    return roots_jacobi(m, a, a)


@functools.lru_cache(maxsize=64)
def sphere_rule(n: int, m: int):
    """Directions and weights integrating polynomials on S^{n-1}.

    n = 2 uses the trapezoid rule with ``2m`` angles; higher n recurses with
    ``x = (t, sqrt(1 - t^2) xi)`` and a Gauss-Jacobi rule in t.
    Weights sum to ``sphere_area(n)``.
    """
    if n == 2:
        th = (np.arange(2 * m) + 0.5) * (math.pi / m)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        w = np.full(2 * m, math.pi / m)
        return dirs, w
    t, wt = jacobi_sym(m, n)
    sub, wsub = sphere_rule(n - 1, m)
    s = np.sqrt(1.0 - t * t)
    dirs = np.concatenate([np.column_stack([np.full(len(sub), ti), si * sub]) for ti, si in zip(t, s)])
    w = np.concatenate([wi * wsub for wi in wt])
    return dirs, w


def ray_exit(dirs: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Distance from the origin to the sphere |x - c| = R along each direction (origin inside)."""
    cd = dirs @ center
    return cd + np.sqrt(cd * cd - center @ center + radius * radius)


def ball_minus_hole(center, radius: float, rho: float, n: int, m_r: int = 16, m_ang: int = 32):
    """Nodes and weights for ``int_{B(c,R) \\ B(0,rho)} f dx``.

    When the hole sits inside the ball, rays from the origin are split into
    panels of log-length at most log 2 between ``rho`` and the exit radius.
    When the ball avoids the closed hole, polar coordinates about ``c`` are
    used.  Any other configuration is rejected.
    """
    c = np.asarray(center, dtype=float)
    dc = float(np.linalg.norm(c))
    dirs, wd = sphere_rule(n, m_ang)
    x, w = legendre(m_r)
    if rho + dc < radius:
        rmax = ray_exit(dirs, c, radius)
        span = np.log(rmax / rho)
        K = max(1, int(math.ceil(span.max() / math.log(2.0))))
        # tau in [0,1] split into K panels, r = rho * exp(tau * span)
        tau = ((np.arange(K)[:, None] + 0.5 * (x[None, :] + 1.0)) / K).ravel()
        wt = np.tile(w / (2.0 * K), K)
        r = rho * np.exp(tau[None, :] * span[:, None])
        jac = r**n * span[:, None]
        X = (r[:, :, None] * dirs[:, None, :]).reshape(-1, n)
        W = (wd[:, None] * wt[None, :] * jac).ravel()
        return X, W
    if dc - radius >= rho:
        K = 2
        s = ((np.arange(K)[:, None] + 0.5 * (x[None, :] + 1.0)) / K).ravel() * radius
        ws = np.tile(w * radius / (2.0 * K), K)
        X = (c[None, None, :] + s[None, :, None] * dirs[:, None, :]).reshape(-1, n)
        W = (wd[:, None] * (ws * s ** (n - 1))[None, :]).ravel()
        return X, W
    raise ValueError("the hole B(0, rho) must lie inside the ball or be disjoint from it")


def log_panels(r_lo: float, r_hi: float, m: int):
    """Gauss nodes/weights in r on [r_lo, r_hi], uniform in log r; weights include dr."""
    x, w = legendre(m)
    a, b = math.log(r_lo), math.log(r_hi)
    y = 0.5 * (b - a) * x + 0.5 * (b + a)
    r = np.exp(y)
    return r, 0.5 * (b - a) * w * r
