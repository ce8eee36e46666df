"""A small fixed catalog of homogeneous harmonic polynomials."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from patholab.errors import ParameterError


@dataclass(frozen=True)
class HarmonicPolynomial:
    n: int
    k: int
    id: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]

    def __call__(self, X):
        return self.value(np.atleast_2d(X))


def _complex_power(n: int, k: int, imag: bool) -> HarmonicPolynomial:
    # Re/Im of (x1 + i x2)^k is harmonic in every dimension
    def value(X):
        z = (X[:, 0] + 1j * X[:, 1]) ** k
        return z.imag if imag else z.real

    def gradient(X):
        G = np.zeros_like(X, dtype=float)
        if k == 0:
            return G
        dz = k * (X[:, 0] + 1j * X[:, 1]) ** (k - 1)
        if imag:
            G[:, 0], G[:, 1] = dz.imag, dz.real
        else:
            G[:, 0], G[:, 1] = dz.real, -dz.imag
        return G

    name = f"{'im' if imag else 're'}(x1+ix2)^{k}"
    return HarmonicPolynomial(n, k, name, value, gradient)


def _linear(n: int, i: int) -> HarmonicPolynomial:
    def value(X):
        return X[:, i].astype(float)

    def gradient(X):
        G = np.zeros_like(X, dtype=float)
        G[:, i] = 1.0
        return G

    return HarmonicPolynomial(n, 1, f"x{i + 1}", value, gradient)


def _x1x2(n: int) -> HarmonicPolynomial:
    def value(X):
        return X[:, 0] * X[:, 1]

    def gradient(X):
        G = np.zeros_like(X, dtype=float)
        G[:, 0], G[:, 1] = X[:, 1], X[:, 0]
        return G

    return HarmonicPolynomial(n, 2, "x1*x2", value, gradient)


def _x1x2x3(n: int) -> HarmonicPolynomial:
    def value(X):
        return X[:, 0] * X[:, 1] * X[:, 2]

    def gradient(X):
        G = np.zeros_like(X, dtype=float)
        G[:, 0] = X[:, 1] * X[:, 2]
        G[:, 1] = X[:, 0] * X[:, 2]
        G[:, 2] = X[:, 0] * X[:, 1]
        return G

    return HarmonicPolynomial(n, 3, "x1*x2*x3", value, gradient)


def _zonal2(n: int) -> HarmonicPolynomial:
    # (n-1) x1^2 - sum_{i>1} x_i^2
    def value(X):
        return (n - 1) * X[:, 0] ** 2 - np.sum(X[:, 1:] ** 2, axis=1)

    def gradient(X):
        G = -2.0 * X.astype(float)
        G[:, 0] = 2.0 * (n - 1) * X[:, 0]
        return G

    return HarmonicPolynomial(n, 2, "zonal2", value, gradient)


def catalog(n: int) -> dict[str, HarmonicPolynomial]:
    """Harmonic polynomials available in dimension ``n``, keyed by id."""
    if n < 2:
        raise ParameterError("n must be >= 2")
    polys = [
        _complex_power(n, 0, False),
        _linear(n, 0),
        _linear(n, 1),
        _x1x2(n),
        _complex_power(n, 2, False),
        _zonal2(n),
        _complex_power(n, 3, False),
        _complex_power(n, 3, True),
        _complex_power(n, 4, False),
    ]
    if n >= 3:
        polys.append(_x1x2x3(n))
    return {p.id: p for p in polys}


def get(n: int, pid: str) -> HarmonicPolynomial:
    try:
        return catalog(n)[pid]
    except KeyError:
        raise ParameterError(f"no harmonic polynomial {pid!r} in dimension {n}") from None


def x1(n: int) -> HarmonicPolynomial:
    return _linear(n, 0)


def fd_laplacian(P: HarmonicPolynomial, X: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Second-order central-difference Laplacian of P at the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = -2.0 * P.n * P.value(X)
    for i in range(P.n):
        e = np.zeros(P.n)
        e[i] = h
        out = out + P.value(X + e) + P.value(X - e)
    return out / (h * h)
