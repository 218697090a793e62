"""Exponential-polynomial approximations of the price characteristic function.

F_k(x) = exp( sum_{m=1..k} (i^m / m!) a_m x^m ),  k in {1, 2, 3}

The coefficients a_m are the first k cumulants of the price measure, fitted so
that F_k reproduces the market-based moments p(1..k). k=1 is a point mass at
the VWAP, k=2 the Gaussian, k=3 a signed quasi-density obtained numerically.

Fourier convention: F(x) = int eta(p) e^{ixp} dp, eta(p) = (1/2pi) int F(x) e^{-ixp} dx.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from math import comb, factorial
from os import PathLike
from typing import IO, NamedTuple, Union

import numpy as np

from . import _kernels
from .errors import GridTooCoarse, InsufficientMoments, NonPositiveVariance, OrderOutOfRange
from .moments import MarketMoments

DEFAULT_GRID_POINTS = 4096
DEFAULT_HALF_WIDTH = 8.0     # grid spans p(1) +/- 8 sigma (order 2)
DEFAULT_FREQ_RANGE = 12.0    # inversion integrates |x| <= 12 / sigma
DEFAULT_FREQ_POINTS = 1024
NEGATIVE_TOL = 1e-9


@dataclass(frozen=True)
class CharFuncApprox:
    order: int
    a: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if self.order not in (1, 2, 3):
            raise OrderOutOfRange(f"order must be 1, 2 or 3, got {self.order}")
        if len(self.a) != self.order:
            raise ValueError(f"order {self.order} needs {self.order} coefficients, got {len(self.a)}")
        if self.order >= 2 and not self.a[1] > 0:
            raise NonPositiveVariance(
                f"Gaussian width must be positive, got variance {self.a[1]!r}", self.a[1])

    @property
    def mean(self) -> float:
        return self.a[0]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.a[1]) if self.order >= 2 else 0.0


class Atom(NamedTuple):
    location: float
    mass: float = 1.0
    singular: bool = True


@dataclass(frozen=True, eq=False)
class MeasureGrid:
    p: np.ndarray
    eta: np.ndarray
    spacing: float
    normalization: float
    negative: bool

    def moment(self, n: int, central: bool = False) -> float:
        """Trapezoid quadrature of p**n (or (p - mean)**n) against eta."""
        x = self.p - self.moment(1) / self.normalization if central else self.p
        f = self.eta * x ** n
        h = self.spacing
        return float(h * (f.sum() - 0.5 * (f[0] + f[-1])))

    def to_csv(self, dest: Union[str, "PathLike[str]", IO[str]]) -> None:
        own = not hasattr(dest, "write")
        fh = open(dest, "w", newline="") if own else dest
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("p", "eta"))
            w.writerows(zip(map(repr, self.p.tolist()), map(repr, self.eta.tolist())))
        finally:
            if own:
                fh.close()


def fit_coefficients(moments: MarketMoments, k: int) -> CharFuncApprox:
    """Cumulant coefficients a_1..a_k matching p(1..k)."""
    if k not in (1, 2, 3):
        raise OrderOutOfRange(f"order must be 1, 2 or 3, got {k}")
    if moments.n_max < k:
        raise InsufficientMoments(f"order {k} needs p(1..{k}), have up to p({moments.n_max})")
    p = moments.p
    a = [float(p[1])]
    if k >= 2:
        var = float(moments.variance)
        if not var > 0:
            raise NonPositiveVariance(f"market variance {var!r} is not positive", var)
        a.append(var)
    if k >= 3:
        a.append(float(p[3] - 3.0 * p[1] * a[1] - p[1] ** 3))
    return CharFuncApprox(k, tuple(a))


def _exponent_centered(approx: CharFuncApprox, x):
    # sum_{m>=2} (i^m/m!) a_m x^m; the mean enters as a pure phase
    z = np.zeros_like(np.asarray(x, dtype=np.float64), dtype=np.complex128)
    for m in range(2, approx.order + 1):
        z = z + (1j ** m / factorial(m)) * approx.a[m - 1] * np.asarray(x) ** m
    return z


def charfunc_eval(approx: CharFuncApprox, x):
    """F_k at real x (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(1j * approx.a[0] * x + _exponent_centered(approx, x))
    return complex(out) if out.ndim == 0 else out


def moment_from_charfunc(approx: CharFuncApprox, n: int) -> float:
    """Raw moment of order n implied by F_k, from the cumulant recursion
    mu_n = sum_{j=1..n} C(n-1, j-1) kappa_j mu_{n-j}."""
    if n < 0:
        raise OrderOutOfRange(f"order must be >= 0, got {n}")
    kappa = list(approx.a) + [0.0] * max(0, n - approx.order)
    mu = [1.0]
    for m in range(1, n + 1):
        mu.append(math.fsum(comb(m - 1, j - 1) * kappa[j - 1] * mu[m - j] for j in range(1, m + 1)))
    return mu[n]


def gaussian_density(approx: CharFuncApprox, p):
    if approx.order != 2:
        raise OrderOutOfRange("Gaussian density needs an order-2 approximation")
    mean, var = approx.a
    p = np.asarray(p, dtype=np.float64)
    out = np.exp(-((p - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    return float(out) if out.ndim == 0 else out


def delta_measure(approx: CharFuncApprox) -> Atom:
    if approx.order != 1:
        raise OrderOutOfRange("point mass needs an order-1 approximation")
    return Atom(approx.a[0])


def invert_charfunc_numeric(
    approx: CharFuncApprox,
    n_points: int = DEFAULT_GRID_POINTS,
    half_width: float | None = None,
    freq_range: float = DEFAULT_FREQ_RANGE,
    freq_points: int = DEFAULT_FREQ_POINTS,
) -> MeasureGrid:
    """Numerical inverse Fourier transform of F_k on a uniform price grid.

    ``half_width`` and ``freq_range`` are in units of sigma and 1/sigma. The
    order-3 quasi-density has a slowly decaying oscillating tail, so its
    default half width grows with the cubic coefficient.
    """
    if approx.order < 2:
        raise OrderOutOfRange("numeric inversion needs order 2 or 3; order 1 is a point mass")
    sigma = approx.sigma
    if half_width is None:
        half_width = DEFAULT_HALF_WIDTH
        if approx.order == 3:
            half_width += 8.0 * abs(approx.a[2]) ** (1 / 3) / sigma
    x_max = freq_range / sigma
    x = np.linspace(0.0, x_max, freq_points)
    dx = x[1] - x[0]
    offsets = np.linspace(-half_width * sigma, half_width * sigma, n_points)
    h = offsets[1] - offsets[0]
    # density band-limited to |x| <= x_max: grid must sample at Nyquist
    if h > math.pi / x_max:
        raise GridTooCoarse(
            f"grid spacing {h:.6g} exceeds Nyquist limit {math.pi / x_max:.6g} "
            f"({n_points} points over +/-{half_width} sigma)")
    # frequency step sets the alias period 2pi/dx, which must clear the grid span
    if 2.0 * math.pi / dx < 2.0 * (offsets[-1] - offsets[0]):
        raise GridTooCoarse(f"frequency step {dx:.6g} aliases within the price grid")
    w = np.full(freq_points, dx)
    w[0] = w[-1] = 0.5 * dx
    f = np.exp(_exponent_centered(approx, x))
    eta = _kernels.inverse_fourier(f.real, f.imag, x, w, offsets)
    norm = float(h * (eta.sum() - 0.5 * (eta[0] + eta[-1])))
    return MeasureGrid(approx.a[0] + offsets, eta, float(h), norm, bool((eta < -NEGATIVE_TOL).any()))
