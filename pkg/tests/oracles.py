"""Independent reference implementations used by the tests.

Nothing here calls into the package's numeric paths: moments come from exact
rational arithmetic, characteristic-function derivatives from finite
differences of the evaluated function.
"""

from fractions import Fraction

import numpy as np

from mbpm.trades import TickSeries, Window


def series_of(pairs, t=None):
    """TickSeries from (price, volume) pairs with unit time steps."""
    price = np.array([p for p, _ in pairs], dtype=np.float64)
    volume = np.array([u for _, u in pairs], dtype=np.float64)
    t = np.arange(len(pairs), dtype=np.float64) if t is None else np.asarray(t, dtype=np.float64)
    return TickSeries(t, price, volume, price * volume)


def window_of(pairs, index=0):
    return Window(index, 0.0, float(len(pairs) + 1), series_of(pairs))


def exact_moments(pairs, n_max=4):
    """Exact C(n), U(n), p(n), pi(n), variance and a_3 as Fractions."""
    ps = [Fraction(p) for p, _ in pairs]
    us = [Fraction(u) for _, u in pairs]
    cs = [p * u for p, u in zip(ps, us)]
    N = len(pairs)
    C = [sum(c ** n for c in cs) for n in range(n_max + 1)]
    U = [sum(u ** n for u in us) for n in range(n_max + 1)]
    p = [C[n] / U[n] for n in range(n_max + 1)]
    pi = [sum(x ** n for x in ps) / N for n in range(n_max + 1)]
    out = {"C": C, "U": U, "p": p, "pi": pi}
    if n_max >= 2:
        out["variance"] = p[2] - p[1] ** 2
    if n_max >= 3:
        out["a3"] = p[3] - 3 * p[1] * out["variance"] - p[1] ** 3
    return out


# central-difference stencils over offsets -3..3, fourth order accurate
_STENCILS = {
    1: np.array([0, 1 / 12, -2 / 3, 0, 2 / 3, -1 / 12, 0]),
    2: np.array([0, -1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12, 0]),
    3: np.array([1 / 8, -1, 13 / 8, 0, -13 / 8, 1, -1 / 8]),
}


def fd_raw_moment(evaluate, n, h):
    """(1/i^n) d^n F / dx^n at 0 by central differences of ``evaluate``."""
    x = h * np.arange(-3, 4)
    vals = np.array([complex(evaluate(v)) for v in x])
    deriv = np.dot(_STENCILS[n], vals) / h ** n
    return (deriv / 1j ** n).real


def two_point(x0, d):
    return [(x0 - d, 0.5), (x0 + d, 0.5)]
