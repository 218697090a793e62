"""Market-based and frequency-based price moments of trade windows.

For a window of N trades with values C_i = p_i * U_i the market-based price
moment of order n is the ratio of value and volume power sums,

    p(n) = sum C_i**n / sum U_i**n,

so p(1) is the VWAP. The frequency-based moment is the plain mean of p_i**n.
The two coincide when every volume equals one.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .errors import EmptyWindow, NumericError, OrderOutOfRange
from .trades import TickSeries, Window, WindowSpec, segment_bounds

DEFAULT_N_MAX = 4
# library-side guard on the two volatility forms, relative to p(2)
TWO_FORM_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WindowAggregates:
    """Power sums of one window. Entry n of each array is the sum of x**n;
    entry 0 is the trade count."""

    n_max: int
    count: int
    value_sums: np.ndarray
    volume_sums: np.ndarray
    price_sums: np.ndarray

    @property
    def value_means(self) -> np.ndarray:
        return self.value_sums / self.count

    @property
    def volume_means(self) -> np.ndarray:
        return self.volume_sums / self.count


@dataclass(frozen=True, eq=False)
class MarketMoments:
    p: np.ndarray                      # entry n is p(n); p[0] == 1
    variance: float
    negative_variance: bool
    gamma3: Optional[float] = None     # third central moment, needs n_max >= 3
    skew_normalized: Optional[float] = None

    @property
    def vwap(self) -> float:
        return float(self.p[1])

    @property
    def n_max(self) -> int:
        return len(self.p) - 1


@dataclass(frozen=True, eq=False)
class FrequencyMoments:
    pi: np.ndarray                     # entry n is pi(n); pi[0] == 1
    variance: float
    value_hist: dict
    volume_hist: dict


class Volatility(NamedTuple):
    variance: float
    negative: bool
    from_means: float
    from_sums: float


@dataclass(frozen=True, eq=False)
class MomentReport:
    index: int
    center: float
    count: int
    market: MarketMoments
    frequency: FrequencyMoments
    gaps: np.ndarray                   # entry n is |p(n) - pi(n)| / |pi(n)|; gaps[0] == 0


# ---------------------------------------------------------------------------
# array formulas, shared by the per-window API and the batched table
# ---------------------------------------------------------------------------

def _price_moments(value_sums, volume_sums):
    with np.errstate(invalid="ignore", divide="ignore"):
        return value_sums / volume_sums


# p(2) - p(1)^2 cancels badly when the spread is small next to the price
# level, so the quotients are carried as unevaluated (hi, lo) pairs and the
# difference is rounded once. Products are split with Veltkamp's constant.
_SPLIT = 134217729.0


def _two_prod(a, b):
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    c = _SPLIT * b
    bh = c - (c - b)
    al, bl = a - ah, b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_div(a, b):
    (ah, al), (bh, bl) = a, b
    q = ah / bh
    p, e = _two_prod(q, bh)
    return q, ((((ah - p) - e) + al) - q * bl) / bh


def _dd_variance(q2, q1):
    sh, se = _two_prod(q1[0], q1[0])
    return (q2[0] - sh) + (q2[1] - (se + 2.0 * q1[0] * q1[1]))


def _variance_forms(value_sums, volume_sums, count):
    """sigma^2 from window means and from raw sums, each rounded once."""
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        c1, c2 = value_sums[..., 1], value_sums[..., 2]
        u1, u2 = volume_sums[..., 1], volume_sums[..., 2]
        zero = np.zeros_like(c1)
        n = (np.asarray(count, dtype=np.float64) + zero, zero)
        cm1, cm2 = _dd_div((c1, zero), n), _dd_div((c2, zero), n)
        um1, um2 = _dd_div((u1, zero), n), _dd_div((u2, zero), n)
        from_means = _dd_variance(_dd_div(cm2, um2), _dd_div(cm1, um1))
        from_sums = _dd_variance(_dd_div((c2, zero), (u2, zero)), _dd_div((c1, zero), (u1, zero)))
        # the split overflows near the top of the float range
        plain_means = (c2 / n[0]) / (u2 / n[0]) - ((c1 / n[0]) / (u1 / n[0])) ** 2
        plain_sums = c2 / u2 - (c1 / u1) ** 2
        from_means = np.where(np.isfinite(from_means), from_means, plain_means)
        from_sums = np.where(np.isfinite(from_sums), from_sums, plain_sums)
    return from_means, from_sums


def _third_central(p):
    # a_3 = p(3) - 3 p(1) sigma^2 - p(1)^3
    var = p[..., 2] - p[..., 1] ** 2
    return p[..., 3] - 3.0 * p[..., 1] * var - p[..., 1] ** 3


def _gaps(p, pi):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(p - pi) / np.abs(pi)


# ---------------------------------------------------------------------------
# per-window operations
# ---------------------------------------------------------------------------

def _sums_for(series: TickSeries, n_max: int) -> np.ndarray:
    n = len(series)
    return _kernels.power_sums(
        series.value, series.volume, series.price,
        np.array([0], dtype=np.int64), np.array([n], dtype=np.int64), n_max,
    )[:, 0, :]


def aggregate(window: Window, n_max: int = DEFAULT_N_MAX) -> WindowAggregates:
    if n_max < 1:
        raise OrderOutOfRange(f"n_max must be >= 1, got {n_max}")
    if window.n == 0:
        raise EmptyWindow(f"window {window.index} has no trades")
    sums = _sums_for(window.data, n_max)
    return WindowAggregates(n_max, window.n, _frozen(sums[0]), _frozen(sums[1]), _frozen(sums[2]))


def _check_order(agg: WindowAggregates, n: int, lo: int = 1) -> None:
    if not lo <= n <= agg.n_max:
        raise OrderOutOfRange(f"order {n} outside [{lo}, {agg.n_max}]")


def market_price_moment(agg: WindowAggregates, n: int) -> float:
    """p(n) = C(n) / U(n); p(1) is the VWAP."""
    _check_order(agg, n)
    return float(agg.value_sums[n] / agg.volume_sums[n])


def market_volatility(agg: WindowAggregates) -> Volatility:
    """Market-based variance p(2) - p(1)^2, checked against its sums form.

    The result can be negative; ``negative`` flags that case.
    """
    _check_order(agg, 2)
    p = _price_moments(agg.value_sums, agg.volume_sums)
    from_means, from_sums = _variance_forms(agg.value_sums, agg.volume_sums, agg.count)
    from_means, from_sums = float(from_means), float(from_sums)
    variance = from_sums
    scale = max(abs(p[2]), p[1] ** 2)
    if abs(from_means - from_sums) > TWO_FORM_RTOL * scale:
        raise NumericError(
            f"volatility forms disagree: {from_means!r} vs {from_sums!r}")
    return Volatility(variance, variance < 0, from_means, from_sums)


def third_central_moment(agg: WindowAggregates) -> float:
    _check_order(agg, 3)
    p = _price_moments(agg.value_sums, agg.volume_sums)
    return float(_third_central(p))


def market_moments(agg: WindowAggregates) -> MarketMoments:
    p = _price_moments(agg.value_sums, agg.volume_sums)
    if agg.n_max < 2:
        return MarketMoments(_frozen(p), math.nan, False)
    vol = market_volatility(agg)
    gamma3 = skew = None
    if agg.n_max >= 3:
        gamma3 = float(_third_central(p))
        if vol.variance > 0:
            skew = gamma3 / vol.variance ** 1.5
    return MarketMoments(_frozen(p), vol.variance, vol.negative, gamma3, skew)


def frequency_moment(window: Window, n: int) -> float:
    """pi(n): unweighted mean of the n-th power of trade prices."""
    if n < 1:
        raise OrderOutOfRange(f"order must be >= 1, got {n}")
    return float(aggregate(window, n).price_sums[n] / window.n)


def _histogram(x: np.ndarray) -> dict:
    # levels compared after rounding to 12 significant digits
    return dict(sorted(Counter(float(f"{v:.12g}") for v in x.tolist()).items()))


def frequency_moments(window: Window, n_max: int = DEFAULT_N_MAX, agg: WindowAggregates | None = None) -> FrequencyMoments:
    agg = agg if agg is not None else aggregate(window, n_max)
    pi = agg.price_sums / agg.count
    var = float(pi[2] - pi[1] ** 2) if n_max >= 2 else math.nan
    return FrequencyMoments(
        _frozen(pi), var, _histogram(window.data.value), _histogram(window.data.volume))


def moment_report(window: Window, n_max: int = DEFAULT_N_MAX) -> MomentReport:
    agg = aggregate(window, n_max)
    market = market_moments(agg)
    freq = frequency_moments(window, n_max, agg)
    return MomentReport(window.index, window.center, window.n, market, freq,
                        _frozen(_gaps(market.p, freq.pi)))


# ---------------------------------------------------------------------------
# batched pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WindowTable:
    """Power sums for every window between the first and last occupied one.

    Arrays have one row per window; empty windows carry count 0 and zero sums.
    """

    spec: WindowSpec
    n_max: int
    index: np.ndarray
    center: np.ndarray
    count: np.ndarray
    value_sums: np.ndarray
    volume_sums: np.ndarray
    price_sums: np.ndarray

    def __len__(self) -> int:
        return self.index.shape[0]

    def aggregates(self, row: int) -> WindowAggregates:
        if self.count[row] == 0:
            raise EmptyWindow(f"window {int(self.index[row])} has no trades")
        return WindowAggregates(
            self.n_max, int(self.count[row]),
            _frozen(self.value_sums[row]), _frozen(self.volume_sums[row]),
            _frozen(self.price_sums[row]))


def window_table(series: TickSeries, spec: WindowSpec, n_max: int = DEFAULT_N_MAX) -> WindowTable:
    if n_max < 1:
        raise OrderOutOfRange(f"n_max must be >= 1, got {n_max}")
    if len(series) > 1 and (np.diff(series.t) < 0).any():
        raise ValueError("ticks must be nondecreasing in time")
    k = spec.indices(series.t)
    occupied, starts, stops = segment_bounds(k)
    if occupied.size == 0:
        z = np.empty((0, n_max + 1))
        e = np.empty(0, dtype=np.int64)
        return WindowTable(spec, n_max, e, np.empty(0), e, z, z, z)
    sums = _kernels.power_sums(series.value, series.volume, series.price, starts, stops, n_max)
    index = np.arange(occupied[0], occupied[-1] + 1, dtype=np.int64)
    rows = occupied - occupied[0]
    full = np.zeros((3, index.size, n_max + 1))
    full[:, rows, :] = sums
    count = np.zeros(index.size, dtype=np.int64)
    count[rows] = stops - starts
    return WindowTable(spec, n_max, index, spec.center(index.astype(np.float64)), count,
                       full[0], full[1], full[2])


@dataclass(frozen=True, eq=False)
class TableMoments:
    """Vectorized moments over a WindowTable; NaN where a window is empty."""

    p: np.ndarray
    pi: np.ndarray
    variance: np.ndarray
    variance_from_means: np.ndarray
    variance_from_sums: np.ndarray
    negative: np.ndarray
    variance_freq: np.ndarray
    a3: Optional[np.ndarray]
    gaps: np.ndarray


def table_moments(table: WindowTable) -> TableMoments:
    occupied = table.count > 0
    cnt = np.where(occupied, table.count, np.nan)[:, None]
    p = _price_moments(table.value_sums, table.volume_sums)
    pi = table.price_sums / cnt
    p[~occupied] = np.nan
    if table.n_max >= 2:
        from_means, from_sums = _variance_forms(table.value_sums, table.volume_sums, cnt[:, 0])
        variance = from_sums
        variance_freq = pi[:, 2] - pi[:, 1] ** 2
    else:
        variance = from_means = from_sums = variance_freq = np.full(len(table), np.nan)
    a3 = _third_central(p) if table.n_max >= 3 else None
    return TableMoments(p, pi, variance, from_means, from_sums,
                        occupied & (variance < 0), variance_freq, a3, _gaps(p, pi))


def _num(x) -> Optional[float]:
    x = float(x)
    return x if math.isfinite(x) else None


def report_records(table: WindowTable, moments: TableMoments | None = None) -> list[dict]:
    """Per-window report records (JSON-ready; empty windows carry nulls)."""
    m = moments if moments is not None else table_moments(table)
    nm = table.n_max
    out = []
    idx, ctr, cnt = table.index.tolist(), table.center.tolist(), table.count.tolist()
    p, pi, gaps = m.p[:, 1:].tolist(), m.pi[:, 1:].tolist(), m.gaps[:, 1:].tolist()
    var, neg, varf = m.variance.tolist(), m.negative.tolist(), m.variance_freq.tolist()
    a3 = m.a3.tolist() if m.a3 is not None else None
    for r in range(len(table)):
        rec = {"index": idx[r], "center": ctr[r], "n": cnt[r]}
        if cnt[r] == 0:
            rec.update(p=None, pi=None, variance=None, negative_variance=False,
                       variance_freq=None, a3=None, gaps=None)
        else:
            rec.update(
                p=p[r], pi=pi[r],
                variance=_num(var[r]) if nm >= 2 else None,
                negative_variance=bool(neg[r]),
                variance_freq=_num(varf[r]) if nm >= 2 else None,
                a3=a3[r] if a3 is not None else None,
                gaps=gaps[r],
            )
        out.append(rec)
    return out
