"""Seeded synthetic trade streams.

Spec strings (used by the CLI):

    price:  const:<level> | rw:<start>,<step_vol> | step:<base>,<amplitude>,<period>
    volume: const1 | levels:<v1>,<v2>,... | pareto:<shape>

``step`` is a square wave: the price sits at base + amplitude for the first
half of each period and at base - amplitude for the second half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidConfig
from .trades import TickSeries


@dataclass(frozen=True)
class ConstantPrice:
    level: float


@dataclass(frozen=True)
class RandomWalkPrice:
    start: float
    step_vol: float


@dataclass(frozen=True)
class RegimeStepPrice:
    base: float
    amplitude: float
    period: float


@dataclass(frozen=True)
class UnitVolume:
    pass


@dataclass(frozen=True)
class LevelVolume:
    levels: tuple


@dataclass(frozen=True)
class ParetoVolume:
    shape: float


PriceProcess = Union[ConstantPrice, RandomWalkPrice, RegimeStepPrice]
VolumeDist = Union[UnitVolume, LevelVolume, ParetoVolume]


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_ticks: int
    tick_spacing: float = 1.0
    price: PriceProcess = ConstantPrice(100.0)
    volume: VolumeDist = UnitVolume()
    coupling: float = 0.0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfig(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.n_ticks < 1:
            raise InvalidConfig(f"n_ticks must be >= 1, got {self.n_ticks!r}")
        if not (math.isfinite(self.tick_spacing) and self.tick_spacing > 0):
            raise InvalidConfig(f"tick_spacing must be > 0, got {self.tick_spacing!r}")
        if not -1 <= self.coupling <= 1:
            raise InvalidConfig(f"coupling must lie in [-1, 1], got {self.coupling!r}")
        p = self.price
        if isinstance(p, ConstantPrice) and not p.level > 0:
            raise InvalidConfig("constant price must be > 0")
        if isinstance(p, RandomWalkPrice) and not (p.start > 0 and p.step_vol >= 0):
            raise InvalidConfig("random walk needs start > 0 and step_vol >= 0")
        if isinstance(p, RegimeStepPrice) and not (p.base > abs(p.amplitude) and p.period > 0):
            raise InvalidConfig("regime step needs base > |amplitude| and period > 0")
        v = self.volume
        if isinstance(v, LevelVolume) and (not v.levels or min(v.levels) <= 0):
            raise InvalidConfig("volume levels must be non-empty and > 0")
        if isinstance(v, ParetoVolume) and not v.shape > 0:
            raise InvalidConfig("pareto shape must be > 0")


def round_sig(x: np.ndarray, digits: int = 12) -> np.ndarray:
    """Round positive values to ``digits`` significant decimal digits."""
    x = np.asarray(x, dtype=np.float64)
    out = x.copy()
    nz = x != 0
    e = np.floor(np.log10(np.abs(x[nz])))
    k = (digits - 1 - e).astype(np.int64)
    # divide/multiply by exact powers of ten so the result is the nearest double
    pos = k >= 0
    xs = x[nz]
    r = np.empty_like(xs)
    scale = 10.0 ** np.abs(k)
    r[pos] = np.round(xs[pos] * scale[pos]) / scale[pos]
    r[~pos] = np.round(xs[~pos] / scale[~pos]) * scale[~pos]
    out[nz] = r
    return out


def _rank_couple(price, volume, c, rng):
    # reorder volume draws along a latent score correlated with price rank
    ranks = np.argsort(np.argsort(price, kind="stable"), kind="stable").astype(np.float64)
    z = ranks - ranks.mean()
    sd = z.std()
    z = z / sd if sd > 0 else z
    latent = c * z + math.sqrt(max(0.0, 1.0 - c * c)) * rng.standard_normal(price.size)
    out = np.empty_like(volume)
    out[np.argsort(latent, kind="stable")] = np.sort(volume, kind="stable")
    return out


def generate(config: SynthConfig) -> TickSeries:
    """Deterministic tick stream for a configuration.

    Times start at 0 with exponential gaps of mean ``tick_spacing``; all
    emitted fields are rounded to 12 significant digits.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = config.n_ticks
    gaps = rng.exponential(config.tick_spacing, n)
    t = np.cumsum(gaps) - gaps[0]
    t = round_sig(t)

    p = config.price
    if isinstance(p, ConstantPrice):
        price = np.full(n, float(p.level))
    elif isinstance(p, RandomWalkPrice):
        steps = rng.standard_normal(n) * p.step_vol
        steps[0] = 0.0
        price = p.start * np.exp(np.cumsum(steps))
    else:
        phase = np.mod(t, p.period) < 0.5 * p.period
        price = np.where(phase, p.base + p.amplitude, p.base - p.amplitude)
    price = round_sig(price)

    v = config.volume
    if isinstance(v, UnitVolume):
        volume = np.ones(n)
    elif isinstance(v, LevelVolume):
        volume = rng.choice(np.asarray(v.levels, dtype=np.float64), n)
    else:
        volume = 1.0 + rng.pareto(v.shape, n)
    if config.coupling != 0 and not isinstance(v, UnitVolume):
        volume = _rank_couple(price, volume, config.coupling, rng)
    volume = round_sig(volume)

    if not ((price > 0).all() and (volume > 0).all()):
        raise InvalidConfig("generated prices and volumes must be positive")
    return TickSeries(t, price, volume, price * volume)


def _floats(body: str, n: int | None, what: str) -> list[float]:
    try:
        vals = [float(x) for x in body.split(",")] if body else []
    except ValueError:
        raise InvalidConfig(f"bad {what} spec parameters {body!r}") from None
    if n is not None and len(vals) != n:
        raise InvalidConfig(f"{what} spec expects {n} parameter(s), got {len(vals)}")
    return vals


def parse_price_spec(spec: str) -> PriceProcess:
    kind, _, body = spec.strip().partition(":")
    if kind == "const":
        return ConstantPrice(*_floats(body, 1, "price"))
    if kind == "rw":
        return RandomWalkPrice(*_floats(body, 2, "price"))
    if kind == "step":
        return RegimeStepPrice(*_floats(body, 3, "price"))
    raise InvalidConfig(f"unknown price process {spec!r}")


def parse_volume_spec(spec: str) -> VolumeDist:
    kind, _, body = spec.strip().partition(":")
    if kind in ("const1", "unit"):
        return UnitVolume()
    if kind == "levels":
        return LevelVolume(tuple(_floats(body, None, "volume")))
    if kind == "pareto":
        return ParetoVolume(*_floats(body, 1, "volume"))
    raise InvalidConfig(f"unknown volume distribution {spec!r}")


def lag1_variation(means: np.ndarray) -> float:
    """Mean absolute change between consecutive finite window means."""
    m = np.asarray(means, dtype=np.float64)
    m = m[np.isfinite(m)]
    if m.size < 2:
        return 0.0
    return float(np.mean(np.abs(np.diff(m))))
