"""Consumption-based pricing under power utility, Taylor-expanded in the
price and payoff fluctuations over an averaging window.

Notation used throughout: an investor with base consumptions ``e_t`` (today)
and ``e_t1`` (next period) buys ``xi`` units at mean price ``p0`` and receives
the payoff ``x = x0 + dx`` per unit, so consumptions are

    c_t0  = e_t  - p0 * xi
    c_t1_0 = e_t1 + x0 * xi

and the two-period utility is u(c_t) + beta * E[u(c_t1)] with
u(c) = c**(1 - alpha) / (1 - alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .errors import (
    AlphaOutOfRange,
    BadDistribution,
    DegenerateDenominator,
    InfeasibleConsumption,
    InvalidConfig,
    NegativePrice,
    NoConvergence,
    NonPositiveConsumption,
    NonPositiveVariance,
    NumericError,
    RiskFreeInconsistent,
    SkewnessBelowBound,
    ZeroVariance,
)

DEGENERATE_DENOMINATOR = 1e-14
BOUNDARY_RTOL = 1e-12
LINEAR_MODES = ("eq4_5", "eq4_6")
VARIANTS = ("eq4_9", "eq4_11", "eq4_26")


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UtilityParams:
    alpha: float
    beta: float
    e_t: float
    e_t1: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise AlphaOutOfRange(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not self.beta > 0:
            raise InvalidConfig(f"beta must be > 0, got {self.beta!r}")
        if not (self.e_t >= 0 and self.e_t1 >= 0):
            raise InvalidConfig("base consumptions must be >= 0")


@dataclass(frozen=True)
class PriceStats:
    p0: float
    var_p: float = 0.0

    def __post_init__(self):
        if not self.p0 > 0:
            raise InvalidConfig(f"mean price must be > 0, got {self.p0!r}")
        if not self.var_p >= 0:
            # negative market variance is legal upstream but not here
            raise NonPositiveVariance(f"price variance {self.var_p!r} is negative", self.var_p)


@dataclass(frozen=True)
class PayoffStats:
    x0: float
    var_x: float = 0.0
    gamma3_x: float = 0.0
    price_next: Optional[float] = None
    dividend: Optional[float] = None

    def __post_init__(self):
        if not self.x0 > 0:
            raise InvalidConfig(f"mean payoff must be > 0, got {self.x0!r}")
        if not self.var_x >= 0:
            raise InvalidConfig(f"payoff variance must be >= 0, got {self.var_x!r}")
        if self.price_next is not None and self.dividend is not None:
            if not math.isclose(self.price_next + self.dividend, self.x0, rel_tol=1e-12):
                raise InvalidConfig("mean payoff must equal next price plus dividend")

    @property
    def sigma_x(self) -> float:
        return math.sqrt(self.var_x)

    @property
    def sk_x(self) -> Optional[float]:
        if self.var_x == 0:
            return None
        return self.gamma3_x / self.var_x ** 1.5

    @classmethod
    def from_skewness(cls, x0: float, var_x: float, sk_x: float, **kw) -> "PayoffStats":
        return cls(x0, var_x, sk_x * var_x ** 1.5, **kw)

    @classmethod
    def from_distribution(cls, dist: Sequence[tuple[float, float]]) -> "PayoffStats":
        values, probs = _check_distribution(dist)
        x0 = math.fsum(p * x for x, p in zip(values, probs))
        var = math.fsum(p * (x - x0) ** 2 for x, p in zip(values, probs))
        g3 = math.fsum(p * (x - x0) ** 3 for x, p in zip(values, probs))
        return cls(x0, var, g3)


def _check_distribution(dist):
    if not dist:
        raise BadDistribution("empty payoff distribution")
    values = [float(x) for x, _ in dist]
    probs = [float(p) for _, p in dist]
    if any(not (math.isfinite(p) and p >= 0) for p in probs) or not all(map(math.isfinite, values)):
        raise BadDistribution("probabilities must be finite and >= 0, values finite")
    if abs(math.fsum(probs) - 1.0) > 1e-12:
        raise BadDistribution(f"probabilities sum to {math.fsum(probs)!r}, not 1")
    return values, probs


# ---------------------------------------------------------------------------
# utility
# ---------------------------------------------------------------------------

class UtilityDerivs(NamedTuple):
    u: Optional[float]   # None at alpha == 1, where the power form is singular
    d1: float
    d2: float
    d3: float


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1], got {alpha!r}")


def power_utility(c: float, alpha: float) -> float:
    _check_alpha(alpha)
    if alpha == 1:
        raise AlphaOutOfRange("utility value is undefined at alpha == 1; only derivatives are")
    if not c > 0:
        raise NonPositiveConsumption(f"consumption must be > 0, got {c!r}")
    return c ** (1 - alpha) / (1 - alpha)


def utility_derivs(c: float, alpha: float) -> UtilityDerivs:
    _check_alpha(alpha)
    if not c > 0:
        raise NonPositiveConsumption(f"consumption must be > 0, got {c!r}")
    d1 = c ** -alpha
    u = None if alpha == 1 else c * d1 / (1 - alpha)
    return UtilityDerivs(u, d1, -alpha * d1 / c, alpha * (1 + alpha) * d1 / (c * c))


def consumptions(params: UtilityParams, xi: float, p0: float, x0: float) -> tuple[float, float]:
    return params.e_t - p0 * xi, params.e_t1 + x0 * xi


def _feasible(c_t0: float, c_t1: float) -> bool:
    return c_t0 > 0 and c_t1 > 0


# ---------------------------------------------------------------------------
# discount factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscountFactors:
    variant: str
    m0: float
    m1: float
    m2: Optional[float] = None
    m3: Optional[float] = None


def discount_factors(params: UtilityParams, xi: float, p0: float, x0: float,
                     variant: str = "eq4_9") -> DiscountFactors:
    """Mean discount factors at holding ``xi``.

    eq4_9 / eq4_11: m0 = beta u'(c1)/u'(c0), m1 = beta u''(c1)/u'(c0); eq4_11
    adds m2 = u''(c0)/u'(c0). eq4_26: ratios of like derivatives
    beta u^(k)(c1)/u^(k)(c0) for k = 1, 2, 3 as m0, m1, m3.
    """
    if variant not in VARIANTS:
        raise InvalidConfig(f"unknown discount-factor variant {variant!r}")
    c0, c1 = consumptions(params, xi, p0, x0)
    if not _feasible(c0, c1):
        raise InfeasibleConsumption(f"consumptions ({c0!r}, {c1!r}) at xi={xi!r} are not positive")
    b = params.beta
    t = utility_derivs(c0, params.alpha)
    n = utility_derivs(c1, params.alpha)
    if variant == "eq4_26":
        return DiscountFactors(variant, b * n.d1 / t.d1, b * n.d2 / t.d2, None, b * n.d3 / t.d3)
    m2 = t.d2 / t.d1 if variant == "eq4_11" else None
    return DiscountFactors(variant, b * n.d1 / t.d1, b * n.d2 / t.d1, m2)


# ---------------------------------------------------------------------------
# linearized first-order condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PricingSolution:
    mode: str
    xi_max: float
    single_pass: float
    c_t0: float
    c_t1_0: float
    residual: float
    iterations: int
    infeasible_consumption: bool = False
    bound_4_10_violated: bool = False
    degenerate_denominator: bool = False
    method: str = "fixed_point"

    @property
    def flags(self) -> list[str]:
        names = ("infeasible_consumption", "bound_4_10_violated", "degenerate_denominator")
        return [k for k in names if getattr(self, k)]


class FocTerms(NamedTuple):
    numerator: float
    denominator: float
    scale: float


def foc_terms(params: UtilityParams, price: PriceStats, payoff: PayoffStats,
              xi: float, mode: str = "eq4_5") -> FocTerms:
    """Numerator and denominator of the linearized root formula at ``xi``.

    The linearized condition reads numerator - xi * denominator = 0 with
        numerator   = u'(c_t0) p0 - beta u'(c_t1_0) x0
        denominator = u''(c_t0) var_p + beta u''(c_t1_0) var_x
    eq4_6 drops the averaging of today's price (var_p -> 0).
    """
    if mode not in LINEAR_MODES:
        raise InvalidConfig(f"unknown linear mode {mode!r}")
    c0, c1 = consumptions(params, xi, price.p0, payoff.x0)
    t = utility_derivs(c0, params.alpha)
    n = utility_derivs(c1, params.alpha)
    b = params.beta
    left = t.d1 * price.p0
    right = b * n.d1 * payoff.x0
    var_p = price.var_p if mode == "eq4_5" else 0.0
    den = t.d2 * var_p + b * n.d2 * payoff.var_x
    return FocTerms(left - right, den, abs(left) + abs(right))


def linear_foc_residual(params, price, payoff, xi, mode="eq4_5") -> float:
    """Relative residual of the linearized first-order condition at ``xi``."""
    f = foc_terms(params, price, payoff, xi, mode)
    return (f.numerator - xi * f.denominator) / f.scale


def _upper_bound_4_10(params: UtilityParams, payoff: PayoffStats, xi: float) -> float:
    # -u'/u'' * x0 / var_x at c_t1_0, with u'/u'' = -c/alpha
    if payoff.var_x == 0:
        return math.inf
    c1 = params.e_t1 + payoff.x0 * xi
    return c1 * payoff.x0 / (params.alpha * payoff.var_x)


def _bracketed_root(params, price, payoff, mode, max_iter=400):
    # root of numerator - xi * denominator nearest 0 on the feasible interval;
    # the residual runs to -inf as c_t1_0 -> 0 and to +inf as c_t0 -> 0
    def resid(xi):
        f = foc_terms(params, price, payoff, xi, mode)
        return f.numerator - xi * f.denominator

    r0 = resid(0.0)
    if r0 == 0:
        return 0.0
    if r0 < 0:
        lo, hi = 0.0, params.e_t / price.p0
    else:
        lo, hi = -params.e_t1 / payoff.x0, 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if resid(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def xi_max_linear(params: UtilityParams, price: PriceStats, payoff: PayoffStats,
                  mode: str = "eq4_5", damping: float = 0.5, tol: float = 1e-10,
                  max_iter: int = 200) -> PricingSolution:
    """Utility-maximizing holding from the linearized first-order condition.

    u' and u'' depend on xi, so the root formula is iterated as a damped
    fixed point from xi = 0. The undamped value at xi = 0 is reported as
    ``single_pass``.

    The fixed point map has slope close to -x0**2 / var_x, so with small
    payoff variance the damped iteration runs away. When an iterate leaves
    the feasible set (flagged ``infeasible_consumption``) or the iteration
    stalls, the same linearized condition is solved by bisection on the
    feasible interval instead and ``method`` reads "bracketed".
    """
    c0, c1 = consumptions(params, 0.0, price.p0, payoff.x0)
    if not _feasible(c0, c1):
        raise InfeasibleConsumption("base consumptions must be positive")
    f = foc_terms(params, price, payoff, 0.0, mode)
    if abs(f.denominator) < DEGENERATE_DENOMINATOR:
        raise DegenerateDenominator(
            f"denominator {f.denominator!r} vanishes at xi=0 (zero volatilities?)")
    single = f.numerator / f.denominator

    xi, target = 0.0, single
    flags = {}
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = (1.0 - damping) * xi + damping * target
        if not _feasible(*consumptions(params, nxt, price.p0, payoff.x0)):
            flags["infeasible_consumption"] = True
            break
        f = foc_terms(params, price, payoff, nxt, mode)
        if abs(f.denominator) < DEGENERATE_DENOMINATOR:
            xi = nxt
            flags["degenerate_denominator"] = True
            break
        step = nxt - xi
        xi, target = nxt, f.numerator / f.denominator
        if abs(step) < tol * (1.0 + abs(xi)) and abs(target - xi) < tol * (1.0 + abs(xi)):
            converged = True
            break

    method = "fixed_point"
    if not converged:
        xi = _bracketed_root(params, price, payoff, mode)
        method = "bracketed"
        if abs(linear_foc_residual(params, price, payoff, xi, mode)) > tol:
            raise NoConvergence(f"no root of the linearized condition found (xi={xi!r})")

    c0, c1 = consumptions(params, xi, price.p0, payoff.x0)
    residual = linear_foc_residual(params, price, payoff, xi, mode)
    bound = _upper_bound_4_10(params, payoff, xi)
    return PricingSolution(mode, xi, single, c0, c1, residual, it, method=method,
                           bound_4_10_violated=xi >= bound, **flags)


def price_from_xi(factors: DiscountFactors, payoff: PayoffStats, xi: float,
                  price_var: float = 0.0, mode: str = "eq4_8") -> float:
    """Price implied by a given holding.

    eq4_8:  p  = m0 x0 + xi m1 var_x
    eq4_12: p0 = m0 x0 + xi (m1 var_x + m2 var_p)
    """
    if mode == "eq4_8":
        p = factors.m0 * payoff.x0 + xi * factors.m1 * payoff.var_x
    elif mode == "eq4_12":
        if factors.m2 is None:
            raise InvalidConfig("eq4_12 needs m2 (eq4_11 factors)")
        p = factors.m0 * payoff.x0 + xi * (factors.m1 * payoff.var_x + factors.m2 * price_var)
    else:
        raise InvalidConfig(f"unknown price mode {mode!r}")
    if not p > 0:
        raise NegativePrice(f"implied price {p!r} is not positive; xi={xi!r} exceeds the positivity bound")
    if factors.variant != "eq4_26" and xi > 0 and payoff.var_x > 0 and not p < factors.m0 * payoff.x0:
        raise NumericError("implied price is not below the discounted mean payoff")
    return p


class PositivityBound(NamedTuple):
    bound: float
    always_valid: bool


def xi_bound_positivity(params: UtilityParams, payoff: PayoffStats) -> PositivityBound:
    """Largest holding that keeps the linear-approximation price positive.

    xi < (e_t1 + x0 xi) x0 / (alpha var_x) solved for xi; when
    alpha var_x < x0**2 it holds for every xi >= 0.
    """
    if payoff.var_x == 0:
        raise ZeroVariance("positivity bound needs a positive payoff variance")
    k = params.alpha * payoff.var_x - payoff.x0 ** 2
    bound = math.inf if k <= 0 else params.e_t1 * payoff.x0 / k
    return PositivityBound(bound, k < 0)


# ---------------------------------------------------------------------------
# idiosyncratic risk: cov(m, x) = 0 with a quadratic Taylor term
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiskFreeBlock:
    """Each line of the risk-free relations evaluated independently."""

    mean_discount_gap: float       # E[m] - 1/R_f
    xi_sq_var_lhs: float           # xi^2 var_x
    xi_sq_var_rhs: float           # u'(c_t)/(beta R_f u''') - u'(c1)/u'''
    sk_sq_implied: float           # R_f / (1 - m0 R_f) * m1^2 / m3
    sk_sq_lower: float             # x0^2 / ((1+alpha)^2 var_x)
    sk_sq_holds: bool
    vol_ratio: float               # var_x / x0^2
    vol_lower: float
    vol_holds: bool
    factors: DiscountFactors


@dataclass(frozen=True)
class IdiosyncraticReport:
    xi: float
    sk_lower: float
    cov_residual: float
    c_t1_0: float
    p0: Optional[float] = None
    c_t0: Optional[float] = None
    mean_discount: Optional[float] = None
    risk_free: Optional[RiskFreeBlock] = None

    @property
    def vol_lower(self) -> Optional[float]:
        return self.risk_free.vol_lower if self.risk_free else None


def skewness_root(params: UtilityParams, payoff: PayoffStats) -> float:
    """Holding at which the payoff is uncorrelated with the discount factor:
    xi = e_t1 / ((1 + alpha) Sk sigma - x0)."""
    if payoff.var_x == 0:
        raise ZeroVariance("skewness relation needs a positive payoff variance")
    sk, sigma, a = payoff.sk_x, payoff.sigma_x, params.alpha
    lower = payoff.x0 / ((1 + a) * sigma)
    if not sk > lower:
        raise SkewnessBelowBound(f"payoff skewness {sk!r} must exceed {lower!r}")
    return params.e_t1 / ((1 + a) * sk * sigma - payoff.x0)


def covariance_residual(params: UtilityParams, payoff: PayoffStats, xi: float) -> float:
    """Relative value of u''(c1) xi var_x + u'''(c1) xi^2 gamma3 at ``xi``."""
    c1 = params.e_t1 + payoff.x0 * xi
    d = utility_derivs(c1, params.alpha)
    t1 = d.d2 * xi * payoff.var_x
    t2 = d.d3 * xi * xi * payoff.gamma3_x
    scale = abs(t1) + abs(t2)
    return 0.0 if scale == 0 else (t1 + t2) / scale


def idiosyncratic_relations(params: UtilityParams, payoff: PayoffStats,
                            R_f: Optional[float] = None,
                            p0: Optional[float] = None) -> IdiosyncraticReport:
    """Skewness root, its lower bound, the mean discount factor and, with a
    risk-free rate, the volatility lower bound.

    Without an explicit ``p0`` the idiosyncratic price x0 / R_f is used for
    today's consumption.
    """
    if R_f is not None and not R_f > 0:
        raise InvalidConfig(f"risk-free gross rate must be > 0, got {R_f!r}")
    xi = skewness_root(params, payoff)
    a = params.alpha
    sk_lower = payoff.x0 / ((1 + a) * payoff.sigma_x)
    c1 = params.e_t1 + payoff.x0 * xi
    cov = covariance_residual(params, payoff, xi)
    if p0 is None and R_f is not None:
        p0 = payoff.x0 / R_f
    if p0 is None:
        return IdiosyncraticReport(xi, sk_lower, cov, c1)

    c0 = params.e_t - p0 * xi
    if not c0 > 0:
        raise InfeasibleConsumption(f"today's consumption {c0!r} at xi={xi!r} is not positive")
    t = utility_derivs(c0, a)
    n = utility_derivs(c1, a)
    b = params.beta
    mean_m = b / t.d1 * (n.d1 + n.d3 * xi * xi * payoff.var_x)
    if R_f is None:
        return IdiosyncraticReport(xi, sk_lower, cov, c1, p0, c0, mean_m)

    fac = discount_factors(params, xi, p0, payoff.x0, "eq4_26")
    if fac.m0 * R_f >= 1:
        raise RiskFreeInconsistent(f"m0 * R_f = {fac.m0 * R_f!r} >= 1")
    sk_sq = R_f / (1 - fac.m0 * R_f) * fac.m1 ** 2 / fac.m3
    sk_sq_lower = payoff.x0 ** 2 / ((1 + a) ** 2 * payoff.var_x)
    vol_lower = fac.m3 / fac.m1 ** 2 * (1 - fac.m0 * R_f) / ((1 + a) ** 2 * R_f)
    ratio = payoff.var_x / payoff.x0 ** 2
    block = RiskFreeBlock(
        mean_discount_gap=mean_m - 1 / R_f,
        xi_sq_var_lhs=xi * xi * payoff.var_x,
        xi_sq_var_rhs=t.d1 / (b * R_f * n.d3) - n.d1 / n.d3,
        sk_sq_implied=sk_sq,
        sk_sq_lower=sk_sq_lower,
        sk_sq_holds=sk_sq > sk_sq_lower,
        vol_ratio=ratio,
        vol_lower=vol_lower,
        vol_holds=ratio > vol_lower,
        factors=fac,
    )
    return IdiosyncraticReport(xi, sk_lower, cov, c1, p0, c0, mean_m, block)


# ---------------------------------------------------------------------------
# second-order (maximum) condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    regime: str                       # SMALL_VOL | HIGH_VOL | BOUNDARY
    scaled_variance: float            # (1 + 2 alpha) var_x, or its gamma3 analogue
    mean_payoff_sq: float             # x0^2
    xi: float
    upper_bound: Optional[float]      # HIGH_VOL only
    xi_within_bound: bool             # right side of the price condition negative at xi
    price_lower_limit: bool           # HIGH_VOL and xi beyond the bound
    condition_rhs: Optional[float] = None
    price_condition_holds: Optional[bool] = None


def second_order_regime(params: UtilityParams, payoff: PayoffStats, xi: float,
                        p0: Optional[float] = None,
                        include_gamma3: bool = False) -> RegimeReport:
    """Classify the payoff-volatility regime of the second-order condition.

    With gamma3 neglected the right side of the price condition is negative
    iff xi x0 [(1 + 2 alpha) var_x - x0^2] < e_t1 (x0^2 + var_x). With
    ``include_gamma3`` the 2 x0 var_x term becomes 2 x0 var_x + gamma3.
    Passing ``p0`` also evaluates p0^2 against that right side.
    """
    a, x0, var = params.alpha, payoff.x0, payoff.var_x
    g3 = payoff.gamma3_x if include_gamma3 else 0.0
    big_a = x0 * x0 + var
    big_b = 2 * x0 * var + g3
    lhs = (1 + 2 * a) * var
    if include_gamma3:
        lhs += (1 + a) * g3 / x0
    rhs = x0 * x0
    k = x0 * (lhs - rhs)
    if abs(lhs - rhs) <= BOUNDARY_RTOL * max(abs(lhs), rhs):
        regime = "BOUNDARY"
    elif lhs < rhs:
        regime = "SMALL_VOL"
    else:
        regime = "HIGH_VOL"
    upper = params.e_t1 * big_a / k if regime == "HIGH_VOL" else None
    within = xi * k < params.e_t1 * big_a or regime == "BOUNDARY"
    lower_branch = regime == "HIGH_VOL" and not within

    cond_rhs = holds = None
    if p0 is not None:
        c0, c1 = consumptions(params, xi, p0, x0)
        if not _feasible(c0, c1):
            raise InfeasibleConsumption(f"consumptions ({c0!r}, {c1!r}) at xi={xi!r} are not positive")
        t = utility_derivs(c0, a)
        n = utility_derivs(c1, a)
        b = params.beta
        cond_rhs = -b * n.d2 / t.d2 * big_a - b * n.d3 / t.d2 * xi * big_b
        holds = p0 * p0 > cond_rhs
    return RegimeReport(regime, lhs, rhs, xi, upper, within, lower_branch, cond_rhs, holds)


# ---------------------------------------------------------------------------
# exact utility oracle
# ---------------------------------------------------------------------------

class OracleValue(NamedTuple):
    utility: Optional[float]
    d1: float
    d2: float


def utility_oracle(params: UtilityParams, p0, dist: Sequence[tuple[float, float]],
                   xi: float) -> OracleValue:
    """Two-period utility and its xi-derivatives for a discrete payoff, exactly.

    ``p0`` is a price or a PriceStats (whose variance is ignored).
    """
    p0 = p0.p0 if isinstance(p0, PriceStats) else float(p0)
    values, probs = _check_distribution(dist)
    c0 = params.e_t - p0 * xi
    c1s = [params.e_t1 + x * xi for x in values]
    if c0 <= 0 or min(c1s) <= 0:
        raise InfeasibleConsumption(f"non-positive consumption at xi={xi!r}")
    a, b = params.alpha, params.beta
    t = utility_derivs(c0, a)
    nd = [utility_derivs(c, a) for c in c1s]
    u = None
    if a < 1:
        u = t.u + b * math.fsum(p * d.u for p, d in zip(probs, nd))
    d1 = -p0 * t.d1 + b * math.fsum(p * x * d.d1 for x, p, d in zip(values, probs, nd))
    d2 = p0 * p0 * t.d2 + b * math.fsum(p * x * x * d.d2 for x, p, d in zip(values, probs, nd))
    return OracleValue(u, d1, d2)


def feasible_interval(params: UtilityParams, p0: float,
                      dist: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Open interval of holdings with all consumptions positive."""
    values, _ = _check_distribution(dist)
    lo, hi = -math.inf, params.e_t / p0
    for x in values:
        if x > 0:
            lo = max(lo, -params.e_t1 / x)
        elif x < 0:
            hi = min(hi, -params.e_t1 / x)
    if not lo < hi:
        raise InfeasibleConsumption("no holding keeps every consumption positive")
    return lo, hi


def oracle_root(params: UtilityParams, p0: float,
                dist: Sequence[tuple[float, float]], tol: float = 1e-13,
                max_iter: int = 400) -> float:
    """Bisection root of the exact first-order condition dU/dxi = 0."""
    lo, hi = feasible_interval(params, p0, dist)
    if math.isinf(lo):
        raise InfeasibleConsumption("feasible holdings are unbounded below")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if utility_oracle(params, p0, dist, mid).d1 > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)
