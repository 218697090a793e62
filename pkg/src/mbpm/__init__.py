"""Market-based price moments from trade value/volume streams, their
characteristic-function measures, and a Taylor-expanded consumption pricing
solver under power utility."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    MbpmError,
    NumericError,
    ParseError,
)
from .trades import (
    TickSeries,
    TradeTick,
    Window,
    WindowSpec,
    format_ticks,
    parse_ticks,
    partition,
    read_tick_series,
    write_ticks,
)
from .moments import (
    MarketMoments,
    WindowAggregates,
    aggregate,
    frequency_moment,
    frequency_moments,
    market_moments,
    market_price_moment,
    market_volatility,
    moment_report,
    table_moments,
    third_central_moment,
    window_table,
)
from .measure import (
    CharFuncApprox,
    charfunc_eval,
    delta_measure,
    fit_coefficients,
    gaussian_density,
    invert_charfunc_numeric,
    moment_from_charfunc,
)
from .capm import (
    PayoffStats,
    PriceStats,
    UtilityParams,
    discount_factors,
    idiosyncratic_relations,
    oracle_root,
    price_from_xi,
    second_order_regime,
    utility_derivs,
    utility_oracle,
    xi_bound_positivity,
    xi_max_linear,
)
from .synth import SynthConfig, generate
