"""mbpm command line: analyze, measure, capm, synth, sweep-delta.

Exit codes: 0 ok, 2 input parse errors, 3 configuration errors, 4 numerical
failures, 1 anything else (I/O).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .capm import (
    LINEAR_MODES,
    PayoffStats,
    PriceStats,
    UtilityParams,
    discount_factors,
    idiosyncratic_relations,
    price_from_xi,
    second_order_regime,
    xi_max_linear,
)
from .errors import EmptyWindow, InvalidConfig, MbpmError, NonPositiveVariance
from .measure import delta_measure, fit_coefficients, invert_charfunc_numeric
from .moments import DEFAULT_N_MAX, market_moments, report_records, table_moments, window_table
from .synth import SynthConfig, generate, lag1_variation, parse_price_spec, parse_volume_spec
from .trades import WindowSpec, read_tick_series, write_ticks

CAPM_MODES = ("eq4_5", "eq4_6", "eq4_23")
GAP_QUANTILES = (0.0, 0.5, 0.9, 0.99, 1.0)


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not parse errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(InvalidConfig.exit_code, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        return {k: _jsonable(v) for k, v in obj._asdict().items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(doc: dict, out: str, timestamp: bool) -> None:
    if timestamp:
        doc["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(doc, indent=1, allow_nan=False) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _open_text_out(out: str):
    if out == "-":
        return sys.stdout, False
    return open(out, "w", newline="", encoding="utf-8"), True


def _read_input(path: str):
    data = Path(path).read_bytes()
    return data, hashlib.sha256(data).hexdigest()


def _header(command: str, **config) -> dict:
    return {"tool": "mbpm", "version": __version__, "command": command, "config": config}


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return repr(x) if math.isfinite(x) else ""


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    data, digest = _read_input(args.input)
    series = read_tick_series(data)
    spec = WindowSpec(args.origin, args.delta)
    table = window_table(series, spec, args.max_n)
    moments = table_moments(table)
    records = report_records(table, moments)

    occupied = table.count > 0
    gaps = moments.gaps[occupied, 1:]
    gaps = gaps[np.isfinite(gaps).all(axis=1)] if gaps.size else gaps
    if gaps.shape[0]:
        quant = np.quantile(gaps, GAP_QUANTILES, axis=0).T
    else:
        quant = np.full((args.max_n, len(GAP_QUANTILES)), np.nan)
    summary = {
        "windows": len(table),
        "occupied": int(occupied.sum()),
        "ticks": len(series),
        "negative_variance": int(moments.negative.sum()),
        "gap_quantiles": {
            "q": list(GAP_QUANTILES),
            "by_n": {str(n + 1): _jsonable(quant[n]) for n in range(args.max_n)},
        },
    }
    doc = _header("analyze", input=args.input, delta=args.delta, origin=args.origin,
                  max_n=args.max_n)
    doc["input_sha256"] = digest
    doc["summary"] = summary
    doc["windows"] = records
    _dump_json(doc, args.out, not args.no_timestamp)
    return 0


# ---------------------------------------------------------------------------
# measure
# ---------------------------------------------------------------------------

def _measure_paths(out: str) -> tuple[Path, Path]:
    p = Path(out)
    base = p.with_suffix("") if p.suffix in (".json", ".csv") else p
    return base.with_suffix(".json"), base.with_suffix(".csv")


def cmd_measure(args) -> int:
    if args.out == "-":
        raise InvalidConfig("measure writes two files; --out must be a path")
    data, digest = _read_input(args.input)
    series = read_tick_series(data)
    table = window_table(series, WindowSpec(args.origin, args.delta), max(args.k, 2))
    rows = np.flatnonzero(table.index == args.window)
    if rows.size == 0 or table.count[rows[0]] == 0:
        raise EmptyWindow(f"window {args.window} has no trades")
    mm = market_moments(table.aggregates(int(rows[0])))
    try:
        approx = fit_coefficients(mm, args.k)
    except NonPositiveVariance as exc:
        raise NonPositiveVariance(
            f"window {args.window}: market variance {exc.variance!r} is not positive",
            exc.variance) from None

    json_path, csv_path = _measure_paths(args.out)
    doc = _header("measure", input=args.input, delta=args.delta, origin=args.origin,
                  k=args.k, window=args.window, grid_points=args.grid_points)
    doc["input_sha256"] = digest
    doc["window"] = {"index": args.window, "center": float(table.center[rows[0]]),
                     "n": int(table.count[rows[0]]), "p": _jsonable(mm.p[1:]),
                     "variance": _jsonable(mm.variance)}
    doc["a"] = list(approx.a)
    if args.k == 1:
        atom = delta_measure(approx)
        doc["atom"] = {"location": atom.location, "mass": atom.mass}
    else:
        grid = invert_charfunc_numeric(approx, n_points=args.grid_points)
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            grid.to_csv(fh)
        mean = grid.moment(1) / grid.normalization
        doc["grid"] = {
            "csv": csv_path.name,
            "points": int(grid.p.size),
            "spacing": grid.spacing,
            "normalization": grid.normalization,
            "mean": mean,
            "variance": grid.moment(2, central=True) / grid.normalization,
            "negative": grid.negative,
        }
        if grid.negative:
            _warn("order-3 quasi-density takes negative values")
    _dump_json(doc, str(json_path), not args.no_timestamp)
    return 0


# ---------------------------------------------------------------------------
# capm
# ---------------------------------------------------------------------------

_SCENARIO_REQUIRED = ("alpha", "beta", "e_t", "e_t1", "p0", "var_p", "x0", "var_x")
_SCENARIO_OPTIONAL = {"sk_x": 0.0, "R_f": None, "include_gamma3": False,
                      "damping": 0.5, "variant": None}


def load_scenario(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InvalidConfig(f"scenario file {path!r} not found") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InvalidConfig(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidConfig("scenario must be a JSON object")
    unknown = sorted(set(raw) - set(_SCENARIO_REQUIRED) - set(_SCENARIO_OPTIONAL))
    if unknown:
        raise InvalidConfig(f"unknown scenario fields: {', '.join(unknown)}")
    missing = [k for k in _SCENARIO_REQUIRED if k not in raw]
    if missing:
        raise InvalidConfig(f"missing scenario fields: {', '.join(missing)}")
    sc = {k: raw[k] for k in _SCENARIO_REQUIRED}
    sc.update((k, raw.get(k, d)) for k, d in _SCENARIO_OPTIONAL.items())
    for k in _SCENARIO_REQUIRED + ("sk_x", "damping"):
        v = sc[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise InvalidConfig(f"scenario field {k!r} must be a finite number, got {v!r}")
        sc[k] = float(v)
    if sc["R_f"] is not None:
        if isinstance(sc["R_f"], bool) or not isinstance(sc["R_f"], (int, float)):
            raise InvalidConfig("scenario field 'R_f' must be a number")
        sc["R_f"] = float(sc["R_f"])
    if not isinstance(sc["include_gamma3"], bool):
        raise InvalidConfig("scenario field 'include_gamma3' must be a boolean")
    if sc["variant"] not in (None, "eq4_9", "eq4_11"):
        raise InvalidConfig("scenario field 'variant' must be 'eq4_9' or 'eq4_11'")
    return sc


def solve_scenario(sc: dict, mode: str) -> dict:
    """Solution document for a validated scenario."""
    if mode not in CAPM_MODES:
        raise InvalidConfig(f"unknown mode {mode!r}")
    params = UtilityParams(sc["alpha"], sc["beta"], sc["e_t"], sc["e_t1"])
    price = PriceStats(sc["p0"], sc["var_p"])
    payoff = PayoffStats.from_skewness(sc["x0"], sc["var_x"], sc["sk_x"])
    doc = {}
    if mode in LINEAR_MODES:
        sol = xi_max_linear(params, price, payoff, mode, damping=sc["damping"])
        xi = sol.xi_max
        doc["solution"] = dict(_jsonable(sol), flags=sol.flags)
        variant = sc["variant"] or ("eq4_11" if mode == "eq4_5" else "eq4_9")
        fac = discount_factors(params, xi, price.p0, payoff.x0, variant)
        price_mode = "eq4_12" if variant == "eq4_11" else "eq4_8"
        doc["discount_factors"] = _jsonable(fac)
        doc["implied_price"] = price_from_xi(fac, payoff, xi, price.var_p, price_mode)
    else:
        rep = idiosyncratic_relations(params, payoff, sc["R_f"], sc["p0"])
        xi = rep.xi
        doc["solution"] = dict(_jsonable(rep), mode=mode, xi_max=xi, flags=[])
    reg = second_order_regime(params, payoff, xi, p0=price.p0,
                              include_gamma3=sc["include_gamma3"])
    doc["regime"] = _jsonable(reg)
    return doc


def cmd_capm(args) -> int:
    sc = load_scenario(args.scenario)
    body = solve_scenario(sc, args.mode)
    for flag in body["solution"]["flags"]:
        _warn(f"solution flagged {flag}")
    doc = _header("capm", scenario=sc, mode=args.mode)
    doc.update(body)
    _dump_json(doc, args.out, not args.no_timestamp)
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = SynthConfig(args.seed, args.n, args.spacing, parse_price_spec(args.price),
                      parse_volume_spec(args.volume), args.coupling)
    series = generate(cfg)
    write_ticks(series, sys.stdout.buffer if args.out == "-" else args.out)
    return 0


# ---------------------------------------------------------------------------
# sweep-delta
# ---------------------------------------------------------------------------

def parse_deltas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidConfig(f"bad delta list {text!r}") from None
    if not vals:
        raise InvalidConfig("delta list is empty")
    out = list(dict.fromkeys(vals))
    if len(out) < len(vals):
        _warn(f"dropped {len(vals) - len(out)} duplicate delta value(s)")
    return out


def cmd_sweep_delta(args) -> int:
    if args.max_n < 1:
        raise InvalidConfig(f"--max-n must be >= 1, got {args.max_n}")
    deltas = parse_deltas(args.deltas)
    data, _ = _read_input(args.input)
    series = read_tick_series(data)
    n_max = max(args.max_n, 3)
    fh, own = _open_text_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("delta", "window", "n", "p1", "variance", "a3"))
        for delta in deltas:
            table = window_table(series, WindowSpec(args.origin, delta), n_max)
            m = table_moments(table)
            rows = np.flatnonzero(table.count > 0)
            for r in rows.tolist():
                w.writerow((repr(delta), int(table.index[r]), int(table.count[r]),
                            _fmt(m.p[r, 1]), _fmt(m.variance[r]), _fmt(m.a3[r])))
            if args.verbose:
                print(f"delta={delta!r} windows={rows.size} "
                      f"lag1_variation={lag1_variation(m.p[rows, 1])!r}", file=sys.stderr)
    finally:
        if own:
            fh.close()
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mbpm", description="Market-based price moments and pricing relations.")
    ap.add_argument("--version", action="version", version=f"mbpm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def windowing(p, max_n=True):
        p.add_argument("--input", required=True, help="tick CSV")
        p.add_argument("--delta", type=float, required=True, help="window width in seconds")
        p.add_argument("--origin", type=float, default=0.0, help="center of window 0")
        if max_n:
            p.add_argument("--max-n", type=int, default=DEFAULT_N_MAX)

    def stamp(p):
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the generated_at field for byte-stable output")

    p = sub.add_parser("analyze", help="per-window market vs frequency moments")
    windowing(p)
    p.add_argument("--out", default="-")
    stamp(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("measure", help="characteristic-function fit and density grid")
    windowing(p, max_n=False)
    p.add_argument("--k", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--window", type=int, required=True, help="window index")
    p.add_argument("--grid-points", type=int, default=4096)
    p.add_argument("--out", required=True, help="output base path (.json and .csv)")
    stamp(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("capm", help="solve a pricing scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", choices=CAPM_MODES, default="eq4_5")
    p.add_argument("--out", default="-")
    stamp(p)
    p.set_defaults(func=cmd_capm)

    p = sub.add_parser("synth", help="generate a synthetic tick CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--price", default="const:100")
    p.add_argument("--volume", default="const1")
    p.add_argument("--coupling", type=float, default=0.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep-delta", help="window moments across several widths")
    p.add_argument("--input", required=True)
    p.add_argument("--deltas", required=True, help="comma separated widths")
    p.add_argument("--origin", type=float, default=0.0)
    p.add_argument("--max-n", type=int, default=DEFAULT_N_MAX)
    p.add_argument("--out", default="-")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="print the lag-1 variation of window means per width")
    p.set_defaults(func=cmd_sweep_delta)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _kernels.configure_threads()
    try:
        return args.func(args)
    except MbpmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        # a missing input is an input error
        print(f"error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
