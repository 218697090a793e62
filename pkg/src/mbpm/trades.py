"""Trade ticks, the tick CSV format, and partitioning into averaging windows."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import IO, Iterable, NamedTuple, Sequence, Union

import numpy as np
import pyarrow as pa
import pyarrow.csv as pacsv

from .errors import (
    InvalidConfig,
    MalformedRow,
    NonMonotoneTime,
    NonPositiveField,
    ValueMismatch,
)

HEADER_3 = ("t", "price", "volume")
HEADER_4 = ("t", "price", "volume", "value")

# file value column vs price*volume
PARSE_VALUE_RTOL = 1e-6
# TradeTick invariant
TICK_VALUE_RTOL = 1e-9

Source = Union[str, bytes, "PathLike[str]", IO[bytes]]


@dataclass(frozen=True)
class TradeTick:
    t: float
    price: float
    volume: float
    value: float

    @classmethod
    def of(cls, t: float, price: float, volume: float) -> "TradeTick":
        return cls(float(t), float(price), float(volume), float(price) * float(volume))


class Violation(NamedTuple):
    kind: str
    message: str


def validate_tick(tick: TradeTick, rtol: float = TICK_VALUE_RTOL) -> list[Violation]:
    """Return every invariant the tick violates; an empty list means valid."""
    out = []
    fields = {"t": tick.t, "price": tick.price, "volume": tick.volume, "value": tick.value}
    bad = [k for k, v in fields.items() if not math.isfinite(v)]
    if bad:
        out.append(Violation("NonFinite", f"non-finite field(s): {', '.join(bad)}"))
    nonpos = [k for k in ("price", "volume", "value") if fields[k] <= 0]
    if nonpos:
        out.append(Violation("NonPositiveField", f"non-positive field(s): {', '.join(nonpos)}"))
    expected = tick.price * tick.volume
    if not bad and not math.isclose(tick.value, expected, rel_tol=rtol, abs_tol=0.0):
        out.append(Violation(
            "ValueMismatch", f"value {tick.value!r} != price*volume {expected!r}"))
    return out


@dataclass(frozen=True, eq=False)
class TickSeries:
    """Columnar tick storage; the bulk representation used by the pipeline."""

    t: np.ndarray
    price: np.ndarray
    volume: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        for name in ("t", "price", "volume", "value"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.t.shape[0]
        if any(getattr(self, k).shape != (n,) for k in ("price", "volume", "value")):
            raise ValueError("tick columns must be 1-d and of equal length")

    def __len__(self) -> int:
        return self.t.shape[0]

    @classmethod
    def from_ticks(cls, ticks: Iterable[TradeTick]) -> "TickSeries":
        ticks = list(ticks)
        if not ticks:
            e = np.empty(0)
            return cls(e, e, e, e)
        arr = np.array([(k.t, k.price, k.volume, k.value) for k in ticks], dtype=np.float64)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])

    def ticks(self) -> list[TradeTick]:
        return [TradeTick(*row) for row in zip(
            self.t.tolist(), self.price.tolist(), self.volume.tolist(), self.value.tolist())]

    def slice(self, a: int, b: int) -> "TickSeries":
        return TickSeries(self.t[a:b], self.price[a:b], self.volume[a:b], self.value[a:b])


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str) and ("\n" in source or source.startswith("t,")):
        return source.encode("utf-8")
    if hasattr(source, "read"):
        data = source.read()
        return data.encode("utf-8") if isinstance(data, str) else data
    with open(source, "rb") as fh:
        return fh.read()


def _parse_header(data: bytes) -> tuple[str, ...]:
    first = data.split(b"\n", 1)[0].rstrip(b"\r")
    if first.startswith(b"\xef\xbb\xbf"):
        first = first[3:]
    try:
        cols = tuple(c.strip() for c in first.decode("utf-8").split(","))
    except UnicodeDecodeError:
        raise MalformedRow("header is not valid UTF-8", row=1) from None
    if cols not in (HEADER_3, HEADER_4):
        raise MalformedRow(
            f"header must be 't,price,volume' or 't,price,volume,value', got {first!r}", row=1)
    return cols


def _scan_for_error(data: bytes, cols: tuple[str, ...]) -> None:
    """Row-by-row pass that raises the first error in file order."""
    text = data.decode("utf-8-sig", errors="replace")
    reader = csv.reader(io.StringIO(text, newline=""))
    next(reader)
    prev_t = -math.inf
    for rec in reader:
        row = reader.line_num
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if len(rec) != len(cols):
            raise MalformedRow(f"expected {len(cols)} columns, got {len(rec)}", row=row)
        vals = []
        for name, raw in zip(cols, rec):
            try:
                v = float(raw)
            except ValueError:
                raise MalformedRow(f"non-numeric {name} field {raw!r}", row=row) from None
            if not math.isfinite(v):
                raise MalformedRow(f"non-finite {name} field {raw!r}", row=row)
            vals.append(v)
        t, p, u = vals[:3]
        if p <= 0 or u <= 0:
            which = "price" if p <= 0 else "volume"
            raise NonPositiveField(f"{which} must be > 0", row=row)
        if len(vals) == 4 and not math.isclose(vals[3], p * u, rel_tol=PARSE_VALUE_RTOL, abs_tol=0.0):
            raise ValueMismatch(f"value {vals[3]!r} deviates from price*volume {p * u!r}", row=row)
        if t < prev_t:
            raise NonMonotoneTime(f"time {t!r} precedes previous {prev_t!r}", row=row)
        prev_t = t
    raise MalformedRow("unparseable input")  # fast path failed but no row error found


def read_tick_series(source: Source) -> TickSeries:
    """Parse tick CSV into columnar storage.

    The bulk path goes through pyarrow; any failure triggers a row-by-row
    rescan so the raised error carries the 1-based row number (header is
    row 1).
    """
    data = _read_bytes(source)
    cols = _parse_header(data)
    opts = pacsv.ConvertOptions(column_types={c: pa.float64() for c in cols})
    try:
        table = pacsv.read_csv(
            pa.py_buffer(data),
            read_options=pacsv.ReadOptions(use_threads=False),
            convert_options=opts,
        )
        if table.num_columns != len(cols):
            raise ValueError
        arrs = [table.column(i).to_numpy() for i in range(len(cols))]
    except (pa.ArrowInvalid, ValueError):
        _scan_for_error(data, cols)
        raise  # unreachable; _scan_for_error always raises

    t, p, u = arrs[0], arrs[1], arrs[2]
    ok = np.isfinite(t) & np.isfinite(p) & np.isfinite(u)
    ok &= (p > 0) & (u > 0)
    if len(cols) == 4:
        c = arrs[3]
        pu = p * u
        ok &= np.isfinite(c)
        ok &= np.abs(c - pu) <= PARSE_VALUE_RTOL * np.maximum(np.abs(c), np.abs(pu))
    else:
        c = p * u
    if not ok.all() or (t.size > 1 and (np.diff(t) < 0).any()):
        _scan_for_error(data, cols)
    return TickSeries(t, p, u, c)


def parse_ticks(source: Source) -> list[TradeTick]:
    """Parse tick CSV content (bytes, text, path or binary stream) into ticks."""
    return read_tick_series(source).ticks()


def write_ticks(
    ticks: Union[TickSeries, Sequence[TradeTick]],
    dest: Union[str, "PathLike[str]", IO[bytes]],
    include_value: bool = False,
) -> None:
    """Write ticks in the tick CSV format using shortest round-trip floats."""
    series = ticks if isinstance(ticks, TickSeries) else TickSeries.from_ticks(ticks)
    cols = HEADER_4 if include_value else HEADER_3
    arrays = [series.t, series.price, series.volume] + ([series.value] if include_value else [])
    table = pa.table(dict(zip(cols, arrays)))
    header = (",".join(cols) + "\n").encode()
    own = not hasattr(dest, "write")
    fh = open(dest, "wb") if own else dest
    try:
        fh.write(header)
        if len(series):
            sink = io.BytesIO()
            pacsv.write_csv(table, sink, pacsv.WriteOptions(include_header=False))
            fh.write(sink.getvalue())
    finally:
        if own:
            fh.close()


def format_ticks(ticks: Union[TickSeries, Sequence[TradeTick]], include_value: bool = False) -> bytes:
    buf = io.BytesIO()
    write_ticks(ticks, buf, include_value=include_value)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowSpec:
    origin: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InvalidConfig(f"window width must be finite and > 0, got {self.delta!r}")
        if not math.isfinite(self.origin):
            raise InvalidConfig("window origin must be finite")

    def center(self, k):
        return self.origin + k * self.delta

    def lower(self, k):
        # shared by window k's lower edge and window k-1's upper edge
        return self.origin + k * self.delta - 0.5 * self.delta

    def indices(self, t: np.ndarray) -> np.ndarray:
        """Window index of each time under the half-open [lower, upper) rule."""
        t = np.asarray(t, dtype=np.float64)
        k = np.floor((t - self.origin) / self.delta + 0.5).astype(np.int64)
        # snap to the float edges so adjacent windows tile exactly
        k -= (t < self.lower(k)).astype(np.int64)
        k += (t >= self.lower(k + 1)).astype(np.int64)
        return k


@dataclass(frozen=True, eq=False)
class Window:
    index: int
    center: float
    delta: float
    data: TickSeries = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.data)

    @property
    def ticks(self) -> list[TradeTick]:
        return self.data.ticks()


def segment_bounds(k: np.ndarray):
    """Runs of equal window index in a sorted index array.

    Returns (window indices, starts, stops) for occupied windows only.
    """
    if k.size == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e, e
    cut = np.flatnonzero(np.diff(k)) + 1
    starts = np.concatenate(([0], cut)).astype(np.int64)
    stops = np.concatenate((cut, [k.size])).astype(np.int64)
    return k[starts], starts, stops


def partition(ticks: Union[TickSeries, Sequence[TradeTick]], spec: WindowSpec) -> list[Window]:
    """Split ticks into consecutive windows, materializing empty gaps."""
    series = ticks if isinstance(ticks, TickSeries) else TickSeries.from_ticks(ticks)
    if len(series) == 0:
        return []
    if len(series) > 1 and (np.diff(series.t) < 0).any():
        raise ValueError("ticks must be nondecreasing in time")
    k = spec.indices(series.t)
    occupied, starts, stops = segment_bounds(k)
    bounds = dict(zip(occupied.tolist(), zip(starts.tolist(), stops.tolist())))
    windows = []
    for idx in range(int(occupied[0]), int(occupied[-1]) + 1):
        a, b = bounds.get(idx, (0, 0))
        windows.append(Window(idx, spec.center(idx), spec.delta, series.slice(a, b)))
    return windows
