"""Panel data model and loaders for bar-return tables.

The central object is a dense three-way array of simple returns indexed by
(stock, day, bin).  Bins are numbered 1..K within the trading day; bin 0,
when present, is the overnight return (previous close to open).  The first
axis follows lexically sorted symbols and the second axis strictly
increasing dates, so a panel built from the same records is always laid out
identically regardless of row order in the source.

Two tabular inputs are supported:

* bar returns: columns ``date`` (ISO-8601), ``bin`` (int), ``symbol``,
  ``return`` (simple return, decimal units);
* bar prices: columns ``date``, ``time`` (HH:MM), ``symbol``, ``price``,
  converted to returns by :func:`returns_from_prices`.

Lines starting with ``#`` are treated as comments in both formats.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import (
    CompletenessError,
    DuplicateRowError,
    PanelFormatError,
    PriceDomainError,
)

LOAD_POLICIES = ("strict", "drop-incomplete", "zero-fill")
PRICE_CONVENTIONS = ("close_to_close", "bin_open")

#: One bar-return observation: (date, bin, symbol, value).
ReturnRecord = tuple[dt.date, int, str, float]


class _PanelView:
    """Shared accessors for objects carrying a (stock, day, bin) array."""

    returns: np.ndarray
    stock_ids: tuple[str, ...]
    dates: tuple[dt.date, ...]
    bins_per_day: int
    overnight_present: bool

    @property
    def n_stocks(self) -> int:
        return len(self.stock_ids)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def bin_numbers(self) -> np.ndarray:
        """Bin labels aligned with the last array axis (0 first if overnight)."""
        start = 0 if self.overnight_present else 1
        return np.arange(start, self.bins_per_day + 1)

    def column_of(self, bin_number: int) -> int:
        """Array column holding ``bin_number``; raises for absent bins."""
        offset = 0 if self.overnight_present else 1
        col = bin_number - offset
        if not 0 <= col < self.returns.shape[2] or bin_number < 0:
            raise ValueError(f"bin {bin_number} not present in panel")
        return col

    def intraday_returns(self) -> np.ndarray:
        """View of bins 1..K, shape (n_stocks, n_days, bins_per_day)."""
        if self.overnight_present:
            return self.returns[:, :, 1:]
        return self.returns

    def overnight_returns(self) -> np.ndarray | None:
        """View of bin 0, shape (n_stocks, n_days), or None if absent."""
        if self.overnight_present:
            return self.returns[:, :, 0]
        return None


@dataclass(frozen=True)
class ReturnPanel(_PanelView):
    """Dense panel of simple returns, immutable after construction.

    ``returns`` has shape (n_stocks, n_days, bins_per_day + 1) when
    ``overnight_present`` (column 0 is the overnight bin), otherwise
    (n_stocks, n_days, bins_per_day).
    """

    returns: np.ndarray
    stock_ids: tuple[str, ...]
    dates: tuple[dt.date, ...]
    bins_per_day: int
    overnight_present: bool

    def __post_init__(self):
        arr = np.asarray(self.returns, dtype=np.float64)
        n_cols = self.bins_per_day + (1 if self.overnight_present else 0)
        expect = (len(self.stock_ids), len(self.dates), n_cols)
        if arr.ndim != 3 or arr.shape != expect:
            raise ValueError(f"returns shape {arr.shape} does not match metadata {expect}")
        if self.bins_per_day < 1:
            raise ValueError("bins_per_day must be >= 1")
        arr = arr.copy() if arr is self.returns else arr
        arr.flags.writeable = False
        object.__setattr__(self, "returns", arr)
        object.__setattr__(self, "stock_ids", tuple(self.stock_ids))
        object.__setattr__(self, "dates", tuple(self.dates))


@dataclass
class LoadReport:
    """What happened while assembling a panel from records."""

    rows_read: int = 0
    stocks_dropped: list[tuple[str, str]] = field(default_factory=list)
    days_dropped: list[tuple[str, str]] = field(default_factory=list)
    fills_applied: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return not (self.stocks_dropped or self.days_dropped or self.fills_applied)

    def lines(self) -> list[str]:
        out = [f"rows_read = {self.rows_read}", f"fills_applied = {self.fills_applied}"]
        out.append(f"stocks_dropped = {len(self.stocks_dropped)}")
        out.extend(f"  {sym}: {why}" for sym, why in self.stocks_dropped)
        out.append(f"days_dropped = {len(self.days_dropped)}")
        out.extend(f"  {day}: {why}" for day, why in self.days_dropped)
        out.extend(f"warning: {w}" for w in self.warnings)
        return out


@dataclass
class ValidationReport:
    """Report-only invariant check results for a constructed panel."""

    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        out = [f"ok = {str(self.ok).lower()}"]
        out.extend(f"violation: {v}" for v in self.violations)
        out.extend(f"warning: {w}" for w in self.warnings)
        return out


def _open_text(source: str | os.PathLike | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", newline="", encoding="utf-8"), True
    return source, False


def _parse_table(source, columns: tuple[str, ...]) -> Iterator[tuple[int, list[str]]]:
    """Yield (line_number, field values) for each data row, column-reordered.

    The header row must contain every name in ``columns``; extra columns are
    ignored.  Comment lines (leading ``#``) and blank lines are skipped.
    """
    handle, owned = _open_text(source)
    try:
        reader = csv.reader(handle)
        header = None
        for row in reader:
            if not row or (row[0].lstrip().startswith("#") and len(row) >= 1):
                continue
            header = [name.strip() for name in row]
            break
        if header is None:
            raise PanelFormatError("empty input, no header row found")
        try:
            order = [header.index(name) for name in columns]
        except ValueError:
            missing = [name for name in columns if name not in header]
            raise PanelFormatError(
                f"header {header} lacks required column(s) {missing}"
            ) from None
        width = len(header)
        for row in reader:
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != width:
                raise PanelFormatError(
                    f"expected {width} fields, got {len(row)}", reader.line_num
                )
            yield reader.line_num, [row[i].strip() for i in order]
    finally:
        if owned:
            handle.close()


def read_return_records(source: str | os.PathLike | IO[str]) -> list[ReturnRecord]:
    """Parse a bar-return table into records, with row numbers on errors."""
    records: list[ReturnRecord] = []
    for line_num, (date_s, bin_s, symbol, value_s) in _parse_table(
        source, ("date", "bin", "symbol", "return")
    ):
        try:
            date = dt.date.fromisoformat(date_s)
        except ValueError:
            raise PanelFormatError(f"bad date {date_s!r}", line_num) from None
        try:
            bin_number = int(bin_s)
        except ValueError:
            raise PanelFormatError(f"bad bin {bin_s!r}", line_num) from None
        if bin_number < 0:
            raise PanelFormatError(f"negative bin {bin_number}", line_num)
        try:
            value = float(value_s)
        except ValueError:
            raise PanelFormatError(f"bad return {value_s!r}", line_num) from None
        if not np.isfinite(value):
            raise PanelFormatError(f"non-finite return {value_s!r}", line_num)
        if not symbol:
            raise PanelFormatError("empty symbol", line_num)
        records.append((date, bin_number, symbol, value))
    return records


def load_panel(
    source: str | os.PathLike | IO[str] | Iterable[ReturnRecord],
    policy: str = "strict",
) -> tuple[ReturnPanel, LoadReport]:
    """Assemble a dense panel from a bar-return table or record iterable.

    ``policy`` controls how missing (date, bin, symbol) cells are handled:

    * ``strict``: any gap raises :class:`CompletenessError` naming the first
      missing cell;
    * ``drop-incomplete``: days with a market-wide missing bin are dropped,
      then stocks with remaining gaps are dropped, with reasons recorded;
    * ``zero-fill``: gaps become 0.0 returns and are counted in the report.

    Duplicate cells raise :class:`DuplicateRowError` under every policy.
    The result is canonically ordered (sorted symbols, ascending dates), so
    row order in the source never affects the panel.
    """
    if policy not in LOAD_POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {LOAD_POLICIES}")
    if isinstance(source, (str, os.PathLike)) or hasattr(source, "read"):
        records = read_return_records(source)
    else:
        records = list(source)

    report = LoadReport(rows_read=len(records))
    if not records:
        raise CompletenessError("no data rows")

    cells: dict[tuple[dt.date, int, str], float] = {}
    for date, bin_number, symbol, value in records:
        key = (date, bin_number, symbol)
        if key in cells:
            raise DuplicateRowError(
                f"duplicate cell date={date.isoformat()} bin={bin_number} symbol={symbol}"
            )
        cells[key] = value

    dates = sorted({key[0] for key in cells})
    symbols = sorted({key[2] for key in cells})
    bins_seen = {key[1] for key in cells}
    overnight = 0 in bins_seen
    k_max = max(bins_seen)
    if k_max < 1:
        raise CompletenessError("no intraday bins (only bin 0 present)")
    expected_bins = list(range(0 if overnight else 1, k_max + 1))

    if policy == "strict":
        for date in dates:
            for bin_number in expected_bins:
                for symbol in symbols:
                    if (date, bin_number, symbol) not in cells:
                        raise CompletenessError(
                            f"missing cell date={date.isoformat()} "
                            f"bin={bin_number} symbol={symbol}"
                        )
    elif policy == "drop-incomplete":
        # A bin absent for every symbol on a date is a market-wide gap: the
        # day goes.  Remaining gaps are stock-specific: the stock goes.
        kept_dates = []
        for date in dates:
            gap_bins = [
                b
                for b in expected_bins
                if not any((date, b, s) in cells for s in symbols)
            ]
            if gap_bins:
                report.days_dropped.append(
                    (date.isoformat(), f"no symbol has bin(s) {gap_bins}")
                )
            else:
                kept_dates.append(date)
        dates = kept_dates
        if dates:
            kept_symbols = []
            for symbol in symbols:
                missing = sum(
                    1
                    for date in dates
                    for b in expected_bins
                    if (date, b, symbol) not in cells
                )
                if missing:
                    report.stocks_dropped.append(
                        (symbol, f"{missing} missing cell(s) on kept days")
                    )
                else:
                    kept_symbols.append(symbol)
            symbols = kept_symbols
        if not dates or not symbols:
            raise CompletenessError(
                "no complete days/stocks remain under drop-incomplete"
            )

    n_cols = len(expected_bins)
    array = np.zeros((len(symbols), len(dates), n_cols))
    date_index = {d: i for i, d in enumerate(dates)}
    symbol_index = {s: i for i, s in enumerate(symbols)}
    offset = 0 if overnight else 1
    filled = np.zeros(array.shape, dtype=bool)
    for (date, bin_number, symbol), value in cells.items():
        t = date_index.get(date)
        a = symbol_index.get(symbol)
        if t is None or a is None:
            continue
        array[a, t, bin_number - offset] = value
        filled[a, t, bin_number - offset] = True

    n_missing = int(filled.size - filled.sum())
    if n_missing:
        # Only reachable under zero-fill: strict raised, drop-incomplete pruned.
        report.fills_applied = n_missing
        report.warnings.append(f"zero-filled {n_missing} missing cell(s)")

    panel = ReturnPanel(
        returns=array,
        stock_ids=tuple(symbols),
        dates=tuple(dates),
        bins_per_day=k_max,
        overnight_present=overnight,
    )
    return panel, report


#: One bar-price observation: (date, time, symbol, price).
PriceRecord = tuple[dt.date, str, str, float]


def read_price_records(source: str | os.PathLike | IO[str]) -> list[PriceRecord]:
    """Parse a bar-price table (columns date, time, symbol, price)."""
    records: list[PriceRecord] = []
    for line_num, (date_s, time_s, symbol, price_s) in _parse_table(
        source, ("date", "time", "symbol", "price")
    ):
        try:
            date = dt.date.fromisoformat(date_s)
        except ValueError:
            raise PanelFormatError(f"bad date {date_s!r}", line_num) from None
        try:
            dt.time.fromisoformat(time_s)
        except ValueError:
            raise PanelFormatError(f"bad time {time_s!r}", line_num) from None
        try:
            price = float(price_s)
        except ValueError:
            raise PanelFormatError(f"bad price {price_s!r}", line_num) from None
        if not symbol:
            raise PanelFormatError("empty symbol", line_num)
        records.append((date, time_s, symbol, price))
    return records


def returns_from_prices(
    source: str | os.PathLike | IO[str] | Iterable[PriceRecord],
    convention: str = "close_to_close",
) -> list[ReturnRecord]:
    """Convert per-bin price stamps into bar-return records.

    Every (symbol, date) group must carry the same time grid.  Two stamp
    conventions are supported:

    * ``close_to_close`` (default): the stamps are the K bin closes.  Bins
      2..K are close-to-close returns within the day; bin 1 runs from the
      previous day's last close, so it absorbs the overnight gap, and no
      bin-0 rows are produced.  The first day yields bins 2..K only.
    * ``bin_open``: the stamps are the K bin opens plus the day's close
      (K+1 stamps).  Bin k runs from its open to the next stamp, and bin 0
      (overnight, open over previous close) is emitted from the second day
      on.

    Either way the first day is incomplete, so downstream loading normally
    pairs with the ``drop-incomplete`` policy.  Non-positive prices raise
    :class:`PriceDomainError`.
    """
    if convention not in PRICE_CONVENTIONS:
        raise ValueError(
            f"unknown convention {convention!r}, expected one of {PRICE_CONVENTIONS}"
        )
    if isinstance(source, (str, os.PathLike)) or hasattr(source, "read"):
        records = read_price_records(source)
    else:
        records = list(source)
    if not records:
        raise CompletenessError("no price rows")

    groups: dict[tuple[str, dt.date], dict[str, float]] = {}
    for date, time_s, symbol, price in records:
        if price <= 0:
            raise PriceDomainError(
                f"non-positive price {price} for {symbol} {date.isoformat()} {time_s}"
            )
        group = groups.setdefault((symbol, date), {})
        if time_s in group:
            raise DuplicateRowError(
                f"duplicate stamp {symbol} {date.isoformat()} {time_s}"
            )
        group[time_s] = price

    grids = {tuple(sorted(g)) for g in groups.values()}
    if len(grids) != 1:
        sizes = sorted({len(g) for g in grids})
        raise CompletenessError(
            f"inconsistent time grids across symbol-days (sizes {sizes}); "
            "price ingestion requires one uniform bar clock"
        )
    grid = grids.pop()
    n_stamps = len(grid)
    if n_stamps < 2:
        raise CompletenessError("need at least two stamps per day")

    if convention == "bin_open":
        k_bins = n_stamps - 1
        if k_bins < 1:
            raise CompletenessError("bin_open needs K+1 >= 2 stamps per day")
    else:
        k_bins = n_stamps

    out: list[ReturnRecord] = []
    symbols = sorted({sym for sym, _ in groups})
    for symbol in symbols:
        sym_dates = sorted(date for sym, date in groups if sym == symbol)
        prev_last: float | None = None
        for date in sym_dates:
            prices = [groups[(symbol, date)][t] for t in grid]
            if convention == "bin_open":
                for k in range(1, k_bins + 1):
                    out.append((date, k, symbol, prices[k] / prices[k - 1] - 1.0))
                if prev_last is not None:
                    out.append((date, 0, symbol, prices[0] / prev_last - 1.0))
                prev_last = prices[-1]
            else:
                for k in range(2, k_bins + 1):
                    out.append((date, k, symbol, prices[k - 1] / prices[k - 2] - 1.0))
                if prev_last is not None:
                    out.append((date, 1, symbol, prices[0] / prev_last - 1.0))
                prev_last = prices[-1]
    out.sort(key=lambda r: (r[0], r[1], r[2]))
    return out


def validate_panel(panel: ReturnPanel, sanity_bound: float = 0.5) -> ValidationReport:
    """Check panel invariants without raising; extreme cells become warnings.

    Violations cover structural problems (too few stocks or days, non-finite
    cells, unsorted or duplicate dates, duplicate symbols).  Cells with
    ``|return| > sanity_bound`` are listed as warnings only: suspicious, not
    invalid.
    """
    report = ValidationReport()
    arr = panel.returns
    n_cols = panel.bins_per_day + (1 if panel.overnight_present else 0)
    if arr.shape != (panel.n_stocks, panel.n_days, n_cols):
        report.violations.append(
            f"array shape {arr.shape} inconsistent with metadata"
        )
        return report
    if panel.n_stocks < 2:
        report.violations.append(f"need at least 2 stocks, have {panel.n_stocks}")
    if panel.n_days < 2:
        report.violations.append(f"need at least 2 days, have {panel.n_days}")
    if panel.bins_per_day < 1:
        report.violations.append("need at least 1 intraday bin")

    bad = ~np.isfinite(arr)
    if bad.any():
        locs = np.argwhere(bad)
        shown = ", ".join(
            f"({panel.stock_ids[a]}, {panel.dates[t].isoformat()}, bin {panel.bin_numbers[c]})"
            for a, t, c in locs[:5]
        )
        report.violations.append(f"{len(locs)} non-finite cell(s): {shown}")

    for i in range(1, panel.n_days):
        if panel.dates[i] <= panel.dates[i - 1]:
            report.violations.append(
                f"dates not strictly increasing at index {i} "
                f"({panel.dates[i - 1].isoformat()} -> {panel.dates[i].isoformat()})"
            )
    if len(set(panel.stock_ids)) != panel.n_stocks:
        report.violations.append("duplicate stock ids")

    with np.errstate(invalid="ignore"):
        extreme = np.abs(arr) > sanity_bound
    extreme &= np.isfinite(arr)
    if extreme.any():
        locs = np.argwhere(extreme)
        shown = ", ".join(
            f"({panel.stock_ids[a]}, {panel.dates[t].isoformat()}, bin {panel.bin_numbers[c]})"
            for a, t, c in locs[:10]
        )
        report.warnings.append(
            f"{len(locs)} cell(s) with |return| > {sanity_bound:g}: {shown}"
        )
    return report


def panel_to_records(panel: ReturnPanel) -> list[ReturnRecord]:
    """Flatten a panel back into canonically ordered records."""
    out: list[ReturnRecord] = []
    bins = panel.bin_numbers
    for t, date in enumerate(panel.dates):
        for c, bin_number in enumerate(bins):
            for a, symbol in enumerate(panel.stock_ids):
                out.append((date, int(bin_number), symbol, float(panel.returns[a, t, c])))
    return out


def write_return_records(
    records: Iterable[ReturnRecord], destination: str | os.PathLike | IO[str]
) -> None:
    """Write records as a canonical bar-return table (stable float format)."""
    rows = sorted(records, key=lambda r: (r[0], r[1], r[2]))
    handle, owned = (
        (open(destination, "w", newline="", encoding="utf-8"), True)
        if isinstance(destination, (str, os.PathLike))
        else (destination, False)
    )
    try:
        handle.write("# schema-version: 1\n")
        handle.write("date,bin,symbol,return\n")
        for date, bin_number, symbol, value in rows:
            handle.write(
                f"{date.isoformat()},{bin_number},{symbol},{_format_float(value)}\n"
            )
    finally:
        if owned:
            handle.close()


def _format_float(x: float) -> str:
    """Locale-independent 10-significant-digit float text; -0 folds to 0."""
    x = float(x)
    if x == 0.0:
        x = 0.0
    return f"{x:.10g}"


def records_to_csv_text(records: Iterable[ReturnRecord]) -> str:
    buffer = io.StringIO()
    write_return_records(records, buffer)
    return buffer.getvalue()
