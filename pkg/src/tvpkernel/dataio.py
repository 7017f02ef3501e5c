"""CSV ingestion and emission, and the 25-portfolio CAPM data pipeline.

All numbers are written with ``repr``-exact 17 significant digits and a dot
decimal separator, so every file written here parses back to identical floats.

Portfolio layout
----------------
The 25 size/book-to-market portfolio file is a CSV with a ``date`` column in
``YYYYMM`` form, 25 return columns named ``ME{i}BM{j}`` (``i`` = size
quintile, ``j`` = book-to-market quintile, both 1..5), the market excess
return ``Mkt-RF`` and the risk-free rate ``RF``. Returns are in percent. The
corner names used by the Kenneth French library (``SMALL LoBM``,
``ME1 BM2``, ..., ``BIG HiBM``) are accepted as aliases.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DateRangeError, LayoutError, ParseError
from .estimator import TimeSeriesData

FLOAT_FMT = ".17g"
MISSING_SENTINELS = (-99.99, -999.0)


def fmt(v) -> str:
    """Locale-independent lossless number formatting."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, FLOAT_FMT)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a header plus rows, rejecting ragged lines with their line number."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line=reader.line_num)
            rows.append(row)
    return header, rows


def _to_float(s: str, line: int, column: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ParseError(f"not a number: {s!r}", line=line, column=column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {s!r}", line=line, column=column)
    return v


def numeric_columns(header: list[str], rows: list[list[str]], columns: Sequence[str]) -> np.ndarray:
    """Parse the named columns as floats, shape (n_rows, len(columns))."""
    missing = [c for c in columns if c not in header]
    if missing:
        raise ConfigError(f"columns not found in input: {missing}; available: {header}")
    idx = [header.index(c) for c in columns]
    out = np.empty((len(rows), len(columns)))
    for r, row in enumerate(rows):
        for j, (i, c) in enumerate(zip(idx, columns)):
            out[r, j] = _to_float(row[i].strip(), r + 2, c)
    return out


def load_series(path: str | Path, response: str, regressors: Sequence[str], intercept: bool = False,
                index_column: str | None = None) -> tuple[TimeSeriesData, list[str]]:
    """Load a regression dataset from CSV.

    Parameters
    ----------
    path : path to a CSV with a header row
    response : name of the ``y`` column
    regressors : names of the ``x`` columns
    intercept : bool
        Prepend a constant column named ``const``.
    index_column : optional column copied through as row labels (e.g. dates).

    Returns
    -------
    data : TimeSeriesData
    index : list of row labels (``1..T`` when ``index_column`` is absent)
    """
    header, rows = read_csv_table(path)
    if not regressors and not intercept:
        raise ConfigError("at least one regressor (or the intercept) is required")
    vals = numeric_columns(header, rows, [response, *regressors])
    y, X = vals[:, 0], vals[:, 1:]
    names = list(regressors)
    if intercept:
        X = np.column_stack([np.ones(len(rows)), X])
        names = ["const", *names]
    if index_column is not None and index_column in header:
        k = header.index(index_column)
        index = [row[k].strip() for row in rows]
    else:
        index = [str(i) for i in range(1, len(rows) + 1)]
    return TimeSeriesData(y=y, X=X.reshape(len(rows), -1), names=tuple(names)), index


# ----------------------------------------------------------------- portfolios

PORTFOLIO_COLUMNS = tuple(f"ME{i}BM{j}" for i in range(1, 6) for j in range(1, 6))
_ALIAS = {"SMALL": "ME1", "BIG": "ME5", "LOBM": "BM1", "HIBM": "BM5"}
TARGETS = ("G", "V", "VmG")


def canonical_portfolio_name(name: str) -> str | None:
    """Map ``ME1 BM2`` / ``SMALL LoBM`` / ``me1bm2`` style names to ``ME1BM2``."""
    parts = re.split(r"[\s_\-]+", name.strip())
    parts = [_ALIAS.get(p.upper(), p.upper()) for p in parts if p]
    joined = "".join(parts)
    m = re.fullmatch(r"ME([1-5])BM([1-5])", joined)
    return f"ME{m.group(1)}BM{m.group(2)}" if m else None


@dataclass(frozen=True)
class PortfolioSpec:
    """Which characteristic portfolio to build and over which months.

    ``start``/``end`` are ``YYYY-MM`` (or ``YYYYMM``) and inclusive.
    """

    source: str | Path
    target: str = "VmG"
    start: str = "1952-01"
    end: str = "2019-12"
    market_column: str = "Mkt-RF"
    rf_column: str = "RF"

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"target must be one of {TARGETS}, got {self.target!r}")
        if parse_month(self.start) > parse_month(self.end):
            raise DateRangeError(f"start {self.start} is after end {self.end}")


def parse_month(s: str | int) -> int:
    """``'1952-01'``, ``'1952:1'`` or ``195201`` to the integer ``195201``."""
    text = str(s).strip()
    m = re.fullmatch(r"(\d{4})[-:/]?(\d{1,2})", text)
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise DateRangeError(f"cannot parse month {s!r}; expected YYYY-MM or YYYYMM")
    return int(m.group(1)) * 100 + int(m.group(2))


@dataclass(frozen=True)
class PortfolioData:
    dates: list[str]
    returns: np.ndarray  # (T, 5, 5) in percent, [size, b/m]
    market: np.ndarray
    rf: np.ndarray

    def characteristic(self, target: str) -> np.ndarray:
        """Excess return of G or V, or the V minus G spread."""
        g = self.returns[:, :, 0].mean(axis=1)
        v = self.returns[:, :, 4].mean(axis=1)
        if target == "G":
            return g - self.rf
        if target == "V":
            return v - self.rf
        if target == "VmG":
            return v - g
        raise ConfigError(f"unknown target {target!r}")


def read_portfolios(spec: PortfolioSpec) -> PortfolioData:
    """Parse the 25-portfolio file and restrict it to ``[start, end]``.

    Raises
    ------
    LayoutError
        Missing or duplicated portfolio columns, a bad date, or a missing-value
        sentinel inside the requested range.
    DateRangeError
        The range is not fully covered by the file.
    """
    header, rows = read_csv_table(spec.source)
    if "date" not in [h.lower() for h in header]:
        raise LayoutError("missing 'date' column", line=1)
    date_idx = [h.lower() for h in header].index("date")
    canon = {}
    for i, h in enumerate(header):
        c = canonical_portfolio_name(h)
        if c is not None:
            if c in canon:
                raise LayoutError(f"duplicate portfolio column {c}", line=1, column=h)
            canon[c] = i
    missing = [c for c in PORTFOLIO_COLUMNS if c not in canon]
    if missing:
        raise LayoutError(f"portfolio columns not found: {missing}", line=1)
    for col in (spec.market_column, spec.rf_column):
        if col not in header:
            raise LayoutError(f"missing column {col!r}", line=1)
    lo, hi = parse_month(spec.start), parse_month(spec.end)
    keep, dates = [], []
    for r, row in enumerate(rows):
        raw = row[date_idx].strip()
        if not re.fullmatch(r"\d{6}", raw) or not 1 <= int(raw[4:]) <= 12:
            raise LayoutError(f"bad date {raw!r}; expected YYYYMM", line=r + 2, column=header[date_idx])
        d = int(raw)
        if lo <= d <= hi:
            keep.append(r)
            dates.append(raw)
    if not keep or int(dates[0]) != lo or int(dates[-1]) != hi:
        span = f"{rows[0][date_idx].strip()}..{rows[-1][date_idx].strip()}" if rows else "empty"
        raise DateRangeError(f"requested {spec.start}..{spec.end} not covered by file ({span})")
    if any(int(b) <= int(a) for a, b in zip(dates, dates[1:])):
        raise LayoutError("dates are not strictly increasing")
    sub = [rows[r] for r in keep]
    cols = [header[canon[c]] for c in PORTFOLIO_COLUMNS] + [spec.market_column, spec.rf_column]
    vals = numeric_columns(header, sub, cols)
    for j, c in enumerate(cols):
        bad = np.flatnonzero(np.isin(np.round(vals[:, j], 6), MISSING_SENTINELS))
        if bad.size:
            r = keep[int(bad[0])]
            raise LayoutError(f"missing-value sentinel {vals[bad[0], j]:g}", line=r + 2, column=c)
    return PortfolioData(dates, vals[:, :25].reshape(-1, 5, 5), vals[:, 25], vals[:, 26])


def build_portfolio_dataset(spec: PortfolioSpec) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Dates, portfolio excess return and market excess return for ``spec.target``."""
    pdata = read_portfolios(spec)
    return pdata.dates, pdata.characteristic(spec.target), pdata.market


def write_portfolio_dataset(spec: PortfolioSpec, path: str | Path) -> Path:
    """Write ``date, y, const, mkt`` rows; ``const`` is the intercept column."""
    dates, y, mkt = build_portfolio_dataset(spec)
    return write_csv(path, ["date", "y", "const", "mkt"], ((d, a, 1.0, b) for d, a, b in zip(dates, y, mkt)))


# ------------------------------------------------------------ synthetic data


def synthetic_portfolios(seed: int = 20240101, start: str = "1950-01", end: str = "2020-12") -> tuple[list[str], np.ndarray]:
    """Simulate a 25-portfolio monthly panel with drifting betas.

    Each portfolio follows ``R = rf + a_t + b_t * mkt + e`` where the value
    minus growth beta drifts as a scaled random walk plus a smooth cycle, so
    the spread portfolio has visibly time-varying coefficients. A common value
    shock loads on the book-to-market quintile and sets the spread's noise
    level. Values are
    rounded to two decimals like the published files.

    Returns the header and the row values (``date`` as int first).
    """
    rng = np.random.default_rng(seed)
    lo, hi = parse_month(start), parse_month(end)
    dates = []
    y, m = divmod(lo, 100)
    while y * 100 + m <= hi:
        dates.append(y * 100 + m)
        m += 1
        if m > 12:
            y, m = y + 1, 1
    T = len(dates)
    u = np.arange(1, T + 1) / T
    rf = np.round(np.clip(0.35 + 0.25 * np.sin(2 * np.pi * u) + 0.02 * rng.standard_normal(T), 0.0, None), 2)
    mkt = np.round(0.6 + 4.3 * rng.standard_normal(T), 2)
    rw = np.cumsum(rng.standard_normal(T)) / np.sqrt(T)
    spread_beta = -0.2 + 0.3 * np.sin(3 * np.pi * u) + 0.3 * rw
    spread_alpha = 0.1 * np.cos(2 * np.pi * u)
    value_shock = 2.5 * rng.standard_normal(T)
    rets = np.empty((T, 5, 5))
    for i in range(5):
        size_beta = 1.15 - 0.06 * i
        for j in range(5):
            w = j / 4.0
            beta = size_beta + w * spread_beta
            alpha = 0.1 + w * spread_alpha
            noise = (1.2 - 0.15 * i) * rng.standard_normal(T) + w * value_shock
            rets[:, i, j] = rf + alpha + beta * mkt + noise
    rets = np.round(rets, 2)
    header = ["date", *PORTFOLIO_COLUMNS, "Mkt-RF", "RF"]
    rows = [[dates[t], *rets[t].ravel(), mkt[t], rf[t]] for t in range(T)]
    return header, rows


def write_synthetic_portfolios(path: str | Path, seed: int = 20240101, start: str = "1950-01",
                               end: str = "2020-12") -> Path:
    header, rows = synthetic_portfolios(seed, start, end)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([str(row[0])] + [f"{v:.2f}" for v in row[1:]])
    return path


def bundled_fixture() -> Path:
    """Path of the synthetic 25-portfolio CSV shipped with the package."""
    return Path(str(resources.files("tvpkernel") / "data" / "ff25_synthetic.csv"))
