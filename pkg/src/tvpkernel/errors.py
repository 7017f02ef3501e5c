"""Exception hierarchy shared by the estimation, selection and I/O layers."""

from __future__ import annotations


class TvpError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class EstimationError(TvpError):
    """Numerical failure while estimating coefficients."""

    exit_code = 5


class SingularGram(EstimationError):
    """Weighted Gram matrix is numerically singular at time ``t``."""

    def __init__(self, t: int, condition_estimate: float, gamma: float | None = None):
        self.t = t
        self.condition_estimate = condition_estimate
        self.gamma = gamma
        where = f"t={t}" if gamma is None else f"t={t}, gamma={gamma:g}"
        super().__init__(
            f"weighted Gram matrix singular at {where} "
            f"(condition estimate {condition_estimate:.3g})"
        )


class EmptyWindow(EstimationError):
    """Leave-out exclusion removed every observation of the kernel window."""

    def __init__(self, t: int, m: int, half_window: int):
        self.t = t
        self.m = m
        self.half_window = half_window
        super().__init__(
            f"leave-out block m={m} empties the window at t={t} "
            f"(half window {half_window})"
        )


class InvalidInput(TvpError, ValueError):
    exit_code = 4


class InvalidAlpha(InvalidInput):
    pass


class InvalidGamma(InvalidInput):
    pass


class InvalidSpec(InvalidInput):
    """A DGP specification violates its invariants."""


class ConfigError(TvpError):
    exit_code = 4


class DateRangeError(ConfigError):
    pass


class ParseError(TvpError):
    """Malformed input file; carries the offending line/column when known."""

    exit_code = 3

    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        self.line = line
        self.column = column
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)


class LayoutError(ParseError):
    pass
