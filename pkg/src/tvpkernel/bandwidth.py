"""Bandwidth selection: cross-validation, wild-bootstrap coverage search, and
the admissible-rate algebra linking smoothness and bandwidth exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.stats import norm

from .dgp import SeedLike, rng_for
from .errors import EstimationError, InvalidAlpha, InvalidGamma, InvalidInput, SingularGram
from .estimator import (
    Bandwidth,
    TimeSeriesData,
    _check_gram,
    _fit,
    _inv,
    _outer,
    _window_sum,
    boundary_flags,
    kernel_weights,
    leave_out_path,
)
from .kernels import get_kernel

DEFAULT_GAMMAS = (-0.5, -0.4, -0.33, -0.2)
DEFAULT_C_GRID = tuple(round(0.5 + 0.05 * k, 2) for k in range(21))

# relative tolerance for treating criterion values as tied
_TIE_RTOL = 1e-10
_TIE_ATOL = 1e-14


@dataclass(frozen=True)
class GammaGrid:
    """Candidate bandwidth exponents inside ``[lower, upper]`` within (-1, 0)."""

    values: tuple[float, ...] = DEFAULT_GAMMAS
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise InvalidInput("gamma grid is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidInput("gamma grid must be strictly increasing")
        if any(not -1.0 < v < 0.0 for v in vals):
            raise InvalidInput("gamma grid values must lie in (-1, 0)")
        lo = vals[0] if self.lower is None else float(self.lower)
        hi = vals[-1] if self.upper is None else float(self.upper)
        if not (lo <= vals[0] and vals[-1] <= hi):
            raise InvalidInput("gamma grid values fall outside [lower, upper]")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_range(cls, lower: float, upper: float, step: float = 0.01) -> "GammaGrid":
        n = int(round((upper - lower) / step))
        vals = tuple(round(lower + k * step, 10) for k in range(n + 1))
        return cls(vals, lower, upper)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class BootstrapConfig:
    """Settings for the wild-bootstrap rate search.

    ``coverage`` chooses how the ``p`` coefficient intervals are combined:
    ``"mean"`` (default) averages the per-coefficient indicators, ``"joint"``
    counts a draw as covering only if all intervals cover. Joint coverage of
    ``p`` nominal 95% intervals sits near ``0.95**p``, so with ``p >= 2`` it
    rarely clears a 0.9 threshold at any bandwidth.
    ``exclude_boundary`` drops ``t`` whose ``gamma1`` window is clipped from
    the average over ``t``. ``se`` picks the standard error of the refits:
    the local sandwich (default) or the full-sample plug-in version.
    """

    B: int = 200
    q: float = 0.05
    q_bar: float = 0.10
    seed: int = 0
    multiplier: str = "gaussian"
    coverage: str = "mean"
    exclude_boundary: bool = False
    se: str = "local"

    def __post_init__(self):
        if self.B < 50:
            raise InvalidInput("bootstrap needs B >= 50")
        if not 0 < self.q < 1 or not 0 < self.q_bar < 1:
            raise InvalidInput("q and q_bar must lie in (0, 1)")
        if self.multiplier != "gaussian":
            raise InvalidInput(f"unsupported multiplier {self.multiplier!r}")
        if self.coverage not in ("joint", "mean"):
            raise InvalidInput(f"unknown coverage mode {self.coverage!r}")
        if self.se not in ("local", "global"):
            raise InvalidInput(f"unknown standard-error type {self.se!r}")


@dataclass
class SelectionResult:
    method: str
    gamma_hat: float
    grid: tuple[float, ...]
    upsilon: list[float] = field(default_factory=list)
    cr_matrix: dict[tuple[float, float], float] = field(default_factory=dict)
    cv_curve: dict[float, float] = field(default_factory=dict)
    c_hat: float | None = None
    c_curve: dict[float, float] = field(default_factory=dict)
    diagnostics: dict[tuple[float, float], np.ndarray] = field(default_factory=dict, repr=False)
    m: int | None = None

    def rejected(self) -> list[float]:
        """Grid values that failed the coverage requirement."""
        return [g for g in self.grid if g not in self.upsilon]


# ------------------------------------------------------------ cross-validation


def _argmin_small(keys: Sequence[float], values: Sequence[float]) -> float:
    """Argmin with ties resolved toward the smallest key."""
    v = np.asarray(values, dtype=float)
    best = np.nanmin(v)
    tied = np.isclose(v, best, rtol=_TIE_RTOL, atol=_TIE_ATOL)
    return float(min(k for k, t in zip(keys, tied) if t))


def cv_criterion(data: TimeSeriesData, bw: Bandwidth, kernel="epanechnikov", m: int = 0) -> float:
    """Mean squared leave-(2m+1)-out prediction error."""
    beta = leave_out_path(data, bw, kernel, m)
    r = data.y - np.einsum("tp,tp->t", data.X, beta)
    return math.fsum(r * r) / data.T


def cv_select_gamma(data: TimeSeriesData, grid: GammaGrid | Iterable[float] = DEFAULT_GAMMAS,
                    m: int = 0, kernel="epanechnikov") -> SelectionResult:
    """Pick ``gamma`` minimising the leave-(2m+1)-out CV criterion with ``h = T**gamma``."""
    grid = grid if isinstance(grid, GammaGrid) else GammaGrid(tuple(grid))
    curve = {}
    for g in grid:
        try:
            curve[g] = cv_criterion(data, Bandwidth(1.0, g, data.T), kernel, m)
        except SingularGram as exc:
            raise SingularGram(exc.t, exc.condition_estimate, gamma=g) from exc
        except EstimationError as exc:
            raise EstimationError(f"gamma={g:g}: {exc}") from exc
    g_hat = _argmin_small(list(curve), list(curve.values()))
    return SelectionResult(method="cv", gamma_hat=g_hat, grid=grid.values, cv_curve=curve, m=m)


def select_scale_c(data: TimeSeriesData, gamma_hat: float, c_grid: Sequence[float] = DEFAULT_C_GRID,
                   kernel="epanechnikov", return_curve: bool = False):
    """Leave-one-out CV over the scale ``c`` with ``h = c T**gamma_hat``.

    Ties go to the smaller ``c``.
    """
    curve = {}
    for c in c_grid:
        curve[float(c)] = cv_criterion(data, Bandwidth(float(c), gamma_hat, data.T), kernel, m=0)
    c_hat = _argmin_small(list(curve), list(curve.values()))
    return (c_hat, curve) if return_curve else c_hat


# ------------------------------------------------------------- wild bootstrap


def _coverage_cell(X, ystar, target, w2, G2, z, mode, se="local", th=None, l2=None):
    """Per-draw, per-t coverage of ``target`` by the bootstrap intervals.

    Returns an array (B, T) of coverage indicators (or fractions for ``mode="mean"``).
    """
    b = _window_sum(ystar[..., None] * X, w2, axis=-2)
    p = X.shape[1]
    if p == 1:
        beta = b / G2[..., 0]
        resid = ystar - beta[..., 0] * X[:, 0]
        if se == "global":
            T = X.shape[0]
            om = np.mean(X[:, 0] ** 2)
            sg = l2 * np.mean((resid * X[:, 0]) ** 2, axis=-1, keepdims=True)
            var = (sg / om**2 / th)[..., None] * np.ones_like(beta)
        else:
            S = _window_sum((resid * X[:, 0]) ** 2, w2 * w2, axis=-1)
            var = (S / G2[:, 0, 0] ** 2)[..., None]
    else:
        beta = np.linalg.solve(np.broadcast_to(G2, b.shape[:-1] + (p, p)), b[..., None])[..., 0]
        resid = ystar - np.einsum("tp,btp->bt", X, beta)
        S = _window_sum((resid**2)[..., None, None] * _outer(X), w2 * w2, axis=-3)
        Gi = _inv(G2)
        var = np.diagonal(Gi @ S @ Gi, axis1=-2, axis2=-1)
    half = z * np.sqrt(np.clip(var, 0.0, None))
    inside = np.abs(beta - target) <= half
    if mode == "joint":
        return inside.all(axis=-1).astype(float)
    return inside.mean(axis=-1)


def bootstrap_select_gamma(data: TimeSeriesData, grid: GammaGrid | Iterable[float] = DEFAULT_GAMMAS,
                           cfg: BootstrapConfig | None = None, kernel="epanechnikov") -> SelectionResult:
    """Select ``gamma`` by fixed-design wild-bootstrap coverage.

    For each ``gamma1`` the fit ``beta_hat(gamma1)`` and its residuals build
    bootstrap samples ``y* = x' beta_hat(gamma1) + eta * e_hat(gamma1)`` with
    ``eta ~ N(0, 1)``. Each ``gamma2 <= gamma1`` refits ``y*`` and forms normal
    intervals with the local sandwich standard error; ``CR(gamma1, gamma2)`` is
    the coverage of ``beta_hat(gamma1)`` averaged over draws and then over
    ``t``. The selected exponent is the largest ``gamma1`` whose coverage is at
    least ``1 - q_bar`` for every ``gamma2 <= gamma1``, or the grid's lower
    bound when no ``gamma1`` qualifies.

    Bootstrap draws for ``gamma1`` come from the substream ``(seed, i1)`` and
    are shared by all ``gamma2`` cells of that row.
    """
    cfg = cfg or BootstrapConfig()
    grid = grid if isinstance(grid, GammaGrid) else GammaGrid(tuple(grid))
    k = get_kernel(kernel)
    X, y, T = data.X, data.y, data.T
    z = norm.ppf(1.0 - cfg.q / 2.0)
    gammas = grid.values

    weights, grams = {}, {}
    for g in gammas:
        bw = Bandwidth(1.0, g, T)
        w = kernel_weights(bw, k)
        G = _window_sum(_outer(X), w, axis=0)
        _check_gram(G, g)
        weights[g], grams[g] = w, G

    cr, diag = {}, {}
    threshold = 1.0 - cfg.q_bar - 1e-12
    upsilon = []
    for i1, g1 in enumerate(gammas):
        beta1, _ = _fit(X, y, weights[g1], check=False)
        fitted = np.einsum("tp,tp->t", X, beta1)
        resid = y - fitted
        eta = rng_for(cfg.seed, i1).standard_normal((cfg.B, T))
        ystar = fitted + eta * resid
        keep = ~boundary_flags(Bandwidth(1.0, g1, T)) if cfg.exclude_boundary else np.ones(T, bool)
        if not keep.any():
            keep = np.ones(T, bool)
        ok = True
        for g2 in gammas[: i1 + 1]:
            cov = _coverage_cell(X, ystar, beta1, weights[g2], grams[g2], z, cfg.coverage,
                                 cfg.se, Bandwidth(1.0, g2, T).th, k.l2)
            per_t = cov.mean(axis=0)
            diag[(g1, g2)] = per_t
            cr[(g1, g2)] = math.fsum(per_t[keep]) / int(keep.sum())
            ok = ok and cr[(g1, g2)] >= threshold
        if ok:
            upsilon.append(g1)
    g_hat = max(upsilon) if upsilon else grid.lower
    return SelectionResult(method="bootstrap", gamma_hat=float(g_hat), grid=gammas,
                           upsilon=upsilon, cr_matrix=cr, diagnostics=diag)


def format_cr_table(res: SelectionResult) -> str:
    """Render ``CR(gamma1, gamma2)`` with rows gamma1 and columns gamma2 (largest first)."""
    gs = sorted(res.grid, reverse=True)
    width = 8
    lines = ["gamma1\\gamma2".ljust(14) + "".join(f"{g:>{width}g}" for g in gs)]
    for g1 in gs:
        cells = []
        for g2 in gs:
            v = res.cr_matrix.get((g1, g2))
            cells.append(f"{'-':>{width}}" if v is None else f"{v:>{width}.3f}")
        lines.append(f"{g1:<14g}" + "".join(cells))
    return "\n".join(lines)


# ------------------------------------------------------ admissible-rate algebra


class Interval(NamedTuple):
    """Open interval ``(lower, upper)``; ``upper`` may be ``inf``."""

    lower: float
    upper: float

    @property
    def is_empty(self) -> bool:
        return not self.lower < self.upper

    def __contains__(self, x) -> bool:  # type: ignore[override]
        return self.lower < x < self.upper


def admissible_gamma_range(alpha: float, class_type: str = "A") -> Interval:
    """Bandwidth exponents giving asymptotically unbiased normal estimation."""
    if not alpha > 0:
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    ct = class_type.upper().removeprefix("TYPE")
    if ct == "A":
        return Interval(-1.0, -1.0 / (2.0 * alpha + 1.0))
    if ct == "B":
        return Interval(-1.0, min(2.0 * alpha - 1.0, 0.0))
    raise InvalidInput(f"class_type must be 'A' or 'B', got {class_type!r}")


def admissible_alpha_set(gamma: float, class_type: str = "A") -> Interval:
    """Smoothness values estimable without asymptotic bias at exponent ``gamma``."""
    if not -1.0 < gamma < 0.0:
        raise InvalidGamma(f"gamma must lie in (-1, 0), got {gamma}")
    ct = class_type.upper().removeprefix("TYPE")
    if ct == "A":
        return Interval(-(1.0 + 1.0 / gamma) / 2.0, math.inf)
    if ct == "B":
        return Interval((1.0 + gamma) / 2.0, math.inf)
    raise InvalidInput(f"class_type must be 'A' or 'B', got {class_type!r}")
