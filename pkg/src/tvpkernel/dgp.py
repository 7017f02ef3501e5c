"""Seeded generators for coefficient paths, regressors and errors.

Every generator takes a ``seed`` that may be an ``int`` or a
``numpy.random.SeedSequence``. Independent substreams are derived with
:func:`substream`, keyed by integers, so results do not depend on the order in
which streams are consumed or on how work is split across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d
from scipy.signal import lfilter

from .errors import InvalidSpec
from .estimator import TimeSeriesData

SeedLike = Union[int, np.random.SeedSequence]

# substream keys used by simulate_dataset
TVP_STREAM, REGRESSOR_STREAM, ERROR_STREAM = 0, 1, 2


def substream(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """Child seed sequence addressed by ``key`` (deterministic, order-free)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(key))


def rng_for(seed: SeedLike, *key: int) -> np.random.Generator:
    return np.random.default_rng(substream(seed, *key))


# ----------------------------------------------------------------- smooth catalog


def _bump(u):
    return 2.0 * u + np.exp(-16.0 * (u - 0.5) ** 2)


def _fourier(u):
    pi = np.pi
    return (np.sin(pi * u) + np.cos(2 * pi * u) + np.sin(3 * pi * u) + np.cos(4 * pi * u)) / 4.0


SMOOTH_CATALOG: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": lambda u: np.zeros_like(u),
    "identity": lambda u: u,
    "linear2u": lambda u: 2.0 * u,
    "bump": _bump,
    "fourier": _fourier,
    "sine": lambda u: np.sin(2 * np.pi * u),
}


# -------------------------------------------------------------------- TVP specs


@dataclass(frozen=True)
class Smooth:
    """``beta_t = f(t / T)`` for a catalog function or polynomial coefficients."""

    f: str | None = None
    coefficients: tuple[float, ...] | None = None

    def validate(self):
        if (self.f is None) == (self.coefficients is None):
            raise InvalidSpec("Smooth needs exactly one of f or coefficients")
        if self.f is not None and self.f not in SMOOTH_CATALOG:
            raise InvalidSpec(f"unknown smooth function {self.f!r}")


@dataclass(frozen=True)
class RescaledRandomWalk:
    """``beta_t = mu + T**-scale_exponent * sum_{i<=t} u_i``.

    ``driver`` is ``"gaussian"`` (u ~ N(0, 1)) or ``"lognormal"``
    (u = exp(Z), Z ~ N(0, 1), not centred). ``driver_scale`` multiplies u.
    """

    mu: float = 0.0
    driver: str = "gaussian"
    scale_exponent: float = 0.5
    driver_scale: float = 1.0

    def validate(self):
        if self.driver not in ("gaussian", "lognormal"):
            raise InvalidSpec(f"unknown random-walk driver {self.driver!r}")
        if self.driver_scale < 0:
            raise InvalidSpec("driver_scale must be nonnegative")


@dataclass(frozen=True)
class StructuralBreak:
    """Piecewise-constant path with breaks after ``floor(fraction * T)``.

    Segment ``k`` has value ``delta * levels[k] / T**alpha``; ``levels`` has one
    more entry than ``fractions``.
    """

    fractions: tuple[float, ...] = (0.5,)
    levels: tuple[float, ...] = (0.0, 2.0)
    alpha: float = 0.2
    delta: float = 1.0

    def validate(self):
        fr = np.asarray(self.fractions, dtype=float)
        if len(self.levels) != len(fr) + 1:
            raise InvalidSpec("levels must have one more entry than fractions")
        if fr.size and (np.any(fr <= 0) or np.any(fr >= 1) or np.any(np.diff(fr) <= 0)):
            raise InvalidSpec("break fractions must be strictly increasing in (0, 1)")


@dataclass(frozen=True)
class Threshold:
    """``theta1 + (delta_scale / T**alpha) * 1{q_t > eta}`` with q_t i.i.d. N(0, 1)."""

    theta1: float = 0.0
    delta_scale: float = 1.0
    alpha: float = 0.5
    eta: float = 0.0

    def validate(self):
        pass


@dataclass(frozen=True)
class Mixture:
    """Pointwise sum of component paths; component ``k`` uses substream ``k``."""

    components: tuple = ()

    def validate(self):
        if not self.components:
            raise InvalidSpec("Mixture needs at least one component")
        for c in self.components:
            c.validate()


TvpSpec = Union[Smooth, RescaledRandomWalk, StructuralBreak, Threshold, Mixture]


def generate_tvp_path(spec: TvpSpec, T: int, seed: SeedLike = 0) -> np.ndarray:
    """Generate one coefficient path ``beta_{T,t}``, ``t = 1..T``."""
    if T < 2:
        raise InvalidSpec("T must be at least 2")
    spec.validate()
    t = np.arange(1, T + 1, dtype=float)
    u = t / T
    if isinstance(spec, Smooth):
        if spec.f is not None:
            return np.asarray(SMOOTH_CATALOG[spec.f](u), dtype=float)
        return np.polynomial.polynomial.polyval(u, spec.coefficients)
    if isinstance(spec, RescaledRandomWalk):
        rng = rng_for(seed)
        z = rng.standard_normal(T)
        drv = z if spec.driver == "gaussian" else np.exp(z)
        inc = spec.driver_scale * drv / T**spec.scale_exponent
        return spec.mu + np.cumsum(inc)
    if isinstance(spec, StructuralBreak):
        breaks = [int(math.floor(f * T)) for f in spec.fractions]
        seg = np.searchsorted(np.asarray(breaks), t, side="left")
        levels = np.asarray(spec.levels, dtype=float)
        return spec.delta * levels[seg] / T**spec.alpha
    if isinstance(spec, Threshold):
        q = rng_for(seed).standard_normal(T)
        return spec.theta1 + (spec.delta_scale / T**spec.alpha) * (q > spec.eta)
    if isinstance(spec, Mixture):
        out = np.zeros(T)
        for k, comp in enumerate(spec.components):
            out += generate_tvp_path(comp, T, substream(seed, k))
        return out
    raise InvalidSpec(f"unsupported TVP spec {type(spec).__name__}")


# ------------------------------------------------------- regressors and errors


@dataclass(frozen=True)
class AR1:
    """``x_t = phi x_{t-1} + e_t``, started from the stationary distribution."""

    phi: float = 0.5
    innovation_sd: float = 1.0

    def validate(self):
        if not abs(self.phi) < 1:
            raise InvalidSpec("AR(1) regressor needs |phi| < 1")


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def validate(self):
        pass


@dataclass(frozen=True)
class Custom:
    values: tuple[float, ...] = ()

    def validate(self):
        pass


RegressorSpec = Union[AR1, Constant, Custom]


@dataclass(frozen=True)
class IID:
    sigma: float = 1.0

    def validate(self):
        if self.sigma < 0:
            raise InvalidSpec("sigma must be nonnegative")


@dataclass(frozen=True)
class GARCH:
    """GARCH(1,1): ``e_t = s_t u_t``, ``s_t^2 = omega + arch e_{t-1}^2 + garch s_{t-1}^2``."""

    omega: float = 0.1
    arch: float = 0.3
    garch: float = 0.6
    burn_in: int = 500

    def validate(self):
        if not self.arch + self.garch < 1:
            raise InvalidSpec("GARCH needs arch + garch < 1")
        if self.burn_in < 200:
            raise InvalidSpec("GARCH burn_in must be at least 200")
        if self.omega <= 0 or self.arch < 0 or self.garch < 0:
            raise InvalidSpec("GARCH parameters must be positive")

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.arch - self.garch)


ErrorSpec = Union[IID, GARCH]


def generate_regressor(spec: RegressorSpec, T: int, seed: SeedLike = 0) -> np.ndarray:
    spec.validate()
    if isinstance(spec, Constant):
        return np.full(T, float(spec.value))
    if isinstance(spec, Custom):
        v = np.asarray(spec.values, dtype=float)
        if v.shape != (T,):
            raise InvalidSpec(f"custom regressor has {v.size} values, expected {T}")
        return v.copy()
    if isinstance(spec, AR1):
        e = rng_for(seed).standard_normal(T) * spec.innovation_sd
        x0 = e[0] / math.sqrt(1.0 - spec.phi**2)
        rest, _ = lfilter([1.0], [1.0, -spec.phi], e[1:], zi=[spec.phi * x0])
        return np.concatenate([[x0], rest])
    raise InvalidSpec(f"unsupported regressor spec {type(spec).__name__}")


def generate_errors(spec: ErrorSpec, T: int, seed: SeedLike = 0) -> np.ndarray:
    spec.validate()
    rng = rng_for(seed)
    if isinstance(spec, IID):
        return spec.sigma * rng.standard_normal(T)
    if isinstance(spec, GARCH):
        n = T + spec.burn_in
        u = rng.standard_normal(n)
        e = np.empty(n)
        s2 = spec.unconditional_variance
        w, a, b = spec.omega, spec.arch, spec.garch
        for i in range(n):
            e[i] = math.sqrt(s2) * u[i]
            s2 = w + a * e[i] * e[i] + b * s2
        return e[spec.burn_in :]
    raise InvalidSpec(f"unsupported error spec {type(spec).__name__}")


def _as_tuple(x) -> tuple:
    if isinstance(x, (list, tuple)):
        return tuple(x)
    return (x,)


def simulate_dataset(
    tvp: TvpSpec | Sequence[TvpSpec],
    reg: RegressorSpec | Sequence[RegressorSpec],
    err: ErrorSpec,
    T: int,
    seed: SeedLike = 0,
) -> tuple[TimeSeriesData, np.ndarray]:
    """Draw ``y_t = x_t' beta_{T,t} + e_t``.

    Coefficient ``j`` and regressor ``j`` use substreams ``(0, j)`` and
    ``(1, j)``; the errors use substream ``(2,)``.

    Returns
    -------
    data : TimeSeriesData
    beta : ndarray of shape (T, p)
        The true coefficient path.
    """
    tvps, regs = _as_tuple(tvp), _as_tuple(reg)
    if len(tvps) != len(regs):
        raise InvalidSpec("need one TVP spec per regressor")
    beta = np.column_stack([generate_tvp_path(s, T, substream(seed, TVP_STREAM, j)) for j, s in enumerate(tvps)])
    X = np.column_stack([generate_regressor(r, T, substream(seed, REGRESSOR_STREAM, j)) for j, r in enumerate(regs)])
    eps = generate_errors(err, T, substream(seed, ERROR_STREAM))
    y = np.einsum("tp,tp->t", X, beta) + eps
    return TimeSeriesData(y=y, X=X), beta


# ------------------------------------------------------------ smoothness probe


@dataclass(frozen=True)
class ProbeResult:
    alpha_hat: float
    std_error: float
    applicable: bool
    windows: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    oscillation: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))


def holder_smoothness_probe(path, window_fractions: Sequence[float] | None = None) -> ProbeResult:
    """Estimate the local-oscillation exponent of a path.

    For each window ``a = round(f T)`` the mean over ``t`` of
    ``max_{|j - t| <= a} |beta_t - beta_j|`` is regressed on ``a / T`` in logs;
    the slope estimates the smoothness exponent. Diagnostic only.
    """
    b = np.asarray(path, dtype=float)
    T = b.size
    if window_fractions is None:
        window_fractions = np.geomspace(2e-3, 5e-2, 12)
    a = np.unique(np.maximum(1, np.round(np.asarray(window_fractions) * T).astype(int)))
    osc = np.empty(a.size)
    for k, ak in enumerate(a):
        size = 2 * ak + 1
        hi = maximum_filter1d(b, size, mode="nearest")
        lo = minimum_filter1d(b, size, mode="nearest")
        osc[k] = np.mean(np.maximum(hi - b, b - lo))
    if a.size < 2 or not np.all(osc > 0):
        return ProbeResult(float("nan"), float("nan"), False, a, osc)
    xs = np.log(a / T)
    ys = np.log(osc)
    A = np.column_stack([np.ones_like(xs), xs])
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    dof = max(a.size - 2, 1)
    s2 = resid @ resid / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return ProbeResult(float(coef[1]), float(math.sqrt(cov[1, 1])), True, a, osc)
