"""Local-constant (Nadaraya-Watson) estimation of time-varying coefficients.

Time indices in the public API are 1-based (``t = 1, ..., T``) so that
``t = floor(tau * T)`` selects the same observation as in the usual notation.
All path computations share one convolution core: weighted sums of ``x_i x_i'``
and ``x_i y_i`` over the symmetric window ``[t - H, t + H]`` with
``H = floor(T h)``, clipped to the sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d
from scipy.stats import norm

from .errors import EmptyWindow, InvalidInput, SingularGram
from .kernels import KernelSpec, get_kernel

COND_LIMIT = 1e12
_SNAP_TOL = 1e-9


@dataclass(frozen=True)
class TimeSeriesData:
    """Observed response ``y`` (T,) and regressors ``X`` (T, p)."""

    y: np.ndarray
    X: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2:
            raise InvalidInput("y must be 1-D and X 2-D")
        if X.shape[0] != y.shape[0]:
            raise InvalidInput(f"length mismatch: y has {y.shape[0]} rows, X has {X.shape[0]}")
        if y.shape[0] < 2 * X.shape[1]:
            raise InvalidInput(f"need T >= 2p, got T={y.shape[0]}, p={X.shape[1]}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise InvalidInput("data contain non-finite values")
        names = self.names
        if names is None:
            names = tuple(f"x{j}" for j in range(X.shape[1]))
        elif len(names) != X.shape[1]:
            raise InvalidInput("number of regressor names does not match X")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", tuple(names))

    @property
    def T(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Bandwidth:
    """Bandwidth ``h = c * T**gamma`` and its integer half window ``floor(T h)``.

    ``T h`` is snapped to the nearest integer when it is within 1e-9 of it, so
    that e.g. ``T = 400, gamma = -0.5`` gives exactly ``H = 20`` regardless of
    how ``400**-0.5`` rounds.
    """

    c: float
    gamma: float
    T: int

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidInput(f"bandwidth scale c must be positive, got {self.c}")
        if not -1.0 < self.gamma <= 0.0:
            raise InvalidInput(f"gamma must lie in (-1, 0], got {self.gamma}")
        if self.T < 1:
            raise InvalidInput("T must be positive")
        if self.half_window < 1:
            raise InvalidInput(
                f"degenerate window: floor(T h) = {self.half_window} for "
                f"c={self.c}, gamma={self.gamma}, T={self.T}"
            )

    @classmethod
    def from_h(cls, h: float, T: int, gamma: float = -0.5) -> "Bandwidth":
        """Express a raw bandwidth ``h`` as ``c T**gamma``."""
        return cls(c=h / T**gamma, gamma=gamma, T=T)

    @property
    def h(self) -> float:
        return self.c * self.T**self.gamma

    @property
    def th(self) -> float:
        """Effective ``T h`` used in kernel arguments and normalisations."""
        th = self.T * self.h
        r = round(th)
        if r > 0 and abs(th - r) <= _SNAP_TOL * th:
            return float(r)
        return th

    @property
    def half_window(self) -> int:
        return int(math.floor(self.th))


@dataclass(frozen=True)
class TvpEstimate:
    """Per-``t`` coefficient path with sandwich covariances and pointwise bands."""

    beta_hat: np.ndarray
    cov_hat: np.ndarray
    residuals: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    boundary_flag: np.ndarray
    bandwidth: Bandwidth
    kernel: str
    confidence_q: float
    variance: str = "local"
    names: tuple[str, ...] = field(default=())

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diagonal(self.cov_hat, axis1=-2, axis2=-1), 0.0, None))

    @property
    def ssr(self) -> float:
        return math.fsum(self.residuals**2)


# --------------------------------------------------------------------------- core


def kernel_weights(bw: Bandwidth, kernel: str | KernelSpec, m: int = 0, leave_out: bool = False) -> np.ndarray:
    """Weights ``K(j / (T h))`` for ``j = -H, ..., H``.

    With ``leave_out=True`` the ``2m + 1`` central weights are set to zero.
    """
    k = get_kernel(kernel)
    H = bw.half_window
    j = np.arange(-H, H + 1, dtype=float)
    w = np.asarray(k.func(j / bw.th), dtype=float)
    if leave_out:
        w = w.copy()
        w[max(H - m, 0) : H + m + 1] = 0.0
    return w


def _outer(X: np.ndarray) -> np.ndarray:
    return X[:, :, None] * X[:, None, :]


def _window_sum(a: np.ndarray, w: np.ndarray, axis: int) -> np.ndarray:
    # zero padding outside the sample == window clipped to [1, T]
    return correlate1d(a, w, axis=axis, mode="constant", cval=0.0)


def _condition(G: np.ndarray) -> np.ndarray:
    """Condition numbers of a stack of symmetric PSD matrices (inf if singular)."""
    if G.shape[-1] == 1:
        g = G[..., 0, 0]
        return np.where(g > 0, 1.0, np.inf)
    ev = np.linalg.eigvalsh(G)
    lo, hi = ev[..., 0], ev[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where((lo > 0) & (hi > 0), hi / lo, np.inf)
    return cond


def _check_gram(G: np.ndarray, gamma: float | None = None) -> None:
    cond = _condition(G)
    bad = np.flatnonzero(~(cond <= COND_LIMIT))
    if bad.size:
        i = int(bad[0])
        raise SingularGram(t=i + 1, condition_estimate=float(cond[i]), gamma=gamma)


def _solve(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``G_t beta_t = b_t``; ``G`` is (T, p, p), ``b`` is (..., T, p)."""
    if G.shape[-1] == 1:
        return b / G[..., 0]
    Gb = np.broadcast_to(G, b.shape[:-1] + G.shape[-2:])
    return np.linalg.solve(Gb, b[..., None])[..., 0]


def _inv(G: np.ndarray) -> np.ndarray:
    if G.shape[-1] == 1:
        return 1.0 / G
    return np.linalg.inv(G)


def _fit(X: np.ndarray, Y: np.ndarray, w: np.ndarray, gamma: float | None = None, check: bool = True):
    """Kernel-weighted least squares at every ``t``.

    ``Y`` may carry leading batch dimensions (..., T). Returns ``(beta, G)``
    with ``beta`` of shape (..., T, p) and ``G`` the (T, p, p) weighted Grams.
    """
    G = _window_sum(_outer(X), w, axis=0)
    if check:
        _check_gram(G, gamma)
    b = _window_sum(Y[..., None] * X, w, axis=-2)
    return _solve(G, b), G


def _local_cov(X: np.ndarray, resid: np.ndarray, w: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``G^-1 S G^-1`` with ``S = sum K^2 e^2 x x'``.

    Equals ``Omega^-1 Sigma Omega^-1 / (T h)`` for the local estimators
    ``Omega = G / (T h)`` and ``Sigma = S / (T h)``.
    """
    S = _window_sum((resid**2)[..., None, None] * _outer(X), w * w, axis=-3)
    Gi = _inv(G)
    cov = Gi @ S @ Gi
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def _global_cov(X: np.ndarray, resid: np.ndarray, bw: Bandwidth, kernel: KernelSpec) -> np.ndarray:
    """Full-sample plug-ins ``Omega = T^-1 sum x x'``, ``Sigma = int K^2 T^-1 sum e^2 x x'``."""
    T = X.shape[0]
    XX = _outer(X)
    Om = XX.sum(axis=0) / T
    Sg = kernel.l2 * np.tensordot(resid**2, XX, axes=([-1], [0])) / T
    Oi = np.linalg.inv(Om)
    cov = Oi @ Sg @ Oi / bw.th
    cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    # same matrix at every t
    return np.broadcast_to(cov[..., None, :, :], resid.shape + (X.shape[1], X.shape[1]))


def boundary_flags(bw: Bandwidth) -> np.ndarray:
    """True where the window ``[t - H, t + H]`` is clipped by the sample edges."""
    H = bw.half_window
    t = np.arange(1, bw.T + 1)
    return (t - H < 1) | (t + H > bw.T)


def _check_kernel_gamma(bw: Bandwidth, k: KernelSpec) -> None:
    if bw.gamma == 0.0 and k.name != "uniform":
        raise InvalidInput("gamma = 0 is only supported with the uniform kernel")


# ------------------------------------------------------------------------ public


def local_constant_estimate(data: TimeSeriesData, t: int, bw: Bandwidth, kernel="epanechnikov") -> np.ndarray:
    """Estimate ``beta_t`` at a single time index ``t`` (1-based)."""
    return _point_estimate(data, t, bw, kernel, m=None)


def leave_out_estimate(data: TimeSeriesData, t: int, bw: Bandwidth, kernel="epanechnikov", m: int = 0) -> np.ndarray:
    """Estimate ``beta_t`` without the observations ``s`` in ``[t - m, t + m]``."""
    if m < 0:
        raise InvalidInput("m must be nonnegative")
    return _point_estimate(data, t, bw, kernel, m=m)


def _point_estimate(data, t, bw, kernel, m):
    k = get_kernel(kernel)
    _check_kernel_gamma(bw, k)
    T = data.T
    if not 1 <= t <= T:
        raise InvalidInput(f"t must be in [1, {T}], got {t}")
    H = bw.half_window
    lo, hi = max(1, t - H), min(T, t + H)
    idx = np.arange(lo, hi + 1)
    w = np.asarray(k.func((t - idx) / bw.th), dtype=float)
    if m is not None:
        w = np.where(np.abs(t - idx) <= m, 0.0, w)
        if not np.any(w > 0):
            raise EmptyWindow(t=t, m=m, half_window=H)
    Xw = data.X[lo - 1 : hi]
    yw = data.y[lo - 1 : hi]
    G = (Xw * w[:, None]).T @ Xw
    cond = float(_condition(G[None])[0])
    if not cond <= COND_LIMIT:
        raise SingularGram(t=t, condition_estimate=cond, gamma=bw.gamma)
    b = (Xw * w[:, None]).T @ yw
    return np.linalg.solve(G, b)


def fitted_path(data: TimeSeriesData, bw: Bandwidth, kernel="epanechnikov") -> np.ndarray:
    """``beta_hat`` (T, p) at every ``t`` without variance estimation."""
    k = get_kernel(kernel)
    _check_kernel_gamma(bw, k)
    beta, _ = _fit(data.X, data.y, kernel_weights(bw, k), gamma=bw.gamma)
    return beta


def leave_out_path(data: TimeSeriesData, bw: Bandwidth, kernel="epanechnikov", m: int = 0) -> np.ndarray:
    """Leave-(2m+1)-out estimates at every ``t`` (used by cross-validation)."""
    if m < 0:
        raise InvalidInput("m must be nonnegative")
    k = get_kernel(kernel)
    _check_kernel_gamma(bw, k)
    w = kernel_weights(bw, k, m=m, leave_out=True)
    if not np.any(w > 0):
        raise EmptyWindow(t=1, m=m, half_window=bw.half_window)
    beta, _ = _fit(data.X, data.y, w, gamma=bw.gamma)
    return beta


def estimate_path(
    data: TimeSeriesData,
    bw: Bandwidth,
    kernel="epanechnikov",
    confidence_q: float = 0.05,
    variance: str = "local",
) -> TvpEstimate:
    """Estimate the full coefficient path with sandwich standard errors.

    Parameters
    ----------
    data : TimeSeriesData
    bw : Bandwidth
    kernel : str or KernelSpec
    confidence_q : float
        Bands are ``beta_hat +/- z_{1-q/2} * se``.
    variance : {"local", "global"}
        ``"local"`` uses kernel-weighted ``Omega_t`` and ``Sigma_t`` built from
        the same-bandwidth residuals. ``"global"`` uses full-sample averages
        (valid for covariance-stationary regressors and errors).
    """
    if not 0 < confidence_q < 1:
        raise InvalidInput("confidence_q must lie in (0, 1)")
    k = get_kernel(kernel)
    _check_kernel_gamma(bw, k)
    if bw.T != data.T:
        raise InvalidInput(f"bandwidth built for T={bw.T} but data have T={data.T}")
    w = kernel_weights(bw, k)
    beta, G = _fit(data.X, data.y, w, gamma=bw.gamma)
    resid = data.y - np.einsum("tp,tp->t", data.X, beta)
    if variance == "local":
        cov = _local_cov(data.X, resid, w, G)
    elif variance == "global":
        cov = np.array(_global_cov(data.X, resid, bw, k))
    else:
        raise InvalidInput(f"unknown variance estimator {variance!r}")
    se = np.sqrt(np.clip(np.diagonal(cov, axis1=-2, axis2=-1), 0.0, None))
    z = norm.ppf(1.0 - confidence_q / 2.0)
    return TvpEstimate(
        beta_hat=beta,
        cov_hat=cov,
        residuals=resid,
        ci_lower=beta - z * se,
        ci_upper=beta + z * se,
        boundary_flag=boundary_flags(bw),
        bandwidth=bw,
        kernel=k.name,
        confidence_q=confidence_q,
        variance=variance,
        names=data.names,
    )


def gram_condition_report(data: TimeSeriesData, bw: Bandwidth, kernel="epanechnikov") -> np.ndarray:
    """Condition number of the weighted Gram matrix at each ``t``.

    ``np.inf`` marks numerically singular windows. Never raises.
    """
    k = get_kernel(kernel)
    G = _window_sum(_outer(data.X), kernel_weights(bw, k), axis=0)
    return _condition(G)


def ols(data: TimeSeriesData) -> np.ndarray:
    """Full-sample least squares coefficients."""
    return np.linalg.lstsq(data.X, data.y, rcond=None)[0]
