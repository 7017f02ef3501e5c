"""Monte Carlo experiments and closed-form MSE expressions.

The runner simulates a data generating process, estimates the coefficient path
at fixed bandwidth exponents or at exponents picked by the data-driven
selectors, and scores each fit against the true path. Replication ``r`` at
sample size ``T`` draws everything from the substream ``(master_seed, T, r)``,
so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .bandwidth import DEFAULT_GAMMAS, BootstrapConfig, GammaGrid, bootstrap_select_gamma, cv_select_gamma
from .dgp import (
    AR1,
    GARCH,
    IID,
    ErrorSpec,
    Mixture,
    RescaledRandomWalk,
    Smooth,
    StructuralBreak,
    simulate_dataset,
    substream,
)
from .errors import ConfigError, EstimationError, InvalidInput
from .estimator import Bandwidth, estimate_path
from .kernels import get_kernel

SELECTORS = ("CV", "Boot")
METRICS = frozenset({"mse_path", "mse_pointwise", "coverage"})


# ------------------------------------------------------------ theoretical MSE


def _check_positive(**kw) -> None:
    for name, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise InvalidInput(f"{name} must be positive and finite, got {v}")


def mse_theoretical_local_level(h: float, T: int, sigma_u2: float, sigma_eps2: float) -> float:
    """Leading-order MSE of the uniform-kernel estimator on a local-level model.

    ``MSE(h) = sigma_u2 * h / 6 + sigma_eps2 / (2 T h)`` where the level is a
    random walk whose increments have variance ``sigma_u2 / T``.
    """
    _check_positive(h=h, T=T, sigma_u2=sigma_u2, sigma_eps2=sigma_eps2)
    return sigma_u2 * h / 6.0 + sigma_eps2 / (2.0 * T * h)


def mse_exact_local_level(h: float, T: int, sigma_u2: float, sigma_eps2: float) -> float:
    """Exact MSE at an interior point for the uniform kernel with ``H = floor(T h)``.

    The estimate averages ``2H + 1`` observations, so the noise part is
    ``sigma_eps2 / (2H + 1)``; the smoothing part is the variance of the mean
    random-walk displacement over the window,
    ``2 sigma_u2 H (H + 1) (2H + 1) / (6 (2H + 1)^2 T)``.
    """
    _check_positive(h=h, T=T, sigma_u2=sigma_u2, sigma_eps2=sigma_eps2)
    H = Bandwidth.from_h(h, T).half_window
    n = 2 * H + 1
    return 2.0 * sigma_u2 * H * (H + 1) * n / (6.0 * n * n * T) + sigma_eps2 / n


def mse_minimizing_bandwidth(T: int, sigma_u2: float, sigma_eps2: float) -> tuple[float, float]:
    """Minimiser of :func:`mse_theoretical_local_level`.

    Returns
    -------
    h_min : float
        ``sqrt(3 sigma_eps2 / sigma_u2) * T**-0.5``.
    c : float
        The implied scale in ``h = c T**gamma`` with ``gamma = -1/2``.
    """
    _check_positive(T=T, sigma_u2=sigma_u2, sigma_eps2=sigma_eps2)
    c = math.sqrt(3.0 * sigma_eps2 / sigma_u2)
    return c / math.sqrt(T), c


def mse_theoretical_general(h, T, sigma_u2, sigma_eps2, Omega, Lambda, LambdaBar, Xi) -> float:
    """Leading-order MSE for a multivariate random-walk coefficient.

    ``(sigma_u2 h / 4) tr[O^-1 (L Lb + Lb L - 2 Xi) O^-1] + (sigma_eps2 / (2 T h)) tr[O^-1]``

    Raises
    ------
    InvalidInput
        If ``h``, ``T`` or a variance is not positive, if ``Omega`` is not
        symmetric positive definite, or if ``L Lb + Lb L - 2 Xi`` is not
        positive definite.
    """
    _check_positive(h=h, T=T, sigma_u2=sigma_u2, sigma_eps2=sigma_eps2)
    O, L, Lb, X = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (Omega, Lambda, LambdaBar, Xi))
    p = O.shape[0]
    if any(a.shape != (p, p) for a in (O, L, Lb, X)):
        raise InvalidInput("Omega, Lambda, LambdaBar and Xi must be square of equal size")
    if not np.allclose(O, O.T) or np.linalg.eigvalsh(O).min() <= 0:
        raise InvalidInput("Omega must be symmetric positive definite")
    M = L @ Lb + Lb @ L - 2.0 * X
    if np.linalg.eigvalsh(0.5 * (M + M.T)).min() <= 0:
        raise InvalidInput("Lambda LambdaBar + LambdaBar Lambda - 2 Xi must be positive definite")
    Oi = np.linalg.inv(O)
    bias = sigma_u2 * h / 4.0 * np.trace(Oi @ M @ Oi)
    var = sigma_eps2 / (2.0 * T * h) * np.trace(Oi)
    return float(bias + var)


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo design.

    ``gammas`` mixes fixed exponents with the selector markers ``"CV"`` and
    ``"Boot"``. ``variance`` is ``"global"`` (full-sample plug-ins, used for the
    random-walk designs) or ``"local"`` (kernel-weighted plug-ins, used for the
    neglected-break and smooth-jump designs). Pointwise metrics are taken
    at ``t = floor(tau T)`` for every ``tau`` in ``eval_points``.
    """

    dgp: tuple
    sample_sizes: tuple[int, ...] = (100, 200, 400, 800)
    gammas: tuple = (-0.5,)
    replications: int = 2000
    eval_points: tuple[float, ...] = (0.5,)
    metrics: frozenset = METRICS
    master_seed: int = 0
    variance: str = "global"
    kernel: str = "epanechnikov"
    confidence_q: float = 0.05
    c: float = 1.0
    cv_grid: tuple[float, ...] = GammaGrid.from_range(-0.5, -0.2, 0.01).values
    cv_m: int = 1
    boot_grid: tuple[float, ...] = DEFAULT_GAMMAS
    boot_B: int = 200
    boot_q_bar: float = 0.10
    label: str = ""
    keep_records: bool = False
    abort_on_failure: bool = False

    def __post_init__(self):
        if len(self.dgp) != 3:
            raise ConfigError("dgp must be a (tvp, regressor, errors) triple")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if any(not 0 < tau < 1 for tau in self.eval_points):
            raise ConfigError("evaluation fractions must lie in (0, 1)")
        if not set(self.metrics) <= METRICS:
            raise ConfigError(f"unknown metrics {sorted(set(self.metrics) - METRICS)}")
        if self.variance not in ("global", "local"):
            raise ConfigError(f"unknown variance design {self.variance!r}")
        for g in self.gammas:
            if isinstance(g, str):
                if g not in SELECTORS:
                    raise ConfigError(f"unknown selector {g!r}")
            elif not -1.0 < g < 0.0:
                raise ConfigError(f"gamma must lie in (-1, 0), got {g}")
        if any(T < 2 for T in self.sample_sizes):
            raise ConfigError("sample sizes must be at least 2")


def gamma_label(g) -> str:
    return g if isinstance(g, str) else f"{g:g}"


@dataclass
class McCell:
    """Aggregates for one (label, T, gamma, tau) cell.

    ``tau is None`` marks the path-level cell (mean of the path MSE).
    ``mc_se`` is the Monte Carlo standard error of ``mean_mse``;
    ``coverage_se`` is the binomial standard error of ``coverage``.
    """

    label: str
    T: int
    gamma: str
    tau: float | None
    mean_mse: float
    mc_se: float
    coverage: float
    coverage_se: float
    n: int
    failures: int = 0
    wall_time: float = 0.0
    selected: dict[float, int] = field(default_factory=dict)

    @property
    def key(self) -> tuple:
        return (self.label, self.T, self.gamma, self.tau)


@dataclass
class McResult:
    cells: dict[tuple, McCell] = field(default_factory=dict)
    records: dict[tuple, dict[str, np.ndarray]] = field(default_factory=dict, repr=False)

    def cell(self, T: int, gamma, tau: float | None = None, label: str = "") -> McCell:
        return self.cells[(label, T, gamma_label(gamma), tau)]

    def merge(self, other: "McResult") -> "McResult":
        out = McResult(dict(self.cells), dict(self.records))
        out.cells.update(other.cells)
        out.records.update(other.records)
        return out


def _replication(cfg: McConfig, T: int, r: int) -> dict:
    """Run one replication; returns per-gamma scores."""
    seed = substream(cfg.master_seed, T, r)
    tvp, reg, err = cfg.dgp
    data, beta = simulate_dataset(tvp, reg, err, T, seed)
    k = get_kernel(cfg.kernel)
    z = norm.ppf(1.0 - cfg.confidence_q / 2.0)
    idx = [max(int(math.floor(tau * T)), 1) - 1 for tau in cfg.eval_points]
    out = {}
    for g in cfg.gammas:
        lab = gamma_label(g)
        try:
            if g == "CV":
                gamma = cv_select_gamma(data, GammaGrid(cfg.cv_grid), m=cfg.cv_m, kernel=k).gamma_hat
            elif g == "Boot":
                bcfg = BootstrapConfig(B=cfg.boot_B, q=cfg.confidence_q, q_bar=cfg.boot_q_bar,
                                       seed=int(substream(seed, 3).generate_state(1)[0]))
                gamma = bootstrap_select_gamma(data, GammaGrid(cfg.boot_grid), bcfg, kernel=k).gamma_hat
            else:
                gamma = float(g)
            est = estimate_path(data, Bandwidth(cfg.c, gamma, T), k, cfg.confidence_q, cfg.variance)
        except EstimationError as exc:
            out[lab] = exc
            continue
        err_path = est.beta_hat[:, 0] - beta[:, 0]
        se = est.se[:, 0]
        point_err = err_path[idx]
        point_se = se[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            stud = np.where(point_se > 0, point_err / point_se, np.nan)
        cover = np.where(point_se > 0, (np.abs(point_err) <= z * point_se).astype(float), np.nan)
        out[lab] = {
            "gamma": gamma,
            "mse_path": math.fsum(err_path**2) / T,
            "err_point": point_err,
            "mse_point": point_err**2,
            "cover": cover,
            "stud": stud,
        }
    return out


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return math.nan, math.nan
    m = math.fsum(v) / n
    if n < 2:
        return m, 0.0
    var = math.fsum((v - m) ** 2) / (n - 1)
    return m, math.sqrt(var / n)


def _coverage_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return math.nan, math.nan
    p = math.fsum(v) / v.size
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / v.size)


def run_experiment(cfg: McConfig, workers: int = 1) -> McResult:
    """Run every (T, gamma) cell of ``cfg``.

    Parameters
    ----------
    cfg : McConfig
    workers : int
        Thread count for replications. Aggregation runs in replication order
        with compensated sums, so the result is identical for any value.

    Raises
    ------
    EstimationError
        When ``cfg.abort_on_failure`` is set and a replication fails.
    """
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    result = McResult()
    for T in cfg.sample_sizes:
        t0 = time.perf_counter()
        reps = range(cfg.replications)
        if workers == 1:
            outs = [_replication(cfg, T, r) for r in reps]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outs = list(pool.map(lambda r: _replication(cfg, T, r), reps))
        elapsed = time.perf_counter() - t0
        for g in cfg.gammas:
            lab = gamma_label(g)
            good = [o[lab] for o in outs if not isinstance(o[lab], Exception)]
            failures = len(outs) - len(good)
            if failures and cfg.abort_on_failure:
                first = next(o[lab] for o in outs if isinstance(o[lab], Exception))
                raise EstimationError(f"T={T}, gamma={lab}: {failures} failed replications; first: {first}")
            selected: dict[float, int] = {}
            for o in good:
                selected[o["gamma"]] = selected.get(o["gamma"], 0) + 1
            share = elapsed / len(cfg.gammas)
            if "mse_path" in cfg.metrics:
                m, se = _mean_se([o["mse_path"] for o in good])
                cov, cse = (math.nan, math.nan)
                if "coverage" in cfg.metrics and len(cfg.eval_points) == 1:
                    cov, cse = _coverage_se([o["cover"][0] for o in good])
                cell = McCell(cfg.label, T, lab, None, m, se, cov, cse, len(good), failures, share,
                              dict(sorted(selected.items())))
                result.cells[cell.key] = cell
            for j, tau in enumerate(cfg.eval_points):
                m, se = _mean_se([o["mse_point"][j] for o in good]) if "mse_pointwise" in cfg.metrics else (math.nan, math.nan)
                cov, cse = _coverage_se([o["cover"][j] for o in good]) if "coverage" in cfg.metrics else (math.nan, math.nan)
                cell = McCell(cfg.label, T, lab, tau, m, se, cov, cse, len(good), failures, share,
                              dict(sorted(selected.items())))
                result.cells[cell.key] = cell
                if cfg.keep_records:
                    result.records[cell.key] = {
                        "studentized": np.array([o["stud"][j] for o in good]),
                        "error": np.array([o["err_point"][j] for o in good]),
                        "gamma": np.array([o["gamma"] for o in good]),
                    }
    return result


def run_many(configs: Iterable[McConfig], workers: int = 1) -> McResult:
    out = McResult()
    for cfg in configs:
        out = out.merge(run_experiment(cfg, workers=workers))
    return out


# ------------------------------------------------------- local-level study


@dataclass
class LocalLevelResult:
    h: np.ndarray
    empirical: np.ndarray
    mc_se: np.ndarray
    theory: np.ndarray
    theory_exact: np.ndarray
    h_min: float
    T: int
    replications: int

    @property
    def h_argmin(self) -> float:
        return float(self.h[int(np.argmin(self.empirical))])


def run_local_level_study(T: int = 2000, replications: int = 5000, h_grid: Sequence[float] | None = None,
                   sigma_u2: float = 1.0, sigma_eps2: float = 1.0, master_seed: int = 0,
                   chunk: int = 500) -> LocalLevelResult:
    """Empirical versus theoretical MSE on the local-level model at ``t = T/2``.

    ``y_t = beta_t + e_t`` with ``beta_t = T**-0.5 * sum u_i``, ``x_t = 1`` and the
    uniform kernel, for which the estimate at ``t`` is the mean of ``y`` over
    the ``2 floor(T h) + 1`` window and is computed from prefix sums.
    Replications are processed in vectorised chunks; chunk ``j`` draws from
    substream ``(master_seed, j)``.
    """
    _check_positive(T=T, replications=replications, sigma_u2=sigma_u2, sigma_eps2=sigma_eps2)
    h = np.round(np.arange(1, 31) * 0.01, 10) if h_grid is None else np.asarray(h_grid, dtype=float)
    t = T // 2 - 1
    half = [Bandwidth.from_h(float(v), T).half_window for v in h]
    sq = np.zeros((h.size, replications))
    done = 0
    j = 0
    while done < replications:
        n = min(chunk, replications - done)
        rng = np.random.default_rng(substream(master_seed, j))
        beta = np.cumsum(rng.standard_normal((n, T)) * math.sqrt(sigma_u2), axis=1) / math.sqrt(T)
        y = beta + rng.standard_normal((n, T)) * math.sqrt(sigma_eps2)
        # with x = 1 and the uniform kernel the estimate is the window mean
        cs = np.concatenate([np.zeros((n, 1)), np.cumsum(y, axis=1)], axis=1)
        for i, H in enumerate(half):
            lo, hi = max(t - H, 0), min(t + H, T - 1)
            b = (cs[:, hi + 1] - cs[:, lo]) / (hi - lo + 1)
            sq[i, done : done + n] = (b - beta[:, t]) ** 2
        done += n
        j += 1
    emp = np.array([math.fsum(row) / replications for row in sq])
    se = sq.std(axis=1, ddof=1) / math.sqrt(replications) if replications > 1 else np.zeros(h.size)
    theory = np.array([mse_theoretical_local_level(float(v), T, sigma_u2, sigma_eps2) for v in h])
    exact = np.array([mse_exact_local_level(float(v), T, sigma_u2, sigma_eps2) for v in h])
    h_min, _ = mse_minimizing_bandwidth(T, sigma_u2, sigma_eps2)
    return LocalLevelResult(h, emp, se, theory, exact, h_min, T, replications)


# -------------------------------------------------------------------- presets

TABLE1_GAMMAS = (-0.2, -0.33, -0.5, -0.55, -0.6, -0.7, "CV", "Boot")
TABLE5_GAMMAS = (-0.2, -0.33, -0.5, "CV", "Boot")
TABLE3_TAUS = (0.4, 0.45, 0.5, 0.55, 0.6)
TABLE3_ALPHAS = (0.1, 0.2, 0.3, 0.4)


def rw_design(errors: ErrorSpec | None = None, driver: str = "gaussian") -> tuple:
    return (RescaledRandomWalk(driver=driver), AR1(), errors or IID())


def break_design(alpha: float, errors: ErrorSpec | None = None) -> tuple:
    tvp = Mixture((RescaledRandomWalk(), StructuralBreak(fractions=(0.5,), levels=(0.0, 2.0), alpha=alpha)))
    return (tvp, AR1(), errors or IID())


def smooth_jump_design(errors: ErrorSpec | None = None) -> tuple:
    tvp = Mixture((Smooth("identity"), StructuralBreak(fractions=(0.5,), levels=(0.0, 1.5), alpha=0.4)))
    return (tvp, AR1(), errors or IID())


def preset(name: str, replications: int | None = None, master_seed: int = 0) -> list[McConfig]:
    """Named experiment designs.

    ``table1``/``table1-desk`` and ``table2`` are the random-walk designs with
    i.i.d. and GARCH errors; ``table3``/``table4`` the neglected-break designs;
    ``table5`` the smooth path with a jump. The desk variant uses 500
    replications instead of 2000.
    """
    reps = lambda default: replications if replications is not None else default  # noqa: E731
    if name in ("table1", "table1-desk", "table2"):
        err = GARCH() if name == "table2" else IID()
        n = reps(500 if name == "table1-desk" else 2000)
        return [McConfig(rw_design(err), gammas=TABLE1_GAMMAS, replications=n, eval_points=(0.5,),
                         metrics=frozenset({"mse_path", "coverage"}), master_seed=master_seed,
                         variance="global", label="")]
    if name in ("table3", "table4"):
        err = GARCH() if name == "table4" else IID()
        return [
            McConfig(break_design(a, err), sample_sizes=(T,), gammas=(-0.5,), replications=reps(2000),
                     eval_points=TABLE3_TAUS, metrics=frozenset({"mse_pointwise", "coverage"}),
                     master_seed=master_seed, variance="local", label=f"alpha={a:g}")
            for T in (100, 200, 400, 800)
            for a in TABLE3_ALPHAS
        ]
    if name in ("table5", "table5-garch"):
        err = GARCH() if name == "table5-garch" else IID()
        return [McConfig(smooth_jump_design(err), gammas=TABLE5_GAMMAS, replications=reps(2000),
                         eval_points=(0.5,), metrics=frozenset({"mse_path", "coverage"}),
                         master_seed=master_seed, variance="local", label="")]
    raise ConfigError(f"unknown preset {name!r}")


PRESETS = ("table1", "table1-desk", "table2", "table3", "table4", "table5", "table5-garch", "appendixB")


# ------------------------------------------------------------------ emission


def _fmt(v: float) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(v, ".17g")


def emit_table(result: McResult, layout: str = "Custom", path: str | Path | None = None,
               timings: bool = True) -> list[list[str]]:
    """Render ``result`` as rows for side-by-side comparison with published tables.

    Layouts
    -------
    ``Table1``/``Table5``
        Rows are gamma labels, columns ``MSE_T<T>`` then ``CR_T<T>`` (path MSE
        and coverage at the single evaluation point).
    ``Table3``
        Rows are (label, T), columns ``MSE_tau<tau>`` then ``CR_tau<tau>``.
    ``Custom``
        One row per cell with every aggregate; see :func:`read_table_csv`.

    When ``path`` is given the rows are also written as CSV. ``timings=False``
    blanks the ``wall_time`` column so that repeated runs give identical files.
    """
    cells = list(result.cells.values())
    if layout in ("Table1", "Table5"):
        order = TABLE1_GAMMAS if layout == "Table1" else TABLE5_GAMMAS
        Ts = sorted({c.T for c in cells}) or [100, 200, 400, 800]
        rows = [["gamma"] + [f"MSE_T{T}" for T in Ts] + [f"CR_T{T}" for T in Ts]]
        path_cells = {(c.T, c.gamma): c for c in cells if c.tau is None}
        present = {c.gamma for c in path_cells.values()}
        labels = [gamma_label(g) for g in order if gamma_label(g) in present]
        labels += sorted(present - set(labels))
        for g in labels:
            ms = [_fmt(path_cells[(T, g)].mean_mse) if (T, g) in path_cells else "" for T in Ts]
            cr = [_fmt(path_cells[(T, g)].coverage) if (T, g) in path_cells else "" for T in Ts]
            rows.append([g] + ms + cr)
    elif layout == "Table3":
        taus = sorted({c.tau for c in cells if c.tau is not None}) or list(TABLE3_TAUS)
        rows = [["label", "T"] + [f"MSE_tau{t:g}" for t in taus] + [f"CR_tau{t:g}" for t in taus]]
        pts = {(c.label, c.T, c.tau): c for c in cells if c.tau is not None}
        for lab, T in sorted({(c.label, c.T) for c in cells if c.tau is not None}, key=lambda x: (x[1], x[0])):
            ms = [_fmt(pts[(lab, T, t)].mean_mse) if (lab, T, t) in pts else "" for t in taus]
            cr = [_fmt(pts[(lab, T, t)].coverage) if (lab, T, t) in pts else "" for t in taus]
            rows.append([lab, str(T)] + ms + cr)
    elif layout == "Custom":
        rows = [list(CUSTOM_COLUMNS)]
        for c in cells:
            rows.append([c.label, str(c.T), c.gamma, "" if c.tau is None else _fmt(c.tau), _fmt(c.mean_mse),
                         _fmt(c.mc_se), _fmt(c.coverage), _fmt(c.coverage_se), str(c.n), str(c.failures),
                         _fmt(c.wall_time) if timings else ""])
    else:
        raise ConfigError(f"unknown layout {layout!r}")
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    return rows


CUSTOM_COLUMNS = ("label", "T", "gamma", "tau", "mean_mse", "mc_se", "coverage", "coverage_se", "n",
                  "failures", "wall_time")


def read_table_csv(source: str | Path | io.TextIOBase) -> McResult:
    """Parse a ``Custom`` layout CSV back into an :class:`McResult`."""
    fh = open(source, newline="", encoding="utf-8") if isinstance(source, (str, Path)) else source
    try:
        reader = csv.DictReader(fh)
        out = McResult()
        for row in reader:
            num = lambda s: math.nan if s == "" else float(s)  # noqa: E731
            cell = McCell(
                label=row["label"], T=int(row["T"]), gamma=row["gamma"],
                tau=None if row["tau"] == "" else float(row["tau"]),
                mean_mse=num(row["mean_mse"]), mc_se=num(row["mc_se"]), coverage=num(row["coverage"]),
                coverage_se=num(row["coverage_se"]), n=int(row["n"]), failures=int(row["failures"]),
                wall_time=num(row["wall_time"]),
            )
            out.cells[cell.key] = cell
        return out
    finally:
        if isinstance(source, (str, Path)):
            fh.close()


def local_level_rows(res: LocalLevelResult) -> list[list[str]]:
    rows = [["h", "empirical_mse", "mc_se", "theory_mse", "exact_mse", "h_min"]]
    for i in range(res.h.size):
        rows.append([_fmt(float(res.h[i])), _fmt(float(res.empirical[i])), _fmt(float(res.mc_se[i])),
                     _fmt(float(res.theory[i])), _fmt(float(res.theory_exact[i])), _fmt(res.h_min)])
    return rows
