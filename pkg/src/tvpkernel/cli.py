"""Command-line front end.

Subcommands: ``estimate``, ``select-bandwidth``, ``build-portfolios``,
``simulate``, ``mc`` and ``plotdata``. Failures print one JSON line on stderr
and exit with 3 (unparseable input), 4 (bad configuration) or 5 (numerical
failure).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__
from .bandwidth import (
    BootstrapConfig,
    GammaGrid,
    SelectionResult,
    bootstrap_select_gamma,
    cv_select_gamma,
    format_cr_table,
    select_scale_c,
)
from .config import (
    RunConfig,
    apply_env,
    env_output_dir,
    env_seed,
    load_yaml,
    simulation_from_mapping,
)
from .dataio import (
    PortfolioSpec,
    bundled_fixture,
    load_series,
    read_csv_table,
    write_csv,
    write_portfolio_dataset,
)
from .dgp import simulate_dataset
from .errors import ConfigError, TvpError
from .estimator import Bandwidth, TimeSeriesData, TvpEstimate, estimate_path
from .montecarlo import (
    PRESETS,
    local_level_rows,
    emit_table,
    preset,
    run_local_level_study,
    run_many,
)

# ------------------------------------------------------------------- pipeline


@dataclass
class Selection:
    gamma: float
    c: float
    bootstrap: SelectionResult | None = None
    cv: dict[int, SelectionResult] = field(default_factory=dict)
    c_curve: dict[float, float] = field(default_factory=dict)


def select(data: TimeSeriesData, cfg: RunConfig, all_m: bool = False) -> Selection:
    """Apply the configured bandwidth mode and optional scale search."""
    sel = Selection(gamma=cfg.gamma, c=cfg.c)
    ms = cfg.m if all_m or cfg.mode == "cv" else ()
    if ms:
        grid = GammaGrid.from_range(cfg.cv_lower, cfg.cv_upper, cfg.cv_step)
        for m in ms:
            sel.cv[int(m)] = cv_select_gamma(data, grid, m=int(m), kernel=cfg.kernel)
    if cfg.mode == "cv":
        sel.gamma = sel.cv[int(cfg.m[0])].gamma_hat
    elif cfg.mode == "bootstrap":
        bcfg = BootstrapConfig(B=cfg.B, q=cfg.q, q_bar=cfg.q_bar, seed=cfg.seed, coverage=cfg.coverage)
        sel.bootstrap = bootstrap_select_gamma(data, cfg.grid, bcfg, kernel=cfg.kernel)
        sel.gamma = sel.bootstrap.gamma_hat
    if cfg.select_c:
        sel.c, sel.c_curve = select_scale_c(data, sel.gamma, cfg.c_grid, kernel=cfg.kernel, return_curve=True)
    return sel


def _selection_files(out: Path, sel: Selection) -> list[Path]:
    paths = []
    if sel.cv:
        rows = []
        for m, res in sel.cv.items():
            for g, v in res.cv_curve.items():
                rows.append((m, g, v, g == res.gamma_hat))
        paths.append(write_csv(out / "cv_curve.csv", ["m", "gamma", "cv", "is_min"], rows))
    if sel.bootstrap is not None:
        res = sel.bootstrap
        rows = [(g1, g2, v, g1 in res.upsilon) for (g1, g2), v in sorted(res.cr_matrix.items())]
        paths.append(write_csv(out / "cr_matrix.csv", ["gamma1", "gamma2", "cr", "gamma1_in_upsilon"], rows))
    if sel.c_curve:
        paths.append(write_csv(out / "c_curve.csv", ["c", "cv", "is_min"],
                               [(c, v, c == sel.c) for c, v in sel.c_curve.items()]))
    summary = [("gamma_hat", sel.gamma), ("c_hat", sel.c)]
    if sel.bootstrap is not None:
        summary.append(("upsilon", " ".join(f"{g:g}" for g in sel.bootstrap.upsilon)))
        summary.append(("rejected", " ".join(f"{g:g}" for g in sel.bootstrap.rejected())))
    paths.append(write_csv(out / "selection.csv", ["key", "value"], summary))
    return paths


def _report(cfg: RunConfig, data: TimeSeriesData, sel: Selection, est: TvpEstimate | None) -> str:
    lines = [
        f"tvpkernel {__version__}",
        f"input: {cfg.input_path}",
        f"T = {data.T}, regressors = {', '.join(data.names)}",
        f"kernel: {cfg.kernel}",
        f"bandwidth mode: {cfg.mode}",
        f"selected gamma: {sel.gamma:g}",
        f"selected c: {sel.c:g}",
    ]
    if est is not None:
        bw = est.bandwidth
        lines += [
            f"h = {bw.h:.6g}, floor(Th) = {bw.half_window}",
            f"SSR: {est.ssr:.10g}",
            f"boundary points flagged: {int(est.boundary_flag.sum())}",
            f"confidence level: {1 - cfg.q:g}",
        ]
    for m, res in sel.cv.items():
        lines.append(f"CV (leave-{2 * m + 1}-out) minimiser: gamma = {res.gamma_hat:g}")
    if sel.bootstrap is not None:
        res = sel.bootstrap
        lines += [
            f"bootstrap: B = {cfg.B}, q = {cfg.q:g}, q_bar = {cfg.q_bar:g}, seed = {cfg.seed}, "
            f"coverage = {cfg.coverage}",
            "mean coverage CR(gamma1, gamma2):",
            format_cr_table(res),
            "admissible gamma1: " + (", ".join(f"{g:g}" for g in res.upsilon) or "none"),
            "rejected gamma1: " + (", ".join(f"{g:g}" for g in res.rejected()) or "none"),
        ]
    return "\n".join(lines) + "\n"


def run_estimate(cfg: RunConfig) -> dict[str, Path]:
    cfg.validate()
    if cfg.input_path is None:
        raise ConfigError("no input file given (--input, config input.path or TVPK_INPUT)")
    data, index = load_series(cfg.input_path, cfg.response, cfg.regressors, cfg.intercept, cfg.index_column)
    sel = select(data, cfg)
    est = estimate_path(data, Bandwidth(sel.c, sel.gamma, data.T), cfg.kernel, cfg.q, "local")
    out = Path(cfg.output_dir)
    names = list(data.names)
    t = np.arange(1, data.T + 1)
    se = est.se
    est_rows = ([t[i], index[i], *est.beta_hat[i], *se[i], est.boundary_flag[i]] for i in range(data.T))
    files = {
        "estimates": write_csv(out / "estimates.csv",
                               ["t", "index", *[f"beta_{n}" for n in names], *[f"se_{n}" for n in names], "boundary"],
                               est_rows),
        "bands": write_csv(out / "bands.csv",
                           ["t", "index", *[f"lower_{n}" for n in names], *[f"upper_{n}" for n in names], "boundary"],
                           ([t[i], index[i], *est.ci_lower[i], *est.ci_upper[i], est.boundary_flag[i]]
                            for i in range(data.T))),
    }
    for p in _selection_files(out, sel):
        files[p.stem] = p
    report = out / "report.txt"
    report.write_text(_report(cfg, data, sel, est), encoding="utf-8")
    files["report"] = report
    return files


def run_select(cfg: RunConfig) -> dict[str, Path]:
    cfg.validate()
    if cfg.input_path is None:
        raise ConfigError("no input file given (--input, config input.path or TVPK_INPUT)")
    data, _ = load_series(cfg.input_path, cfg.response, cfg.regressors, cfg.intercept, cfg.index_column)
    sel = select(data, cfg, all_m=True)
    out = Path(cfg.output_dir)
    files = {p.stem: p for p in _selection_files(out, sel)}
    report = out / "selection_report.txt"
    report.write_text(_report(cfg, data, sel, None), encoding="utf-8")
    files["report"] = report
    return files


# ------------------------------------------------------------------- plotdata

PLOT_HEADER = ["series", "x", "value", "flag"]


def plot_rows(directory: str | Path) -> list[tuple]:
    """Tidy rows from the files written by ``estimate``/``select-bandwidth``.

    Coefficient paths and bands become series ``beta_<name>``,
    ``lower_<name>`` and ``upper_<name>`` indexed by ``t`` with the boundary
    flag; CV curves become ``cv_m<m>`` indexed by gamma with the minimum
    flagged; coverage rows become ``cr_gamma1=<g1>`` indexed by gamma2 with
    membership of ``g1`` in the admissible set as flag.
    """
    d = Path(directory)
    if not d.is_dir():
        raise ConfigError(f"input directory not found: {d}")
    rows: list[tuple] = []
    for fname in ("estimates.csv", "bands.csv"):
        p = d / fname
        if not p.exists():
            continue
        header, body = read_csv_table(p)
        series_cols = [h for h in header if h.split("_", 1)[0] in ("beta", "lower", "upper")]
        ti, bi = header.index("t"), header.index("boundary")
        for col in series_cols:
            k = header.index(col)
            rows += [(col, r[ti], r[k], r[bi]) for r in body]
    p = d / "cv_curve.csv"
    if p.exists():
        header, body = read_csv_table(p)
        rows += [(f"cv_m{r[0]}", r[1], r[2], r[3]) for r in body]
    p = d / "cr_matrix.csv"
    if p.exists():
        header, body = read_csv_table(p)
        rows += [(f"cr_gamma1={r[0]}", r[1], r[2], r[3]) for r in body]
    return rows


def run_plotdata(directory: str | Path, output: str | Path) -> Path:
    return write_csv(output, PLOT_HEADER, plot_rows(directory))


# ------------------------------------------------------------ simulate and mc


def run_simulate(doc: dict, seed: int, output: str | Path) -> Path:
    tvps, regs, err, T = simulation_from_mapping(doc)
    data, beta = simulate_dataset(tvps, regs, err, T, seed)
    p = data.p
    header = ["t", "y", *[f"x{j + 1}" for j in range(p)], *[f"beta{j + 1}" for j in range(p)]]
    rows = ([t + 1, data.y[t], *data.X[t], *beta[t]] for t in range(T))
    return write_csv(output, header, rows)


def _manifest(name: str, configs, seed: int, extra: dict) -> dict:
    blob = json.dumps([repr(c) for c in configs], sort_keys=True).encode()
    return {
        "preset": name,
        "master_seed": seed,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "versions": {
            "tvpkernel": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        **extra,
    }


def run_mc(name: str, seed: int, output_dir: str | Path, replications: int | None = None,
           workers: int = 1) -> dict[str, Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if name == "appendixB":
        res = run_local_level_study(replications=replications or 5000, master_seed=seed)
        rows = local_level_rows(res)
        table = write_csv(out / "appendixB.csv", rows[0], rows[1:])
        man = _manifest(name, [("appendixB", res.T, res.replications)], seed,
                        {"h_argmin": res.h_argmin, "h_min": res.h_min})
    else:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
        configs = preset(name, replications=replications, master_seed=seed)
        result = run_many(configs, workers=workers)
        layout = {"table1": "Table1", "table1-desk": "Table1", "table2": "Table1", "table3": "Table3",
                  "table4": "Table3", "table5": "Table5", "table5-garch": "Table5"}[name]
        table = out / f"{name}.csv"
        emit_table(result, layout, table)
        emit_table(result, "Custom", out / f"{name}_cells.csv", timings=False)
        man = _manifest(name, configs, seed, {"replications": configs[0].replications,
                                              "failures": sum(c.failures for c in result.cells.values())})
    manifest = out / f"{name}_manifest.json"
    manifest.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"table": table, "manifest": manifest}


# ---------------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--output-dir", help="directory for output files")
    p.add_argument("--seed", type=int, help="random seed")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", dest="input_path", help="CSV file with a header row")
    p.add_argument("--response", help="response column")
    p.add_argument("--regressors", nargs="+", help="regressor columns")
    p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=None,
                   help="prepend a constant regressor named const")
    p.add_argument("--index-column", help="column copied to the outputs as row label")
    p.add_argument("--kernel", choices=["epanechnikov", "uniform"])
    p.add_argument("--q", type=float, help="bands and bootstrap intervals at level 1 - q")
    p.add_argument("--mode", choices=["fixed", "cv", "bootstrap"], help="bandwidth mode")
    p.add_argument("--gamma", type=float, help="exponent for --mode fixed")
    p.add_argument("--c", type=float, help="bandwidth scale")
    p.add_argument("--select-c", action=argparse.BooleanOptionalAction, default=None,
                   help="choose c by leave-one-out CV")
    p.add_argument("--grid", nargs="+", type=float, help="bootstrap candidate exponents")
    p.add_argument("--cv-lower", type=float)
    p.add_argument("--cv-upper", type=float)
    p.add_argument("--cv-step", type=float)
    p.add_argument("--m", nargs="+", type=int, help="leave-(2m+1)-out block sizes")
    p.add_argument("--B", type=int, help="bootstrap draws")
    p.add_argument("--q-bar", type=float, help="coverage tolerance")
    p.add_argument("--coverage", choices=["mean", "joint"], help="how coefficient intervals combine")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvpkernel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the coefficient path with bands")
    _add_common(p)
    _add_run(p)

    p = sub.add_parser("select-bandwidth", help="run CV and/or bootstrap bandwidth selection")
    _add_common(p)
    _add_run(p)

    p = sub.add_parser("build-portfolios", help="build G, V or V-G from a 25-portfolio file")
    _add_common(p)
    p.add_argument("--source", help="25-portfolio CSV (default: bundled synthetic fixture)")
    p.add_argument("--target", choices=["G", "V", "VmG"])
    p.add_argument("--start", help="first month, YYYY-MM")
    p.add_argument("--end", help="last month, YYYY-MM")
    p.add_argument("--output", help="output CSV (default: <output-dir>/<target>.csv)")

    p = sub.add_parser("simulate", help="simulate one dataset from the config's simulate section")
    _add_common(p)
    p.add_argument("--T", type=int, help="sample size")
    p.add_argument("--output", help="output CSV (default: <output-dir>/simulated.csv)")

    p = sub.add_parser("mc", help="run a Monte Carlo preset")
    _add_common(p)
    p.add_argument("--preset", choices=list(PRESETS))
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("plotdata", help="flatten outputs of estimate/select-bandwidth to tidy rows")
    _add_common(p)
    p.add_argument("--input-dir", required=True, help="directory holding estimates.csv etc.")
    p.add_argument("--output", help="output CSV (default: <input-dir>/plotdata.csv)")
    return parser


_RUN_KEYS = ("input_path", "response", "regressors", "intercept", "index_column", "kernel", "q", "mode",
             "gamma", "c", "select_c", "grid", "cv_lower", "cv_upper", "cv_step", "m", "B", "q_bar",
             "coverage")


def _run_config(args, doc: dict) -> RunConfig:
    cfg = apply_env(RunConfig.from_mapping(doc))
    overrides = {k: getattr(args, k) for k in _RUN_KEYS}
    for k in ("grid", "m"):
        if overrides[k] is not None:
            overrides[k] = tuple(overrides[k])
    overrides["output_dir"] = args.output_dir
    overrides["seed"] = args.seed
    return cfg.update(**overrides)


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return sec


def dispatch(args) -> dict:
    doc = load_yaml(args.config)
    seed = args.seed if args.seed is not None else env_seed(int(doc.get("seed", 0)))
    out_dir = args.output_dir or env_output_dir(str(doc.get("output_dir", ".")))
    if args.command == "estimate":
        return run_estimate(_run_config(args, doc))
    if args.command == "select-bandwidth":
        return run_select(_run_config(args, doc))
    if args.command == "build-portfolios":
        sec = _section(doc, "portfolios")
        spec = PortfolioSpec(
            source=args.source or sec.get("source") or bundled_fixture(),
            target=args.target or sec.get("target", "VmG"),
            start=str(args.start or sec.get("start", "1952-01")),
            end=str(args.end or sec.get("end", "2019-12")),
            market_column=sec.get("market_column", "Mkt-RF"),
            rf_column=sec.get("rf_column", "RF"),
        )
        output = args.output or Path(out_dir) / f"{spec.target}.csv"
        return {"dataset": write_portfolio_dataset(spec, output)}
    if args.command == "simulate":
        sec = dict(_section(doc, "simulate"))
        if args.T is not None:
            sec["T"] = args.T
        sec.setdefault("T", 400)
        output = args.output or Path(out_dir) / "simulated.csv"
        return {"dataset": run_simulate(sec, seed, output)}
    if args.command == "mc":
        sec = _section(doc, "mc")
        name = args.preset or sec.get("preset")
        if not name:
            raise ConfigError("mc needs --preset or mc.preset in the config")
        reps = args.replications if args.replications is not None else sec.get("replications")
        workers = args.workers if args.workers is not None else int(sec.get("workers", 1))
        return run_mc(name, seed, out_dir, None if reps is None else int(reps), workers)
    if args.command == "plotdata":
        output = args.output or Path(args.input_dir) / "plotdata.csv"
        return {"plotdata": run_plotdata(args.input_dir, output)}
    raise ConfigError(f"unknown command {args.command!r}")


def _error_line(exc: BaseException, code: int) -> str:
    payload = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    for attr in ("line", "column", "t", "gamma"):
        v = getattr(exc, attr, None)
        if v is not None and not (isinstance(v, float) and math.isnan(v)):
            payload[attr] = v
    return json.dumps(payload, sort_keys=True)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        files = dispatch(args)
    except TvpError as exc:
        print(_error_line(exc, exc.exit_code), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(_error_line(exc, 4), file=sys.stderr)
        return 4
    for name, path in files.items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
