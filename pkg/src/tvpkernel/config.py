"""Run configuration: YAML files, environment overrides and DGP spec parsing.

A configuration file is one YAML mapping and every key is optional. The
environment variables ``TVPK_SEED``, ``TVPK_OUTPUT_DIR`` and ``TVPK_INPUT``
override the file, and command-line flags override both.

.. code-block:: yaml

    seed: 7
    output_dir: out
    input:
      path: vmg.csv
      response: y
      regressors: [const, mkt]
      intercept: false        # true injects a constant column named const
      index_column: date
    estimation:
      kernel: epanechnikov
      q: 0.05                 # bands at level 1 - q
    bandwidth:
      mode: bootstrap         # fixed | cv | bootstrap
      gamma: -0.5             # used by mode: fixed
      c: 1.0                  # used unless select_c is true
      select_c: true          # choose c by leave-one-out CV after gamma
      c_grid: {lower: 0.5, upper: 1.5, step: 0.05}   # or an explicit list
      grid: [-0.5, -0.4, -0.33, -0.2]   # bootstrap candidates
      cv_grid: {lower: -0.5, upper: -0.2, step: 0.01}
      m: [1]                  # leave-(2m+1)-out block sizes for CV
      B: 200
      q_bar: 0.10
      coverage: mean          # mean | joint, how p intervals combine
    simulate:
      T: 400
      tvp: [{type: random_walk}]
      regressors: [{type: ar1, phi: 0.5}]
      errors: {type: garch}
    mc:
      preset: table1-desk
      replications: 500
      workers: 1
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import dgp
from .bandwidth import DEFAULT_C_GRID, DEFAULT_GAMMAS
from .errors import ConfigError, InvalidSpec

ENV_SEED = "TVPK_SEED"
ENV_OUTPUT_DIR = "TVPK_OUTPUT_DIR"
ENV_INPUT = "TVPK_INPUT"

MODES = ("fixed", "cv", "bootstrap")


def load_yaml(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {p}: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {p} must be a mapping at the top level")
    return doc


def _c_grid(value) -> tuple[float, ...]:
    if value is None:
        return DEFAULT_C_GRID
    if isinstance(value, Mapping):
        lo, step, hi = float(value["lower"]), float(value["step"]), float(value["upper"])
    else:
        return tuple(float(v) for v in value)
    n = int(round((hi - lo) / step))
    return tuple(round(lo + k * step, 10) for k in range(n + 1))


@dataclass
class RunConfig:
    """Settings for ``estimate`` and ``select-bandwidth``."""

    input_path: str | None = None
    response: str = "y"
    regressors: list[str] = field(default_factory=lambda: ["x"])
    intercept: bool = False
    index_column: str | None = None
    kernel: str = "epanechnikov"
    q: float = 0.05
    mode: str = "fixed"
    gamma: float = -0.5
    c: float = 1.0
    select_c: bool = False
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    grid: tuple[float, ...] = DEFAULT_GAMMAS
    cv_lower: float = -0.5
    cv_upper: float = -0.2
    cv_step: float = 0.01
    m: tuple[int, ...] = (1,)
    B: int = 200
    q_bar: float = 0.10
    coverage: str = "mean"
    output_dir: str = "."
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"bandwidth mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.q < 1 or not 0 < self.q_bar < 1:
            raise ConfigError("q and q_bar must lie in (0, 1)")
        if self.c <= 0:
            raise ConfigError("c must be positive")
        if not self.regressors and not self.intercept:
            raise ConfigError("at least one regressor (or the intercept) is required")
        if any(int(v) < 0 for v in self.m):
            raise ConfigError("m must be nonnegative")
        if self.B < 50:
            raise ConfigError("B must be at least 50")
        if self.coverage not in ("mean", "joint"):
            raise ConfigError(f"coverage must be 'mean' or 'joint', got {self.coverage!r}")
        return self

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "RunConfig":
        cfg = cls()
        inp = doc.get("input", {}) or {}
        est = doc.get("estimation", {}) or {}
        bw = doc.get("bandwidth", {}) or {}
        known = {"seed", "output_dir", "input", "estimation", "bandwidth", "simulate", "mc", "portfolios", "plotdata"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            if "seed" in doc:
                cfg.seed = int(doc["seed"])
            if "output_dir" in doc:
                cfg.output_dir = str(doc["output_dir"])
            if "path" in inp:
                cfg.input_path = str(inp["path"])
            cfg.response = str(inp.get("response", cfg.response))
            if "regressors" in inp:
                regs = inp["regressors"]
                cfg.regressors = [regs] if isinstance(regs, str) else [str(r) for r in regs]
            cfg.intercept = bool(inp.get("intercept", cfg.intercept))
            cfg.index_column = inp.get("index_column", cfg.index_column)
            cfg.kernel = str(est.get("kernel", cfg.kernel))
            cfg.q = float(est.get("q", cfg.q))
            cfg.mode = str(bw.get("mode", cfg.mode))
            cfg.gamma = float(bw.get("gamma", cfg.gamma))
            cfg.c = float(bw.get("c", cfg.c))
            cfg.select_c = bool(bw.get("select_c", cfg.select_c))
            cfg.c_grid = _c_grid(bw.get("c_grid"))
            if "grid" in bw:
                cfg.grid = tuple(float(g) for g in bw["grid"])
            cvg = bw.get("cv_grid", {}) or {}
            cfg.cv_lower = float(cvg.get("lower", cfg.cv_lower))
            cfg.cv_upper = float(cvg.get("upper", cfg.cv_upper))
            cfg.cv_step = float(cvg.get("step", cfg.cv_step))
            if "m" in bw:
                mv = bw["m"]
                cfg.m = tuple(int(v) for v in (mv if isinstance(mv, (list, tuple)) else [mv]))
            cfg.B = int(bw.get("B", cfg.B))
            cfg.q_bar = float(bw.get("q_bar", cfg.q_bar))
            cfg.coverage = str(bw.get("coverage", cfg.coverage))
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None
        return cfg

    def update(self, **overrides) -> "RunConfig":
        names = {f.name for f in fields(self)}
        for k, v in overrides.items():
            if v is None:
                continue
            if k not in names:
                raise ConfigError(f"unknown setting {k!r}")
            setattr(self, k, v)
        return self


def apply_env(cfg: RunConfig, environ: Mapping[str, str] | None = None) -> RunConfig:
    env = os.environ if environ is None else environ
    if env.get(ENV_SEED):
        try:
            cfg.seed = int(env[ENV_SEED])
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env[ENV_SEED]!r}") from None
    if env.get(ENV_OUTPUT_DIR):
        cfg.output_dir = env[ENV_OUTPUT_DIR]
    if env.get(ENV_INPUT):
        cfg.input_path = env[ENV_INPUT]
    return cfg


def env_seed(default: int, environ: Mapping[str, str] | None = None) -> int:
    env = os.environ if environ is None else environ
    if env.get(ENV_SEED):
        try:
            return int(env[ENV_SEED])
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env[ENV_SEED]!r}") from None
    return default


def env_output_dir(default: str, environ: Mapping[str, str] | None = None) -> str:
    env = os.environ if environ is None else environ
    return env.get(ENV_OUTPUT_DIR) or default


# ------------------------------------------------------------- DGP spec parsing

_TVP_TYPES = {
    "smooth": dgp.Smooth,
    "random_walk": dgp.RescaledRandomWalk,
    "break": dgp.StructuralBreak,
    "threshold": dgp.Threshold,
}
_REG_TYPES = {"ar1": dgp.AR1, "constant": dgp.Constant}
_ERR_TYPES = {"iid": dgp.IID, "garch": dgp.GARCH}


def _build(table: dict, doc: Mapping[str, Any], what: str):
    if not isinstance(doc, Mapping) or "type" not in doc:
        raise ConfigError(f"{what} spec needs a 'type' key, got {doc!r}")
    kind = str(doc["type"]).lower()
    if kind not in table:
        raise ConfigError(f"unknown {what} type {kind!r}; choose from {sorted(table)}")
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in doc.items() if k != "type"}
    try:
        spec = table[kind](**kwargs)
        spec.validate()
    except TypeError as exc:
        raise ConfigError(f"bad {what} parameters: {exc}") from None
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from None
    return spec


def tvp_from_dict(doc: Mapping[str, Any]):
    if isinstance(doc, Mapping) and str(doc.get("type", "")).lower() == "mixture":
        comps = tuple(tvp_from_dict(c) for c in doc.get("components", []))
        spec = dgp.Mixture(comps)
        try:
            spec.validate()
        except InvalidSpec as exc:
            raise ConfigError(str(exc)) from None
        return spec
    return _build(_TVP_TYPES, doc, "tvp")


def regressor_from_dict(doc: Mapping[str, Any]):
    return _build(_REG_TYPES, doc, "regressor")


def errors_from_dict(doc: Mapping[str, Any]):
    return _build(_ERR_TYPES, doc, "errors")


def _listify(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


def simulation_from_mapping(doc: Mapping[str, Any]) -> tuple[tuple, tuple, Any, int]:
    """Parse a ``simulate`` section into ``(tvps, regressors, errors, T)``."""
    if not doc:
        raise ConfigError("missing 'simulate' section")
    try:
        T = int(doc.get("T", 400))
    except (TypeError, ValueError):
        raise ConfigError("simulate.T must be an integer") from None
    tvps = tuple(tvp_from_dict(d) for d in _listify(doc.get("tvp", {"type": "random_walk"})))
    regs = tuple(regressor_from_dict(d) for d in _listify(doc.get("regressors", {"type": "ar1"})))
    if len(tvps) != len(regs):
        raise ConfigError("simulate needs one tvp spec per regressor")
    err = errors_from_dict(doc.get("errors", {"type": "iid"}))
    return tvps, regs, err, T
