import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvpkernel.cli import main, plot_rows
from tvpkernel.config import RunConfig, apply_env, env_seed, simulation_from_mapping
from tvpkernel.dataio import (
    PORTFOLIO_COLUMNS,
    PortfolioSpec,
    build_portfolio_dataset,
    bundled_fixture,
    canonical_portfolio_name,
    fmt,
    load_series,
    parse_month,
    read_csv_table,
    read_portfolios,
    write_csv,
    write_synthetic_portfolios,
)
from tvpkernel.errors import ConfigError, DateRangeError, LayoutError, ParseError
from tvpkernel.estimator import Bandwidth, TimeSeriesData, estimate_path, ols


def read_rows(path):
    header, rows = read_csv_table(path)
    return header, rows


# --------------------------------------------------------------- CSV format


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(v):
    assert float(fmt(v)) == v


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((20, 3)) * 10.0 ** rng.integers(-8, 8, (20, 3))
    p = write_csv(tmp_path / "x.csv", ["a", "b", "c"], vals)
    header, rows = read_csv_table(p)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(np.array(rows, dtype=float), vals)
    assert "," not in fmt(1234567.5) and fmt(True) == "1"


def test_ragged_csv_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,x\n1,2\n3\n")
    with pytest.raises(ParseError) as exc:
        read_csv_table(p)
    assert exc.value.line == 3


def test_non_numeric_cell_reports_position(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,x\n1,2\n3,abc\n")
    with pytest.raises(ParseError) as exc:
        load_series(p, "y", ["x"])
    assert exc.value.line == 3 and exc.value.column == "x"


def test_load_series_intercept_and_index(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("date,y,x\n2001,1.0,2.0\n2002,2.0,3.0\n2003,3.0,5.0\n2004,1.5,0.5\n")
    data, index = load_series(p, "y", ["x"], intercept=True, index_column="date")
    assert data.names == ("const", "x") and index[0] == "2001"
    np.testing.assert_array_equal(data.X[:, 0], 1.0)
    with pytest.raises(ConfigError):
        load_series(p, "y", ["z"])
    with pytest.raises(ConfigError):
        load_series(tmp_path / "missing.csv", "y", ["x"])


# --------------------------------------------------------------- portfolios


def test_default_range_has_816_months():
    dates, y, mkt = build_portfolio_dataset(PortfolioSpec(bundled_fixture()))
    assert len(dates) == 816 and dates[0] == "195201" and dates[-1] == "201912"


def test_value_minus_growth_identity():
    src = bundled_fixture()
    g = build_portfolio_dataset(PortfolioSpec(src, "G"))[1]
    v = build_portfolio_dataset(PortfolioSpec(src, "V"))[1]
    vmg = build_portfolio_dataset(PortfolioSpec(src, "VmG"))[1]
    assert np.max(np.abs(vmg + g - v)) <= 1e-10


def test_growth_is_low_bm_average():
    pd_ = read_portfolios(PortfolioSpec(bundled_fixture(), start="1960-01", end="1960-12"))
    header, rows = read_csv_table(bundled_fixture())
    row = next(r for r in rows if r[0] == "196003")
    low = [float(row[header.index(f"ME{i}BM1")]) for i in range(1, 6)]
    rf = float(row[header.index("RF")])
    assert pd_.characteristic("G")[2] == pytest.approx(np.mean(low) - rf, abs=1e-12)


def test_aliases():
    assert canonical_portfolio_name("SMALL LoBM") == "ME1BM1"
    assert canonical_portfolio_name("BIG HiBM") == "ME5BM5"
    assert canonical_portfolio_name("ME2 BM3") == "ME2BM3"
    assert canonical_portfolio_name("me4_bm2") == "ME4BM2"
    assert canonical_portfolio_name("Mkt-RF") is None


def test_french_style_headers_accepted(tmp_path):
    src = tmp_path / "ff.csv"
    write_synthetic_portfolios(src, start="2000-01", end="2000-12")
    text = src.read_text().splitlines()
    names = {"ME1BM1": "SMALL LoBM", "ME1BM5": "SMALL HiBM", "ME5BM1": "BIG LoBM", "ME5BM5": "BIG HiBM"}
    text[0] = ",".join(names.get(h, h.replace("BM", " BM")) for h in text[0].split(","))
    src.write_text("\n".join(text) + "\n")
    dates, y, _ = build_portfolio_dataset(PortfolioSpec(src, start="2000-01", end="2000-12"))
    assert len(dates) == 12


def test_layout_errors(tmp_path):
    src = tmp_path / "ff.csv"
    write_synthetic_portfolios(src, start="2000-01", end="2000-06")
    lines = src.read_text().splitlines()
    bad = tmp_path / "missing_col.csv"
    header = lines[0].split(",")
    keep = [i for i, h in enumerate(header) if h != "ME3BM3"]
    bad.write_text("\n".join(",".join(l.split(",")[i] for i in keep) for l in lines) + "\n")
    with pytest.raises(LayoutError):
        read_portfolios(PortfolioSpec(bad, start="2000-01", end="2000-06"))
    sentinel = tmp_path / "sentinel.csv"
    cells = lines[3].split(",")
    cells[5] = "-99.99"
    sentinel.write_text("\n".join(lines[:3] + [",".join(cells)] + lines[4:]) + "\n")
    with pytest.raises(LayoutError) as exc:
        read_portfolios(PortfolioSpec(sentinel, start="2000-01", end="2000-06"))
    assert exc.value.line == 4
    # the sentinel outside the requested range is harmless
    assert len(read_portfolios(PortfolioSpec(sentinel, start="2000-04", end="2000-06")).dates) == 3
    baddate = tmp_path / "date.csv"
    baddate.write_text("\n".join(lines[:2] + ["2000-02" + lines[2][6:]] + lines[3:]) + "\n")
    with pytest.raises(LayoutError):
        read_portfolios(PortfolioSpec(baddate, start="2000-01", end="2000-06"))


def test_date_range_errors():
    with pytest.raises(DateRangeError):
        read_portfolios(PortfolioSpec(bundled_fixture(), start="1940-01", end="1960-12"))
    with pytest.raises(DateRangeError):
        PortfolioSpec(bundled_fixture(), start="1970-01", end="1960-12")
    with pytest.raises(DateRangeError):
        parse_month("1970-13")
    assert parse_month("1952:1") == 195201 and parse_month(201912) == 201912
    with pytest.raises(ConfigError):
        PortfolioSpec(bundled_fixture(), target="HmL")


def test_fixture_columns():
    header, rows = read_csv_table(bundled_fixture())
    assert header == ["date", *PORTFOLIO_COLUMNS, "Mkt-RF", "RF"]
    assert len(rows) == 71 * 12


# -------------------------------------------------------------- configuration


def test_env_overrides_file(monkeypatch, tmp_path):
    cfg = RunConfig.from_mapping({"seed": 3, "output_dir": "a", "input": {"path": "f.csv"}})
    env = {"TVPK_SEED": "9", "TVPK_OUTPUT_DIR": str(tmp_path), "TVPK_INPUT": "g.csv"}
    apply_env(cfg, env)
    assert (cfg.seed, cfg.output_dir, cfg.input_path) == (9, str(tmp_path), "g.csv")
    assert env_seed(1, {}) == 1
    with pytest.raises(ConfigError):
        env_seed(1, {"TVPK_SEED": "x"})


def test_config_rejects_unknown_sections_and_values():
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"bandwith": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"bandwidth": {"B": "many"}})
    with pytest.raises(ConfigError):
        RunConfig(mode="plugin").validate()
    with pytest.raises(ConfigError):
        RunConfig(B=10).validate()
    cfg = RunConfig.from_mapping({"bandwidth": {"c_grid": {"lower": 0.5, "upper": 0.6, "step": 0.05}, "m": 2}})
    assert cfg.c_grid == (0.5, 0.55, 0.6) and cfg.m == (2,)


def test_simulation_section_parsing():
    tvps, regs, err, T = simulation_from_mapping({
        "T": 100,
        "tvp": [{"type": "mixture", "components": [{"type": "random_walk"},
                                                   {"type": "break", "fractions": [0.5], "levels": [0, 2]}]}],
        "regressors": [{"type": "ar1", "phi": 0.3}],
        "errors": {"type": "garch"},
    })
    assert T == 100 and regs[0].phi == 0.3 and len(tvps[0].components) == 2
    with pytest.raises(ConfigError):
        simulation_from_mapping({"tvp": [{"type": "spline"}]})
    with pytest.raises(ConfigError):
        simulation_from_mapping({"tvp": [{"type": "break", "fractions": [0.7, 0.2], "levels": [0, 1, 2]}]})
    with pytest.raises(ConfigError):
        simulation_from_mapping({"tvp": [{"type": "random_walk"}] * 2})


# ------------------------------------------------------------------------ CLI


def write_config(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def vmg(tmp_path_factory):
    out = tmp_path_factory.mktemp("vmg")
    assert main(["build-portfolios", "--output-dir", str(out), "--target", "VmG"]) == 0
    return out / "VmG.csv"


def test_build_portfolios_output(vmg):
    header, rows = read_csv_table(vmg)
    assert header == ["date", "y", "const", "mkt"] and len(rows) == 816


def run_args(vmg, out, *extra):
    return ["estimate", "--input", str(vmg), "--response", "y", "--regressors", "const", "mkt",
            "--index-column", "date", "--output-dir", str(out), *extra]


def test_estimate_fixed_matches_library(vmg, tmp_path):
    assert main(run_args(vmg, tmp_path, "--gamma", "-0.5", "--c", "1.1")) == 0
    header, rows = read_csv_table(tmp_path / "estimates.csv")
    est_cli = np.array([[float(r[header.index("beta_const")]), float(r[header.index("beta_mkt")])] for r in rows])
    data, _ = load_series(vmg, "y", ["const", "mkt"])
    est = estimate_path(data, Bandwidth(1.1, -0.5, data.T))
    np.testing.assert_array_equal(est_cli, est.beta_hat)
    report = (tmp_path / "report.txt").read_text()
    ssr = float(next(l for l in report.splitlines() if l.startswith("SSR")).split(":")[1])
    assert abs(ssr - est.ssr) <= 0.05 * est.ssr
    bh, brows = read_csv_table(tmp_path / "bands.csv")
    assert len(brows) == 816 and bh[-1] == "boundary"


def test_constant_csv_gives_flat_ols_path(tmp_path):
    T = 60
    rng = np.random.default_rng(3)
    x = rng.standard_normal(T)
    write_csv(tmp_path / "c.csv", ["y", "x"], zip(2.5 * x, x))
    assert main(["estimate", "--input", str(tmp_path / "c.csv"), "--output-dir", str(tmp_path)]) == 0
    header, rows = read_csv_table(tmp_path / "estimates.csv")
    b = np.array([float(r[header.index("beta_x")]) for r in rows])
    ref = ols(TimeSeriesData(2.5 * x, x))[0]
    np.testing.assert_allclose(b, ref, atol=1e-12)
    hb, brows = read_csv_table(tmp_path / "bands.csv")
    width = np.array([float(r[hb.index("upper_x")]) - float(r[hb.index("lower_x")]) for r in brows])
    assert np.all(np.abs(width) < 1e-10)


def test_bootstrap_pipeline_and_plotdata(vmg, tmp_path):
    cfg = write_config(tmp_path / "cfg.yaml", "bandwidth:\n  mode: bootstrap\n  B: 200\n  select_c: true\n")
    assert main(run_args(vmg, tmp_path, "--config", cfg, "--seed", "0")) == 0
    report = (tmp_path / "report.txt").read_text()
    assert "selected gamma: -0.33" in report
    assert "rejected gamma1: -0.2" in report
    sel = dict(read_csv_table(tmp_path / "selection.csv")[1])
    assert float(sel["gamma_hat"]) == -0.33
    assert main(["plotdata", "--input-dir", str(tmp_path)]) == 0
    header, rows = read_csv_table(tmp_path / "plotdata.csv")
    assert header == ["series", "x", "value", "flag"]
    eh, erows = read_csv_table(tmp_path / "estimates.csv")
    beta = [r[2] for r in rows if r[0] == "beta_mkt"]
    assert beta == [r[eh.index("beta_mkt")] for r in erows]
    cr = [r for r in rows if r[0].startswith("cr_gamma1=")]
    assert len(cr) == 10


def test_select_bandwidth_writes_cv_curves(vmg, tmp_path):
    cfg = write_config(tmp_path / "cfg.yaml", "bandwidth:\n  mode: cv\n  m: [0, 1, 2]\n  cv_grid: {lower: -0.5, upper: -0.2, step: 0.05}\n")
    args = ["select-bandwidth", "--config", cfg, "--input", str(vmg), "--response", "y",
            "--regressors", "const", "mkt", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    header, rows = read_csv_table(tmp_path / "cv_curve.csv")
    assert header == ["m", "gamma", "cv", "is_min"]
    for m in ("0", "1", "2"):
        sub = [r for r in rows if r[0] == m]
        assert len(sub) == 7 and sum(r[3] == "1" for r in sub) == 1
        best = min(sub, key=lambda r: float(r[2]))
        assert best[3] == "1"
    assert main(["plotdata", "--input-dir", str(tmp_path)]) == 0
    prow = read_csv_table(tmp_path / "plotdata.csv")[1]
    assert {r[0] for r in prow} == {"cv_m0", "cv_m1", "cv_m2"}


def test_plotdata_empty_directory(tmp_path):
    assert plot_rows(tmp_path) == []
    assert main(["plotdata", "--input-dir", str(tmp_path), "--output", str(tmp_path / "p.csv")]) == 0
    assert (tmp_path / "p.csv").read_text() == "series,x,value,flag\n"


def test_plotdata_missing_directory(tmp_path, capsys):
    code = main(["plotdata", "--input-dir", str(tmp_path / "absent"), "--output", str(tmp_path / "p.csv")])
    assert code == 4
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "ConfigError"
    assert not (tmp_path / "p.csv").exists()


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x\n1,2\n3\n")
    assert main(["estimate", "--input", str(bad), "--output-dir", str(tmp_path)]) == 3
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "ParseError" and err["line"] == 3 and err["exit_code"] == 3
    good = tmp_path / "good.csv"
    write_csv(good, ["y", "x"], [(1.0, 0.0)] * 30)
    assert main(["estimate", "--input", str(good), "--regressors", "z", "--output-dir", str(tmp_path)]) == 4
    assert main(["estimate", "--input", str(good), "--output-dir", str(tmp_path)]) == 5
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "SingularGram" and err["t"] == 1
    assert main(["estimate", "--output-dir", str(tmp_path)]) == 4
    assert main(["mc", "--output-dir", str(tmp_path)]) == 4
    assert main(["estimate", "--config", str(tmp_path / "none.yaml")]) == 4


def test_single_month_rejected_downstream(tmp_path):
    out = tmp_path / "one.csv"
    assert main(["build-portfolios", "--start", "1990-05", "--end", "1990-05", "--output", str(out)]) == 0
    assert len(read_csv_table(out)[1]) == 1
    code = main(["estimate", "--input", str(out), "--regressors", "const", "mkt", "--output-dir", str(tmp_path)])
    assert code == 4


def test_env_seed_and_output_dir(monkeypatch, tmp_path):
    cfg = write_config(tmp_path / "s.yaml", "simulate:\n  T: 50\n")
    monkeypatch.setenv("TVPK_SEED", "5")
    monkeypatch.setenv("TVPK_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["simulate", "--config", cfg]) == 0
    a = (tmp_path / "env" / "simulated.csv").read_bytes()
    assert main(["simulate", "--config", cfg, "--seed", "5", "--output", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "b.csv").read_bytes() == a
    assert main(["simulate", "--config", cfg, "--seed", "6", "--output", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "c.csv").read_bytes() != a


def test_simulate_columns(tmp_path):
    cfg = write_config(tmp_path / "s.yaml",
                       "simulate:\n  T: 40\n  tvp: [{type: smooth, f: bump}, {type: random_walk}]\n"
                       "  regressors: [{type: constant}, {type: ar1}]\n  errors: {type: iid, sigma: 0}\n")
    assert main(["simulate", "--config", cfg, "--seed", "1", "--output", str(tmp_path / "s.csv")]) == 0
    header, rows = read_csv_table(tmp_path / "s.csv")
    assert header == ["t", "y", "x1", "x2", "beta1", "beta2"]
    v = np.array(rows, dtype=float)
    np.testing.assert_allclose(v[:, 1], v[:, 2] * v[:, 4] + v[:, 3] * v[:, 5], atol=1e-12)


def test_mc_is_byte_identical_for_a_seed(tmp_path):
    for d in ("a", "b"):
        assert main(["mc", "--preset", "table5", "--replications", "3", "--seed", "4",
                     "--output-dir", str(tmp_path / d)]) == 0
    for name in ("table5.csv", "table5_cells.csv", "table5_manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "table5_manifest.json").read_text())
    assert man["master_seed"] == 4 and man["replications"] == 3 and len(man["config_sha256"]) == 64
    header, rows = read_csv_table(tmp_path / "a" / "table5.csv")
    assert [r[0] for r in rows] == ["-0.2", "-0.33", "-0.5", "CV", "Boot"]


def test_mc_local_level_preset(tmp_path):
    assert main(["mc", "--preset", "appendixB", "--replications", "20", "--output-dir", str(tmp_path)]) == 0
    header, rows = read_csv_table(tmp_path / "appendixB.csv")
    assert header[:4] == ["h", "empirical_mse", "mc_se", "theory_mse"] and len(rows) == 30
    assert all(math.isfinite(float(r[1])) for r in rows)
