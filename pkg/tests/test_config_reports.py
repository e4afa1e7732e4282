import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfcz.config import (
    TOLERANCE_KEYS,
    RunConfig,
    Tolerances,
    load_run_config,
    load_tolerances,
    parse_flat,
    write_tolerances,
)
from mfcz.grid import ConfigurationError
from mfcz.reports import SCHEMAS, Report, ReportError, emit_csv, format_value, render_csv


def test_parse_flat_comments_and_whitespace():
    text = "# header\n a = 1 \n\nb=x, y # trailing\n"
    assert parse_flat(text) == {"a": "1", "b": "x, y"}


@pytest.mark.parametrize("text", ["novalue\n", "a = 1\na = 2\n", " = 3\n"])
def test_parse_flat_errors(text):
    with pytest.raises(ConfigurationError):
        parse_flat(text)


def test_packaged_tolerances_complete():
    tol = load_tolerances()
    assert [k for k, _ in tol.as_items()] == list(TOLERANCE_KEYS)
    assert tol.czd_cancellation == 1e-8 and tol.czd_identity == 1e-10
    assert tol.lower_bound_slope_min == 0.17
    assert tol.weak11_slope_max == pytest.approx(0.6)
    assert tol.domination_slope_min == -0.1 and tol.domination_slope_max == 0.05


def test_tolerance_key_mapping():
    assert Tolerances.key("czd_good_l2") == "czd.good_l2"
    assert Tolerances.key("lower_bound_slope_min") == "lower.bound_slope_min"


def test_tolerances_round_trip(tmp_path):
    tol = load_tolerances()
    path = tmp_path / "t.cfg"
    write_tolerances(tol, path, header="test")
    assert path.read_text().startswith("# test\n")
    assert load_tolerances(path) == tol


def test_tolerances_missing_and_unknown_keys(tmp_path):
    path = tmp_path / "t.cfg"
    path.write_text("czd.cancellation = 1\n")
    with pytest.raises(ConfigurationError):
        load_tolerances(path)
    lines = [f"{k} = {v!r}" for k, v in load_tolerances().as_items()] + ["bogus = 1"]
    path.write_text("\n".join(lines))
    with pytest.raises(ConfigurationError):
        load_tolerances(path)


def test_tolerances_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_tolerances(tmp_path / "absent.cfg")


def test_zero_tolerances():
    zero = load_tolerances().zero()
    assert zero.mt_bound == 0.0 and zero.lower_bound_slope_min == math.inf
    assert zero.domination_slope_min == math.inf and zero.domination_slope_max == 0.0
    assert zero.verify_seconds == load_tolerances().verify_seconds


def test_run_config_defaults_valid():
    cfg = RunConfig()
    assert cfg.grid == 12 and cfg.seed == 7 and cfg.trials == 20


@pytest.mark.parametrize(
    "kwargs",
    [
        {"grid": 5},
        {"grid": 21},
        {"seed": -1},
        {"trials": 0},
        {"domination_ns": (4, 1)},
        {"domination_ns": (1,)},
        {"domination_rs": (0.5, 1.0)},
        {"mt_s": 1.0},
        {"lower_p": 2.0},
        {"weight_alphas": (-1.0,)},
        {"weighted_pr": ((2.0, 2.0),)},
        {"grid": 6, "weak_ns": (4, 8, 32)},
    ],
)
def test_run_config_rejects(kwargs):
    with pytest.raises(ConfigurationError):
        RunConfig(**kwargs)


def test_load_run_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("grid = 10\nseed = 3\nmain.ns = 1, 2, 4\nweights.alphas = -0.5, 0.5\n")
    cfg = load_run_config(path, {"seed": 11, "out": None})
    assert cfg.grid == 10 and cfg.seed == 11
    assert cfg.main_ns == (1, 2, 4) and cfg.weight_alphas == (-0.5, 0.5)
    assert cfg.out == "mfcz-out"


@pytest.mark.parametrize("text", ["bogus = 1\n", "grid = twelve\n"])
def test_load_run_config_errors(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_run_config(path)


def test_format_value():
    assert format_value(True) == "true" and format_value(False) == "false"
    assert format_value(3) == "3"
    assert format_value(0.1) == "1.00000000000000006e-01"
    assert format_value(float("inf")) == "inf" and format_value(float("nan")) == "nan"
    assert format_value(None) == ""
    assert format_value(np.float64(2.5)) == format_value(2.5)
    assert format_value("abc") == "abc"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_value(x)) == x


def test_empty_report_is_header_only(tmp_path):
    path = tmp_path / "sub" / "scaling.csv"
    emit_csv(Report("scaling"), path)
    assert path.read_text() == "N,statistic,trials,seed\n"


def test_report_rows_sorted_and_validated():
    rep = Report("scaling")
    rep.add(N=8, statistic=1.0, trials=2, seed=1)
    rep.add(N=2, statistic=3.0, trials=2, seed=1)
    lines = render_csv(rep).splitlines()
    assert lines[1].startswith("2,") and lines[2].startswith("8,")
    with pytest.raises(ValueError):
        rep.add(M=1)
    with pytest.raises(ValueError):
        Report("nope")


def test_every_schema_sort_key_is_a_column():
    for columns, keys in SCHEMAS.values():
        assert set(keys) <= set(columns)


def test_emit_csv_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportError, match="file"):
        emit_csv(Report("fit"), blocker / "x.csv")


def test_default_sweeps_fit_the_grid():
    assert RunConfig().weak_ns == (4, 8, 16, 32, 64, 128, 256)
    small = RunConfig(grid=8)
    assert small.weak_ns == (4, 8, 16, 32)
    assert small.lower_ns == (8, 16, 32, 64)
    assert small.domination_ns == (1, 4, 16)
    assert RunConfig(grid=8, weak_ns=(2, 4, 8)).weak_ns == (2, 4, 8)
