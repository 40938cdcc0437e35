import datetime as dt
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from curvedenoise.denoise import DenoiseResult, DenoiserConfig, run_denoising
from curvedenoise.exceptions import CsvFormatError, ZeroVarianceError
from curvedenoise.grid import CurveSeries, make_grid
from curvedenoise.pipeline import (
    RawPanel,
    day_of_year,
    load_csv,
    preprocess,
    read_rows,
    save_panel,
    save_results,
    seasonal_means,
    seasonal_weights,
    write_json,
)
from curvedenoise.simulation import DgpConfig, ExperimentResult, generate_dataset


def write(tmp_path, text, name="in.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def days(start, n):
    d0 = dt.date.fromisoformat(start)
    return tuple((d0 + dt.timedelta(days=i)).isoformat() for i in range(n))


def test_wide_three_days(tmp_path):
    p = write(tmp_path, "date,v0,v1,v2,v3\n2020-01-01,1,2,3,4\n2020-01-02,5,6,7,8\n2020-01-03,9,10,11,12\n")
    panel = load_csv(p)
    assert panel.matrix.shape == (3, 4)
    assert panel.dates == ("2020-01-01", "2020-01-02", "2020-01-03")
    assert panel.column_labels == ("v0", "v1", "v2", "v3")
    assert_allclose(panel.matrix[2], [9, 10, 11, 12])


def test_long_pivots_and_sorts(tmp_path):
    text = "date,position,value\n2020-01-02,1,4\n2020-01-01,1,2\n2020-01-02,0,3\n2020-01-01,0,1\n"
    panel = load_csv(write(tmp_path, text), "long")
    assert panel.dates == ("2020-01-01", "2020-01-02")
    assert_allclose(panel.matrix, [[1, 2], [3, 4]])


@pytest.mark.parametrize(
    "text, layout, kind, date",
    [
        ("date,position,value\n2020-01-01,0,1\n2020-01-01,1,2\n2020-01-02,0,3\n", "long", "missing-cell", "2020-01-02"),
        ("date,position,value\n2020-01-01,0,1\n2020-01-01,0,2\n", "long", "duplicate-key", "2020-01-01"),
        ("date,v0,v1\n2020-01-01,1,\n", "wide", "missing-cell", "2020-01-01"),
        ("date,v0,v1\n2020-01-01,1,nan\n", "wide", "missing-cell", "2020-01-01"),
        ("date,v0\n2020-01-02,1\n2020-01-01,2\n", "wide", "non-monotone-dates", "2020-01-01"),
        ("date,v0\n2020-01-01,1\n2020-01-01,2\n", "wide", "duplicate-key", "2020-01-01"),
        ("date,v0\nyesterday,1\n", "wide", "parse-error", "yesterday"),
        ("date,v0\n2020-01-01,abc\n", "wide", "parse-error", "2020-01-01"),
    ],
)
def test_format_errors(tmp_path, text, layout, kind, date):
    with pytest.raises(CsvFormatError) as info:
        load_csv(write(tmp_path, text), layout)
    assert info.value.kind == kind
    assert info.value.date == date
    assert date in str(info.value) or kind == "parse-error"


def test_bad_headers_and_layout(tmp_path):
    with pytest.raises(CsvFormatError):
        load_csv(write(tmp_path, "day,v0\n2020-01-01,1\n"))
    with pytest.raises(CsvFormatError):
        load_csv(write(tmp_path, "date,pos,val\n"), "long")
    with pytest.raises(CsvFormatError):
        load_csv(write(tmp_path, "date,v0\n"))
    with pytest.raises(ValueError):
        load_csv(write(tmp_path, "date,v0\n2020-01-01,1\n"), "tall")


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    panel = RawPanel(days("2019-12-30", 5), rng.standard_normal((5, 24)) * 1e3, [f"v{i}" for i in range(24)])
    save_panel(panel, tmp_path / "p.csv")
    back = load_csv(tmp_path / "p.csv")
    assert np.array_equal(back.matrix, panel.matrix)
    assert back.dates == panel.dates


def test_raw_panel_shape_check():
    with pytest.raises(ValueError):
        RawPanel(("2020-01-01",), np.zeros((2, 3)), ("a", "b", "c"))


def test_day_of_year_leap():
    assert day_of_year("2021-01-01") == 0
    assert day_of_year("2021-12-31") == 364
    assert day_of_year("2020-02-29") == day_of_year("2020-02-28") == 58
    assert day_of_year("2020-12-31") == 364


def test_seasonal_weights_circular():
    W = seasonal_weights(15)
    assert_allclose(W, W.T)
    assert_allclose(W[0, 364], W[0, 1])
    assert W[0, 0] == 1.0


def test_seasonal_means_constant_recovered():
    doy = np.arange(365).repeat(2)
    assert_allclose(seasonal_means(np.full(730, 3.5), doy, 15), 3.5)


def test_preprocess_unit_std_and_report():
    rng = np.random.default_rng(1)
    panel = RawPanel(days("2001-01-01", 800), 10 + rng.standard_normal((800, 24)), [str(i) for i in range(24)])
    Y, report = preprocess(panel)
    assert_allclose(np.std(Y.data, ddof=1), 1.0, atol=1e-12)
    assert_allclose(Y.data.mean(axis=0), 0.0, atol=1e-12)
    assert report.scale > 0
    assert report.seasonal_mean.shape == (365,)
    assert Y.grid.N == 24


def test_preprocess_constant_panel_rejected():
    panel = RawPanel(days("2001-01-01", 30), np.full((30, 4), 7.0), list("abcd"))
    with pytest.raises(ZeroVarianceError):
        preprocess(panel)
    with pytest.raises(ValueError):
        preprocess(panel, bandwidth_days=0)


def test_preprocess_removes_seasonal_cycle():
    n = 365 * 4
    dates = days("2001-01-01", n)
    doy = np.array([day_of_year(d) for d in dates])
    rng = np.random.default_rng(2)
    season = 10 * np.sin(2 * np.pi * doy / 365)
    M = season[:, None] + rng.standard_normal((n, 24))
    Y, report = preprocess(RawPanel(dates, M, [str(i) for i in range(24)]), 15)
    resid = Y.data.mean(axis=1) * report.scale
    design = np.column_stack([np.sin(2 * np.pi * doy / 365), np.cos(2 * np.pi * doy / 365)])
    amp = np.hypot(*np.linalg.lstsq(design, resid, rcond=None)[0])
    assert amp <= 0.05 * 10


def test_preprocess_year_order_independent():
    rng = np.random.default_rng(3)
    dates = days("2001-01-01", 730)
    M = rng.standard_normal((730, 6))
    swapped = np.vstack([M[365:], M[:365]])
    _, a = preprocess(RawPanel(dates, M, list("abcdef")))
    _, b = preprocess(RawPanel(dates, swapped, list("abcdef")))
    assert_allclose(a.seasonal_mean, b.seasonal_mean, atol=1e-12)


def test_preprocess_idempotent_on_fixed_point():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((400, 8))
    M = M - M.mean(axis=1, keepdims=True) + 5.0
    panel = RawPanel(days("2001-01-01", 400), M, list("abcdefgh"))
    Y1, _ = preprocess(panel)
    Y2, _ = preprocess(RawPanel(panel.dates, Y1.data, panel.column_labels))
    assert_allclose(Y2.data, Y1.data, atol=1e-12)


def test_write_json_precision_and_nan(tmp_path):
    write_json({"x": 0.1 + 0.2, "y": float("nan"), "z": np.int64(3)}, tmp_path / "a.json")
    back = json.loads((tmp_path / "a.json").read_text())
    assert back == {"x": 0.30000000000000004, "y": None, "z": 3}


def test_save_empty_result(tmp_path):
    manifest = save_results(ExperimentResult(), tmp_path / "out")
    assert manifest["data_files"] == []
    assert set(manifest["files"]) == {"summary.json"}
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["aggregates"] == []


def test_save_experiment_round_trip(tmp_path):
    res = ExperimentResult()
    vals = [1 / 3, np.pi, 1e-17, 2.0 / 7.0]
    for r, v in enumerate(vals):
        res.add({"n": 10, "model": "paper-d2"}, r, 100 + r, "m", "x", v)
    manifest = save_results(res, tmp_path)
    assert manifest["data_files"] == ["runs.csv", "summary.csv"]
    rows = read_rows(tmp_path / "runs.csv")
    assert [r["value"] for r in rows] == vals
    assert rows[0]["model"] == "paper-d2"
    assert len(manifest["files"]["runs.csv"]) == 64


def test_save_denoise_result_summary(tmp_path):
    Y, _, _, _ = generate_dataset(DgpConfig(n=200, seed=5), with_truth=False)
    res = run_denoising(Y, "mise_optimal", DenoiserConfig(d=2))
    dates = days("2001-01-01", 200)
    save_results(res, tmp_path, extra={"seed": 5}, dates=list(dates))
    summary = json.loads((tmp_path / "summary.json").read_text())
    for key in ("lambda_hat", "d_hat", "d_eps", "d_par", "d_perp", "mise_min", "removed",
                "remaining", "removed_proportion"):
        assert key in summary
    assert summary["seed"] == 5
    back = load_csv(tmp_path / "denoised.csv")
    assert np.array_equal(back.matrix, res.denoised.data)
    assert back.dates == dates


def test_removed_proportion_printed_numbers(tmp_path):
    res = DenoiseResult(
        CurveSeries(np.zeros((1, 4)), make_grid(0, 1, 4)),
        "mise_optimal",
        0.0759,
        0.164,
        0.0884,
        diagnostics={"removed": 0.0884, "remaining": 0.0759, "removed_proportion": 0.0884 / 0.1643},
    )
    save_results(res, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert round(summary["removed_proportion"], 3) == 0.538
    assert round(summary["removed"] + summary["remaining"], 3) == 0.164
