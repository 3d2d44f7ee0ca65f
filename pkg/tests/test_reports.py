import math

import numpy as np
import pytest

from errors import ConfigError, DomainError
from estimate import BoundReport
from reports import (ReportCollector, as_row, emit_plot_data, format_cell, from_row, load_json,
                     read_csv, write_csv, write_json)


def _reports():
    return [
        BoundReport(family="gaussian", d=2, n=30, p=8.0, direction_id=0, empirical=1 / 3,
                    bound_martingale=4144.123456789012, bound_independent=0.1, ratio=1e-17,
                    mc_err=0.0123),
        BoundReport(family="martingale_scaled[rademacher]", d=1, n=10, p=4.0, direction_id=7,
                    empirical=1.3, bound_martingale=45.5, bound_independent=None, ratio=0.0286,
                    mc_err=0.0, normed=True, s1=math.sqrt(10), s2=None, theta=None),
    ]


def test_bound_reports_round_trip(tmp_path):
    path = tmp_path / "report.csv"
    original = _reports()
    write_csv([as_row(r) for r in original], path=path)
    again = [from_row(BoundReport, row) for row in read_csv(path)]
    assert again == original


def test_timestamp_line(tmp_path):
    stamped, plain = tmp_path / "a.csv", tmp_path / "b.csv"
    rows = [{"x": 1, "y": 2.5}]
    write_csv(rows, path=stamped)
    write_csv(rows, path=plain, timestamp=False)
    assert stamped.read_text().startswith("# generated ")
    assert plain.read_text() == "x,y\n1,2.5\n"
    assert read_csv(stamped) == read_csv(plain) == rows


def test_identical_writes_are_byte_identical(tmp_path):
    rows = [as_row(r) for r in _reports()]
    write_csv(rows, path=tmp_path / "1.csv", timestamp=False)
    write_csv(rows, path=tmp_path / "2.csv", timestamp=False)
    assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "2.csv").read_bytes()


@pytest.mark.parametrize("value, text", [
    (None, ""), (math.nan, ""), (np.float64(1.5), "1.5"), (np.int64(3), "3"),
    (True, "True"), (0.1, "0.1"), ("abc", "abc"),
])
def test_format_cell(value, text):
    assert format_cell(value) == text


def test_nan_becomes_empty_cell(tmp_path):
    path = tmp_path / "nan.csv"
    write_csv([{"a": math.nan, "b": 1.0}], path=path, timestamp=False)
    assert path.read_text() == "a,b\n,1.0\n"
    assert read_csv(path) == [{"a": None, "b": 1.0}]


def test_empty_report_is_rejected(tmp_path):
    with pytest.raises(DomainError):
        write_csv([], path=tmp_path / "x.csv")
    with pytest.raises(DomainError):
        emit_plot_data([], "p", ["ratio"], path=tmp_path / "y.csv")


def test_plot_data_is_long_format(tmp_path):
    rows = [{"p": 8.0, "exact_norm": 2.0, "reference": 1.5, "ratio": 1.3},
            {"p": 16.0, "exact_norm": 3.0, "reference": 2.1, "ratio": 1.4}]
    path = tmp_path / "plot.csv"
    emit_plot_data(rows, "p", ["exact_norm", "ratio"], path=path, timestamp=False, keys=())
    tidy = read_csv(path)
    assert len(tidy) == 4
    assert tidy[1] == {"p": 8.0, "curve": "ratio", "value": 1.3}


def test_json_helpers(tmp_path):
    path = tmp_path / "out.json"
    write_json({"v": np.arange(3), "x": np.float64(0.5)}, path)
    assert load_json(path) == {"v": [0, 1, 2], "x": 0.5}
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "mode": "verify",\n  "paths": ,\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_json(bad)
    with pytest.raises(ConfigError):
        load_json(tmp_path / "missing.json")


def test_collector_summary(capsys):
    collector = ReportCollector()
    collector.record("verify", {"a": 1})
    collector.record("verify", {"a": 2})
    assert collector.report("verify", passed=2)["ok"]
    assert not collector.report("verify", passed=1)["ok"]
    collector.record_failure("verify", "diverged")
    summary = collector.report("verify", passed=2)
    assert summary == {"rows": 2, "errors": 1, "passed": 2, "ok": False}
    assert "[VERIFY] FAILED: diverged" in capsys.readouterr().err
    collector.reset()
    assert collector.rows == {} and collector.failures == {}


def test_renamed_columns_round_trip(tmp_path):
    rename = {"bound_martingale": "bound_thm21", "bound_independent": "bound_thm31"}
    path = tmp_path / "verify.csv"
    original = _reports()
    write_csv([as_row(r, rename=rename) for r in original], path=path)
    rows = read_csv(path)
    assert "bound_thm21" in rows[0] and "bound_martingale" not in rows[0]
    assert [from_row(BoundReport, row, rename=rename) for row in rows] == original
