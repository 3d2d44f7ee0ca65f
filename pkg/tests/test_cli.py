import json

import pytest

import main
import simulation
from reports import read_csv


def _write_config(tmp_path, **raw):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_constants_to_file(tmp_path):
    out = tmp_path / "constants.csv"
    assert main.main(["constants", "--quiet", "--no-header-timestamp", "--out", str(out)]) == 0
    rows = {(r["quantity"], r["d"]): r["value"] for r in read_csv(out)}
    assert rows[("K_Os", None)] == pytest.approx(15.7858, abs=1e-3)
    assert rows[("K_Os_argmax", None)] == 4.0
    assert rows[("K_R", None)] == 0.6535
    assert rows[("gamma", 10)] <= rows[("gamma_upper", 10)] * (1 + 1e-12)
    assert (tmp_path / "constants.json").exists()


def test_constants_to_stdout(capsys):
    assert main.main(["constants", "--quiet"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# generated ")
    assert "K_Os," in out


def test_bound_mode(tmp_path):
    out = tmp_path / "bound.csv"
    code = main.main(["bound", "--quiet", "--kind", "gaussian", "martingale_scaled", "--d", "2",
                      "--p", "4", "8", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 4
    gaussian = [r for r in rows if r["family"] == "gaussian"]
    scaled = [r for r in rows if r["family"] != "gaussian"]
    assert all(r["bound_independent"] is not None for r in gaussian)
    assert all(r["bound_independent"] is None for r in scaled)
    assert all(r["bound_martingale"] >= r["V"] for r in rows)


def test_poisson_demo(tmp_path):
    out = tmp_path / "poisson.csv"
    assert main.main(["poisson-demo", "--quiet", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["p"] for r in rows] == [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0]
    assert set(rows[0]) == {"p", "exact_norm", "reference", "ratio", "log_ratio"}
    assert len(read_csv(tmp_path / "poisson_plot.csv")) == 3 * len(rows)


def test_small_verify_suite(tmp_path):
    cfg = _write_config(tmp_path, families=["rademacher", "martingale_scaled"], d_grid=[2],
                        n_grid=[10], p_grid=[4.0], paths=3000, directions=3)
    out = tmp_path / "verify.csv"
    assert main.main(["verify", "--quiet", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2 * 4
    assert all(r["passed"] for r in rows)
    assert list(rows[0])[:10] == ["family", "d", "n", "p", "direction_id", "empirical",
                                  "bound_thm21", "bound_thm31", "ratio", "mc_err"]


def test_default_quick_verify_suite(tmp_path):
    out = tmp_path / "suite.csv"
    assert main.main(["verify", "--quick", "--quiet", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 4 * 3 * 2 * 3 * 21
    assert all(r["passed"] for r in rows)
    assert max(r["empirical"] / r["bound_thm21"] for r in rows) < 0.2
    assert all(r["bound_thm31"] is None for r in rows if r["family"].startswith("martingale_scaled"))


def test_verify_is_reproducible_across_thread_counts(tmp_path, monkeypatch):
    cfg = _write_config(tmp_path, families=["centered_poisson"], d_grid=[2], n_grid=[10],
                        p_grid=[4.0], paths=9000, directions=2)
    outputs = []
    for threads in ("1", "8"):
        monkeypatch.setenv("POLYMART_THREADS", threads)
        out = tmp_path / f"run{threads}.csv"
        assert main.main(["verify", "--quiet", "--no-header-timestamp", "--config", cfg,
                          "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_decompose_mode(tmp_path):
    cfg = _write_config(tmp_path, n_grid=[16], p_grid=[4.0, 8.0], paths=4000)
    out = tmp_path / "decompose.csv"
    assert main.main(["decompose", "--quiet", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 4
    rad = [r for r in rows if r["family"] == "rademacher"]
    assert rad[0]["s1"] == pytest.approx(4.0)


def test_tail_mode(tmp_path):
    out = tmp_path / "tail.csv"
    code = main.main(["tail", "--quiet", "--d", "1", "--q", "2", "--r", "1", "--quick",
                      "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert all(r["theoretical_alpha"] == pytest.approx(2 / 3) for r in rows)
    assert all(0.0 < r["bound"] <= 1.0 and r["log_bound"] <= 0.0 for r in rows)
    domination = read_csv(tmp_path / "tail_domination.csv")
    assert all(r["dominated"] for r in domination)


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"families": ["gaussian"],\n "paths": }')
    assert main.main(["verify", "--config", str(bad)]) == simulation.EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("raw", [
    {"mode": "tail"},
    {"p_grid": [20.0]},
    {"paths": 999},
    {"families": ["cauchy"]},
    {"d_grid": []},
    {"unknown_key": 1},
    {"weights": [{"form": "separable", "betas": [[1.0, 2.0]]}]},
])
def test_invalid_configs_exit_2(tmp_path, raw):
    assert main.main(["verify", "--quiet", "--config", _write_config(tmp_path, **raw)]) == 2


def test_invalid_flags_exit_2():
    assert main.main(["verify", "--quiet", "--seed", "-1"]) == 2
    assert main.main(["tail", "--quiet", "--d", "2"]) == 2


def test_numerical_failures_exit_3(tmp_path):
    # four grid points are too few to fit a tail shape
    out = tmp_path / "t.csv"
    assert main.main(["tail", "--quiet", "--d", "1", "--q", "2", "--x-grid", "10", "20", "4",
                      "--out", str(out)]) == 3
