import csv
import io

import numpy as np
import pytest

from bandsure.cli import main


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_writes_reports(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, stdout, _ = _run(["run", "--p", "10", "--n", "30", "--alpha", "0.5", "--reps", "2",
                            "--estimators", "band_sure_f,band_sure_op", "--out", str(out)], capsys)
    assert code == 0
    assert out.exists() and (tmp_path / "r_summary.csv").exists()
    assert "band_sure_f" in stdout


def test_run_json(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = _run(["run", "--p", "8", "--n", "20", "--alpha", "0.1", "--reps", "1",
                       "--estimators", "taper_sure", "--out", str(out), "--format", "json"], capsys)
    assert code == 0 and out.exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--p", "10", "--n", "30", "--alpha", "0.5", "--out", "x.csv", "--estimators", "bogus"],
        ["run", "--p", "10", "--n", "2", "--alpha", "0.5", "--out", "x.csv"],
        ["run", "--p", "10", "--n", "30", "--alpha", "0.5", "--out", "x.csv", "--seed", "-3"],
        ["run", "--p", "10", "--n", "30", "--alpha", "-1", "--out", "x.csv", "--reps", "1"],
        ["run", "--p", "ten", "--n", "30", "--alpha", "0.5", "--out", "x.csv"],
        ["select", "--input", "missing.csv", "--method", "sure_f"],
        ["select", "--input", "x.csv", "--method", "oracle"],
        ["verify", "--suite", "nope"],
        ["frobnicate"],
        [],
    ],
)
def test_invalid_input_exits_1(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = _run(argv, capsys)
    assert code == 1
    assert err


def test_run_missing_directory_exits_1(tmp_path, capsys):
    code, _, _ = _run(["run", "--p", "5", "--n", "10", "--alpha", "0.5", "--reps", "1",
                       "--estimators", "band_sure_f", "--out", str(tmp_path / "no" / "r.csv")], capsys)
    assert code == 1


def test_select_prints_curve(tmp_path, capsys):
    x = np.random.default_rng(0).standard_normal((40, 5))
    path = tmp_path / "data.csv"
    path.write_text("a,b,c,d,e\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in x) + "\n")
    code, out, _ = _run(["select", "--input", str(path), "--method", "sure_f"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("method=sure_f k=")
    assert lines[1] == "K,criterion"
    assert len(lines) == 2 + 5
    code, out, _ = _run(["select", "--input", str(path), "--method", "cv_l11", "--folds", "4"], capsys)
    assert code == 0 and out.startswith("method=cv_l11")


def test_select_rejects_ragged_and_text(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    assert _run(["select", "--input", str(bad), "--method", "sure_f"], capsys)[0] == 1
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    assert _run(["select", "--input", str(ragged), "--method", "sure_f"], capsys)[0] == 1


def test_verify_scalars_csv(capsys):
    code, out, _ = _run(["verify", "--suite", "scalars", "--seed", "1"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(r["passed"] == "True" for r in rows)


def test_verify_failure_exits_2(capsys, monkeypatch):
    from bandsure import verify

    def failing(seed):
        return [verify.OracleReport.compare("fake", "x", 1.0, 0.0, 0.1)]

    monkeypatch.setitem(verify.SUITES, "scalars", failing)
    code, _, _ = _run(["verify", "--suite", "scalars"], capsys)
    assert code == 2


def test_runtime_failure_exits_2(capsys, monkeypatch, tmp_path):
    from bandsure import cli

    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "run_scenario", boom)
    code, _, err = _run(["run", "--p", "5", "--n", "10", "--alpha", "0.5", "--reps", "1",
                         "--estimators", "band_sure_f", "--out", str(tmp_path / "r.csv")], capsys)
    assert code == 2 and "disk on fire" in err
