import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from kice.cli import main

DATA = Path(__file__).parent / "data"
QUICK = ["--n-samples", "200", "--n-per-layer", "200"]


def test_gen_data(tmp_path, capsys):
    out = tmp_path / "hm.csv"
    assert main(["gen-data", "--n-samples", "50", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["X0", "X1", "label"] and len(rows) == 51
    assert "wrote 50 rows" in capsys.readouterr().out


def test_train_then_explain_with_saved_models(tmp_path, capsys):
    assert main(["train", "--n-samples", "200", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "E = [" in text and "test accuracy" in text
    assert (tmp_path / "models" / "classifier.json").is_file()
    plot = tmp_path / "plot.csv"
    fig = tmp_path / "fig.png"
    code = main(["explain", *QUICK, "--index", "2", "--models", str(tmp_path),
                 "--plot-data", str(plot), "--figure", str(fig)])
    assert code == 0
    text = capsys.readouterr().out
    for name in ("e_ref", "e_user", "e_star"):
        assert name in text
    kinds = {row["kind"] for row in csv.DictReader(plot.open())}
    assert {"grid", "train", "x", "e_ref", "e_star"} <= kinds
    assert fig.stat().st_size > 0


def test_experiment_then_report(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["experiment", *QUICK, "--max-instances", "5", "--out", str(out), "--no-figures"]
    assert main(args) == 0
    assert "joint successes" in capsys.readouterr().out
    assert not (out / "dominance.png").exists()
    report = json.loads((out / "report.json").read_text())
    assert len(report["records"]) == 5

    again = tmp_path / "again"
    assert main(["report", "--from", str(out), "--out", str(again)]) == 0
    assert "dominance" in capsys.readouterr().out
    assert (again / "metrics.csv").read_text() == (out / "metrics.csv").read_text()
    assert (again / "dominance.png").is_file()


def test_csv_experiment(tmp_path):
    args = ["experiment", "--dataset", str(DATA / "boston_like.csv"), "--label-col", "MEDV",
            "--threshold", "21", "--n-per-layer", "200", "--lambda", "1",
            "--out", str(tmp_path), "--no-figures"]
    assert main(args) == 0
    assert json.loads((tmp_path / "report.json").read_text())["config"]["positive_rule"] == "> 21.0"


def test_data_error_exits_one(capsys):
    args = ["train", "--dataset", str(DATA / "bad_cell.csv"), "--label-col", "label",
            "--positive-class", "1", "--out", "unused"]
    assert main(args) == 1
    assert "non-numeric value 'oops'" in capsys.readouterr().err


def test_index_out_of_range(capsys):
    assert main(["explain", *QUICK, "--index", "999"]) == 1
    assert "--index" in capsys.readouterr().err


def test_unknown_flag_exits_two():
    proc = subprocess.run(
        [sys.executable, "-m", "kice", "experiment", "--bogus"], capture_output=True, text=True
    )
    assert proc.returncode == 2
    assert "usage:" in proc.stderr


def test_missing_subcommand():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
