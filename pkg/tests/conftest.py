"""Shared fixtures: full experiment runs are expensive, so each runs once per session."""
import csv

import numpy as np
import pytest

from kice.harness import ExperimentConfig, run_experiment

# (criterion, description, passed, detail) rows collected by the acceptance tests
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def record(criterion: int, name: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.append((criterion, name, bool(ok), detail))
    line = f"[acceptance {criterion:2d}] {'PASS' if ok else 'FAIL'}  {name}"
    print(line + (f"  ({detail})" if detail else ""))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, name, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        line = f"[{criterion:2d}] {'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))


@pytest.fixture(scope="session")
def acceptance_record():
    return record


@pytest.fixture(scope="session")
def half_moons_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("half_moons")
    cfg = ExperimentConfig(dataset="half-moons", n_samples=1000, noise=0.1, lam=4.0)
    return run_experiment(cfg, out_dir=out, figures=True), out


@pytest.fixture(scope="session")
def breast_cancer_csv(tmp_path_factory):
    sklearn_datasets = pytest.importorskip("sklearn.datasets")
    data = sklearn_datasets.load_breast_cancer()
    path = tmp_path_factory.mktemp("real") / "breast_cancer.csv"
    names = [n.replace(" ", "_") for n in data.feature_names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*names, "diagnosis"])
        # target 0 is malignant
        for row, t in zip(data.data, data.target):
            w.writerow([repr(float(v)) for v in row] + ["M" if t == 0 else "B"])
    return path


@pytest.fixture(scope="session")
def breast_cancer_run(breast_cancer_csv, tmp_path_factory):
    cfg = ExperimentConfig(
        dataset=str(breast_cancer_csv), label_column="diagnosis", positive_rule="M", lam=6.0
    )
    out = tmp_path_factory.mktemp("breast_cancer")
    return run_experiment(cfg, out_dir=out, figures=False), out


@pytest.fixture(scope="session")
def informative_csv(tmp_path_factory):
    """Four features; the label depends on X0 and X1 only, X2 and X3 are noise."""
    rng = np.random.default_rng(11)
    X = rng.uniform(size=(300, 4))
    y = (X[:, 0] + X[:, 1] > 1.0).astype(int)
    path = tmp_path_factory.mktemp("synthetic") / "informative.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["X0", "X1", "X2", "X3", "label"])
        for row, t in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(t)])
    return path


@pytest.fixture(scope="session")
def informative_run(informative_csv):
    cfg = ExperimentConfig(
        dataset=str(informative_csv), label_column="label", positive_rule="1", lam=2.0
    )
    return run_experiment(cfg)
