import csv

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record_acceptance(number, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])
    return path


@pytest.fixture
def planted_csv(tmp_path):
    """y = x1*x2 + 0.1 noise, 20 standard-normal predictors, 500 rows, seed 0."""
    rng = np.random.default_rng(0)
    X = rng.standard_normal((500, 20))
    y = X[:, 0] * X[:, 1] + 0.1 * rng.standard_normal(500)
    header = [f"x{i + 1}" for i in range(20)] + ["y"]
    return write_csv(tmp_path / "planted.csv", header, np.column_stack([X, y]))


@pytest.fixture
def blocks_csv(tmp_path):
    """Two blocks of three columns with within-block correlation 0.9; y loads on block one."""
    rng = np.random.default_rng(1)
    n = 400
    cols = []
    for _ in range(2):
        z = rng.standard_normal(n)
        for _ in range(3):
            cols.append(np.sqrt(0.9) * z + np.sqrt(0.1) * rng.standard_normal(n))
    X = np.column_stack(cols)
    y = X[:, 0] + X[:, 1] + X[:, 2] + 0.5 * rng.standard_normal(n)
    header = [f"x{i + 1}" for i in range(6)] + ["y"]
    return write_csv(tmp_path / "blocks.csv", header, np.column_stack([X, y]))


@pytest.fixture
def correlated_pair_csv(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.standard_normal(30)
    return write_csv(tmp_path / "pair.csv", ["a", "b"], np.column_stack([x, 2 * x]))
