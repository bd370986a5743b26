import csv
import json
import math

import numpy as np
import pytest

from treelets.cli import CsvParseError, main, read_csv


def run(argv):
    return main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_treelet_correlated_pair(correlated_pair_csv, tmp_path):
    out = tmp_path / "out"
    assert run(["treelet", correlated_pair_csv, "--out", out, "--basis-level", 0]) == 0
    model = json.loads((out / "model.json").read_text())
    assert model["dim"] == 2 and len(model["rotations"]) == 1
    rot = model["rotations"][0]
    # cov [[v, 2v], [2v, 4v]] is not scale-balanced, so the angle is atan(2) folded
    assert math.atan2(rot["s"], rot["c"]) == pytest.approx(0.5 * math.atan2(4, -3) - math.pi / 2)
    basis = np.loadtxt(out / "basis_level_0.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(basis, np.eye(2))
    assert (out / "basis_level_0.csv").read_text().splitlines()[0] == "a,b"


def test_treelet_equal_scale_pair_is_45_degrees(tmp_path):
    rng = np.random.default_rng(3)
    x = rng.standard_normal(25)
    path = tmp_path / "eq.csv"
    np.savetxt(path, np.column_stack([x, x]), delimiter=",", header="u,v", comments="")
    assert run(["treelet", path, "--out", tmp_path / "o"]) == 0
    rot = json.loads((tmp_path / "o" / "model.json").read_text())["rotations"][0]
    assert math.atan2(rot["s"], rot["c"]) == pytest.approx(math.pi / 4)


def test_treelet_basis_level(tmp_path, blocks_csv):
    out = tmp_path / "o"
    assert run(["treelet", blocks_csv, "--out", out, "--basis-level", 3, "--max-level", 4]) == 0
    B = np.loadtxt(out / "basis_level_3.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(B @ B.T, np.eye(7), atol=1e-12)


def test_missing_header(tmp_path, capsys):
    path = tmp_path / "nohdr.csv"
    path.write_text("1,2\n3,4\n5,6\n")
    with pytest.raises(CsvParseError) as exc:
        read_csv(path)
    assert exc.value.line == 1
    assert run(["treelet", path, "--out", tmp_path / "o"]) == 2
    assert "line 1" in capsys.readouterr().err


def test_malformed_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3,x\n")
    with pytest.raises(CsvParseError) as exc:
        read_csv(path)
    assert exc.value.line == 3
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(CsvParseError) as exc:
        read_csv(path)
    assert exc.value.line == 3
    path.write_text("a,b\n1,2\n")
    with pytest.raises(CsvParseError):
        read_csv(path)


def test_degenerate_column_named(tmp_path, capsys):
    path = tmp_path / "deg.csv"
    path.write_text("alpha,beta\n1,5\n2,5\n3,5\n")
    assert run(["treelet", path, "--out", tmp_path / "o"]) == 2
    assert "'beta'" in capsys.readouterr().err


def test_eiv_sweep_no_signal(tmp_path, capsys):
    out = tmp_path / "o"
    args = ["eiv-sweep", "--p", 10, "--c-grid", "0", "--reps", 5, "--n-train", 200, "--n-test", 2000, "--out", out]
    assert run(args) == 0
    assert capsys.readouterr().out.startswith("c=0 ")
    rows = read_rows(out / "sweep.csv")
    assert len(rows) == 4
    for r in rows:
        assert abs(float(r["mse_mean"]) - 2.0) <= 3 * float(r["mse_se"]) + 0.03
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 0 and report["spec"]["p"] == 10


def test_eiv_sweep_rejects_single_replicate(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["eiv-sweep", "--reps", 1, "--out", tmp_path])
    assert exc.value.code == 2


def test_eiv_sweep_small_default_grid_oracle_minimal(tmp_path):
    out = tmp_path / "o"
    assert run(["eiv-sweep", "--p", 12, "--reps", 4, "--n-test", 500, "--out", out]) == 0
    rows = read_rows(out / "sweep.csv")
    assert len(rows) == 6 * 4
    by_c = {}
    for r in rows:
        by_c.setdefault(r["c"], []).append(r)
    for cell in by_c.values():
        oracle = next(r for r in cell if r["method"] == "oracle")
        for r in cell:
            tol = 3 * math.hypot(float(oracle["mse_se"]), float(r["mse_se"]))
            assert float(oracle["mse_mean"]) <= float(r["mse_mean"]) + tol


@pytest.mark.parametrize("extra", [[], ["--c1", 0, "--c2", 0], ["--p", 9, "--sigma", 0.3, "--seed", 5]])
def test_ident_demo_passes(tmp_path, extra):
    out = tmp_path / "o"
    assert run(["ident-demo", "--out", out, *extra]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["max_cov_diff"] <= 1e-12 and report["trees_identical"] and report["pass"]


def test_ident_demo_negative_control(tmp_path):
    out = tmp_path / "o"
    assert run(["ident-demo", "--out", out, "--perturb", 0.05]) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["max_cov_diff"] > 1e-3 and not report["pass"]


def test_hier_planted_fixture(planted_csv, tmp_path):
    out = tmp_path / "o"
    assert run(["hier", planted_csv, "--out", out]) == 0
    selected = [r["expression"] for r in read_rows(out / "selected.csv")]
    assert "(x1*x2)" in selected
    trace = json.loads((out / "trace.json").read_text())
    gen = trace["generations"][0]
    assert set(gen) == {"m", "dict_size", "selected", "train_mse", "holdout_mse"}


def test_hier_max_gen_zero(planted_csv, tmp_path):
    out = tmp_path / "o"
    assert run(["hier", planted_csv, "--max-gen", 0, "--out", out]) == 0
    assert len(json.loads((out / "trace.json").read_text())["generations"]) == 1


def test_hier_pair_pca_blocks(blocks_csv, tmp_path):
    out = tmp_path / "o"
    assert run(["hier", blocks_csv, "--op", "pair_pca", "--K", 2, "--selector", "forward_stepwise", "--out", out]) == 0
    selected = [r["expression"] for r in read_rows(out / "selected.csv")]
    assert any(e.startswith("pc1(") for e in selected)


def test_hier_unknown_response(planted_csv, tmp_path):
    assert run(["hier", planted_csv, "--y-col", "target", "--out", tmp_path / "o"]) == 2


def test_config_reproduces_run(blocks_csv, tmp_path):
    first = tmp_path / "a"
    assert run(["hier", blocks_csv, "--op", "pair_pca", "--seed", 3, "--out", first]) == 0
    second = tmp_path / "b"
    assert run(["hier", blocks_csv, "--config", first / "manifest.json", "--out", second]) == 0
    for name in ("trace.json", "selected.csv", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["command"] == "hier" and manifest["seed"] == 3
    assert manifest["params"]["op"] == "pair_pca"


def test_config_for_other_command_rejected(tmp_path):
    assert run(["ident-demo", "--out", tmp_path / "a"]) == 0
    with pytest.raises(SystemExit) as exc:
        run(["eiv-sweep", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b"])
    assert exc.value.code == 2
