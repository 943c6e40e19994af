import csv
from pathlib import Path

import pytest

from condensate_lab.cli import main

CONFIGS = Path(__file__).parents[1] / "configs"


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(
        'regime = "hartree"\nN_list = [2, 3]\n'
        "[lattice]\nM = 5\nL = 5.0\n"
        "[run]\nT = 0.2\ndt = 0.02\nstride = 5\n"
        '[interaction]\npreset = "gaussian"\nstrength = 1.0\n'
        "[scatter]\nN_list = [100]\nbeta1_list = [0.25]\nbeta2_list = [0.5]\n")
    return path


def test_converge_writes_summary(small_config, tmp_path):
    out = tmp_path / "conv"
    assert main(["converge", "--config", str(small_config), "--out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(open(out / "summary.csv")))
    assert [r["N"] for r in rows] == ["2", "3"]
    assert set(rows[0]) == {"N", "alpha_T", "envelope_T", "cond1", "cond2"}


def test_scatter_meanfield_report(small_config, tmp_path):
    for cmd in ("scatter", "meanfield", "report"):
        assert main([cmd, "--config", str(small_config), "--out", str(tmp_path / cmd), "--quiet"]) == 0
    header = (tmp_path / "scatter" / "scatter.csv").read_text().splitlines()[0].split(",")
    assert header[2:] == ["N", "a", "R_out", "l2_g", "l1_g", "bound_l2", "bound_l1",
                          "pointwise_ok", "lowest_eig"]
    assert (tmp_path / "meanfield" / "trajectory.csv").exists()
    assert (tmp_path / "report" / "envelope.csv").exists()


def test_missing_config(tmp_path, capsys):
    missing = tmp_path / "absent.toml"
    assert main(["converge", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_config_value(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("N_list = [3, 2]\n")
    assert main(["converge", "--config", str(bad), "--quiet"]) == 1
    bad.write_text("N_list = [\n")
    assert main(["converge", "--config", str(bad), "--quiet"]) == 1


@pytest.mark.parametrize("argv", [["frobnicate"], ["checks", "--nope"], []])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_numeric_failure_exit_code(tmp_path):
    cfg = tmp_path / "krylov.toml"
    cfg.write_text("N_list = [2]\nM = 5\nL = 5.0\nT = 0.1\ndt = 0.1\ntol = -1.0\nkrylov_dim = 2\n")
    assert main(["converge", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 2
