import csv

import pytest

from conftest import make_mnist_files
from qprune.cli import main


def test_run_requires_valid_model(capsys):
    with pytest.raises(SystemExit):  # argparse rejects unknown choices
        main(["run", "--model", "vgg16", "--dataset", "mnist", "--field", "real"])


def test_bad_combo_exits_1(capsys):
    rc = main(["run", "--model", "lenet300", "--dataset", "cifar10", "--field", "real"])
    assert rc == 1
    assert "config error" in capsys.readouterr().err


def test_missing_data_dir_exits_2(tmp_path, capsys):
    rc = main([
        "run", "--model", "lenet12", "--dataset", "mnist", "--field", "real",
        "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "out"),
        "--trials", "1", "--epochs", "1",
    ])
    assert rc == 2
    assert "data error" in capsys.readouterr().err


def test_end_to_end_run_on_synthetic_mnist(tmp_path, capsys):
    data_dir = tmp_path / "mnist"
    make_mnist_files(data_dir, n_train=240, n_test=60)
    out_dir = tmp_path / "out"
    rc = main([
        "run", "--model", "lenet12", "--dataset", "mnist", "--field", "quat",
        "--data", str(data_dir), "--out", str(out_dir),
        "--trials", "2", "--epochs", "1", "--rounds", "2", "--seed", "11",
        "--train-subset", "120",
    ])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "wrote" in captured
    with open(out_dir / "sparsity_sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [round(float(r["sparsity_fraction"]), 3) for r in rows] == [1.0, 0.8, 0.64]
    assert all(r["field"] == "quat" for r in rows)
    assert all(int(r["n_trials"]) == 2 for r in rows)


def test_determinism_byte_identical_csv(tmp_path):
    data_dir = tmp_path / "mnist"
    make_mnist_files(data_dir, n_train=120, n_test=60)
    blobs = []
    for name in ("run1", "run2"):
        out_dir = tmp_path / name
        rc = main([
            "run", "--model", "lenet12", "--dataset", "mnist", "--field", "real",
            "--data", str(data_dir), "--out", str(out_dir),
            "--trials", "1", "--epochs", "1", "--rounds", "1", "--seed", "3",
        ])
        assert rc == 0
        blobs.append((out_dir / "sparsity_sweep.csv").read_bytes())
    assert blobs[0] == blobs[1]


@pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
def test_all_trials_failing_exits_3(tmp_path, capsys):
    data_dir = tmp_path / "mnist"
    make_mnist_files(data_dir, n_train=120, n_test=30)
    rc = main([
        "run", "--model", "lenet12", "--dataset", "mnist", "--field", "real",
        "--data", str(data_dir), "--out", str(tmp_path / "out"),
        "--trials", "1", "--epochs", "1", "--rounds", "1", "--lr", "1e30",
    ])
    assert rc == 3
    assert "failed" in capsys.readouterr().err


def test_early_stop_flag_parses(tmp_path):
    data_dir = tmp_path / "mnist"
    make_mnist_files(data_dir, n_train=300, n_test=30)
    out_dir = tmp_path / "out"
    rc = main([
        "run", "--model", "lenet12", "--dataset", "mnist", "--field", "real",
        "--data", str(data_dir), "--out", str(out_dir),
        "--trials", "1", "--epochs", "1", "--rounds", "1", "--early-stop", "--patience", "2",
    ])
    assert rc == 0


def test_verify_subcommand_passes(capsys):
    rc = main(["verify", "--pairs", "500"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS hamilton-vs-matrix" in out
    assert "FAIL" not in out
    assert "param-count-table" in out
