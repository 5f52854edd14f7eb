import filecmp
import json
from pathlib import Path

import pytest

from reluflow import cli


def run(args):
    assert cli.main(args) == 0


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_certify_deterministic(tmp_path, capsys):
    args = [
        "certify", "--n", "12", "--d0", "4", "--d1", "32", "--seed", "5",
    ]
    for out in ("a.json", "b.json"):
        run(args + ["--out", str(tmp_path / out)])
    capsys.readouterr()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    payload = json.loads((tmp_path / "a.json").read_text())
    assert "F_value" in payload and "constants" in payload
    assert payload["meta"]["d1"] == 32


def test_certify_from_dataset_file(tmp_path, capsys):
    from reluflow import data

    x = data.sample_sphere_rows(8, 3, seed=1)
    y = data.gen_labels(8, 1, "pm_one", seed=2)
    data.save_dataset(data.Dataset(X=x, Y=y, seed=1), tmp_path / "ds.csv")
    run([
        "certify", "--data", str(tmp_path / "ds.csv"), "--d1", "16",
        "--out", str(tmp_path / "cert.json"),
    ])
    capsys.readouterr()
    payload = json.loads((tmp_path / "cert.json").read_text())
    assert payload["meta"]["N"] == 8


def test_ode_sweep_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        run([
            "ode-sweep", "--alpha-min", "2.042", "--alpha-max", "2.045",
            "--points", "4", "--out-csv", str(d / "sweep.csv"),
            "--svg", str(d / "sweep.svg"),
        ])
    capsys.readouterr()
    for name in ("sweep.csv", "sweep.meta.json", "sweep.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes(), name
    header = (tmp_path / "a" / "sweep.csv").read_text().splitlines()[0]
    assert header == "alpha,condition_value,class,sup_y,t_blow"


def test_train_deterministic(tmp_path, capsys):
    base = [
        "train", "--n", "12", "--d0", "4", "--d1", "16", "--seed", "3",
        "--eta", "0.01", "--batch", "4", "--momentum", "0.9",
        "--steps", "60", "--thin", "10",
    ]
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        run(base + ["--out-csv", str(d / "traj.csv")])
    capsys.readouterr()
    assert (tmp_path / "a" / "traj.csv").read_bytes() == (
        tmp_path / "b" / "traj.csv"
    ).read_bytes()
    assert (tmp_path / "a" / "traj.json").read_bytes() == (
        tmp_path / "b" / "traj.json"
    ).read_bytes()
    header = (tmp_path / "a" / "traj.csv").read_text().splitlines()[0]
    assert header == "k,t,loss,theta_dist,w_dist,alpha0,zeros"


def test_train_w_only_layer_flag(tmp_path, capsys):
    run([
        "train", "--n", "8", "--d0", "4", "--d1", "8", "--init", "fixed-signs",
        "--eta", "0.01", "--steps", "20", "--layers", "w-only",
        "--out-csv", str(tmp_path / "t.csv"),
    ])
    capsys.readouterr()
    summary = json.loads((tmp_path / "t.json").read_text())
    assert summary["config"]["layers"] == "w-only"


def test_spectral_deterministic(tmp_path, capsys):
    base = [
        "spectral", "--n", "10", "--d0", "5", "--d1", "32", "--beta-w", "0.3",
        "--n-mc", "500", "--trials", "3", "--k-max", "12", "--seed", "2",
    ]
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        run(base + [
            "--out-table", str(d / "hermite.csv"),
            "--out-json", str(d / "report.json"),
        ])
    capsys.readouterr()
    for name in ("hermite.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert set(rep) >= {"lambda_lower", "lambda_mc", "alpha_threshold", "concentration"}
    table = (tmp_path / "a" / "hermite.csv").read_text().splitlines()
    assert table[0] == "k,mu_k,ratio"
    assert len(table) == 14


def test_grid_deterministic_and_manifest(tmp_path, capsys):
    config = {
        "n_samples": 12,
        "d0_values": [4],
        "d1_values": [8, 16],
        "n_runs": 2,
        "train_mode": "both",
        "sgd": {"eta": 5e-4, "batch": 0, "momentum": 0.9},
        "max_iters": 200,
        "log_every": 20,
        "master_seed": 11,
        "track_differential": True,
    }
    cfg_path = tmp_path / "grid.json"
    cfg_path.write_text(json.dumps(config))
    for sub in ("a", "b"):
        run(["grid", "--config", str(cfg_path), "--out-dir", str(tmp_path / sub)])
    capsys.readouterr()
    ta = tree_bytes(tmp_path / "a")
    tb = tree_bytes(tmp_path / "b")
    assert ta.keys() == tb.keys()
    for name in ta:
        assert ta[name] == tb[name], name
    assert "cells.csv" in ta and "runs.csv" in ta and "manifest.json" in ta
    assert "metrics/d0_4_d1_8/run0.csv" in ta
    assert "figures/p_converge.svg" in ta
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config"] == config
    assert "cells.csv" in manifest["files"]
