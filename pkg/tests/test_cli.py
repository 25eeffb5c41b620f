import csv
import os

import pytest

from qpqc.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUN, _default_workers, main


def _write_config(path, dataset, arch="classical_parallel", extra=""):
    path.write_text(f"""
[model]
arch = {arch}
image_shape = 16x16x3
class_count = 4

[data]
path = {dataset}

[train]
epochs = 2
patience = 2
{extra}
""")
    return str(path)


def test_synth_data_requires_out():
    assert main(["synth-data"]) == EXIT_CONFIG


def test_synth_data_then_train_and_eval(tmp_path, capsys):
    data = str(tmp_path / "data")
    rc = main(["synth-data", "--out", data, "--shape", "16x16x3",
               "--classes", "4", "--per-class", "20", "--seed", "0"])
    assert rc == EXIT_OK
    assert os.path.exists(os.path.join(data, "manifest.csv"))

    ckpt = str(tmp_path / "best.ckpt")
    metrics = str(tmp_path / "metrics.csv")
    cfg = _write_config(tmp_path / "run.ini", data,
                        extra=f"checkpoint = {ckpt}")
    assert main(["train", "--config", cfg, "--out", metrics]) == EXIT_OK
    assert "best_val_acc" in capsys.readouterr().out
    assert os.path.exists(metrics) and os.path.exists(ckpt)

    assert main(["eval", "--config", cfg]) == EXIT_OK
    assert "val_acc" in capsys.readouterr().out


def test_train_rejects_unknown_key(tmp_path, ds4_100):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(f"[model]\narch = classical_parallel\n"
                   f"[data]\npath = {ds4_100}\n[train]\nepocks = 3\n")
    assert main(["train", "--config", str(cfg)]) == EXIT_CONFIG


def test_train_missing_dataset_is_config_error(tmp_path):
    cfg = _write_config(tmp_path / "run.ini", str(tmp_path / "nowhere"))
    assert main(["train", "--config", cfg]) == EXIT_CONFIG


def test_eval_without_checkpoint_entry(tmp_path, ds4_100):
    cfg = _write_config(tmp_path / "run.ini", ds4_100)
    assert main(["eval", "--config", cfg]) == EXIT_CONFIG


def test_eval_missing_checkpoint_file_is_run_error(tmp_path, ds4_100):
    cfg = _write_config(tmp_path / "run.ini", ds4_100,
                        extra=f"checkpoint = {tmp_path / 'absent.ckpt'}")
    assert main(["eval", "--config", cfg]) == EXIT_RUN


def test_param_count(tmp_path, ds4_100, capsys):
    cfg = tmp_path / "qcnn.ini"
    cfg.write_text(f"""
[model]
arch = qcnn
image_shape = 16x16x3
class_count = 4
fc_depth = deep

[encoding]
kind = amplitude

[data]
path = {ds4_100}
""")
    assert main(["param-count", "--config", str(cfg)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "268"


def test_sweep_grid_and_resume(tmp_path, ds4_100, capsys):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(f"""
[model]
arch = classical_parallel
image_shape = 16x16x3
class_count = 4

[data]
path = {ds4_100}

[train]
epochs = 2
patience = 2

[sweep]
seeds = 0, 1
""")
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep", "--config", str(cfg), "--out", out]) == EXIT_OK
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert {r["seed"] for r in rows} == {"0", "1"}
    # resuming recomputes nothing
    assert main(["sweep", "--config", str(cfg), "--out", out]) == EXIT_OK
    with open(out, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_sweep_requires_out(tmp_path, ds4_100):
    cfg = _write_config(tmp_path / "run.ini", ds4_100)
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG


def test_expressibility_csv(tmp_path, capsys):
    out = str(tmp_path / "expr.csv")
    assert main(["expressibility", "--pairs", "150", "--out", out,
                 "--seed", "0"]) == EXIT_OK
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12      # 3 variants x {4,8} qubits x t in {1,2}
    assert {r["variant"] for r in rows} == {"qaoa_x", "qaoa_y", "qaoa_z"}
    assert all(float(r["ratio"]) > 0 for r in rows)


def test_workers_default_from_environment(monkeypatch):
    monkeypatch.setenv("QPQC_WORKERS", "7")
    assert _default_workers() == 7
    monkeypatch.delenv("QPQC_WORKERS")
    assert _default_workers() == 1
