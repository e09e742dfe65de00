import json
import subprocess
import sys

import numpy as np
import pytest

from mramsim.cli import main
from mramsim.data import TRAIN_IMAGES, TRAIN_LABELS, serialize_idx
from mramsim.mtj import NOMINAL_PARAMS, synthesize_loop


@pytest.fixture
def fake_mnist(tmp_path):
    """Small IDX pair whose class is encoded in a bright row of the digit window."""
    rng = np.random.default_rng(0)
    n = 300
    labels = rng.integers(0, 10, n).astype(np.uint8)
    images = rng.integers(0, 40, (n, 28, 28)).astype(np.uint8)
    for k, lab in enumerate(labels):
        images[k, 5 + lab, 4:24] = 255
    d = tmp_path / "mnist"
    d.mkdir()
    (d / TRAIN_IMAGES).write_bytes(serialize_idx(images))
    (d / TRAIN_LABELS).write_bytes(serialize_idx(labels))
    return d


def _config(tmp_path, data_dir, **network):
    cfg = {
        "data": {"data_dir": str(data_dir), "pool_size": 300},
        "network": {"n_hidden": 6, "iterations": 30, "reshuffles": 1, "k_range": "4..4",
                    "patience": 5, **network},
        "multicell": {"trials": 3, "n_devices": 3},
        "sweep": {"points_per_leg": 11},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_help_exits_zero():
    out = subprocess.run([sys.executable, "-m", "mramsim", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "experiment" in out.stdout


def test_fit_emits_six_keys(tmp_path, capsys):
    loop = tmp_path / "loop.csv"
    synthesize_loop(NOMINAL_PARAMS).write_csv(loop)
    assert main(["fit", str(loop)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == pytest.approx(NOMINAL_PARAMS.to_dict(), rel=1e-6)


def test_fit_malformed_csv_reports_line(tmp_path, capsys):
    loop = tmp_path / "loop.csv"
    loop.write_text("voltage_V,resistance_Ohm\n0.1,300\noops\n")
    assert main(["fit", str(loop)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert ":3:" in err["message"]


def test_config_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"network": {"k": 9}}))
    assert main(["train", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"nope": 1}))
    assert main(["train", "--config", str(bad)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert all(json.loads(line)["error"] == "config" for line in err)


def test_missing_data_is_runtime_error(tmp_path, capsys):
    cfg = _config(tmp_path, tmp_path / "absent")
    assert main(["train", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 3


def test_print_default_config(capsys):
    assert main(["config", "--print-default"]) == 0
    assert json.loads(capsys.readouterr().out)["multicell"]["trials"] == 300


def test_experiment_is_one_row_and_reproducible(tmp_path, fake_mnist):
    cfg = _config(tmp_path, fake_mnist)
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["experiment", "--config", str(cfg), "--out-dir", str(out), "--seed", "4"]) == 0
        outs.append(out)
    a = (outs[0] / "experiment.csv").read_bytes()
    assert a == (outs[1] / "experiment.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0] == "reshuffle,k,error_float,error_quantized"
    assert len(lines) == 2 and lines[1].startswith("0,4,")
    manifest = json.loads((outs[0] / "experiment-manifest.json").read_text())
    assert manifest["seed"] == 4 and len(manifest["config_hash"]) == 64


def test_train_quantize_eval_chain(tmp_path, fake_mnist):
    cfg = str(_config(tmp_path, fake_mnist))
    out = str(tmp_path / "run")
    assert main(["train", "--config", cfg, "--out-dir", out]) == 0
    assert main(["quantize", "--config", cfg, "--out-dir", out, "--k", "3"]) == 0
    qpath = tmp_path / "run" / "quantized_k3.json"
    assert json.loads(qpath.read_text())["format"] == "mramsim-qnet"
    assert main(["eval", "--config", cfg, "--out-dir", out, "--network", str(qpath)]) == 0
    rows = (tmp_path / "run" / "eval.csv").read_text().splitlines()
    assert rows[1].split(",")[1] == "quantized"


def test_sweep_and_montecarlo(tmp_path):
    cfg = str(_config(tmp_path, tmp_path))
    out = tmp_path / "mc"
    assert main(["montecarlo", "--config", cfg, "--out-dir", str(out)]) == 0
    summary = (out / "montecarlo_summary.csv").read_text().splitlines()
    assert sum(r.startswith("readout,") for r in summary) == 4
    assert main(["sweep", "--config", cfg, "--out-dir", str(out)]) == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 1 + 4 * 11 - 3


def test_inputs_not_mutated(tmp_path, fake_mnist):
    before = {p.name: p.read_bytes() for p in fake_mnist.iterdir()}
    cfg = _config(tmp_path, fake_mnist)
    main(["train", "--config", str(cfg), "--out-dir", str(tmp_path / "t")])
    assert before == {p.name: p.read_bytes() for p in fake_mnist.iterdir()}
