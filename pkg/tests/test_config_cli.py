from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from unscramble.cli import main
from unscramble.config import ConfigError, grid_values, load_config, parse_config
from unscramble.runner import run_experiment


def _echo_config(**overrides):
    base = {
        "kind": "echo-grid",
        "seed": 7,
        "n_bath": 3,
        "t1": [0.5, 1.0, 1.5],
        "t2": [0.5, 1.0],
    }
    base.update(overrides)
    return base


def test_parse_minimal_config():
    cfg = parse_config(_echo_config())
    assert cfg.kind == "echo-grid"
    assert cfg.seed == 7
    assert cfg.params["j_std"] == 1.0
    assert cfg.params["bob_axis"] == "random"


def test_missing_seed_names_field():
    data = _echo_config()
    del data["seed"]
    with pytest.raises(ConfigError, match="'seed'"):
        parse_config(data)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="'n_batth'"):
        parse_config(_echo_config(n_batth=3))


def test_missing_required_kind_field():
    data = _echo_config()
    del data["t1"]
    with pytest.raises(ConfigError, match="'t1'"):
        parse_config(data)


def test_nested_field_paths_in_errors():
    with pytest.raises(ConfigError, match="t1.num"):
        parse_config(_echo_config(t1={"start": 0.0, "stop": 1.0, "num": 1}))
    with pytest.raises(ConfigError, match="t2"):
        parse_config(_echo_config(t2={"start": 0.0, "stop": 1.0}))
    with pytest.raises(ConfigError, match="bob_axis"):
        parse_config(_echo_config(bob_axis=[0.0, 0.0]))
    with pytest.raises(ConfigError, match="bob_axis"):
        parse_config(_echo_config(bob_axis=[0.0, 0.0, 0.0]))
    with pytest.raises(ConfigError, match="seed"):
        parse_config(_echo_config(seed="twelve"))
    with pytest.raises(ConfigError, match="kind"):
        parse_config({"kind": "unknown-thing", "seed": 1})


def test_round_trip_identity(tmp_path):
    cfg = parse_config(_echo_config(bob_axis=[0.0, 1.0, 0.0], workers=2, out="pfx"))
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    again = load_config(path)
    assert again == cfg


def test_grid_values():
    assert grid_values([1.0, 2.0]) == [1.0, 2.0]
    vals = grid_values({"start": 0.0, "stop": 1.0, "num": 3})
    assert vals == [0.0, 0.5, 1.0]


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(bad)


def _run(tmp_path, data, name, **kw):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(data))
    cfg = load_config(cfg_path)
    return run_experiment(cfg, out_prefix=str(tmp_path / name), **kw)


def test_run_writes_outputs_and_manifest(tmp_path):
    manifest_path = _run(tmp_path, _echo_config(), "run")
    manifest = json.loads(manifest_path.read_text())
    assert manifest["config"]["kind"] == "echo-grid"
    assert manifest["version"]
    grid = tmp_path / "run_grid.csv"
    lines = grid.read_text().splitlines()
    assert lines[0] == "t1,t2,prob"
    assert len(lines) == 1 + 3 * 2
    # Checksums in the manifest match the files on disk.
    for name, digest in manifest["outputs"].items():
        payload = (tmp_path / name).read_bytes()
        assert hashlib.sha256(payload).hexdigest() == digest
    # Shortest round-trip float formatting: values parse back exactly.
    for line in lines[1:]:
        t1, t2, p = line.split(",")
        assert repr(float(p)) == p


def test_rerun_is_byte_identical(tmp_path):
    _run(tmp_path, _echo_config(), "a")
    _run(tmp_path, _echo_config(), "b")
    assert (tmp_path / "a_grid.csv").read_bytes() == (tmp_path / "b_grid.csv").read_bytes()


def test_seed_changes_output_but_not_statistics(tmp_path):
    data = _echo_config(n_bath=4, t1=[12.0, 16.0], t2=[12.0, 16.0])
    _run(tmp_path, data, "s1")
    _run(tmp_path, data, "s2", seed=12345)
    a = (tmp_path / "s1_grid.csv").read_bytes()
    b = (tmp_path / "s2_grid.csv").read_bytes()
    assert a != b

    def diag_mean(raw):
        rows = [line.split(",") for line in raw.decode().splitlines()[1:]]
        return np.mean([float(p) for t1, t2, p in rows if t1 == t2])

    # Different couplings, same physics: saturated diagonals stay comparable.
    assert abs(diag_mean(a) - diag_mean(b)) < 0.15


def test_worker_count_does_not_change_bytes(tmp_path):
    grid = _echo_config(n_bath=3, t1=[0.5, 1.0, 1.5, 2.0], t2=[1.0, 2.0])
    _run(tmp_path, grid, "w1", workers=1)
    _run(tmp_path, grid, "w3", workers=3)
    assert (tmp_path / "w1_grid.csv").read_bytes() == (tmp_path / "w3_grid.csv").read_bytes()

    fluct = {"kind": "fluctuation-scaling", "seed": 3, "n_qubits": [4, 5, 6], "layers": 30, "samples": 30}
    _run(tmp_path, fluct, "f1", workers=1)
    _run(tmp_path, fluct, "f4", workers=4)
    for suffix in ("runs_nq4.csv", "runs_nq5.csv", "scaling.csv"):
        assert (tmp_path / f"f1_{suffix}").read_bytes() == (tmp_path / f"f4_{suffix}").read_bytes()


def test_workers_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("UNSCRAMBLE_WORKERS", "2")
    _run(tmp_path, _echo_config(), "env")
    monkeypatch.setenv("UNSCRAMBLE_WORKERS", "zebra")
    with pytest.raises(ValueError, match="UNSCRAMBLE_WORKERS"):
        _run(tmp_path, _echo_config(), "envbad")


def test_cli_main_success_and_seed_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(_echo_config()))
    out = str(tmp_path / "cli")
    assert main(["echo-grid", "--config", str(cfg), "--out", out, "--seed", "99"]) == 0
    printed = capsys.readouterr().out.strip()
    assert printed.endswith("cli_manifest.json")
    manifest = json.loads(Path(printed).read_text())
    assert manifest["config"]["seed"] == 99


def test_cli_kind_mismatch(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(_echo_config()))
    assert main(["recover", "--config", str(cfg)]) == 1
    assert "kind" in capsys.readouterr().err


def test_cli_missing_config(tmp_path, capsys):
    assert main(["recover", "--config", str(tmp_path / "ghost.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_schema_error_is_reported(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "echo-grid", "n_bath": 3}))
    assert main(["echo-grid", "--config", str(cfg)]) == 1
    assert "seed" in capsys.readouterr().err


def test_recover_run_outputs(tmp_path):
    data = {"kind": "recover", "seed": 2, "n_bath": 3, "t1": 6.0, "t2": 6.0, "shots": 512}
    _run(tmp_path, data, "rec")
    csv_lines = (tmp_path / "rec_recovery.csv").read_text().splitlines()
    assert csv_lines[0] == "axis,prob_plus"
    assert [line.split(",")[0] for line in csv_lines[1:]] == ["x", "y", "z"]
    payload = json.loads((tmp_path / "rec_recovery.json").read_text())
    assert set(payload) >= {"fidelity", "rho_f", "rho_i", "tomography"}
    assert payload["tomography"]["shots"] == 512
    rho_i = np.array(payload["rho_i"]["re"]) + 1j * np.array(payload["rho_i"]["im"])
    assert abs(np.trace(rho_i) - 1.0) < 1e-10


def test_classical_run_outputs(tmp_path):
    data = {
        "kind": "classical-butterfly", "seed": 2, "n_bath": 4,
        "t1": 1.0, "dt": 0.001, "ensemble": 3, "record_stride": 100,
    }
    _run(tmp_path, data, "cb")
    for name in ("cb_measured.csv", "cb_unmeasured.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == "t,central_z"
        assert float(lines[1].split(",")[1]) == 1.0
    stats = json.loads((tmp_path / "cb_butterfly.json").read_text())
    assert abs(stats["unmeasured_final_z"] - 1.0) < 1e-5
