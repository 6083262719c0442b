"""Renderer tests.

The fixture data is produced by the experiment tool's own CLI (the file
interface this package consumes), with sizes chosen so the whole suite runs
in well under a minute while exercising every figure kind, including the
echo-grid diagonal property on a grid that reaches J t = 40.
"""

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from figrender import EXPECTED_HEADERS, FigureSpec, RenderError, render
from figrender.cli import main

_CONFIGS = {
    "grid": {
        "kind": "echo-grid",
        "seed": 61,
        "n_bath": 6,
        "t1": {"start": 2.0, "stop": 40.0, "num": 20},
        "t2": {"start": 2.0, "stop": 40.0, "num": 20},
    },
    "recover": {"kind": "recover", "seed": 62, "n_bath": 5, "t1": 12.0, "t2": 12.0},
    "fluct": {
        "kind": "fluctuation-scaling",
        "seed": 63,
        "n_qubits": [4, 5, 6],
        "layers": 60,
        "samples": 30,
    },
    "classical": {
        "kind": "classical-butterfly",
        "seed": 64,
        "n_bath": 10,
        "t1": 4.0,
        "dt": 0.001,
        "ensemble": 2,
        "record_stride": 50,
    },
}


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("artifacts")
    for name, cfg in _CONFIGS.items():
        cfg_path = root / f"{name}.json"
        cfg_path.write_text(json.dumps(cfg))
        proc = subprocess.run(
            [sys.executable, "-m", "unscramble.cli", cfg["kind"],
             "--config", str(cfg_path), "--out", str(root / name)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
    return root


def test_all_five_kinds_render(artifacts, tmp_path):
    jobs = [
        ("heatmap", [artifacts / "grid_grid.csv"]),
        ("trajectory", [artifacts / "classical_unmeasured.csv", artifacts / "classical_measured.csv"]),
        ("barchart", [artifacts / "recover_recovery.csv"]),
        ("scatter", [artifacts / "fluct_runs_nq6.csv", artifacts / "fluct_scaling.json"]),
        ("scaling", [artifacts / "fluct_scaling.csv", artifacts / "fluct_scaling.json"]),
    ]
    for kind, inputs in jobs:
        out = render(FigureSpec(kind=kind, inputs=tuple(inputs), output=tmp_path / f"{kind}.png"))
        assert out.exists() and out.stat().st_size > 1000


def test_render_is_deterministic(artifacts, tmp_path):
    spec_a = FigureSpec("heatmap", (artifacts / "grid_grid.csv",), tmp_path / "a.png")
    spec_b = FigureSpec("heatmap", (artifacts / "grid_grid.csv",), tmp_path / "b.png")
    render(spec_a)
    render(spec_b)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_echo_grid_diagonal_is_rowwise_maximum(artifacts):
    # The t1 = t2 cell must be the largest entry of its row for J t1 >= 20.
    with (artifacts / "grid_grid.csv").open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    by_t1: dict[float, dict[float, float]] = {}
    for r in rows:
        by_t1.setdefault(float(r["t1"]), {})[float(r["t2"])] = float(r["prob"])
    checked = 0
    for t1, row in by_t1.items():
        if t1 < 20.0:
            continue
        best_t2 = max(row, key=row.get)
        assert best_t2 == pytest.approx(t1), f"row t1={t1}: max at t2={best_t2}"
        checked += 1
    assert checked >= 10


def test_header_mismatch_names_expectation(artifacts, tmp_path):
    with pytest.raises(RenderError, match="t1,t2,prob"):
        render(FigureSpec("heatmap", (artifacts / "classical_measured.csv",), tmp_path / "x.png"))


def test_empty_data_is_an_explicit_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("t1,t2,prob\n")
    with pytest.raises(RenderError, match="no data rows"):
        render(FigureSpec("heatmap", (empty,), tmp_path / "x.png"))
    headerless = tmp_path / "zero.csv"
    headerless.write_text("")
    with pytest.raises(RenderError, match="empty"):
        render(FigureSpec("heatmap", (headerless,), tmp_path / "y.png"))


def test_missing_input_and_bad_kind(tmp_path):
    with pytest.raises(RenderError, match="does not exist"):
        render(FigureSpec("heatmap", (tmp_path / "ghost.csv",), tmp_path / "x.png"))
    with pytest.raises(RenderError, match="unknown figure kind"):
        FigureSpec("piechart", (tmp_path / "a.csv",), tmp_path / "x.png")
    with pytest.raises(RenderError, match="at least one input"):
        FigureSpec("heatmap", (), tmp_path / "x.png")


def test_incomplete_grid_rejected(tmp_path):
    partial = tmp_path / "partial.csv"
    partial.write_text("t1,t2,prob\n1.0,1.0,0.5\n1.0,2.0,0.5\n2.0,1.0,0.5\n")
    with pytest.raises(RenderError, match="not complete"):
        render(FigureSpec("heatmap", (partial,), tmp_path / "x.png"))


def test_cli_roundtrip(artifacts, tmp_path, capsys):
    out = tmp_path / "fig.png"
    rc = main([
        "--kind", "scaling",
        "--in", str(artifacts / "fluct_scaling.csv"),
        "--in", str(artifacts / "fluct_scaling.json"),
        "--out", str(out),
        "--title", "variance scaling",
    ])
    assert rc == 0
    assert out.exists()
    assert str(out) in capsys.readouterr().out


def test_cli_reports_errors(artifacts, tmp_path, capsys):
    rc = main([
        "--kind", "heatmap",
        "--in", str(artifacts / "recover_recovery.csv"),
        "--out", str(tmp_path / "bad.png"),
    ])
    assert rc == 1
    err = capsys.readouterr().err
    assert "does not match" in err


def test_expected_headers_cover_all_kinds():
    assert set(EXPECTED_HEADERS) == {"heatmap", "trajectory", "barchart", "scatter", "scaling"}
