"""Draw figures from the experiment tool's CSV/JSON outputs.

This renderer is a pure consumer: it validates headers, reshapes data for
plotting, and draws.  All statistics (probabilities, variances, fitted
slopes, theory values) come from the files it is given.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("heatmap", "trajectory", "barchart", "scatter", "scaling")

EXPECTED_HEADERS = {
    "heatmap": ["t1", "t2", "prob"],
    "trajectory": ["t", "central_z"],
    "barchart": ["axis", "prob_plus"],
    "scatter": ["run_index", "axis", "prob"],
    "scaling": ["n_q", "variance", "samples"],
}

# Echo-grid probabilities live between the fully scrambled value 1/2 and the
# recovered value 3/4; the color scale is pinned there for comparability.
HEATMAP_SCALE = (0.5, 0.75)


class RenderError(ValueError):
    """Input files do not match what the figure kind expects."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: kind, input data files, output image path, labels."""

    kind: str
    inputs: tuple[Path, ...]
    output: Path
    title: str | None = None
    labels: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise RenderError("at least one input file is required")
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "output", Path(self.output))


def _read_csv(path: Path, kind: str) -> list[dict[str, str]]:
    if not path.exists():
        raise RenderError(f"input file {path} does not exist")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RenderError(f"{path}: file is empty") from None
        expected = EXPECTED_HEADERS[kind]
        if header != expected:
            raise RenderError(
                f"{path}: header {','.join(header)!r} does not match the "
                f"{kind!r} kind (expected {','.join(expected)!r})"
            )
        rows = [dict(zip(expected, row)) for row in reader if row]
    if not rows:
        raise RenderError(f"{path}: no data rows after the header")
    return rows


def _csv_and_json_inputs(spec: FigureSpec) -> tuple[list[Path], Path | None]:
    csvs = [p for p in spec.inputs if p.suffix.lower() != ".json"]
    jsons = [p for p in spec.inputs if p.suffix.lower() == ".json"]
    if not csvs:
        raise RenderError("no CSV input given")
    if len(jsons) > 1:
        raise RenderError("at most one JSON sidecar is supported")
    return csvs, (jsons[0] if jsons else None)


def _load_json(path: Path) -> dict:
    if not path.exists():
        raise RenderError(f"input file {path} does not exist")
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


def _new_axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=120)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec: FigureSpec, xlabel: str, ylabel: str) -> Path:
    ax.set_xlabel(spec.labels.get("x", xlabel))
    ax.set_ylabel(spec.labels.get("y", ylabel))
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output


def _render_heatmap(spec: FigureSpec) -> Path:
    csvs, _ = _csv_and_json_inputs(spec)
    rows = _read_csv(csvs[0], "heatmap")
    t1 = sorted({float(r["t1"]) for r in rows})
    t2 = sorted({float(r["t2"]) for r in rows})
    grid = np.full((len(t1), len(t2)), np.nan)
    index1 = {v: i for i, v in enumerate(t1)}
    index2 = {v: j for j, v in enumerate(t2)}
    for r in rows:
        grid[index1[float(r["t1"])], index2[float(r["t2"])]] = float(r["prob"])
    if np.isnan(grid).any():
        raise RenderError(f"{csvs[0]}: grid is not complete over its t1 x t2 values")
    fig, ax = _new_axes(spec)
    mesh = ax.pcolormesh(
        t2, t1, grid, vmin=HEATMAP_SCALE[0], vmax=HEATMAP_SCALE[1],
        shading="nearest", cmap="viridis",
    )
    fig.colorbar(mesh, ax=ax, label="probability")
    return _finish(fig, ax, spec, "J t2", "J t1")


def _render_trajectory(spec: FigureSpec) -> Path:
    csvs, _ = _csv_and_json_inputs(spec)
    fig, ax = _new_axes(spec)
    for path in csvs:
        rows = _read_csv(path, "trajectory")
        t = np.array([float(r["t"]) for r in rows])
        z = np.array([float(r["central_z"]) for r in rows])
        ax.plot(t, z, label=path.stem)
    ax.set_ylim(-1.05, 1.05)
    if len(csvs) > 1:
        ax.legend()
    return _finish(fig, ax, spec, "J t", "central spin z component")


def _render_barchart(spec: FigureSpec) -> Path:
    csvs, _ = _csv_and_json_inputs(spec)
    fig, ax = _new_axes(spec)
    width = 0.8 / len(csvs)
    axes_order: list[str] = []
    for k, path in enumerate(csvs):
        rows = _read_csv(path, "barchart")
        for r in rows:
            if r["axis"] not in axes_order:
                axes_order.append(r["axis"])
        values = {r["axis"]: float(r["prob_plus"]) for r in rows}
        xs = [axes_order.index(a) + k * width for a in values]
        ax.bar(xs, list(values.values()), width=width, label=path.stem)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(axes_order))])
    ax.set_xticklabels(axes_order)
    ax.set_ylim(0.0, 1.0)
    if len(csvs) > 1:
        ax.legend()
    return _finish(fig, ax, spec, "final measurement axis", "probability of +1")


_SCATTER_MARKERS = {"z": "^", "x": "s", "y": "o"}


def _render_scatter(spec: FigureSpec) -> Path:
    csvs, sidecar = _csv_and_json_inputs(spec)
    rows = _read_csv(csvs[0], "scatter")
    fig, ax = _new_axes(spec)
    by_axis: dict[str, tuple[list[float], list[float]]] = {}
    for r in rows:
        xs, ys = by_axis.setdefault(r["axis"], ([], []))
        xs.append(float(r["run_index"]))
        ys.append(float(r["prob"]))
    for axis, (xs, ys) in by_axis.items():
        ax.scatter(xs, ys, s=14, marker=_SCATTER_MARKERS.get(axis, "."), label=axis)
    if sidecar is not None:
        theory = _load_json(sidecar).get("theory", {})
        for axis, value in theory.items():
            ax.axhline(float(value), lw=0.8, ls="--", color="gray")
    ax.set_ylim(0.0, 1.0)
    ax.legend(title="axis")
    return _finish(fig, ax, spec, "run index", "probability of +1")


def _render_scaling(spec: FigureSpec) -> Path:
    csvs, sidecar = _csv_and_json_inputs(spec)
    rows = _read_csv(csvs[0], "scaling")
    n_q = np.array([int(r["n_q"]) for r in rows])
    variance = np.array([float(r["variance"]) for r in rows])
    fig, ax = _new_axes(spec)
    ax.semilogy(n_q, variance, "^", ms=8, label="measured")
    if sidecar is not None:
        # Overlay uses the slope fitted by the experiment tool, anchored at
        # the first data point; no fitting happens here.
        slope = float(_load_json(sidecar)["slope"])
        xs = np.linspace(n_q.min(), n_q.max(), 50)
        ax.semilogy(xs, variance[0] * np.exp(slope * (xs - n_q[0])), "-",
                    label=f"slope {slope:.2f}")
    ax.legend()
    return _finish(fig, ax, spec, "number of qubits", "variance of final probability")


_RENDERERS = {
    "heatmap": _render_heatmap,
    "trajectory": _render_trajectory,
    "barchart": _render_barchart,
    "scatter": _render_scatter,
    "scaling": _render_scaling,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path."""
    return _RENDERERS[spec.kind](spec)
