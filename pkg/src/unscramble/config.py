"""Experiment configuration files.

One JSON object per run.  ``kind`` selects the experiment, ``seed`` is
mandatory, and the remaining keys are kind-specific with defaults filled in
at load time.  Unknown keys are rejected so that typos fail loudly, and
every validation error names the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

KINDS = (
    "echo-grid",
    "echo-grid-forward",
    "recover",
    "nohiding",
    "otoc-series",
    "haar-check",
    "fluctuation-scaling",
    "classical-butterfly",
)


class ConfigError(ValueError):
    """Configuration file violates the schema; the message names the field."""


def _as_int(v: Any, path: str, minimum: int | None = None) -> int:
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _as_number(v: Any, path: str, minimum: float | None = None, positive: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {v}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _as_axis(v: Any, path: str) -> Any:
    """An axis is either the literal "random" or a 3-vector (normalized later)."""
    if v == "random":
        return "random"
    if isinstance(v, list) and len(v) == 3:
        vec = [_as_number(c, f"{path}[{i}]") for i, c in enumerate(v)]
        if sum(c * c for c in vec) <= 0:
            raise ConfigError(f"{path}: axis vector must be nonzero")
        return vec
    raise ConfigError(f'{path}: expected "random" or a 3-vector, got {v!r}')


def _as_grid(v: Any, path: str) -> Any:
    """A time grid: explicit list of numbers or {"start", "stop", "num"}."""
    if isinstance(v, list):
        if not v:
            raise ConfigError(f"{path}: grid list must not be empty")
        return [_as_number(c, f"{path}[{i}]", minimum=0.0) for i, c in enumerate(v)]
    if isinstance(v, dict):
        unknown = set(v) - {"start", "stop", "num"}
        if unknown:
            raise ConfigError(f"{path}: unknown grid keys {sorted(unknown)}")
        for key in ("start", "stop", "num"):
            if key not in v:
                raise ConfigError(f"{path}: missing grid key '{key}'")
        return {
            "start": _as_number(v["start"], f"{path}.start", minimum=0.0),
            "stop": _as_number(v["stop"], f"{path}.stop", minimum=0.0),
            "num": _as_int(v["num"], f"{path}.num", minimum=2),
        }
    raise ConfigError(f"{path}: expected a list or a start/stop/num object, got {v!r}")


def _as_int_list(v: Any, path: str, minimum: int) -> list[int]:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}: expected a nonempty list of integers")
    return [_as_int(c, f"{path}[{i}]", minimum=minimum) for i, c in enumerate(v)]


@dataclass(frozen=True)
class Field:
    parse: Callable[[Any, str], Any]
    default: Any = None
    required: bool = False


_AXIS_Z = [0.0, 0.0, 1.0]

_SPIN_BATH_FIELDS = {
    "n_bath": Field(lambda v, p: _as_int(v, p, minimum=1), required=True),
    "j_std": Field(lambda v, p: _as_number(v, p, positive=True), default=1.0),
}

_SCHEMAS: dict[str, dict[str, Field]] = {
    "echo-grid": {
        **_SPIN_BATH_FIELDS,
        "t1": Field(_as_grid, required=True),
        "t2": Field(_as_grid, required=True),
        "init_axis": Field(_as_axis, default=_AXIS_Z),
        "bob_axis": Field(_as_axis, default="random"),
        "alice_axis": Field(_as_axis, default=_AXIS_Z),
    },
    "recover": {
        **_SPIN_BATH_FIELDS,
        "t1": Field(lambda v, p: _as_number(v, p, minimum=0.0), default=20.0),
        "t2": Field(lambda v, p: _as_number(v, p, minimum=0.0), default=20.0),
        "init_axis": Field(_as_axis, default=_AXIS_Z),
        "bob_axis": Field(_as_axis, default="random"),
        "shots": Field(lambda v, p: _as_int(v, p, minimum=1)),
    },
    "nohiding": {
        "shots": Field(lambda v, p: _as_int(v, p, minimum=1), default=8192),
        "init_axis": Field(_as_axis, default=_AXIS_Z),
    },
    "otoc-series": {
        **_SPIN_BATH_FIELDS,
        "times": Field(_as_grid, required=True),
        "w_axis": Field(_as_axis, default="random"),
        "v_axis": Field(_as_axis, default=_AXIS_Z),
        "f_axis": Field(_as_axis),
    },
    "haar-check": {
        "dim": Field(lambda v, p: _as_int(v, p, minimum=2), default=8),
        "samples": Field(lambda v, p: _as_int(v, p, minimum=100), default=10000),
        "moment_dims": Field(lambda v, p: _as_int_list(v, p, minimum=2), default=[2, 4]),
        "moment_tuples": Field(lambda v, p: _as_int(v, p, minimum=1), default=10),
        "moment_samples": Field(lambda v, p: _as_int(v, p, minimum=100), default=30000),
    },
    "fluctuation-scaling": {
        "n_qubits": Field(lambda v, p: _as_int_list(v, p, minimum=2), default=[4, 5, 6, 7, 8]),
        "layers": Field(lambda v, p: _as_int(v, p, minimum=1), default=1000),
        "samples": Field(lambda v, p: _as_int(v, p, minimum=30), default=100),
    },
    "classical-butterfly": {
        "n_bath": Field(lambda v, p: _as_int(v, p, minimum=1), default=30),
        "j_std": Field(lambda v, p: _as_number(v, p, positive=True), default=1.0),
        "t1": Field(lambda v, p: _as_number(v, p, positive=True), default=20.0),
        "dt": Field(lambda v, p: _as_number(v, p, positive=True), default=1e-3),
        "measure_axis": Field(_as_axis, default="random"),
        "ensemble": Field(lambda v, p: _as_int(v, p, minimum=1), default=100),
        "record_stride": Field(lambda v, p: _as_int(v, p, minimum=1), default=20),
    },
}
_SCHEMAS["echo-grid-forward"] = _SCHEMAS["echo-grid"]


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description."""

    kind: str
    seed: int
    params: dict[str, Any] = field(default_factory=dict)
    out: str | None = None
    workers: int | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "seed": self.seed}
        if self.out is not None:
            d["out"] = self.out
        if self.workers is not None:
            d["workers"] = self.workers
        d.update(self.params)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def parse_config(data: Any) -> ExperimentConfig:
    """Validate a decoded JSON object against its kind's schema."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    if "kind" not in data:
        raise ConfigError("missing required field 'kind'")
    kind = data["kind"]
    if kind not in KINDS:
        raise ConfigError(f"kind: unknown experiment {kind!r}; expected one of {list(KINDS)}")
    if "seed" not in data:
        raise ConfigError("missing required field 'seed'")
    seed = _as_int(data["seed"], "seed", minimum=0)
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"out: expected a string, got {out!r}")
    workers = data.get("workers")
    if workers is not None:
        workers = _as_int(workers, "workers", minimum=1)

    schema = _SCHEMAS[kind]
    reserved = {"kind", "seed", "out", "workers"}
    unknown = set(data) - reserved - set(schema)
    if unknown:
        raise ConfigError(f"unknown field '{sorted(unknown)[0]}' for kind {kind!r}")
    params: dict[str, Any] = {}
    for name, spec in schema.items():
        if name in data:
            params[name] = spec.parse(data[name], name)
        elif spec.required:
            raise ConfigError(f"missing required field '{name}' for kind {kind!r}")
        else:
            params[name] = spec.default
    return ExperimentConfig(kind=kind, seed=seed, params=params, out=out, workers=workers)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a config file."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_config(data)


def grid_values(spec: Any) -> list[float]:
    """Materialize a validated grid spec into its list of times."""
    if isinstance(spec, list):
        return [float(v) for v in spec]
    import numpy as np

    return [float(v) for v in np.linspace(spec["start"], spec["stop"], spec["num"])]
