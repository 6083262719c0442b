"""Experiment execution: seeds, worker pool, CSV/JSON outputs, manifest.

Every piece of randomness is derived from the config seed through a fixed
spawn order, and worker pools only reorder *scheduling*, never results, so a
given (config, seed) pair produces byte-identical CSV files at any worker
count.  BLAS threading is pinned to one thread for the duration of a run for
the same reason.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .classical import ClassicalModel, butterfly_ensemble, run_classical_protocol
from .config import ExperimentConfig, grid_values
from .otoc import (
    OtocSpec,
    VarianceRecord,
    circuit_run_probabilities,
    haar_average_analytic,
    haar_average_mc,
    haar_fourth_moment_check,
    otoc_time_series,
    predicted_final_probability,
    scaling_fit,
)
from .protocol import (
    PAULI_SET,
    ProtocolConfig,
    echo_grid,
    pauli_set_averaged_probability,
    plus_bath,
    recover_with_tomography,
    run_protocol_density,
)
from .scramblers import NoHidingScrambler, SpinBathScrambler, sample_spin_bath
from .states import AXIS_X, AXIS_Y, AXIS_Z, BlochAxis

WORKERS_ENV = "UNSCRAMBLE_WORKERS"


def _fmt(value: Any) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_bytes(header: str, rows: Iterable[tuple]) -> bytes:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _json_bytes(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode("utf-8")


def _density_to_json(m: np.ndarray) -> dict[str, list[list[float]]]:
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _axis(spec: Any, rng: np.random.Generator) -> BlochAxis:
    """Materialize an axis spec; "random" consumes one draw from ``rng``."""
    if spec == "random":
        return BlochAxis.random(rng)
    return BlochAxis.normalized(*spec)


def resolve_workers(cfg: ExperimentConfig, override: int | None) -> int:
    if override is not None:
        return override
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    return cfg.workers if cfg.workers is not None else 1


def run_experiment(
    cfg: ExperimentConfig,
    out_prefix: str | None = None,
    workers: int | None = None,
    seed: int | None = None,
) -> Path:
    """Run one experiment and write its outputs; returns the manifest path.

    ``out_prefix`` is used as ``<prefix>_<name>.csv`` for every output file.
    """
    effective_seed = cfg.seed if seed is None else seed
    prefix = out_prefix or cfg.out or cfg.kind
    n_workers = resolve_workers(cfg, workers)
    runner = _RUNNERS[cfg.kind]

    started = time.perf_counter()
    with threadpool_limits(limits=1):
        outputs = runner(cfg.params, effective_seed, n_workers)
    duration = time.perf_counter() - started

    prefix_path = Path(prefix)
    if prefix_path.parent != Path("."):
        prefix_path.parent.mkdir(parents=True, exist_ok=True)
    checksums: dict[str, str] = {}
    for name, payload in outputs.items():
        path = Path(f"{prefix}_{name}")
        path.write_bytes(payload)
        checksums[path.name] = hashlib.sha256(payload).hexdigest()

    effective = dict(cfg.to_dict())
    effective["seed"] = effective_seed
    manifest = {
        "config": effective,
        "version": __version__,
        "duration_seconds": duration,
        "outputs": checksums,
    }
    manifest_path = Path(f"{prefix}_manifest.json")
    tmp = manifest_path.with_suffix(".json.tmp")
    tmp.write_bytes(_json_bytes(manifest))
    os.replace(tmp, manifest_path)
    return manifest_path


# ---------------------------------------------------------------------------
# per-experiment runners: params, seed, workers -> {filename suffix: bytes}
# ---------------------------------------------------------------------------


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _spin_bath_protocol(
    params: dict, seed: int, t1: float = 0.0, t2: float = 0.0
) -> ProtocolConfig:
    model_rng, axis_rng = _streams(seed, 2)
    model = sample_spin_bath(params["n_bath"], params["j_std"], model_rng)
    return ProtocolConfig(
        scrambler=SpinBathScrambler(model),
        init_axis=_axis(params.get("init_axis", [0, 0, 1.0]), axis_rng),
        bob=_axis(params["bob_axis"], axis_rng),
        alice_axis=_axis(params.get("alice_axis", [0, 0, 1.0]), axis_rng),
        t1=t1,
        t2=t2,
    )


def _run_echo(params: dict, seed: int, workers: int, time_reversed: bool) -> dict[str, bytes]:
    cfg = _spin_bath_protocol(params, seed)
    t1s = grid_values(params["t1"])
    t2s = grid_values(params["t2"])
    grid = echo_grid(cfg, t1s, t2s, time_reversed=time_reversed, workers=workers)
    rows = [
        (grid.t1[i], grid.t2[j], grid.prob[i, j])
        for i in range(grid.t1.size)
        for j in range(grid.t2.size)
    ]
    return {"grid.csv": _csv_bytes("t1,t2,prob", rows)}


def _run_echo_reversed(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    return _run_echo(params, seed, workers, time_reversed=True)


def _run_echo_forward(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    return _run_echo(params, seed, workers, time_reversed=False)


def _recovery_outputs(result, shots_result, shots) -> dict[str, bytes]:
    rows = [(axis, result.probabilities[axis]) for axis in ("x", "y", "z")]
    payload: dict[str, Any] = {
        "fidelity": result.fidelity,
        "rho_f": _density_to_json(result.final_state.matrix),
        "rho_i": _density_to_json(result.recovered.matrix),
        "tomography": None,
    }
    if shots_result is not None:
        payload["tomography"] = {
            "shots": shots,
            "fidelity": shots_result.fidelity,
            "rho_f": _density_to_json(shots_result.final_state.matrix),
            "rho_i": _density_to_json(shots_result.recovered.matrix),
        }
    return {
        "recovery.csv": _csv_bytes("axis,prob_plus", rows),
        "recovery.json": _json_bytes(payload),
    }


def _run_recover(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    cfg = _spin_bath_protocol(params, seed, t1=params["t1"], t2=params["t2"])
    result = run_protocol_density(cfg)
    shots = params.get("shots")
    shots_result = None
    if shots:
        _, _, shot_rng = _streams(seed, 3)
        shots_result = recover_with_tomography(replace(cfg, shots=shots), shot_rng)
    return _recovery_outputs(result, shots_result, shots)


def _run_nohiding(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    axis_rng, shot_rng = _streams(seed, 2)
    base = ProtocolConfig(
        scrambler=NoHidingScrambler(),
        init_axis=_axis(params["init_axis"], axis_rng),
        bob=PAULI_SET,
        bath=plus_bath(2),
        shots=params["shots"],
    )
    rows = []
    for label, axis in (("x", AXIS_X), ("y", AXIS_Y), ("z", AXIS_Z)):
        rows.append((label, pauli_set_averaged_probability(replace(base, alice_axis=axis))))
    exact = run_protocol_density(base)
    sampled = recover_with_tomography(base, shot_rng)
    payload = {
        "probabilities": {axis: p for axis, p in rows},
        "fidelity": sampled.fidelity,
        "shots": params["shots"],
        "rho_f": _density_to_json(sampled.final_state.matrix),
        "rho_i": _density_to_json(sampled.recovered.matrix),
        "exact_fidelity": exact.fidelity,
    }
    return {
        "recovery.csv": _csv_bytes("axis,prob_plus", rows),
        "recovery.json": _json_bytes(payload),
    }


def _run_otoc_series(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    model_rng, axis_rng = _streams(seed, 2)
    model = sample_spin_bath(params["n_bath"], params["j_std"], model_rng)
    spec = OtocSpec(
        w_axis=_axis(params["w_axis"], axis_rng),
        v_axis=_axis(params["v_axis"], axis_rng),
        f_axis=None if params["f_axis"] is None else _axis(params["f_axis"], axis_rng),
    )
    times = grid_values(params["times"])
    series = otoc_time_series(model, spec, times)
    return {"otoc.csv": _csv_bytes("t,otoc", zip(times, series))}


def _run_haar_check(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    mc_rng, tuple_rng, moment_rng = _streams(seed, 3)
    dim = params["dim"]
    report: dict[str, Any] = {"dim": dim, "otoc": [], "moments": []}
    for name, v_axis, f_axis in (
        ("parallel", AXIS_Z, AXIS_Z),
        ("orthogonal", AXIS_Z, AXIS_X),
    ):
        spec = OtocSpec(w_axis=AXIS_Z, v_axis=v_axis, f_axis=f_axis)
        est = haar_average_mc(spec, dim, params["samples"], mc_rng)
        report["otoc"].append(
            {
                "axes": name,
                "mc_mean": est.mean,
                "std_error": est.std_error,
                "samples": est.samples,
                "analytic": haar_average_analytic(spec, dim),
            }
        )
    for d in params["moment_dims"]:
        for _ in range(params["moment_tuples"]):
            indices = [int(i) for i in tuple_rng.integers(0, d, size=8)]
            est, analytic = haar_fourth_moment_check(
                d, indices, params["moment_samples"], moment_rng
            )
            report["moments"].append(
                {
                    "dim": d,
                    "indices": indices,
                    "mc_mean": est.mean,
                    "std_error": est.std_error,
                    "analytic": analytic,
                }
            )
    return {"haar.json": _json_bytes(report)}


def _run_fluctuation(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    n_list = params["n_qubits"]
    layers = params["layers"]
    samples = params["samples"]
    per_size = np.random.SeedSequence(seed).spawn(len(n_list))
    outputs: dict[str, bytes] = {}
    records = []
    for n_q, size_ss in zip(n_list, per_size):
        run_streams = [np.random.default_rng(s) for s in size_ss.spawn(samples)]

        def one(i: int) -> dict[str, float]:
            return circuit_run_probabilities(n_q, layers, run_streams[i])

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(one, range(samples)))
        else:
            runs = [one(i) for i in range(samples)]
        rows = [
            (i, axis, runs[i][axis]) for i in range(samples) for axis in ("z", "x", "y")
        ]
        outputs[f"runs_nq{n_q}.csv"] = _csv_bytes("run_index,axis,prob", rows)
        z_probs = [r["z"] for r in runs]
        mean = math.fsum(z_probs) / samples
        variance = math.fsum(p * p for p in z_probs) / samples - mean**2
        records.append(VarianceRecord(n_q, variance, samples))
    slope = scaling_fit(records)
    outputs["scaling.csv"] = _csv_bytes(
        "n_q,variance,samples",
        [(r.n_qubits, r.variance, r.samples) for r in records],
    )
    outputs["scaling.json"] = _json_bytes(
        {
            "slope": slope,
            "theory": {
                "z": predicted_final_probability(max(n_list)),
                "x": 0.5,
                "y": 0.5,
            },
            "records": [
                {"n_q": r.n_qubits, "variance": r.variance, "samples": r.samples}
                for r in records
            ],
        }
    )
    return outputs


def _run_classical(params: dict, seed: int, workers: int) -> dict[str, bytes]:
    model_ss, traj_ss, axis_ss, ens_ss = np.random.SeedSequence(seed).spawn(4)
    model_rng = np.random.default_rng(model_ss)
    couplings = model_rng.normal(0.0, params["j_std"], size=(params["n_bath"], 3))
    model = ClassicalModel(couplings)
    bob = _axis(params["measure_axis"], np.random.default_rng(axis_ss))
    t1, dt, stride = params["t1"], params["dt"], params["record_stride"]
    # Same trajectory stream for both runs: identical bath initial conditions,
    # with and without the intermediate measurement.
    unmeasured = run_classical_protocol(
        model, t1, dt, False, bob, np.random.default_rng(traj_ss), stride
    )
    measured = run_classical_protocol(
        model, t1, dt, True, bob, np.random.default_rng(traj_ss), stride
    )
    final_z = butterfly_ensemble(
        model, t1, dt, params["ensemble"], np.random.default_rng(ens_ss), measure=True
    )
    payload = {
        "ensemble": params["ensemble"],
        "mean_abs_deviation": float(np.mean(np.abs(final_z - 1.0))),
        "unmeasured_final_z": float(unmeasured.central_z[-1]),
        "measured_final_z": float(measured.central_z[-1]),
    }
    return {
        "unmeasured.csv": _csv_bytes("t,central_z", zip(unmeasured.times, unmeasured.central_z)),
        "measured.csv": _csv_bytes("t,central_z", zip(measured.times, measured.central_z)),
        "butterfly.json": _json_bytes(payload),
    }


_RUNNERS = {
    "echo-grid": _run_echo_reversed,
    "echo-grid-forward": _run_echo_forward,
    "recover": _run_recover,
    "nohiding": _run_nohiding,
    "otoc-series": _run_otoc_series,
    "haar-check": _run_haar_check,
    "fluctuation-scaling": _run_fluctuation,
    "classical-butterfly": _run_classical,
}
