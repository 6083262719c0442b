"""Classical control experiment: precessing unit spins with the same
coupling layout as the quantum bath model.

The central spin sees the field B^a = sum_i J[i,a] s_i^a and each bath spin
the field b_i^a = J[i,a] S^a; both precess as ds/dt = s x b.  Flipping the
sign of all couplings reverses the flow, which is how the time-reversed leg
of the protocol is realized.  The integrator is fixed-step RK4 with
per-step renormalization of every spin.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .states import BlochAxis

_UNIT_ATOL = 1e-9
_MAX_STEPS = 200_000_000


@dataclass(frozen=True)
class ClassicalSpinState:
    """Central unit vector plus an array of bath unit vectors."""

    central: np.ndarray
    bath: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.central, dtype=float)
        b = np.asarray(self.bath, dtype=float)
        object.__setattr__(self, "central", c)
        object.__setattr__(self, "bath", b)
        if c.shape != (3,):
            raise ValueError(f"central spin must be a 3-vector, got shape {c.shape}")
        if b.ndim != 2 or b.shape[1] != 3:
            raise ValueError(f"bath must have shape (n, 3), got {b.shape}")
        norms = np.concatenate(([np.linalg.norm(c)], np.linalg.norm(b, axis=1)))
        worst = np.abs(norms - 1.0).max()
        if worst > _UNIT_ATOL:
            raise ValueError(f"spins must be unit vectors (worst deviation {worst:.3e})")

    @property
    def n_bath(self) -> int:
        return self.bath.shape[0]

    def stacked(self) -> np.ndarray:
        return np.vstack((self.central[None, :], self.bath))

    @staticmethod
    def from_stacked(y: np.ndarray) -> "ClassicalSpinState":
        return ClassicalSpinState(y[0], y[1:])


@dataclass(frozen=True)
class ClassicalModel:
    """Couplings J[i, a] (same layout as the quantum bath model) and a time
    direction factor: sign=-1 flips every coupling, reversing the flow."""

    couplings: np.ndarray
    sign: float = 1.0

    def __post_init__(self) -> None:
        c = np.asarray(self.couplings, dtype=float)
        object.__setattr__(self, "couplings", c)
        if c.ndim != 2 or c.shape[1] != 3:
            raise ValueError(f"couplings must have shape (n, 3), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("couplings contain non-finite entries")
        if self.sign not in (1.0, -1.0):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def n_bath(self) -> int:
        return self.couplings.shape[0]

    def reversed(self) -> "ClassicalModel":
        return replace(self, sign=-self.sign)


@dataclass(frozen=True)
class Trajectory:
    """Sampled times and central-spin z component, plus the exact end state."""

    times: np.ndarray
    central_z: np.ndarray
    final_state: ClassicalSpinState

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        z = np.asarray(self.central_z, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "central_z", z)
        if t.shape != z.shape:
            raise ValueError("times and central_z must have equal lengths")
        if z.size and np.abs(z).max() > 1 + _UNIT_ATOL:
            raise ValueError("|central z component| exceeds 1")


def _stacked_derivative(y: np.ndarray, couplings: np.ndarray, sign: float) -> np.ndarray:
    # y has shape (..., n_bath + 1, 3); index 0 is the central spin.
    central = y[..., :1, :]
    bath = y[..., 1:, :]
    field_central = (couplings * bath).sum(axis=-2, keepdims=True)
    field_bath = couplings * central
    dy = np.empty_like(y)
    dy[..., :1, :] = np.cross(central, field_central)
    dy[..., 1:, :] = np.cross(bath, field_bath)
    if sign != 1.0:
        dy *= sign
    return dy


def derivative(state: ClassicalSpinState, model: ClassicalModel) -> np.ndarray:
    """Rates of change, stacked as rows [central; bath_1; ...; bath_n]."""
    if state.n_bath != model.n_bath:
        raise ValueError("state and model disagree on the bath size")
    return _stacked_derivative(state.stacked(), model.couplings, model.sign)


def _rk4_step(y: np.ndarray, couplings: np.ndarray, sign: float, dt: float) -> np.ndarray:
    k1 = _stacked_derivative(y, couplings, sign)
    k2 = _stacked_derivative(y + (dt / 2.0) * k1, couplings, sign)
    k3 = _stacked_derivative(y + (dt / 2.0) * k2, couplings, sign)
    k4 = _stacked_derivative(y + dt * k3, couplings, sign)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    y /= np.linalg.norm(y, axis=-1, keepdims=True)
    return y


def _integrate_stacked(
    y: np.ndarray, couplings: np.ndarray, sign: float, steps: int, dt: float
) -> np.ndarray:
    for _ in range(steps):
        y = _rk4_step(y, couplings, sign, dt)
    return y


def energy(state: ClassicalSpinState, model: ClassicalModel) -> float:
    """sum_i,a J[i,a] S^a s_i^a (independent of the time-direction sign)."""
    return float((model.couplings * state.bath * state.central[None, :]).sum())


def integrate(
    state: ClassicalSpinState,
    model: ClassicalModel,
    duration: float,
    dt: float,
    record_stride: int = 1,
) -> Trajectory:
    """Fixed-step RK4 for ``duration``, renormalizing every spin each step.

    ``record_stride`` thins the recorded samples; the first and last points
    are always present.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if state.n_bath != model.n_bath:
        raise ValueError("state and model disagree on the bath size")
    steps = int(round(duration / dt))
    if steps > _MAX_STEPS:
        raise ValueError(f"{steps} steps exceed the step-count guard {_MAX_STEPS}")
    y = state.stacked()
    times = [0.0]
    zs = [float(y[0, 2])]
    for k in range(1, steps + 1):
        y = _rk4_step(y, model.couplings, model.sign, dt)
        if k % record_stride == 0 or k == steps:
            times.append(k * dt)
            zs.append(float(y[0, 2]))
    return Trajectory(np.array(times), np.array(zs), ClassicalSpinState.from_stacked(y))


def invasive_measure(
    spin: np.ndarray, axis: BlochAxis, rng: np.random.Generator
) -> np.ndarray:
    """Reset a unit spin to +-axis: +axis with probability cos^2(theta/2)
    where theta is the angle between spin and axis."""
    spin = np.asarray(spin, dtype=float)
    p_plus = (1.0 + float(spin @ axis.vector)) / 2.0
    return axis.vector if rng.random() < p_plus else -axis.vector


def random_state(n_bath: int, rng: np.random.Generator) -> ClassicalSpinState:
    """Central spin along +z, bath spins uniform on the sphere."""
    raw = rng.standard_normal((n_bath, 3))
    bath = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    return ClassicalSpinState(np.array([0.0, 0.0, 1.0]), bath)


def run_classical_protocol(
    model: ClassicalModel,
    t1: float,
    dt: float,
    measure: bool,
    bob_axis: BlochAxis,
    rng: np.random.Generator,
    record_stride: int = 1,
) -> Trajectory:
    """Forward for t1, optionally an invasive central-spin measurement, then
    the sign-flipped evolution for another t1; records S^z over [0, 2 t1].

    The central spin starts along +z; bath spins start in random directions
    drawn from ``rng``.
    """
    state = random_state(model.n_bath, rng)
    fwd = integrate(state, model, t1, dt, record_stride)
    mid = fwd.final_state
    if measure:
        mid = ClassicalSpinState(invasive_measure(mid.central, bob_axis, rng), mid.bath)
    back = integrate(mid, model.reversed(), t1, dt, record_stride)
    times = np.concatenate((fwd.times, t1 + back.times[1:]))
    zs = np.concatenate((fwd.central_z, back.central_z[1:]))
    return Trajectory(times, zs, back.final_state)


def butterfly_ensemble(
    model: ClassicalModel,
    t1: float,
    dt: float,
    n_members: int,
    rng: np.random.Generator,
    measure: bool = True,
    bob_axis: BlochAxis | None = None,
) -> np.ndarray:
    """Final central S^z after the full protocol for an ensemble of runs.

    Members share the couplings but draw their own bath directions,
    measurement axis (when ``bob_axis`` is None) and measurement outcome
    from per-member derived streams; the batch integration is numerically
    identical to running members one at a time.
    """
    streams = rng.spawn(n_members)
    ys = np.empty((n_members, model.n_bath + 1, 3))
    for m, g in enumerate(streams):
        ys[m] = random_state(model.n_bath, g).stacked()
    steps = int(round(t1 / dt))
    if steps > _MAX_STEPS:
        raise ValueError(f"{steps} steps exceed the step-count guard {_MAX_STEPS}")
    ys = _integrate_stacked(ys, model.couplings, model.sign, steps, dt)
    if measure:
        for m, g in enumerate(streams):
            axis = bob_axis if bob_axis is not None else BlochAxis.random(g)
            ys[m, 0] = invasive_measure(ys[m, 0], axis, g)
    ys = _integrate_stacked(ys, model.couplings, -model.sign, steps, dt)
    return ys[:, 0, 2].copy()
