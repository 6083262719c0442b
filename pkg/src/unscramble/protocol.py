"""The scramble / measure / unscramble pipeline.

A run prepares the central qubit in a pure state along ``init_axis`` with the
bath in a configurable state, scrambles, lets Bob measure the central qubit
along his axis without recording the outcome, applies the decoding (adjoint)
unitary, and finally evaluates Alice's measurement statistics or the reduced
central state.

States are carried as column bundles: a matrix W of shape (dim, k) stands
for the density operator W @ W^dag.  A non-selective measurement maps a
bundle to the concatenation of its two projected halves, so the whole
pipeline stays in GEMM-friendly form even for a maximally mixed bath.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .linalg import kron
from .scramblers import Scrambler, SpinBathScrambler, _mixed_mm
from .states import (
    AXIS_X,
    AXIS_Y,
    AXIS_Z,
    BlochAxis,
    DensityMatrix,
    NumericalConsistencyError,
    PureState,
    embed,
    fidelity,
    plus_eigenstate,
    projector_along,
    sample_expectations,
    tomography,
)

#: Bob-axis specification meaning "average over the settings {none, x, y, z}",
#: the identity setting standing for no intermediate measurement at all.
PAULI_SET = "pauli-set"

_PAULI_AXES = {"x": AXIS_X, "y": AXIS_Y, "z": AXIS_Z}


@dataclass(frozen=True)
class Bath:
    """Initial state of the bath qubits.

    One of: maximally mixed (``kind="mixed"``), an explicit density matrix,
    or a product of single-qubit kets.
    """

    kind: str
    matrix: np.ndarray | None = None
    kets: tuple[np.ndarray, ...] | None = None

    @staticmethod
    def maximally_mixed() -> "Bath":
        return Bath("mixed")

    @staticmethod
    def explicit(rho: DensityMatrix) -> "Bath":
        return Bath("matrix", matrix=rho.matrix)

    @staticmethod
    def product(kets: Sequence[np.ndarray]) -> "Bath":
        normed = []
        for k, ket in enumerate(kets):
            ket = np.asarray(ket, dtype=complex).reshape(2)
            n = np.linalg.norm(ket)
            if n < 1e-12:
                raise ValueError(f"bath ket {k} is (near) zero")
            normed.append(ket / n)
        return Bath("product", kets=tuple(normed))

    def n_bath_or_none(self) -> int | None:
        if self.kind == "matrix":
            return int(np.log2(self.matrix.shape[0]))
        if self.kind == "product":
            return len(self.kets)
        return None

    def _check_size(self, n_bath: int) -> None:
        own = self.n_bath_or_none()
        if own is not None and own != n_bath:
            raise ValueError(f"bath spec covers {own} qubits, scrambler expects {n_bath}")

    def density(self, n_bath: int) -> np.ndarray:
        self._check_size(n_bath)
        dim = 2**n_bath
        if self.kind == "mixed":
            return np.eye(dim, dtype=complex) / dim
        if self.kind == "matrix":
            return self.matrix
        vec = self.kets[0]
        for ket in self.kets[1:]:
            vec = np.kron(vec, ket)
        return np.outer(vec, vec.conj())

    def root(self, n_bath: int) -> np.ndarray:
        """Matrix R with R @ R^dag equal to the bath density (any width)."""
        self._check_size(n_bath)
        dim = 2**n_bath
        if self.kind == "mixed":
            return np.eye(dim, dtype=complex) / math.sqrt(dim)
        if self.kind == "product":
            vec = self.kets[0]
            for ket in self.kets[1:]:
                vec = np.kron(vec, ket)
            return vec[:, None]
        w, v = np.linalg.eigh(self.matrix)
        keep = w > 1e-15
        return v[:, keep] * np.sqrt(w[keep])


def zero_bath(n_bath: int) -> Bath:
    """All bath qubits in the computational |0> state."""
    ket0 = np.array([1.0, 0.0], dtype=complex)
    return Bath.product([ket0] * n_bath)


def plus_bath(n_bath: int) -> Bath:
    """All bath qubits in |+> = (|0> + |1>)/sqrt(2)."""
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    return Bath.product([plus] * n_bath)


BobSpec = "BlochAxis | Sequence[BlochAxis] | str"


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything needed for one protocol run.

    ``bob`` is a single axis, a sequence of axes to average uniformly, or
    :data:`PAULI_SET`.  ``t1``/``t2`` are used by spin-bath scramblers only;
    other scramblers apply their unitary once per leg.
    """

    scrambler: Scrambler
    init_axis: BlochAxis = AXIS_Z
    bob: "BlochAxis | Sequence[BlochAxis] | str" = AXIS_Z
    alice_axis: BlochAxis = AXIS_Z
    t1: float = 0.0
    t2: float = 0.0
    bath: Bath = field(default_factory=Bath.maximally_mixed)
    shots: int | None = None

    def __post_init__(self) -> None:
        if self.t1 < 0 or self.t2 < 0:
            raise ValueError(f"times must be >= 0, got t1={self.t1}, t2={self.t2}")
        if isinstance(self.bob, str) and self.bob != PAULI_SET:
            raise ValueError(f"unknown Bob specification {self.bob!r}")
        if not isinstance(self.bob, (str, BlochAxis)):
            axes = tuple(self.bob)
            if not axes:
                raise ValueError("Bob axis list must not be empty")
            object.__setattr__(self, "bob", axes)
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")

    @property
    def n_bath(self) -> int:
        return self.scrambler.n_qubits - 1


@dataclass(frozen=True)
class EchoGrid:
    """Final-measurement probability over a (t1, t2) grid."""

    t1: np.ndarray
    t2: np.ndarray
    prob: np.ndarray

    def __post_init__(self) -> None:
        t1 = np.asarray(self.t1, dtype=float)
        t2 = np.asarray(self.t2, dtype=float)
        p = np.asarray(self.prob, dtype=float)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        object.__setattr__(self, "prob", p)
        if p.shape != (t1.size, t2.size):
            raise ValueError(f"prob must have shape {(t1.size, t2.size)}, got {p.shape}")
        if p.min() < -1e-9 or p.max() > 1 + 1e-9:
            raise ValueError("grid probabilities outside [0, 1]")


@dataclass(frozen=True)
class RecoveryResult:
    """Final central state, its inversion back to the initial state, and stats."""

    final_state: DensityMatrix
    recovered: DensityMatrix
    fidelity: float
    probabilities: dict[str, float]

    def __post_init__(self) -> None:
        if not -1e-9 <= self.fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")
        for axis, p in self.probabilities.items():
            if not -1e-9 <= p <= 1 + 1e-9:
                raise ValueError(f"probability along {axis} is {p}, outside [0, 1]")


# ---------------------------------------------------------------------------
# bundle primitives
# ---------------------------------------------------------------------------


def _initial_bundle(cfg: ProtocolConfig) -> np.ndarray:
    psi = plus_eigenstate(cfg.init_axis)
    return np.kron(psi[:, None], cfg.bath.root(cfg.n_bath))


def _central_sigma_apply(bundle: np.ndarray, axis: BlochAxis) -> np.ndarray:
    """sigma_axis acting on the central qubit (leftmost factor) of a bundle."""
    half = bundle.shape[0] // 2
    top, bot = bundle[:half], bundle[half:]
    x, y, z = axis.x, axis.y, axis.z
    out = np.empty(bundle.shape, dtype=complex)
    out[:half] = z * top + (x - 1j * y) * bot
    out[half:] = (x + 1j * y) * top - z * bot
    return out


def _central_project(bundle: np.ndarray, axis: BlochAxis, outcome: int) -> np.ndarray:
    return (bundle + outcome * _central_sigma_apply(bundle, axis)) / 2.0


def _measure_bundle(bundle: np.ndarray, axis: BlochAxis) -> np.ndarray:
    """Non-selective central measurement: stack both projected branches."""
    sig = _central_sigma_apply(bundle, axis)
    return np.concatenate(((bundle + sig) / 2.0, (bundle - sig) / 2.0), axis=1)


def _bundle_weight(bundle: np.ndarray) -> float:
    return float(np.vdot(bundle, bundle).real)


def _central_density(bundle: np.ndarray) -> np.ndarray:
    w2 = bundle.reshape(2, -1)
    return w2 @ w2.conj().T


def _forward(cfg: ProtocolConfig, bundle: np.ndarray) -> np.ndarray:
    s = cfg.scrambler
    if isinstance(s, SpinBathScrambler):
        return s.apply_at(bundle, cfg.t1, adjoint=False)
    return s.apply(bundle, adjoint=False)


def _decode(cfg: ProtocolConfig, bundle: np.ndarray, time_reversed: bool) -> np.ndarray:
    s = cfg.scrambler
    if isinstance(s, SpinBathScrambler):
        return s.apply_at(bundle, cfg.t2, adjoint=time_reversed)
    return s.apply(bundle, adjoint=time_reversed)


def _bob_branches(
    cfg: ProtocolConfig, scrambled: np.ndarray
) -> list[tuple[float, np.ndarray]]:
    """Weighted post-measurement bundles for the configured Bob setting."""
    if isinstance(cfg.bob, BlochAxis):
        return [(1.0, _measure_bundle(scrambled, cfg.bob))]
    if cfg.bob == PAULI_SET:
        out: list[tuple[float, np.ndarray]] = [(0.25, scrambled)]
        out.extend((0.25, _measure_bundle(scrambled, a)) for a in _PAULI_AXES.values())
        return out
    w = 1.0 / len(cfg.bob)
    return [(w, _measure_bundle(scrambled, a)) for a in cfg.bob]


def _final_central_state(cfg: ProtocolConfig, time_reversed: bool = True) -> np.ndarray:
    scrambled = _forward(cfg, _initial_bundle(cfg))
    rho = np.zeros((2, 2), dtype=complex)
    for weight, branch in _bob_branches(cfg, scrambled):
        rho += weight * _central_density(_decode(cfg, branch, time_reversed))
    return rho


# ---------------------------------------------------------------------------
# probabilities
# ---------------------------------------------------------------------------


def correlator_average(op: np.ndarray, bath: DensityMatrix) -> complex:
    """tr(op (I x rho_B)) with the *unnormalized* central identity, so <I> = 2."""
    op = np.asarray(op)
    b = bath.dim
    if op.shape != (2 * b, 2 * b):
        raise ValueError(f"operator shape {op.shape} does not match bath dim {b}")
    tensor = op.reshape(2, b, 2, b)
    return complex(np.einsum("cbcd,db->", tensor, bath.matrix))


def _require_single_axis(cfg: ProtocolConfig) -> BlochAxis:
    if not isinstance(cfg.bob, BlochAxis):
        raise ValueError("this operation requires a single explicit Bob axis")
    return cfg.bob


def _bath_density_matrix(cfg: ProtocolConfig) -> DensityMatrix:
    return DensityMatrix(cfg.n_bath, cfg.bath.density(cfg.n_bath))


def _scrambler_unitary_at(cfg: ProtocolConfig, t: float) -> np.ndarray:
    s = cfg.scrambler
    if isinstance(s, SpinBathScrambler):
        return s.unitary_at(t)
    return s.unitary()


def joint_probability_heisenberg(cfg: ProtocolConfig) -> float:
    """Joint probability of Bob's and Alice's +1 outcomes, evaluated as a
    two-time correlator of projectors in the Heisenberg picture."""
    bob = _require_single_axis(cfg)
    n = cfg.scrambler.n_qubits
    u1 = _scrambler_unitary_at(cfg, cfg.t1)
    p_r = embed(projector_along(bob), 0, n)
    p_r_h = u1.conj().T @ p_r @ u1
    p_f = embed(projector_along(cfg.alice_axis), 0, n)
    if isinstance(cfg.scrambler, SpinBathScrambler):
        u_delta = cfg.scrambler.unitary_at(cfg.t1 - cfg.t2)
        p_f_h = u_delta.conj().T @ p_f @ u_delta
    else:
        # Discrete scramblers realize the t2 = t1 protocol: Alice's projector
        # sits at time zero.
        p_f_h = p_f
    p_i = embed(projector_along(cfg.init_axis), 0, n)
    val = correlator_average(p_r_h @ p_f_h @ p_r_h @ p_i, _bath_density_matrix(cfg))
    if abs(val.imag) > 1e-8:
        raise NumericalConsistencyError(f"joint probability has imaginary part {val.imag:.3e}")
    return float(val.real)


def joint_probability_channel(cfg: ProtocolConfig, time_reversed: bool = True) -> float:
    """Same joint probability, evaluated by explicit state evolution:
    scramble, project on Bob's +1 branch, decode, project on Alice's +1."""
    bob = _require_single_axis(cfg)
    n = cfg.scrambler.n_qubits
    psi = plus_eigenstate(cfg.init_axis)
    rho0 = kron(np.outer(psi, psi.conj()), cfg.bath.density(cfg.n_bath))
    u1 = _scrambler_unitary_at(cfg, cfg.t1)
    rho1 = u1 @ rho0 @ u1.conj().T
    p_r = embed(projector_along(bob), 0, n)
    branch = p_r @ rho1 @ p_r
    prob_r = float(branch.trace().real)
    if prob_r < 1e-14:
        return 0.0
    rho_r = branch / prob_r
    u2 = _scrambler_unitary_at(cfg, cfg.t2)
    if time_reversed:
        rho2 = u2.conj().T @ rho_r @ u2
    else:
        rho2 = u2 @ rho_r @ u2.conj().T
    p_f = embed(projector_along(cfg.alice_axis), 0, n)
    prob_f = float(np.einsum("ij,ji->", p_f, rho2).real)
    return prob_f * prob_r


def _final_probability_single(
    cfg: ProtocolConfig, bob: BlochAxis | None, time_reversed: bool
) -> float:
    bundle = _forward(cfg, _initial_bundle(cfg))
    if bob is not None:
        bundle = _measure_bundle(bundle, bob)
    bundle = _decode(cfg, bundle, time_reversed)
    return _bundle_weight(_central_project(bundle, cfg.alice_axis, +1))


def final_probability(cfg: ProtocolConfig, time_reversed: bool = True) -> float:
    """Probability of Alice's +1 outcome, summed over Bob's two outcomes and
    averaged over the configured distribution of his measurement axes."""
    if isinstance(cfg.bob, BlochAxis):
        return _final_probability_single(cfg, cfg.bob, time_reversed)
    if cfg.bob == PAULI_SET:
        return pauli_set_averaged_probability(cfg)
    probs = [_final_probability_single(cfg, a, time_reversed) for a in cfg.bob]
    return math.fsum(probs) / len(probs)


def pauli_set_averaged_probability(
    cfg: ProtocolConfig, settings: Sequence[str] = ("i", "x", "y", "z")
) -> float:
    """Alice's +1 probability averaged uniformly over intermediate
    measurement settings; the "i" setting applies no measurement at all."""
    vals = []
    for s in settings:
        if s == "i":
            vals.append(_final_probability_single(cfg, None, time_reversed=True))
        else:
            vals.append(_final_probability_single(cfg, _PAULI_AXES[s], time_reversed=True))
    return math.fsum(vals) / len(vals)


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------


def _axis_probabilities(bloch: np.ndarray) -> dict[str, float]:
    return {
        "x": (1.0 + float(bloch[0])) / 2.0,
        "y": (1.0 + float(bloch[1])) / 2.0,
        "z": (1.0 + float(bloch[2])) / 2.0,
    }


def _initial_pure_state(cfg: ProtocolConfig) -> PureState:
    return PureState(1, plus_eigenstate(cfg.init_axis))


def run_protocol_density(cfg: ProtocolConfig) -> RecoveryResult:
    """Exact protocol run: the reduced central state after decode, the
    inversion rho_i = 2 rho_f - I/2 (clamped to the Bloch ball), the recovery
    fidelity against the true initial state, and Alice's +1 probability
    along each Cartesian axis."""
    rho_c = _final_central_state(cfg, time_reversed=True)
    final = DensityMatrix(1, rho_c)
    bloch = final.bloch_vector()
    recovered = tomography(*(2.0 * bloch))
    fid = min(fidelity(recovered, _initial_pure_state(cfg)), 1.0)
    return RecoveryResult(final, recovered, fid, _axis_probabilities(bloch))


def recover_with_tomography(cfg: ProtocolConfig, rng: np.random.Generator) -> RecoveryResult:
    """Like :func:`run_protocol_density` but with the final state estimated
    from finite measurement statistics (``cfg.shots`` per axis)."""
    if cfg.shots is None:
        raise ValueError("config must set shots for tomography-based recovery")
    exact = run_protocol_density(cfg)
    ex, ey, ez = sample_expectations(exact.final_state, cfg.shots, rng)
    estimated = tomography(ex, ey, ez)
    recovered = tomography(2.0 * ex, 2.0 * ey, 2.0 * ez)
    fid = min(fidelity(recovered, _initial_pure_state(cfg)), 1.0)
    return RecoveryResult(estimated, recovered, fid, _axis_probabilities(np.array([ex, ey, ez])))


# ---------------------------------------------------------------------------
# echo grids
# ---------------------------------------------------------------------------


def echo_grid(
    cfg: ProtocolConfig,
    t1_values: Sequence[float],
    t2_values: Sequence[float],
    time_reversed: bool = True,
    workers: int = 1,
) -> EchoGrid:
    """Final-measurement probability over a (t1, t2) grid.

    ``time_reversed=True`` decodes with the adjoint evolution for t2;
    ``False`` keeps evolving forward instead.  Requires a spin-bath
    scrambler (the sweep reuses its eigenbasis: per t1 the measured state is
    rotated once, then every t2 costs only diagonal phases).
    """
    if not isinstance(cfg.scrambler, SpinBathScrambler):
        raise ValueError("echo_grid requires a spin-bath scrambler")
    bob = _require_single_axis(cfg)
    t1s = np.asarray(list(t1_values), dtype=float)
    t2s = np.asarray(list(t2_values), dtype=float)
    spec = cfg.scrambler.spectrum
    lam, v = spec.eigenvalues, spec.eigenvectors

    b0 = _initial_bundle(cfg)
    b_tilde = _mixed_mm(v.conj().T, b0)
    sigma_r_tilde = _mixed_mm(v.conj().T, _central_sigma_apply(v, bob))
    p_f_tilde_t = _mixed_mm(v.conj().T, _central_project(v, cfg.alice_axis, +1)).T
    phase_sign = 1.0 if time_reversed else -1.0

    def row(i: int) -> np.ndarray:
        c = np.exp(-1j * lam * t1s[i])[:, None] * b_tilde
        d = sigma_r_tilde @ c
        g = 0.5 * (c @ c.conj().T + d @ d.conj().T)
        m = p_f_tilde_t * g
        out = np.empty(t2s.size)
        for j, t2 in enumerate(t2s):
            ph = np.exp(phase_sign * 1j * lam * t2)
            val = ph @ (m @ ph.conj())
            if abs(val.imag) > 1e-8:
                raise NumericalConsistencyError(
                    f"grid cell ({i}, {j}) has imaginary part {val.imag:.3e}"
                )
            out[j] = val.real
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(t1s.size)))
    else:
        rows = [row(i) for i in range(t1s.size)]
    prob = np.clip(np.vstack(rows), 0.0, 1.0)
    return EchoGrid(t1s, t2s, prob)


def with_times(cfg: ProtocolConfig, t1: float, t2: float) -> ProtocolConfig:
    """Copy of the config at different protocol times."""
    return replace(cfg, t1=t1, t2=t2)
