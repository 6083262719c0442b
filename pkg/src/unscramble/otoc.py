"""Out-of-time-ordered correlators and their random-unitary statistics.

The correlator evaluated here is F(t) = <W(t) V W(t) V'> with W(t) the
scrambled probe operator and the bracket the unnormalized trace convention
tr(. (I x rho_B)) of the protocol module, so <I> = 2.  Includes the exact
Haar average, its Monte Carlo verification, the fourth-moment identity for
Haar unitaries, and the run-to-run fluctuation study for circuit scramblers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import _haar_batch, hermitian_eig
from .scramblers import (
    CircuitScrambler,
    SpinBathModel,
    _mixed_mm,
    build_hamiltonian,
    build_random_circuit,
)
from .states import (
    AXIS_Z,
    BlochAxis,
    DensityMatrix,
    NumericalConsistencyError,
    embed,
    pauli_along,
)
from .protocol import Bath, ProtocolConfig, correlator_average, run_protocol_density, zero_bath


@dataclass(frozen=True)
class OtocSpec:
    """Operator content of the correlator <W(t) V W(t) V'>.

    ``w_axis`` defines the scrambled probe W, ``v_axis`` the stationary
    operator V; ``f_axis`` (defaulting to ``v_axis``) allows the second
    stationary operator V' to differ, as in the protocol correlator where V
    and V' are the initial- and final-axis Paulis.
    """

    w_axis: BlochAxis
    v_axis: BlochAxis
    f_axis: BlochAxis | None = None
    w_qubit: int = 0
    v_qubit: int = 0
    bath: Bath = field(default_factory=Bath.maximally_mixed)

    @property
    def second_axis(self) -> BlochAxis:
        return self.f_axis if self.f_axis is not None else self.v_axis


@dataclass(frozen=True)
class HaarEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_error: float
    samples: int

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    def consistent_with(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.std_error


@dataclass(frozen=True)
class VarianceRecord:
    """Fluctuation variance of the final probability at one system size."""

    n_qubits: int
    variance: float
    samples: int


@dataclass(frozen=True)
class VarianceScaling:
    records: tuple[VarianceRecord, ...]
    slope: float


def _check_qubits(spec: OtocSpec, n: int) -> None:
    for q, name in ((spec.w_qubit, "w_qubit"), (spec.v_qubit, "v_qubit")):
        if not 0 <= q < n:
            raise IndexError(f"{name}={q} out of range for {n} qubits")


def otoc_value(u: np.ndarray, spec: OtocSpec) -> float:
    """F = <W(t) V W(t) V'> for W(t) = U^dag W U, under the tr(. I x rho_B)
    convention.  The imaginary residual must stay below 1e-8."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    n = dim.bit_length() - 1
    _check_qubits(spec, n)
    w = embed(pauli_along(spec.w_axis), spec.w_qubit, n)
    v1 = embed(pauli_along(spec.v_axis), spec.v_qubit, n)
    v2 = embed(pauli_along(spec.second_axis), spec.v_qubit, n)
    weight = np.kron(np.eye(2), spec.bath.density(n - 1))
    wt = u.conj().T @ w @ u
    val = np.einsum("ij,ji->", wt @ v1, wt @ (v2 @ weight))
    if abs(val.imag) > 1e-8:
        raise NumericalConsistencyError(f"OTOC has imaginary part {val.imag:.3e}")
    return float(val.real)


def otoc_time_series(
    model: SpinBathModel, spec: OtocSpec, times: Sequence[float]
) -> np.ndarray:
    """F(t) for the spin-bath evolution at each requested time.

    Diagonalizes the Hamiltonian once; each time point then costs two dense
    products in the eigenbasis.
    """
    n = model.n_qubits
    _check_qubits(spec, n)
    eig = hermitian_eig(build_hamiltonian(model))
    lam, v = eig.eigenvalues, eig.eigenvectors

    def tilde(op: np.ndarray) -> np.ndarray:
        return _mixed_mm(v.conj().T, _mixed_mm(op, v))

    w_t = tilde(embed(pauli_along(spec.w_axis), spec.w_qubit, n))
    v1_t = tilde(embed(pauli_along(spec.v_axis), spec.v_qubit, n))
    v2 = embed(pauli_along(spec.second_axis), spec.v_qubit, n)
    if spec.bath.kind == "mixed":
        k_t = tilde(v2) / 2 ** (n - 1)
    else:
        k_t = tilde(v2 @ np.kron(np.eye(2), spec.bath.density(n - 1)))

    out = np.empty(len(times))
    for idx, t in enumerate(times):
        ph = np.exp(1j * lam * t)
        m = (ph[:, None] * w_t) * ph.conj()[None, :]
        val = np.einsum("ij,ji->", m @ v1_t, m @ k_t)
        if abs(val.imag) > 1e-8:
            raise NumericalConsistencyError(
                f"OTOC at t={t} has imaginary part {val.imag:.3e}"
            )
        out[idx] = val.real
    return out


def haar_average_analytic(spec: OtocSpec, dim: int) -> float:
    """Exact Haar average of the correlator: -<V V'> / (dim^2 - 1).

    Follows from the fourth-moment identity
    (:func:`haar_fourth_moment_analytic`): only its two cross pairings
    survive the traceless probe, the +1/(N^2-1) one killed by tr V = 0 and
    the -1/(N (N^2-1)) one contracting to -tr(V V' weight)/(N^2-1).  The
    negative late-time floor is confirmed by :func:`haar_average_mc`.
    """
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"dim must be a power of two >= 2, got {dim}")
    n = dim.bit_length() - 1
    if spec.v_qubit == 0:
        corr = 2.0 * spec.v_axis.dot(spec.second_axis)
    else:
        op = embed(pauli_along(spec.v_axis), spec.v_qubit, n) @ embed(
            pauli_along(spec.second_axis), spec.v_qubit, n
        )
        corr = correlator_average(op, DensityMatrix(n - 1, spec.bath.density(n - 1))).real
    return -corr / (dim**2 - 1)


_MC_CHUNK = 2048


def haar_average_mc(
    spec: OtocSpec, dim: int, samples: int, rng: np.random.Generator
) -> HaarEstimate:
    """Monte Carlo estimate of the Haar-averaged correlator."""
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    vals = np.empty(samples)
    done = 0
    while done < samples:
        count = min(_MC_CHUNK, samples - done)
        for u in _haar_batch(dim, count, rng):
            vals[done] = otoc_value(u, spec)
            done += 1
    mean = math.fsum(vals) / samples
    return HaarEstimate(mean, float(vals.std(ddof=1)) / math.sqrt(samples), samples)


def haar_fourth_moment_analytic(dim: int, indices: Sequence[int]) -> float:
    """Two-term Weingarten expression for
    E[U_{m1 n1} U*_{m1' n1'} U_{m2 n2} U*_{m2' n2'}]."""
    m1, n1, m1p, n1p, m2, n2, m2p, n2p = indices
    direct = (m1 == m1p) * (m2 == m2p)
    crossed = (m1 == m2p) * (m2 == m1p)
    direct_n = (n1 == n1p) * (n2 == n2p)
    crossed_n = (n1 == n2p) * (n2 == n1p)
    plus = direct * direct_n + crossed * crossed_n
    minus = direct * crossed_n + crossed * direct_n
    return plus / (dim**2 - 1) - minus / (dim * (dim**2 - 1))


def haar_fourth_moment_check(
    dim: int, indices: Sequence[int], samples: int, rng: np.random.Generator
) -> tuple[HaarEstimate, float]:
    """Monte Carlo fourth moment of Haar matrix entries vs the analytic value.

    ``indices`` is (m1, n1, m1', n1', m2, n2, m2', n2') with all entries
    below ``dim``.  The moment is real for every index pattern; the sampled
    imaginary part is folded into the error estimate by discarding it after
    the mean is formed.
    """
    indices = tuple(int(i) for i in indices)
    if len(indices) != 8 or any(not 0 <= i < dim for i in indices):
        raise ValueError(f"need 8 indices below {dim}, got {indices}")
    m1, n1, m1p, n1p, m2, n2, m2p, n2p = indices
    vals = np.empty(samples)
    done = 0
    while done < samples:
        count = min(_MC_CHUNK, samples - done)
        u = _haar_batch(dim, count, rng)
        terms = (
            u[:, m1, n1]
            * u[:, m1p, n1p].conj()
            * u[:, m2, n2]
            * u[:, m2p, n2p].conj()
        )
        vals[done : done + count] = terms.real
        done += count
    mean = math.fsum(vals) / samples
    est = HaarEstimate(mean, float(vals.std(ddof=1)) / math.sqrt(samples), samples)
    return est, haar_fourth_moment_analytic(dim, indices)


# ---------------------------------------------------------------------------
# run-to-run fluctuations of the protocol probability (circuit scramblers)
# ---------------------------------------------------------------------------


def circuit_run_probabilities(
    n_qubits: int, layers: int, rng: np.random.Generator
) -> dict[str, float]:
    """One protocol run with a fresh random circuit and random Bob axis:
    all qubits start in |0>, Alice's +1 probability along x, y, z."""
    circuit = build_random_circuit(n_qubits, layers, rng)
    bob = BlochAxis.random(rng)
    cfg = ProtocolConfig(
        scrambler=CircuitScrambler(circuit),
        init_axis=AXIS_Z,
        bob=bob,
        bath=zero_bath(n_qubits - 1),
    )
    return run_protocol_density(cfg).probabilities


def predicted_final_probability(n_qubits: int, cos_if: float = 1.0) -> float:
    """Scrambled-ensemble prediction for Alice's +1 probability:
    1/2 + <sigma_f sigma_i>/8 plus the (negative) Haar OTOC floor over 8."""
    dim = 2**n_qubits
    return 0.5 + cos_if / 4.0 - cos_if / (4.0 * (dim**2 - 1))


def fluctuation_variance(
    n_qubits: int,
    layers: int,
    samples: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> float:
    """Run-to-run variance of the final probability across random circuits.

    The squared-mean subtraction uses the empirical mean of the same sample;
    at these sample sizes an a-priori mean would leak its own estimation
    noise into the variance and can even drive it negative.
    """
    if samples < 30:
        raise ValueError(f"need at least 30 samples, got {samples}")
    probs = run_probability_samples(n_qubits, layers, samples, rng, workers)
    mean = math.fsum(probs) / samples
    return math.fsum(p * p for p in probs) / samples - mean**2


def run_probability_samples(
    n_qubits: int,
    layers: int,
    samples: int,
    rng: np.random.Generator,
    workers: int = 1,
    axis: str = "z",
) -> np.ndarray:
    """Final probability along one axis for ``samples`` independent circuits."""
    streams = rng.spawn(samples)

    def one(i: int) -> float:
        return circuit_run_probabilities(n_qubits, layers, streams[i])[axis]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(one, range(samples)))
    else:
        vals = [one(i) for i in range(samples)]
    return np.asarray(vals)


def scaling_fit(records: Sequence[VarianceRecord | tuple[int, float, int]]) -> float:
    """Least-squares slope of ln(variance) against qubit count."""
    rows = [r if isinstance(r, VarianceRecord) else VarianceRecord(*r) for r in records]
    if len({r.n_qubits for r in rows}) < 3:
        raise ValueError("scaling fit needs at least 3 distinct qubit counts")
    for r in rows:
        if r.variance <= 0:
            raise ValueError(
                f"variance at n_qubits={r.n_qubits} is {r.variance}; cannot take its log"
            )
    x = np.array([r.n_qubits for r in rows], dtype=float)
    y = np.log([r.variance for r in rows])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
