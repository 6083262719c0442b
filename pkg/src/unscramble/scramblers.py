"""The three scrambling-unitary families.

* Central spin coupled to a bath of spin-1/2's with Gaussian random
  couplings, evolved exactly through its spectral decomposition.
* Layered random circuits of Haar two-qubit gates (brick-wall pairing by
  default, random disjoint pairing as an option).
* A fixed three-qubit unitary that moves any central-qubit state into bath
  correlations when the bath qubits start in |+>|+>.

Every scrambler exposes the forward unitary, its adjoint, and an efficient
``apply`` that acts on column bundles without materializing the full matrix.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .linalg import Spectrum, check_dimension, hermitian_eig
from .states import SX, SY, SZ

_UNITARITY_ATOL = 1e-10

# Real building blocks for the coupling Hamiltonian.  sy = 1j * R with R real
# antisymmetric, so a matched y-y pair contributes -(R x R), keeping H real.
_SX_R = np.array([[0.0, 1.0], [1.0, 0.0]])
_SY_COMPANION = np.array([[0.0, -1.0], [1.0, 0.0]])
_SZ_R = np.array([[1.0, 0.0], [0.0, -1.0]])
_REAL_PAIRS = ((_SX_R, 1.0), (_SY_COMPANION, -1.0), (_SZ_R, 1.0))


@dataclass(frozen=True)
class SpinBathModel:
    """Central spin-1/2 coupled to ``n_bath`` bath spins.

    ``couplings[i, a]`` is the coupling of bath spin i (0-based) along axis
    a in (x, y, z); the interaction is sum_i,a J[i,a] * S^a s_i^a with
    spin operators S = sigma/2.
    """

    n_bath: int
    j_std: float
    couplings: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.couplings, dtype=float)
        object.__setattr__(self, "couplings", c)
        if self.n_bath < 1:
            raise ValueError(f"n_bath must be >= 1, got {self.n_bath}")
        if c.shape != (self.n_bath, 3):
            raise ValueError(f"couplings must have shape ({self.n_bath}, 3), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("couplings contain non-finite entries")

    @property
    def n_qubits(self) -> int:
        return self.n_bath + 1


def sample_spin_bath(n_bath: int, j_std: float, rng: np.random.Generator) -> SpinBathModel:
    """Draw 3 * n_bath independent Gaussian couplings with zero mean, std j_std."""
    if n_bath < 1:
        raise ValueError(f"n_bath must be >= 1, got {n_bath}")
    if j_std <= 0:
        raise ValueError(f"j_std must be > 0, got {j_std}")
    return SpinBathModel(n_bath, j_std, rng.normal(0.0, j_std, size=(n_bath, 3)))


def _two_site_real(a: np.ndarray, b: np.ndarray, site_b: int, n: int) -> np.ndarray:
    """Real Kronecker embedding of ``a`` at qubit 0 and ``b`` at ``site_b``."""
    out = np.kron(a, np.eye(2 ** (site_b - 1)))
    out = np.kron(out, b)
    return np.kron(out, np.eye(2 ** (n - site_b - 1)))


def build_hamiltonian(m: SpinBathModel) -> np.ndarray:
    """Coupling Hamiltonian on 2**(n_bath+1) dimensions (real symmetric)."""
    n = m.n_qubits
    check_dimension(2**n)
    h = np.zeros((2**n, 2**n))
    for i in range(m.n_bath):
        for a, (mat, sign) in enumerate(_REAL_PAIRS):
            j = m.couplings[i, a]
            if j == 0.0:
                continue
            h += (sign * j / 4.0) * _two_site_real(mat, mat, i + 1, n)
    return h


def spin_bath_unitary(m: SpinBathModel, t: float) -> np.ndarray:
    """exp(-i H t) for the bath model's Hamiltonian."""
    return SpinBathScrambler(m, t).unitary()


@dataclass(frozen=True)
class LayeredCircuit:
    """Ordered layers of two-qubit gates; pairs within a layer are disjoint."""

    n_qubits: int
    layers: tuple[tuple[tuple[tuple[int, int], np.ndarray], ...], ...]

    def __post_init__(self) -> None:
        for li, layer in enumerate(self.layers):
            seen: set[int] = set()
            for (a, b), gate in layer:
                if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits) or a == b:
                    raise ValueError(f"layer {li}: invalid qubit pair ({a}, {b})")
                if a in seen or b in seen:
                    raise ValueError(f"layer {li}: pair ({a}, {b}) overlaps another gate")
                seen.update((a, b))
                if gate.shape != (4, 4):
                    raise ValueError(f"layer {li}: gate on ({a}, {b}) is not 4x4")
                res = np.abs(gate.conj().T @ gate - np.eye(4)).max()
                if res > _UNITARITY_ATOL:
                    raise ValueError(
                        f"layer {li}: gate on ({a}, {b}) is not unitary (residual {res:.3e})"
                    )

    @property
    def n_gates(self) -> int:
        return sum(len(layer) for layer in self.layers)


def _brick_wall_pairs(n_qubits: int, layer: int) -> list[tuple[int, int]]:
    # A two-qubit chain has a single pair, so every layer reuses it.
    if n_qubits == 2:
        return [(0, 1)]
    start = 0 if layer % 2 == 0 else 1
    return [(q, q + 1) for q in range(start, n_qubits - 1, 2)]


def build_random_circuit(
    n_qubits: int,
    n_layers: int,
    rng: np.random.Generator,
    pairing: str = "brick-wall",
) -> LayeredCircuit:
    """Layered circuit of Haar-random two-qubit gates on an open chain.

    ``pairing`` selects the layer structure: "brick-wall" alternates the
    (0,1)(2,3)... and (1,2)(3,4)... patterns; "random" draws a fresh
    disjoint pairing per layer.
    """
    if n_qubits < 2:
        raise ValueError(f"need at least 2 qubits, got {n_qubits}")
    if n_layers < 1:
        raise ValueError(f"need at least 1 layer, got {n_layers}")
    from .linalg import _haar_batch

    layers = []
    for layer in range(n_layers):
        if pairing == "brick-wall":
            pairs = _brick_wall_pairs(n_qubits, layer)
        elif pairing == "random":
            order = rng.permutation(n_qubits)
            pairs = [
                (int(order[2 * k]), int(order[2 * k + 1])) for k in range(n_qubits // 2)
            ]
        else:
            raise ValueError(f"unknown pairing {pairing!r}")
        gates = _haar_batch(4, len(pairs), rng)
        layers.append(tuple((pair, gates[k]) for k, pair in enumerate(pairs)))
    return LayeredCircuit(n_qubits, tuple(layers))


def _apply_two_qubit(bundle: np.ndarray, gate: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """Apply a 4x4 gate to qubits (a, b) of a (2**n, k) column bundle."""
    k = bundle.shape[1]
    t = bundle.reshape((2,) * n + (k,))
    t = np.moveaxis(t, (a, b), (0, 1))
    rest = t.shape[2:]
    t = gate @ t.reshape(4, -1)
    t = np.moveaxis(t.reshape((2, 2) + rest), (0, 1), (a, b))
    return np.ascontiguousarray(t.reshape(2**n, k))


def apply_circuit(
    circuit: LayeredCircuit, bundle: np.ndarray, adjoint: bool = False
) -> np.ndarray:
    """Apply the circuit (or its adjoint) to a (2**n, k) column bundle."""
    n = circuit.n_qubits
    if bundle.shape[0] != 2**n:
        raise ValueError(f"bundle has {bundle.shape[0]} rows, circuit needs {2 ** n}")
    layers = reversed(circuit.layers) if adjoint else circuit.layers
    for layer in layers:
        gates = reversed(layer) if adjoint else layer
        for (a, b), gate in gates:
            g = gate.conj().T if adjoint else gate
            bundle = _apply_two_qubit(bundle, g, a, b, n)
    return bundle


def circuit_unitary(c: LayeredCircuit) -> np.ndarray:
    """Dense unitary of the full circuit (ordered product of embedded gates)."""
    dim = 2**c.n_qubits
    check_dimension(dim)
    return apply_circuit(c, np.eye(dim, dtype=complex))


def nohiding_unitary() -> np.ndarray:
    """Fixed 8x8 scrambler on one central and two bath qubits.

    Sends |psi> x |00> to |psi> x |01>, and with the bath prepared in
    |+>|+> leaves the central qubit maximally mixed for every input state.
    Central qubit is the leftmost tensor factor.
    """

    def ketbra(r: int, c: int) -> np.ndarray:
        m = np.zeros((4, 4), dtype=complex)
        m[r, c] = 1.0
        return m

    id2 = np.eye(2, dtype=complex)
    return (
        np.kron(id2, ketbra(1, 0))
        + np.kron(SX, ketbra(0, 1))
        + np.kron(-1j * SY, ketbra(3, 2))
        + np.kron(-SZ, ketbra(2, 3))
    )


def _mixed_mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b, split into real GEMMs when exactly one operand is complex.

    The .real/.imag views are copied to contiguous buffers first; matmul on
    the strided views bypasses BLAS and is orders of magnitude slower.
    """
    a_cplx, b_cplx = np.iscomplexobj(a), np.iscomplexobj(b)
    if a_cplx and not b_cplx:
        re = np.ascontiguousarray(a.real)
        im = np.ascontiguousarray(a.imag)
        return (re @ b) + 1j * (im @ b)
    if b_cplx and not a_cplx:
        re = np.ascontiguousarray(b.real)
        im = np.ascontiguousarray(b.imag)
        return (a @ re) + 1j * (a @ im)
    return a @ b


class Scrambler(ABC):
    """A unitary that can be applied forward or adjoint to column bundles."""

    @property
    @abstractmethod
    def n_qubits(self) -> int: ...

    @abstractmethod
    def unitary(self) -> np.ndarray: ...

    @abstractmethod
    def apply(self, bundle: np.ndarray, adjoint: bool = False) -> np.ndarray: ...

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def adjoint_unitary(self) -> np.ndarray:
        return self.unitary().conj().T


class ExplicitUnitary(Scrambler):
    """Scrambler defined by an explicit dense unitary."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0]
        if matrix.shape != (dim, dim) or dim & (dim - 1) or dim < 2:
            raise ValueError(f"expected a square power-of-two matrix, got {matrix.shape}")
        res = np.abs(matrix.conj().T @ matrix - np.eye(dim)).max()
        if res > _UNITARITY_ATOL:
            raise ValueError(f"matrix is not unitary (residual {res:.3e})")
        self._matrix = matrix
        self._n = dim.bit_length() - 1

    @property
    def n_qubits(self) -> int:
        return self._n

    def unitary(self) -> np.ndarray:
        return self._matrix

    def apply(self, bundle: np.ndarray, adjoint: bool = False) -> np.ndarray:
        u = self._matrix.conj().T if adjoint else self._matrix
        return u @ bundle


class NoHidingScrambler(ExplicitUnitary):
    """The fixed three-qubit no-hiding scrambler."""

    def __init__(self) -> None:
        super().__init__(nohiding_unitary())


class CircuitScrambler(Scrambler):
    """Scrambler realized by a layered two-qubit circuit."""

    def __init__(self, circuit: LayeredCircuit):
        self.circuit = circuit

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    def unitary(self) -> np.ndarray:
        return circuit_unitary(self.circuit)

    def apply(self, bundle: np.ndarray, adjoint: bool = False) -> np.ndarray:
        return apply_circuit(self.circuit, bundle, adjoint=adjoint)


@dataclass(eq=False)
class SpinBathScrambler(Scrambler):
    """Hamiltonian evolution of the spin-bath model for a time ``t``.

    The eigendecomposition is computed once and shared by all
    time-shifted copies, so sweeping t costs only diagonal phases plus two
    basis rotations per application.
    """

    model: SpinBathModel
    t: float = 0.0
    _spectrum: Spectrum | None = field(default=None, repr=False)

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = hermitian_eig(build_hamiltonian(self.model))
        return self._spectrum

    def at_time(self, t: float) -> "SpinBathScrambler":
        """Copy of this scrambler at a different time, sharing the spectrum."""
        self.spectrum
        return SpinBathScrambler(self.model, t, self._spectrum)

    def unitary_at(self, t: float) -> np.ndarray:
        spec = self.spectrum
        v = spec.eigenvectors
        phased = v * np.exp(-1j * spec.eigenvalues * t)
        return _mixed_mm(phased, v.conj().T)

    def unitary(self) -> np.ndarray:
        return self.unitary_at(self.t)

    def apply_at(self, bundle: np.ndarray, t: float, adjoint: bool = False) -> np.ndarray:
        """U(t) @ bundle, or U(t)^dag @ bundle with ``adjoint``."""
        spec = self.spectrum
        v = spec.eigenvectors
        sign = 1.0 if adjoint else -1.0
        tilde = _mixed_mm(v.conj().T, bundle)
        tilde *= np.exp(sign * 1j * spec.eigenvalues * t)[:, None]
        return _mixed_mm(v, tilde)

    def apply(self, bundle: np.ndarray, adjoint: bool = False) -> np.ndarray:
        return self.apply_at(bundle, self.t, adjoint=adjoint)
