"""States, density matrices and single-qubit measurement machinery.

Conventions used throughout the package:

* Qubit 0 is the central qubit and occupies the leftmost tensor factor, so
  ``embed(op, 0, n) == kron(op, identity)``.  Bath qubits are 1..n-1.
* A Bloch axis is a unit 3-vector; the Pauli operator along axis ``a`` is
  ``a.x*sx + a.y*sy + a.z*sz`` and the projector onto outcome ``s`` is
  ``(I + s*sigma_a)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import check_dimension, kron

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

_AXIS_NORM_ATOL = 1e-12
_TRACE_ATOL = 1e-10
_HERM_ATOL = 1e-10
_POSITIVITY_TOL = 1e-8


class DegenerateBranchError(ValueError):
    """Conditioning on a measurement outcome of (numerically) zero probability."""


class NumericalConsistencyError(ArithmeticError):
    """A quantity that must be real came back with a large imaginary part."""


@dataclass(frozen=True)
class BlochAxis:
    """Unit vector on the Bloch sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        n2 = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(n2 - 1.0) > _AXIS_NORM_ATOL:
            raise ValueError(f"Bloch axis must be normalized, got |v|^2 = {n2!r}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "BlochAxis") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    @staticmethod
    def normalized(x: float, y: float, z: float) -> "BlochAxis":
        n = math.sqrt(x * x + y * y + z * z)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector to a Bloch axis")
        return BlochAxis(x / n, y / n, z / n)

    @staticmethod
    def random(rng: np.random.Generator) -> "BlochAxis":
        """Uniform direction on the sphere (normalized Gaussian triple)."""
        while True:
            v = rng.standard_normal(3)
            n = np.linalg.norm(v)
            if n > 1e-6:
                return BlochAxis(v[0] / n, v[1] / n, v[2] / n)


AXIS_X = BlochAxis(1.0, 0.0, 0.0)
AXIS_Y = BlochAxis(0.0, 1.0, 0.0)
AXIS_Z = BlochAxis(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _TRACE_ATOL:
            raise ValueError(f"state vector is not normalized: |psi| = {norm!r}")

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace operator on ``n_qubits`` qubits.

    Hermiticity and trace are validated on construction; positivity is the
    caller's responsibility (checked where operations can credibly break it,
    and by ``validate_positive``).
    """

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        dim = 2**self.n_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise ValueError("density matrix contains non-finite entries")
        herm = np.abs(m - m.conj().T).max()
        if herm > _HERM_ATOL:
            raise ValueError(f"density matrix is not Hermitian: residual {herm:.3e}")
        tr = m.trace()
        if abs(tr - 1.0) > _TRACE_ATOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def validate_positive(self, tol: float = _POSITIVITY_TOL) -> "DensityMatrix":
        """Raise unless all eigenvalues are >= -tol; returns self for chaining."""
        lo = float(np.linalg.eigvalsh(self.matrix).min())
        if lo < -tol:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        return self

    def bloch_vector(self) -> np.ndarray:
        """(<sx>, <sy>, <sz>) for a single-qubit state."""
        if self.n_qubits != 1:
            raise ValueError("bloch_vector is defined for single-qubit states")
        return np.array([expectation(self, p) for p in (SX, SY, SZ)])


def maximally_mixed(n_qubits: int) -> DensityMatrix:
    dim = 2**n_qubits
    return DensityMatrix(n_qubits, np.eye(dim, dtype=complex) / dim)


def basis_state(n_qubits: int, index: int = 0) -> PureState:
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return PureState(n_qubits, amps)


def pauli_along(axis: BlochAxis) -> np.ndarray:
    """Traceless, involutory Pauli operator along a Bloch axis."""
    return axis.x * SX + axis.y * SY + axis.z * SZ


def projector_along(axis: BlochAxis, outcome: int = +1) -> np.ndarray:
    """Rank-1 projector (I + outcome * sigma_axis)/2 for outcome +-1."""
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")
    return (ID2 + outcome * pauli_along(axis)) / 2.0


def plus_eigenstate(axis: BlochAxis) -> np.ndarray:
    """The +1 eigenvector of sigma_axis, with a phase fixed by construction."""
    p = projector_along(axis, +1)
    # For a rank-1 projector one of the two columns always has norm >= 1/2.
    col = p[:, 0] if p[0, 0].real >= 0.5 else p[:, 1]
    return col / np.linalg.norm(col)


def embed(op: np.ndarray, target: int, n: int) -> np.ndarray:
    """Place a single-qubit operator at position ``target`` in an n-qubit space."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"embed expects a 2x2 operator, got shape {op.shape}")
    if not 0 <= target < n:
        raise IndexError(f"target qubit {target} out of range for {n} qubits")
    check_dimension(2**n)
    left = np.eye(2**target, dtype=complex)
    right = np.eye(2 ** (n - target - 1), dtype=complex)
    return kron(kron(left, op), right)


def partial_trace(rho: DensityMatrix, keep: set[int] | list[int] | tuple[int, ...]) -> DensityMatrix:
    """Reduced density matrix over the kept qubits (ascending order)."""
    keep_sorted = sorted(set(int(q) for q in keep))
    if not keep_sorted:
        raise ValueError("partial_trace requires a nonempty set of qubits to keep")
    n = rho.n_qubits
    if keep_sorted[0] < 0 or keep_sorted[-1] >= n:
        raise IndexError(f"keep set {keep_sorted} out of range for {n} qubits")
    tensor = rho.matrix.reshape((2,) * (2 * n))
    # einsum with integer subscripts: traced qubits share row/column indices.
    row = list(range(n))
    col = [i + n if i in keep_sorted else i for i in range(n)]
    out = [i for i in keep_sorted] + [i + n for i in keep_sorted]
    reduced = np.einsum(tensor, row + col, out)
    k = len(keep_sorted)
    return DensityMatrix(k, reduced.reshape(2**k, 2**k))


def _check_projector(p: np.ndarray, atol: float = _HERM_ATOL) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if np.abs(p - p.conj().T).max() > atol:
        raise ValueError("measurement operator is not Hermitian")
    if np.abs(p @ p - p).max() > atol:
        raise ValueError("measurement operator is not idempotent")
    return p


def measure_nonselective(rho: DensityMatrix, p: np.ndarray) -> DensityMatrix:
    """Projective measurement with the outcome discarded: P rho P + Q rho Q."""
    p = _check_projector(p)
    q = np.eye(p.shape[0], dtype=complex) - p
    out = p @ rho.matrix @ p + q @ rho.matrix @ q
    return DensityMatrix(rho.n_qubits, out)


def measure_selective(rho: DensityMatrix, p: np.ndarray) -> tuple[float, DensityMatrix]:
    """Projective measurement conditioned on the P outcome.

    Returns ``(probability, post_state)``; raises
    :class:`DegenerateBranchError` when the branch probability is below
    1e-14 and the post state is undefined.
    """
    p = _check_projector(p)
    branch = p @ rho.matrix @ p
    prob = float(branch.trace().real)
    if prob < 1e-14:
        raise DegenerateBranchError(
            f"measurement branch has probability {prob:.3e}; cannot condition on it"
        )
    return prob, DensityMatrix(rho.n_qubits, branch / prob)


def expectation(rho: DensityMatrix, op: np.ndarray) -> float:
    """tr(rho op) for Hermitian ``op``; rejects large imaginary residue."""
    op = np.asarray(op)
    if op.shape != rho.matrix.shape:
        raise ValueError(f"operator shape {op.shape} does not match state dim {rho.dim}")
    val = np.einsum("ij,ji->", rho.matrix, op)
    if abs(val.imag) > 1e-8:
        raise NumericalConsistencyError(
            f"expectation value has imaginary part {val.imag:.3e}"
        )
    return float(val.real)


def tomography(ex: float, ey: float, ez: float) -> DensityMatrix:
    """Single-qubit state from its three Pauli expectations (linear inversion).

    Bloch vectors longer than 1 are clamped back onto the Bloch sphere, which
    also restores positivity; this is the defined behavior for noisy input.
    """
    v = np.array([ex, ey, ez], dtype=float)
    n = np.linalg.norm(v)
    if n > 1.0:
        v /= n
    m = (ID2 + v[0] * SX + v[1] * SY + v[2] * SZ) / 2.0
    return DensityMatrix(1, m)


def sample_expectations(
    rho: DensityMatrix, shots: int, rng: np.random.Generator
) -> tuple[float, float, float]:
    """Finite-shot estimates of (<sx>, <sy>, <sz>) for a single-qubit state.

    Each estimate is 2k/shots - 1 with k binomial at the exact +1
    probability along that axis; the draw order is x, y, z.
    """
    if rho.n_qubits != 1:
        raise ValueError("sample_expectations is defined for single-qubit states")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    out = []
    for op in (SX, SY, SZ):
        p_plus = min(max((1.0 + expectation(rho, op)) / 2.0, 0.0), 1.0)
        k = int(rng.binomial(shots, p_plus))
        out.append(2.0 * k / shots - 1.0)
    return out[0], out[1], out[2]


def fidelity(rho: DensityMatrix, psi: PureState) -> float:
    """<psi| rho |psi>."""
    if rho.dim != psi.amplitudes.shape[0]:
        raise ValueError("state dimensions do not match")
    val = psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes
    return float(val.real)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) ||a - b||_1 via the eigenvalues of the Hermitian difference."""
    w = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.abs(w).sum())
