"""Dense complex linear algebra used by every other module.

Kronecker products, Hermitian eigendecomposition, exact unitary propagators
and Haar-random unitary sampling.  Everything here is a pure function of its
arguments; random sampling takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_ATOL = 1e-12

# Resource guard: operators larger than 2**_max_qubits are refused.  This is
# a safety net against accidentally requesting matrices that do not fit in
# memory, not a physical parameter.
_DEFAULT_MAX_QUBITS = 14
_max_qubits = _DEFAULT_MAX_QUBITS


class DimensionLimitError(ValueError):
    """Requested operator exceeds the configured maximum qubit count."""


def max_qubits() -> int:
    """Current value of the dimension guard."""
    return _max_qubits


def set_max_qubits(n: int) -> None:
    """Reconfigure the dimension guard (default 14 qubits)."""
    if n < 1:
        raise ValueError(f"max qubit count must be >= 1, got {n}")
    global _max_qubits
    _max_qubits = int(n)


def check_dimension(dim: int) -> None:
    """Raise :class:`DimensionLimitError` if ``dim`` exceeds 2**max_qubits."""
    if dim > 2 ** _max_qubits:
        raise DimensionLimitError(
            f"dimension {dim} exceeds guard of {2 ** _max_qubits} "
            f"(= 2**{_max_qubits}); raise it with set_max_qubits() if intended"
        )


def _require_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a.real)) or (np.iscomplexobj(a) and not np.all(np.isfinite(a.imag))):
        raise ValueError(f"{name} contains non-finite entries")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the dimension guard applied to the result."""
    a = np.asarray(a)
    b = np.asarray(b)
    _require_finite(a, "kron operand a")
    _require_finite(b, "kron operand b")
    check_dimension(a.shape[0] * b.shape[0])
    check_dimension(a.shape[1] * b.shape[1])
    return np.kron(a, b)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; ``eigenvectors`` holds the
    corresponding orthonormal eigenvectors as columns, so that
    ``V @ diag(w) @ V.conj().T`` reconstructs the input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def hermitian_eig(h: np.ndarray, atol: float = HERMITICITY_ATOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix.

    Rejects inputs whose anti-Hermitian part exceeds ``atol`` entrywise.
    Real symmetric inputs take the (faster) real code path and come back
    with real eigenvectors.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    _require_finite(h, "hermitian_eig input")
    residual = np.abs(h - h.conj().T).max()
    if residual > atol:
        raise ValueError(
            f"matrix is not Hermitian: max |H - H^dag| = {residual:.3e} > {atol:.0e}"
        )
    if np.iscomplexobj(h) and np.abs(h.imag).max() == 0.0:
        h = h.real
    w, v = np.linalg.eigh(h)
    return Spectrum(eigenvalues=w, eigenvectors=v)


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary exp(-i H t) for Hermitian H, via exact spectral decomposition."""
    if not np.isfinite(t):
        raise ValueError(f"propagation time must be finite, got {t}")
    return propagator_from_spectrum(hermitian_eig(h), t)


def propagator_from_spectrum(spec: Spectrum, t: float) -> np.ndarray:
    """exp(-i H t) from a precomputed eigendecomposition of H."""
    phases = np.exp(-1j * spec.eigenvalues * t)
    v = spec.eigenvectors
    return (v * phases) @ v.conj().T


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a Haar-distributed unitary of size ``dim`` x ``dim``.

    Ginibre matrix followed by QR; the diagonal of R is rephased to unit
    modulus, without which plain QR is not Haar-distributed.
    """
    if dim < 2:
        raise ValueError(f"haar_unitary needs dim >= 2, got {dim}")
    check_dimension(dim)
    return _haar_batch(dim, 1, rng)[0]


def _haar_batch(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape (count, dim, dim)."""
    z = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    z /= np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.einsum("sii->si", r)
    q *= (d / np.abs(d))[:, None, :]
    return q
