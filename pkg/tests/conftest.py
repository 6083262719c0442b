from __future__ import annotations

import numpy as np
import pytest

from unscramble.states import DensityMatrix


def random_density(n_qubits: int, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank random state: normalized G G^dag with Ginibre G."""
    dim = 2**n_qubits
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(n_qubits, m / m.trace().real)


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
