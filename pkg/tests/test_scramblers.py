from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_ket
from unscramble.linalg import haar_unitary
from unscramble.scramblers import (
    CircuitScrambler,
    ExplicitUnitary,
    LayeredCircuit,
    NoHidingScrambler,
    SpinBathModel,
    SpinBathScrambler,
    apply_circuit,
    build_hamiltonian,
    build_random_circuit,
    circuit_unitary,
    nohiding_unitary,
    sample_spin_bath,
    spin_bath_unitary,
)
from unscramble.states import DensityMatrix, basis_state, partial_trace, trace_distance


def test_sample_spin_bath_moments():
    rng = np.random.default_rng(2)
    n = 10_000
    model = sample_spin_bath(n // 3 + 1, 1.7, rng)
    draws = model.couplings.ravel()[:n]
    se_mean = 1.7 / math.sqrt(n)
    assert abs(draws.mean()) < 3 * se_mean
    # Standard error of the sample std is sigma / sqrt(2 n).
    assert abs(draws.std(ddof=1) - 1.7) < 3 * 1.7 / math.sqrt(2 * n)


def test_sample_spin_bath_deterministic_and_validated():
    a = sample_spin_bath(4, 1.0, np.random.default_rng(8))
    b = sample_spin_bath(4, 1.0, np.random.default_rng(8))
    np.testing.assert_array_equal(a.couplings, b.couplings)
    with pytest.raises(ValueError):
        sample_spin_bath(0, 1.0, np.random.default_rng(8))
    with pytest.raises(ValueError):
        sample_spin_bath(2, 0.0, np.random.default_rng(8))
    with pytest.raises(ValueError):
        SpinBathModel(2, 1.0, np.zeros((3, 3)))


def test_build_hamiltonian_single_zz_coupling():
    # One bath spin, J^z = 4: H = 4 (sz/2 x sz/2) = sz x sz.
    model = SpinBathModel(1, 1.0, np.array([[0.0, 0.0, 4.0]]))
    np.testing.assert_allclose(build_hamiltonian(model), np.diag([1.0, -1.0, -1.0, 1.0]))


def test_build_hamiltonian_zero_and_hermitian(rng):
    assert not build_hamiltonian(SpinBathModel(2, 1.0, np.zeros((2, 3)))).any()
    h = build_hamiltonian(sample_spin_bath(6, 1.3, rng))
    assert np.abs(h - h.conj().T).max() < 1e-12


def _hamiltonian_oracle(model: SpinBathModel) -> np.ndarray:
    """Direct complex Kronecker assembly with sigma/2 spin operators."""
    from unscramble.states import SX, SY, SZ, embed

    n = model.n_bath + 1
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(model.n_bath):
        for a, sig in enumerate((SX, SY, SZ)):
            h += model.couplings[i, a] * embed(sig / 2, 0, n) @ embed(sig / 2, i + 1, n)
    return h


def test_build_hamiltonian_vs_complex_oracle(rng):
    model = sample_spin_bath(3, 1.0, rng)
    np.testing.assert_allclose(build_hamiltonian(model), _hamiltonian_oracle(model), atol=1e-14)


def test_spin_bath_unitary_time_structure(rng):
    model = sample_spin_bath(2, 1.0, rng)
    np.testing.assert_allclose(spin_bath_unitary(model, 0.0), np.eye(8), atol=1e-12)
    u = spin_bath_unitary(model, 2.3)
    np.testing.assert_allclose(u @ spin_bath_unitary(model, -2.3), np.eye(8), atol=1e-10)
    np.testing.assert_allclose(u.conj().T, spin_bath_unitary(model, -2.3), atol=1e-12)


def test_spin_bath_unitary_vs_expm_oracle(rng):
    model = sample_spin_bath(2, 1.0, rng)
    t = 1.7
    oracle = scipy.linalg.expm(-1j * build_hamiltonian(model).astype(complex) * t)
    assert np.abs(spin_bath_unitary(model, t) - oracle).max() < 1e-10


def test_spin_bath_group_law(rng):
    model = sample_spin_bath(3, 1.0, rng)
    s = SpinBathScrambler(model)
    lhs = s.unitary_at(1.1) @ s.unitary_at(0.6)
    assert np.abs(lhs - s.unitary_at(1.7)).max() < 1e-9


def test_spin_bath_apply_matches_unitary(rng):
    model = sample_spin_bath(3, 1.0, rng)
    s = SpinBathScrambler(model, t=1.2)
    w = rng.standard_normal((16, 3)) + 1j * rng.standard_normal((16, 3))
    np.testing.assert_allclose(s.apply(w), s.unitary() @ w, atol=1e-12)
    np.testing.assert_allclose(s.apply(w, adjoint=True), s.unitary().conj().T @ w, atol=1e-12)


def test_shared_spectrum_between_time_copies(rng):
    s = SpinBathScrambler(sample_spin_bath(2, 1.0, rng))
    later = s.at_time(3.0)
    assert later.spectrum is s.spectrum
    assert later.t == 3.0


def test_brick_wall_structure():
    c = build_random_circuit(8, 4, np.random.default_rng(0))
    assert [pair for pair, _ in c.layers[0]] == [(0, 1), (2, 3), (4, 5), (6, 7)]
    assert [pair for pair, _ in c.layers[1]] == [(1, 2), (3, 4), (5, 6)]
    c2 = build_random_circuit(2, 5, np.random.default_rng(0))
    assert all(pair == (0, 1) for layer in c2.layers for pair, _ in layer)


def test_random_pairing_mode():
    c = build_random_circuit(6, 10, np.random.default_rng(3), pairing="random")
    assert all(len(layer) == 3 for layer in c.layers)
    with pytest.raises(ValueError):
        build_random_circuit(6, 2, np.random.default_rng(3), pairing="hexagonal")


def test_build_random_circuit_deterministic():
    a = build_random_circuit(5, 7, np.random.default_rng(42))
    b = build_random_circuit(5, 7, np.random.default_rng(42))
    assert len(a.layers) == len(b.layers) == 7
    for la, lb in zip(a.layers, b.layers):
        for (pa, ga), (pb, gb) in zip(la, lb):
            assert pa == pb
            np.testing.assert_array_equal(ga, gb)


def test_layered_circuit_validation(rng):
    good = haar_unitary(4, rng)
    with pytest.raises(ValueError, match="overlaps"):
        LayeredCircuit(3, ((((0, 1), good), ((1, 2), good)),))
    with pytest.raises(ValueError, match="unitary"):
        LayeredCircuit(2, ((((0, 1), np.eye(4) * 2.0),),))
    with pytest.raises(ValueError, match="pair"):
        LayeredCircuit(2, ((((0, 3), good),),))


def _embedded_gate_oracle(gate: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """Basis-state mapping for a two-qubit gate at arbitrary positions."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    sa, sb = n - 1 - a, n - 1 - b
    for col in range(dim):
        ba, bb = (col >> sa) & 1, (col >> sb) & 1
        base = col & ~(1 << sa) & ~(1 << sb)
        for na in range(2):
            for nb in range(2):
                row = base | (na << sa) | (nb << sb)
                out[row, col] += gate[na * 2 + nb, ba * 2 + bb]
    return out


def test_circuit_unitary_trivial_cases(rng):
    assert np.array_equal(circuit_unitary(LayeredCircuit(2, ())), np.eye(4))
    g = haar_unitary(4, rng)
    single = LayeredCircuit(2, ((((0, 1), g),),))
    np.testing.assert_allclose(circuit_unitary(single), g, atol=1e-12)


def test_circuit_unitary_vs_dense_product_oracle(rng):
    c = build_random_circuit(3, 2, rng)
    want = np.eye(8, dtype=complex)
    for layer in c.layers:
        for (a, b), gate in layer:
            want = _embedded_gate_oracle(gate, a, b, 3) @ want
    got = circuit_unitary(c)
    assert np.abs(got - want).max() < 1e-10
    assert np.abs(got.conj().T @ got - np.eye(8)).max() < 1e-9


def test_circuit_unitary_nonadjacent_pair(rng):
    g = haar_unitary(4, rng)
    c = LayeredCircuit(3, ((((0, 2), g),),))
    np.testing.assert_allclose(circuit_unitary(c), _embedded_gate_oracle(g, 0, 2, 3), atol=1e-12)


def test_apply_circuit_adjoint_inverts(rng):
    c = build_random_circuit(4, 6, rng)
    w = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
    again = apply_circuit(c, apply_circuit(c, w), adjoint=True)
    np.testing.assert_allclose(again, w, atol=1e-10)


def test_nohiding_unitary_exact_unitarity():
    u = nohiding_unitary()
    assert np.abs(u.conj().T @ u - np.eye(8)).max() < 1e-14


def test_nohiding_hides_any_input(rng):
    u = nohiding_unitary()
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    for _ in range(5):
        psi = random_ket(2, rng)
        state = u @ np.kron(psi, np.kron(plus, plus))
        rho = DensityMatrix(3, np.outer(state, state.conj()))
        central = partial_trace(rho, {0})
        assert trace_distance(central, DensityMatrix(1, np.eye(2) / 2)) < 1e-12


def test_nohiding_column_reading(rng):
    # |psi> x |00>  ->  |psi> x |01>
    u = nohiding_unitary()
    psi = random_ket(2, rng)
    ket00 = np.zeros(4)
    ket00[0] = 1.0
    ket01 = np.zeros(4)
    ket01[1] = 1.0
    np.testing.assert_allclose(u @ np.kron(psi, ket00), np.kron(psi, ket01), atol=1e-14)


def test_all_scramblers_unitary_roundtrip(rng):
    scramblers = [
        ExplicitUnitary(haar_unitary(8, rng)),
        NoHidingScrambler(),
        CircuitScrambler(build_random_circuit(3, 4, rng)),
        SpinBathScrambler(sample_spin_bath(2, 1.0, rng), t=1.4),
    ]
    for s in scramblers:
        prod = s.unitary() @ s.adjoint_unitary()
        assert np.abs(prod - np.eye(s.dim)).max() < 1e-9


def test_explicit_unitary_rejects_nonunitary(rng):
    with pytest.raises(ValueError, match="unitary"):
        ExplicitUnitary(np.ones((4, 4)))
    with pytest.raises(ValueError):
        ExplicitUnitary(np.eye(3))


def _central_mixedness(scrambler, n_bath: int) -> float:
    """Trace distance of the evolved central qubit from I/2, mixed bath."""
    dim_b = 2**n_bath
    root = np.eye(dim_b, dtype=complex) / math.sqrt(dim_b)
    up = np.array([[1.0], [0.0]], dtype=complex)
    w = scrambler.apply(np.kron(up, root))
    w2 = w.reshape(2, -1)
    central = DensityMatrix(1, w2 @ w2.conj().T)
    return trace_distance(central, DensityMatrix(1, np.eye(2) / 2))


def test_spin_bath_scrambling_diagnostic():
    rng = np.random.default_rng(101)
    model = sample_spin_bath(8, 1.0, rng)
    assert _central_mixedness(SpinBathScrambler(model, t=20.0), 8) < 0.05


def test_circuit_scrambling_diagnostic():
    rng = np.random.default_rng(202)
    circuit = build_random_circuit(8, 1000, rng)
    assert _central_mixedness(CircuitScrambler(circuit), 7) < 0.05
