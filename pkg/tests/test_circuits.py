import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from gapscope.circuits import (GPI2, MS, VIRTUAL_Z, CircuitIR, NativeGate, TrotterStepper,
                               UnsupportedTermError, apply_gate, apply_gate_dense,
                               apply_pauli_exponential, circuit_unitary, compile_trotter_circuit,
                               compile_trotter_step, execute, gate_matrix,
                               measurement_basis_circuit)
from gapscope.models import IsingSpec, build_ising, ising_terms
from gapscope.pauli import PauliSum, PauliTerm, pauli_string_matrix, to_dense_matrix

from conftest import random_state

X = np.array([[0, 1], [1, 0]])


def embed(matrix, qubits, n):
    """Full-register operator from a Pauli-basis expansion of a 1- or 2-qubit matrix."""
    k = len(qubits)
    out = np.zeros((1 << n, 1 << n), complex)
    for axes in np.ndindex(*(4,) * k):
        p = pauli_string_matrix(axes)
        c = np.trace(p.conj().T @ matrix) / 2**k
        if abs(c) < 1e-15:
            continue
        full = [0] * n
        for q, a in zip(qubits, axes):
            full[q] = a
        out += c * pauli_string_matrix(full)
    return out


def random_gate(rng, n):
    kind = rng.choice([GPI2, VIRTUAL_Z, MS])
    if kind == MS:
        a, b = rng.choice(n, 2, replace=False)
        return NativeGate(MS, (int(a), int(b)), tuple(rng.uniform(-math.pi, math.pi, 3)))
    return NativeGate(kind, (int(rng.integers(n)),), (float(rng.uniform(-math.pi, math.pi)),))


def test_gate_matrices():
    assert np.allclose(gate_matrix(NativeGate(GPI2, (0,), (0.0,))),
                       np.array([[1, -1j], [-1j, 1]]) / math.sqrt(2))
    th = 0.37
    assert np.allclose(gate_matrix(NativeGate(VIRTUAL_Z, (0,), (th,))),
                       np.diag([np.exp(-0.5j * th), np.exp(0.5j * th)]))
    assert np.allclose(gate_matrix(NativeGate(MS, (0, 1), (0.0, 0.0, th))),
                       math.cos(th / 2) * np.eye(4) - 1j * math.sin(th / 2) * np.kron(X, X))


def test_gpi2_on_zero():
    g = NativeGate(GPI2, (0,), (-math.pi / 2,))
    assert np.allclose(apply_gate(np.array([1, 0], complex), g), gate_matrix(g)[:, 0])


def test_ms_pi_on_00():
    out = apply_gate(np.array([1, 0, 0, 0], complex), NativeGate(MS, (0, 1), (0.0, 0.0, math.pi)))
    assert np.allclose(out, [0, 0, 0, -1j])


def test_index_out_of_range():
    with pytest.raises(IndexError):
        apply_gate(np.ones(4) / 2, NativeGate(GPI2, (2,), (0.0,)))
    with pytest.raises(ValueError):
        NativeGate(MS, (1, 1), (0.0, 0.0, 0.1))


def test_random_circuit_matches_dense_product():
    rng = np.random.default_rng(7)
    n = 8
    circ = CircuitIR(n, [random_gate(rng, n) for _ in range(50)])
    psi0 = random_state(rng, n)
    u = np.eye(1 << n, dtype=complex)
    for g in circ.gates:
        u = embed(gate_matrix(g), g.qubits, n) @ u
    assert np.max(np.abs(execute(psi0, circ) - u @ psi0)) < 1e-9


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_fast_kernels_match_matrix_route(n, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    for _ in range(6):
        g = random_gate(rng, n)
        if g.kind == MS and rng.random() < 0.5:
            g = NativeGate(MS, g.qubits, (0.0, 0.0, g.params[2]))
        assert np.max(np.abs(apply_gate(psi, g) - apply_gate_dense(psi, g))) < 1e-12
        psi = apply_gate(psi, g)
        assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_pauli_exponential_examples():
    out = apply_pauli_exponential(np.array([1, 0], complex), PauliTerm.from_label(1, "X"), math.pi / 2)
    assert np.allclose(out, [0, -1j])
    th = 0.8
    out = apply_pauli_exponential(np.array([1, 0, 0, 0], complex), PauliTerm.from_label(1, "ZZ"), th)
    assert np.allclose(out, [np.exp(-1j * th), 0, 0, 0])


@given(st.integers(1, 4).flatmap(lambda n: st.lists(st.integers(0, 3), min_size=n, max_size=n)),
       st.floats(-4, 4, allow_nan=False), st.integers(0, 2**32 - 1))
def test_pauli_exponential_vs_expm(axes, theta, seed):
    psi = random_state(np.random.default_rng(seed), len(axes))
    p = pauli_string_matrix(axes)
    ref = scipy.linalg.expm(-1j * theta * p) @ psi
    out = apply_pauli_exponential(psi, PauliTerm(1.0, tuple(axes)), theta)
    assert np.max(np.abs(out - ref)) < 1e-12


def test_single_z_term_compiles_exactly():
    h3, dt = 1.3, 0.21
    h = PauliSum.single("ZI", -h3 / 2)
    u = circuit_unitary(compile_trotter_step(h, dt))
    ref = scipy.linalg.expm(1j * (h3 / 2) * dt * np.kron(np.diag([1, -1]), np.eye(2)))
    assert np.max(np.abs(u - ref)) < 1e-10


@pytest.mark.parametrize("label", ["X", "Y", "XZ", "ZX", "YY", "XY", "ZZ"])
def test_weight_le_two_terms_compile_exactly(label):
    h = PauliSum.single(label, 0.7)
    u = circuit_unitary(compile_trotter_step(h, 0.3))
    ref = scipy.linalg.expm(-1j * 0.3 * to_dense_matrix(h))
    assert np.max(np.abs(u - ref)) < 1e-10


def test_weight_three_unsupported():
    with pytest.raises(UnsupportedTermError):
        compile_trotter_step(PauliSum.single("XXX"), 0.1)


@given(st.integers(2, 5), st.floats(0, 4), st.floats(0.01, 0.5), st.integers(0, 2**32 - 1))
def test_native_path_equals_fast_path(L, h3, dt, seed):
    spec = IsingSpec(dims=(L,), h3=h3)
    psi = random_state(np.random.default_rng(seed), L)
    native = execute(psi, compile_trotter_step(ising_terms(spec), dt))
    fast = TrotterStepper(build_ising(spec)).step(psi, dt)
    assert np.max(np.abs(native - fast)) < 1e-9


def test_chain_gate_counts():
    for L in (4, 10, 20):
        circ = compile_trotter_circuit(ising_terms(IsingSpec(dims=(L,), h3=1.0)), 0.1, 40)
        assert circ.two_qubit_depth() == 80
        assert circ.count(MS) == 40 * L
        assert len(circ.barriers) == 40


def test_empty_circuit_and_inverse(rng):
    psi = random_state(rng, 3)
    assert np.array_equal(execute(psi, CircuitIR(3)), psi)
    circ = CircuitIR(3, [random_gate(rng, 3) for _ in range(30)])
    back = execute(execute(psi, circ), circ.inverse())
    assert np.max(np.abs(back - psi)) < 1e-9
    assert abs(np.linalg.norm(execute(psi, circ)) ** 2 - 1) < 1e-9


def test_dump_round_trip(rng):
    circ = compile_trotter_circuit(ising_terms(IsingSpec(dims=(4,), h3=2.0)), 0.3, 2)
    back = CircuitIR.loads("# header\n" + circ.dumps())
    assert back.gates == circ.gates and back.barriers == circ.barriers
    assert circ.dumps().splitlines()[0] == "QUBITS 4"


def test_measurement_basis_change():
    for label, ket in [("X", [1, 1]), ("Y", [1, 1j])]:
        psi = np.array(ket, complex) / math.sqrt(2)
        out = execute(psi, measurement_basis_circuit(PauliTerm.from_label(1, label)))
        assert abs(out[0]) ** 2 == pytest.approx(1.0)


def test_trotter_error_is_first_order():
    spec = IsingSpec(dims=(4,), h3=2.0)
    h = build_ising(spec)
    psi0 = random_state(np.random.default_rng(3), 4)
    t = 2.0
    ref = scipy.linalg.expm(-1j * t * to_dense_matrix(h)) @ psi0
    qs = np.array([10, 20, 40, 80])
    errs = []
    for q in qs:
        psi = psi0
        step = compile_trotter_step(ising_terms(spec), t / q)
        for _ in range(q):
            psi = execute(psi, step)
        errs.append(np.linalg.norm(psi - ref))
    slope = np.polyfit(np.log(qs), np.log(errs), 1)[0]
    assert -1.2 <= slope <= -0.8
