import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gapscope.circuits import GPI2, MS, VIRTUAL_Z, CircuitIR, NativeGate, execute
from gapscope.noise import (ClampWarning, DensityBackend, NoiseModel, TrajectoryBackend,
                            apply_depolarizing, apply_depolarizing_2q, apply_readout_flip,
                            density_from_state, depolarizing_p, execute_noisy)
from gapscope.pauli import PauliTerm, pauli_string_matrix

from conftest import random_state

ARIA = dict(t1=100.0, t2=1.0, tg1=135e-6, tg2=600e-6)


def random_density(rng, n, rank=3):
    vs = [random_state(rng, n) for _ in range(rank)]
    w = rng.dirichlet(np.ones(rank))
    return sum(wi * np.outer(v, v.conj()) for wi, v in zip(w, vs))


def random_circuit(rng, n, count):
    gates = []
    for _ in range(count):
        kind = rng.choice([GPI2, VIRTUAL_Z, MS])
        if kind == MS:
            a, b = rng.choice(n, 2, replace=False)
            params = (0.0, 0.0, float(rng.uniform(-3, 3))) if rng.random() < 0.5 else tuple(rng.uniform(-3, 3, 3))
            gates.append(NativeGate(MS, (int(a), int(b)), params))
        else:
            gates.append(NativeGate(kind, (int(rng.integers(n)),), (float(rng.uniform(-3, 3)),)))
    return CircuitIR(n, gates)


def test_p_formula_examples():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)  # rounding can land a hair below zero
        p, _ = depolarizing_p(1.0, 1e-15, 100.0, 1.0)
    assert p == pytest.approx(0.0, abs=1e-12)
    with pytest.warns(ClampWarning):
        p, msg = depolarizing_p(0.25, 1e-15, 100.0, 1.0)
    assert p == 1.0 and "clamped" in msg


@pytest.mark.parametrize("fid,tg", [(0.99, ARIA["tg2"]), (0.996, ARIA["tg2"]), (0.9995, ARIA["tg1"])])
def test_p_formula_recomputed_independently(fid, tg):
    # one-line restatement of the formula, kept separate from the library code
    ref = 1 + 3 * (2 * (1 - fid) - 1) / (math.exp(-tg / 100.0) + 2 * math.exp(-tg / 1.0))
    p, _ = depolarizing_p(fid, tg, ARIA["t1"], ARIA["t2"])
    assert p == pytest.approx(ref, rel=1e-14)
    assert 0 < p < 0.05


def test_noise_model_invariants():
    with pytest.raises(ValueError):
        NoiseModel(0.2, 0.99)
    with pytest.raises(ValueError):
        NoiseModel(0.999, 0.1)
    with pytest.raises(ValueError):
        NoiseModel(0.999, 0.99, t1=1.0, t2=3.0)
    with pytest.raises(ValueError):
        NoiseModel(0.999, 0.99, two_qubit_channel="other")
    with pytest.raises(TypeError):
        NoiseModel()  # fidelities are required
    p1, p2, msgs = NoiseModel(1.0, 1.0).strengths()
    assert msgs and p1 == 0.0  # perfect gates with finite T1/T2 clamp to zero


def test_depolarizing_examples():
    rng = np.random.default_rng(0)
    rho = random_density(rng, 3)
    assert np.array_equal(apply_depolarizing(rho, 1, 0.0), rho)
    pure = density_from_state(np.array([0.6, 0.8j]))
    assert np.allclose(apply_depolarizing(pure, 0, 1.0), np.eye(2) / 2)
    plus = density_from_state(np.array([1, 1]) / math.sqrt(2))
    out = apply_depolarizing(plus, 0, 0.1)
    assert np.trace(out @ np.array([[0, 1], [1, 0]])).real == pytest.approx(0.9)
    with pytest.raises(IndexError):
        apply_depolarizing(rho, 3, 0.1)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_depolarizing_composition(p, q, qubit, seed):
    rho = random_density(np.random.default_rng(seed), 3)
    twice = apply_depolarizing(apply_depolarizing(rho, qubit, p), qubit, q)
    once = apply_depolarizing(rho, qubit, 1 - (1 - p) * (1 - q))
    assert np.max(np.abs(twice - once)) < 1e-12


def test_joint_channel_is_pauli_twirl():
    rng = np.random.default_rng(4)
    rho = random_density(rng, 3)
    p = 0.3
    ref = (1 - 15 * p / 16) * rho
    for a in range(4):
        for b in range(4):
            if a == b == 0:
                continue
            m = pauli_string_matrix((a, 0, b))
            ref = ref + p / 16 * m @ rho @ m
    assert np.max(np.abs(apply_depolarizing_2q(rho, (0, 2), p) - ref)) < 1e-12


def test_readout_flip_examples():
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(8))
    assert np.array_equal(apply_readout_flip(probs, 0.0), probs)
    flat = apply_readout_flip(probs, 0.5)
    assert np.allclose(flat, 1 / 8)
    z = np.array([1, -1])
    p2 = np.array([0.8, 0.2])
    m = p2 @ z
    assert apply_readout_flip(p2, 0.0039) @ z == pytest.approx((1 - 2 * 0.0039) * m)
    assert apply_readout_flip(probs, 0.2).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("channel", ["independent_1q", "joint_2q"])
def test_density_backend_cptp(channel):
    rng = np.random.default_rng(8)
    model = NoiseModel(0.995, 0.97, two_qubit_channel=channel, noisy_virtual_z=True)
    backend = DensityBackend(model)
    rho = backend.prepare(random_state(rng, 4))
    for g in random_circuit(rng, 4, 40).gates:
        rho = backend.run(rho, CircuitIR(4, [g]))
        assert abs(np.trace(rho) - 1) < 1e-10
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_zero_noise_limit():
    rng = np.random.default_rng(2)
    circ = random_circuit(rng, 4, 30)
    psi = random_state(rng, 4)
    ref = execute(psi, circ)
    rho = execute_noisy(psi, circ, NoiseModel.noiseless())
    assert np.max(np.abs(rho - np.outer(ref, ref.conj()))) < 1e-10
    states = execute_noisy(psi, circ, NoiseModel.noiseless(), "trajectories", 3, seed=1)
    assert all(np.max(np.abs(s.psi - ref)) < 1e-10 for s in states)


def test_density_size_limit():
    with pytest.raises(ValueError):
        DensityBackend(NoiseModel(0.999, 0.99)).prepare(np.ones(2**11) / 2**5.5)


def test_trajectories_agree_with_density_and_shrink():
    rng = np.random.default_rng(6)
    circ = random_circuit(rng, 4, 24)
    psi = random_state(rng, 4)
    model = NoiseModel(0.99, 0.95, readout_flip=0.01)
    obs = PauliTerm.from_label(1.0, "XIZI")
    dens = DensityBackend(model)
    exact = dens.measure(dens.run(dens.prepare(psi), circ), obs)
    sems = []
    ns = [500, 2000, 8000]
    for n in ns:
        traj = TrajectoryBackend(model, n, seed=n)
        mean, sem = traj.measure(traj.run(traj.prepare(psi), circ), obs)
        assert abs(mean - exact) <= 3 * sem
        sems.append(sem)
    slope = np.polyfit(np.log(ns), np.log(sems), 1)[0]
    assert -0.6 <= slope <= -0.4


def test_trajectories_large_sample():
    rng = np.random.default_rng(10)
    circ = random_circuit(rng, 4, 12)
    psi = random_state(rng, 4)
    model = NoiseModel(0.99, 0.95)
    obs = PauliTerm.from_label(1.0, "ZIII")
    dens = DensityBackend(model)
    exact = dens.measure(dens.run(dens.prepare(psi), circ), obs)
    traj = TrajectoryBackend(model, 20000, seed=3)
    mean, sem = traj.measure(traj.run(traj.prepare(psi), circ), obs)
    assert abs(mean - exact) <= 3 * sem


def test_trajectory_determinism():
    rng = np.random.default_rng(12)
    circ = random_circuit(rng, 3, 20)
    psi = random_state(rng, 3)
    model = NoiseModel(0.98, 0.9)
    obs = PauliTerm.from_label(1.0, "XII")
    runs = []
    for _ in range(2):
        traj = TrajectoryBackend(model, 50, seed=77)
        runs.append(traj.measure(traj.run(traj.prepare(psi), circ), obs))
    assert runs[0] == runs[1]


def test_clamp_warning_surfaces():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        depolarizing_p(0.2, 1e-6, 100.0, 1.0)
    assert any(issubclass(w.category, ClampWarning) for w in rec)
