"""Gate-level noise: depolarizing channels, readout flips, density and trajectory backends.

Each noisy gate is followed by a depolarizing channel whose strength comes
from the average gate fidelity and the T1/T2 decay during the gate.  Two-qubit
gates get an independent single-qubit channel on each participant by
default, or one joint two-qubit channel.  VirtualZ gates are frame updates on
trapped-ion hardware and stay noiseless unless ``noisy_virtual_z`` is set.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import (MS, VIRTUAL_Z, CircuitIR, NativeGate, apply_gate, apply_matrix,
                       compile_trotter_step, gate_matrix, measurement_basis_circuit, n_qubits_of,
                       parity_mask)
from .estimation import EXACT, TimeSeries, evolution_intervals, measure
from .pauli import PauliSum, PauliTerm, apply_pauli_string, z_signs
from .rng import generator

log = logging.getLogger(__name__)

MAX_DENSITY_QUBITS = 10
INDEPENDENT_1Q = "independent_1q"
JOINT_2Q = "joint_2q"


class ClampWarning(UserWarning):
    pass


def depolarizing_p(fidelity: float, gate_time: float, t1: float, t2: float) -> tuple[float, str | None]:
    """Depolarizing strength ``p = 1 + 3 (2 eps - 1) / d`` clamped to ``[0, 1]``.

    ``eps = 1 - fidelity`` and ``d = exp(-Tg/T1) + 2 exp(-Tg/T2)``.  Returns
    ``(p, message)`` where ``message`` describes a clamp, else None.  A clamp
    also raises a ``ClampWarning``.
    """
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {fidelity}")
    if gate_time < 0 or t1 <= 0 or t2 <= 0:
        raise ValueError("gate time must be >= 0 and T1, T2 > 0")
    eps = 1.0 - fidelity
    d = math.exp(-gate_time / t1) + 2.0 * math.exp(-gate_time / t2)
    p = 1.0 + 3.0 * (2.0 * eps - 1.0) / d
    if 0.0 <= p <= 1.0:
        return p, None
    clamped = min(max(p, 0.0), 1.0)
    msg = (f"depolarizing p={p:.6g} for F={fidelity}, Tg={gate_time}s, T1={t1}s, T2={t2}s "
           f"clamped to {clamped}")
    warnings.warn(msg, ClampWarning, stacklevel=2)
    return clamped, msg


@dataclass(frozen=True)
class NoiseModel:
    """Hardware constants; fidelities have no defaults and must be supplied."""

    fidelity_1q: float
    fidelity_2q: float
    t1: float = 100.0
    t2: float = 1.0
    gate_time_1q: float = 135e-6
    gate_time_2q: float = 600e-6
    readout_flip: float = 0.0039
    two_qubit_channel: str = INDEPENDENT_1Q
    noisy_virtual_z: bool = False

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError("t1 must be positive")
        if not 0 < self.t2 <= 2 * self.t1:
            raise ValueError("t2 must satisfy 0 < t2 <= 2 t1")
        if not (self.gate_time_1q > 0 and self.gate_time_2q > 0):
            raise ValueError("gate times must be positive")
        if not 0.25 < self.fidelity_1q <= 1.0:
            raise ValueError(f"fidelity_1q must lie in (0.25, 1], got {self.fidelity_1q}")
        if not 0.2 < self.fidelity_2q <= 1.0:
            raise ValueError(f"fidelity_2q must lie in (0.2, 1], got {self.fidelity_2q}")
        if not 0.0 <= self.readout_flip <= 1.0:
            raise ValueError("readout_flip must be a probability")
        if self.two_qubit_channel not in (INDEPENDENT_1Q, JOINT_2Q):
            raise ValueError(f"unknown two_qubit_channel {self.two_qubit_channel!r}")

    def strengths(self) -> tuple[float, float, list[str]]:
        """``(p_1q, p_2q, clamp messages)``."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampWarning)
            p1, m1 = depolarizing_p(self.fidelity_1q, self.gate_time_1q, self.t1, self.t2)
            p2, m2 = depolarizing_p(self.fidelity_2q, self.gate_time_2q, self.t1, self.t2)
        return p1, p2, [m for m in (m1, m2) if m]

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(fidelity_1q=1.0, fidelity_2q=1.0, readout_flip=0.0)


# -- channels on density matrices ------------------------------------------


def _check_density(rho: np.ndarray) -> int:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    return n_qubits_of(rho[:, 0])


def density_from_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def _mix_out(rho: np.ndarray, qubits: Sequence[int], p: float) -> np.ndarray:
    """``(1-p) rho + p (I/2^k (x) Tr_qubits rho)``."""
    n = _check_density(rho)
    if any(not 0 <= q < n for q in qubits):
        raise IndexError(f"qubits {tuple(qubits)} out of range for {n} qubits")
    if p == 0.0:
        return rho
    k = len(qubits)
    rows = list(qubits)
    cols = [n + q for q in qubits]
    t = np.moveaxis(rho.reshape((2,) * (2 * n)), rows + cols, list(range(2 * k)))
    t = t.reshape((1 << k, 1 << k) + t.shape[2 * k:])
    reduced = np.trace(t, axis1=0, axis2=1)
    out = (1.0 - p) * t
    share = (p / (1 << k)) * reduced
    for a in range(1 << k):
        out[a, a] += share
    out = out.reshape((2,) * (2 * n))
    out = np.moveaxis(out, list(range(2 * k)), rows + cols)
    return np.ascontiguousarray(out).reshape(rho.shape)


def apply_depolarizing(rho: np.ndarray, qubit: int, p: float) -> np.ndarray:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return _mix_out(rho, [qubit], p)


def apply_depolarizing_2q(rho: np.ndarray, qubits: tuple[int, int], p: float) -> np.ndarray:
    """Joint channel ``(1 - 15p/16) rho + p/16 sum_{P != II} P rho P``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return _mix_out(rho, list(qubits), p)


def apply_gate_density(rho: np.ndarray, g: NativeGate) -> np.ndarray:
    """``U rho U^dagger`` using the vectorized ``2n``-qubit representation."""
    n = _check_density(rho)
    vec = rho.reshape(-1)
    vec = apply_gate(vec, g)
    conj = NativeGate(g.kind, tuple(n + q for q in g.qubits), g.params)
    if g.kind == VIRTUAL_Z or (g.kind == MS and g.params[:2] == (0.0, 0.0)):
        # conj(exp(-i a P)) = exp(+i a P) for real P in {Z, XX}
        params = g.params[:-1] + (-g.params[-1],)
        vec = apply_gate(vec, NativeGate(g.kind, conj.qubits, params))
    else:
        vec = apply_matrix(vec, gate_matrix(g).conj(), conj.qubits)
    return vec.reshape(rho.shape)


def apply_readout_flip(probabilities: np.ndarray, flip: float) -> np.ndarray:
    """Independent bit flips on every qubit of a basis-state distribution."""
    if not 0.0 <= flip <= 1.0:
        raise ValueError("flip must be a probability")
    probs = np.asarray(probabilities, dtype=float)
    n = n_qubits_of(probs.astype(complex))
    if flip == 0.0:
        return probs.copy()
    idx = np.arange(probs.shape[0])
    for q in range(n):
        bit = 1 << (n - 1 - q)
        probs = (1.0 - flip) * probs + flip * probs[idx ^ bit]
    return probs


def parity_expectation(probabilities: np.ndarray, mask: int) -> float:
    return float(np.dot(probabilities, z_signs(len(probabilities), mask)))


# -- noisy execution ---------------------------------------------------------


def _gate_noise(g: NativeGate, model: NoiseModel, p1: float, p2: float):
    """List of (qubits, p) channels that follow gate ``g``."""
    if g.kind == MS:
        if model.two_qubit_channel == JOINT_2Q:
            return [(g.qubits, p2)]
        return [((q,), p2) for q in g.qubits]
    if g.kind == VIRTUAL_Z and not model.noisy_virtual_z:
        return []
    return [(g.qubits, p1)]


class DensityBackend:
    """Exact mixed-state evolution, limited to ``MAX_DENSITY_QUBITS`` qubits."""

    def __init__(self, model: NoiseModel):
        self.model = model
        self.p1, self.p2, self.warnings = model.strengths()

    def prepare(self, psi0: np.ndarray) -> np.ndarray:
        n = n_qubits_of(np.asarray(psi0))
        if n > MAX_DENSITY_QUBITS:
            raise ValueError(f"density backend supports at most {MAX_DENSITY_QUBITS} qubits, got {n}")
        return density_from_state(psi0)

    def run(self, rho: np.ndarray, circ: CircuitIR) -> np.ndarray:
        for g in circ.gates:
            rho = apply_gate_density(rho, g)
            for qubits, p in _gate_noise(g, self.model, self.p1, self.p2):
                rho = _mix_out(rho, list(qubits), p)
        return rho

    def measure(self, rho: np.ndarray, observable: PauliTerm) -> float:
        """Noisy ``<P>`` after basis-change gates and readout flips (coefficient applied)."""
        rotated = self.run(rho, measurement_basis_circuit(observable))
        probs = np.clip(np.real(np.diag(rotated)), 0.0, None)
        probs = apply_readout_flip(probs / probs.sum(), self.model.readout_flip)
        return observable.coefficient * parity_expectation(probs, parity_mask(observable))


class TrajectoryState:
    """One stochastic unravelling: a pure state plus its private random stream."""

    def __init__(self, psi: np.ndarray, rng: np.random.Generator):
        self.psi = np.asarray(psi, dtype=complex)
        self.rng = rng


class TrajectoryBackend:
    """Pauli-branch sampling of each depolarizing channel on pure states."""

    _PAULIS_1Q = (1, 2, 3)

    def __init__(self, model: NoiseModel, trajectories: int, seed=0):
        if trajectories < 1:
            raise ValueError("need at least one trajectory")
        self.model = model
        self.trajectories = int(trajectories)
        self.seed = seed
        self.p1, self.p2, self.warnings = model.strengths()

    def prepare(self, psi0: np.ndarray) -> list[TrajectoryState]:
        psi0 = np.asarray(psi0, dtype=complex)
        n_qubits_of(psi0)
        return [TrajectoryState(psi0.copy(), generator(self.seed, "trajectory", k))
                for k in range(self.trajectories)]

    def _kick(self, state: TrajectoryState, qubits: Sequence[int], p: float) -> None:
        k = len(qubits)
        u = state.rng.random()
        n_paulis = 4**k - 1
        if u >= p * n_paulis / 4**k:
            return
        choice = 1 + int(state.rng.integers(n_paulis))  # uniform over non-identity strings
        n = n_qubits_of(state.psi)
        axes = [0] * n
        for pos, q in enumerate(qubits):
            axes[q] = (choice >> (2 * (k - 1 - pos))) & 3
        state.psi = apply_pauli_string(PauliTerm(1.0, tuple(axes)), state.psi)

    def run_one(self, state: TrajectoryState, circ: CircuitIR) -> None:
        for g in circ.gates:
            state.psi = apply_gate(state.psi, g)
            for qubits, p in _gate_noise(g, self.model, self.p1, self.p2):
                if p > 0:
                    self._kick(state, qubits, p)

    def run(self, states: list[TrajectoryState], circ: CircuitIR) -> list[TrajectoryState]:
        for s in states:
            self.run_one(s, circ)
        return states

    def measure_each(self, states: list[TrajectoryState], observable: PauliTerm) -> np.ndarray:
        """Per-trajectory noisy ``<P>`` including basis-change noise and readout."""
        basis = measurement_basis_circuit(observable)
        mask = parity_mask(observable)
        scale = (1.0 - 2.0 * self.model.readout_flip) ** bin(mask).count("1")
        out = np.empty(len(states))
        for k, s in enumerate(states):
            # measurement branch uses a forked stream so evolution draws stay aligned
            probe = TrajectoryState(s.psi, generator(self.seed, "measure", k, s.rng.integers(2**32)))
            self.run_one(probe, basis)
            probs = np.abs(probe.psi) ** 2
            out[k] = observable.coefficient * scale * parity_expectation(probs, mask)
        return out

    def measure(self, states: list[TrajectoryState], observable: PauliTerm) -> tuple[float, float]:
        values = self.measure_each(states, observable)
        sem = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
        return float(np.mean(values)), sem


def execute_noisy(psi0: np.ndarray, circ: CircuitIR, model: NoiseModel, backend: str = "density",
                  trajectories: int = 1, seed=0):
    """Run ``circ`` from ``psi0``: a density matrix, or a list of trajectory states."""
    if backend == "density":
        b = DensityBackend(model)
        return b.run(b.prepare(psi0), circ)
    if backend == "trajectories":
        b = TrajectoryBackend(model, trajectories, seed)
        return b.run(b.prepare(psi0), circ)
    raise ValueError(f"unknown backend {backend!r}")


def _unit_observable(o: PauliSum) -> PauliTerm:
    if len(o.terms) != 1:
        raise ValueError("noisy measurement needs a single Pauli-string observable")
    return o.terms[0]


def acquire_noisy_series(psi0: np.ndarray, ap_steps: Sequence, ap_delta_tau: float,
                         evo_terms, o: PauliSum, times: Sequence[float], model: NoiseModel,
                         backend: str = "density", trajectories: int = 100,
                         shots: int | str = EXACT, seed=0,
                         node_subset: Sequence[int] | None = None) -> tuple[TimeSeries, list[str]]:
    """Noisy counterpart of ``acquire_series`` running compiled native circuits.

    ``ap_steps`` holds one Hamiltonian (PauliSum or term list) per preparation
    step, each applied for ``ap_delta_tau``.  Evolution advances one Trotter
    step of ``evo_terms`` per node; every node is measured on a copy of the
    running state, so the circuit for node ``r`` is preparation plus ``r``
    evolution steps plus basis change.  Returns the series and any clamp
    messages from the noise model.
    """
    term = _unit_observable(o)
    times = np.asarray(times, dtype=float)
    keep = set(range(len(times)) if node_subset is None else node_subset)
    if backend == "density":
        engine = DensityBackend(model)
    elif backend == "trajectories":
        engine = TrajectoryBackend(model, trajectories, seed)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    state = engine.prepare(psi0)
    for h_step in ap_steps:
        state = engine.run(state, compile_trotter_step(h_step, ap_delta_tau))
    values, sigmas, kept = [], [], []
    last = max(keep)
    for r, span in enumerate(evolution_intervals(times)):
        if r > last:
            break
        if span > 0:
            state = engine.run(state, compile_trotter_step(evo_terms, span))
        if r not in keep:
            continue
        if backend == "density":
            m, mc_sem = engine.measure(state, term), 0.0
        else:
            m, mc_sem = engine.measure(state, term)
        v, s = measure(float(np.clip(m, -1.0, 1.0)), o, shots, generator(seed, "shots", r))
        if shots == EXACT:
            s = mc_sem
        else:
            s = math.hypot(s, mc_sem)
        values.append(v)
        sigmas.append(s)
        kept.append(r)
    series = TimeSeries(times[kept], values, sigmas, shots)
    return series, list(engine.warnings)
