"""Native trapped-ion gate set, Trotter compilation, and statevector execution.

Two execution routes exist for a Trotter step.  The native route compiles
each Pauli exponential to GPI2 / VirtualZ / MS gates and is what the noisy
backends consume.  The fast route applies ``exp(-i a P)`` directly to the
amplitudes and is what noiseless runs use.  Both emit the same term order:
diagonal terms first, then the remaining terms in canonical order, so they
agree to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliSum, PauliTerm, apply_pauli_string, basis_indices, diagonal_values

MAX_STATEVECTOR_QUBITS = 24

GPI2 = "GPI2"
VIRTUAL_Z = "VIRTUAL_Z"
MS = "MS"
_ARITY = {GPI2: 1, VIRTUAL_Z: 1, MS: 2}
_NPARAMS = {GPI2: 1, VIRTUAL_Z: 1, MS: 3}


class UnsupportedTermError(ValueError):
    pass


@dataclass(frozen=True)
class NativeGate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        params = tuple(float(p) for p in self.params)
        if len(qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s), got {qubits}")
        if len(set(qubits)) != len(qubits) or min(qubits) < 0:
            raise ValueError(f"invalid qubit indices {qubits}")
        if len(params) != _NPARAMS[self.kind] or not all(map(math.isfinite, params)):
            raise ValueError(f"invalid parameters {params} for {self.kind}")
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "params", params)

    def inverse(self) -> "NativeGate":
        if self.kind == GPI2:
            return NativeGate(GPI2, self.qubits, (self.params[0] + math.pi,))
        if self.kind == VIRTUAL_Z:
            return NativeGate(VIRTUAL_Z, self.qubits, (-self.params[0],))
        phi0, phi1, theta = self.params
        return NativeGate(MS, self.qubits, (phi0, phi1, -theta))

    def to_line(self) -> str:
        return " ".join([self.kind, *map(str, self.qubits), *(repr(p) for p in self.params)])


@dataclass
class CircuitIR:
    n_qubits: int
    gates: list[NativeGate] = field(default_factory=list)
    barriers: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        for g in self.gates:
            self._check(g)

    def _check(self, g: NativeGate):
        if max(g.qubits) >= self.n_qubits:
            raise IndexError(f"gate {g.to_line()} exceeds {self.n_qubits} qubits")

    def append(self, g: NativeGate) -> None:
        self._check(g)
        self.gates.append(g)

    def extend(self, other: "CircuitIR") -> None:
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        offset = len(self.gates)
        self.gates.extend(other.gates)
        self.barriers.extend(offset + b for b in other.barriers)

    def barrier(self) -> None:
        self.barriers.append(len(self.gates))

    def inverse(self) -> "CircuitIR":
        return CircuitIR(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def two_qubit_depth(self) -> int:
        """Entangling depth under as-soon-as-possible scheduling."""
        level = [0] * self.n_qubits
        for g in self.gates:
            if len(g.qubits) == 2:
                d = max(level[q] for q in g.qubits) + 1
                for q in g.qubits:
                    level[q] = d
        return max(level, default=0)

    def dumps(self) -> str:
        lines = [f"QUBITS {self.n_qubits}"]
        barriers = set(self.barriers)
        for i, g in enumerate(self.gates):
            if i in barriers:
                lines.append("BARRIER")
            lines.append(g.to_line())
        if len(self.gates) in barriers:
            lines.append("BARRIER")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CircuitIR":
        circ = None
        for raw in text.splitlines():
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "QUBITS":
                circ = cls(int(parts[1]))
                continue
            if circ is None:
                raise ValueError("circuit dump must start with 'QUBITS <n>'")
            if parts[0] == "BARRIER":
                circ.barrier()
                continue
            kind = parts[0]
            arity = _ARITY[kind]
            qubits = tuple(int(x) for x in parts[1:1 + arity])
            params = tuple(float(x) for x in parts[1 + arity:])
            circ.append(NativeGate(kind, qubits, params))
        if circ is None:
            raise ValueError("empty circuit dump")
        return circ


def gate_matrix(g: NativeGate) -> np.ndarray:
    if g.kind == GPI2:
        (phi,) = g.params
        return np.array([[1, -1j * np.exp(-1j * phi)],
                         [-1j * np.exp(1j * phi), 1]]) / math.sqrt(2)
    if g.kind == VIRTUAL_Z:
        (theta,) = g.params
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    phi0, phi1, theta = g.params
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[1, 1] = m[2, 2] = m[3, 3] = c
    m[0, 3] = -1j * np.exp(-1j * (phi0 + phi1)) * s
    m[1, 2] = -1j * np.exp(-1j * (phi0 - phi1)) * s
    m[2, 1] = -1j * np.exp(1j * (phi0 - phi1)) * s
    m[3, 0] = -1j * np.exp(1j * (phi0 + phi1)) * s
    return m


def n_qubits_of(psi: np.ndarray) -> int:
    n = int(psi.shape[0]).bit_length() - 1
    if psi.ndim != 1 or (1 << n) != psi.shape[0]:
        raise ValueError(f"state length {psi.shape} is not a power of two")
    if n > MAX_STATEVECTOR_QUBITS:
        raise ValueError(f"{n} qubits exceeds the statevector cap of {MAX_STATEVECTOR_QUBITS}")
    return n


def apply_matrix(psi: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix to the listed qubits (first listed = most significant)."""
    n = n_qubits_of(psi)
    k = len(qubits)
    if any(q < 0 or q >= n for q in qubits):
        raise IndexError(f"qubits {tuple(qubits)} out of range for {n} qubits")
    tensor = psi.reshape((2,) * n)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return np.ascontiguousarray(out).reshape(-1)


def _split(psi: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """View ``psi`` with a length-2 axis for each (sorted) listed qubit."""
    n = n_qubits_of(psi)
    if any(q < 0 or q >= n for q in qubits):
        raise IndexError(f"qubits {tuple(qubits)} out of range for {n} qubits")
    shape, prev = [], -1
    for q in sorted(qubits):
        shape += [1 << (q - prev - 1), 2]
        prev = q
    shape.append(1 << (n - prev - 1))
    return psi.reshape(shape)


def _apply_1q(psi: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    v = _split(psi, [q])
    out = np.empty_like(v)
    np.multiply(v[:, 0], m[0, 0], out=out[:, 0])
    out[:, 0] += m[0, 1] * v[:, 1]
    np.multiply(v[:, 0], m[1, 0], out=out[:, 1])
    out[:, 1] += m[1, 1] * v[:, 1]
    return out.reshape(-1)


def _apply_xx(psi: np.ndarray, qubits: Sequence[int], angle: float) -> np.ndarray:
    """``exp(-i angle X_a X_b)`` through a double axis flip."""
    v = _split(psi, qubits)
    out = math.cos(angle) * v
    out -= (1j * math.sin(angle)) * v[:, ::-1, :, ::-1, :]
    return out.reshape(-1)


def apply_gate(psi: np.ndarray, g: NativeGate) -> np.ndarray:
    """Apply a native gate with specialised kernels; other cases go through the matrix."""
    psi = np.asarray(psi, dtype=complex)
    if g.kind == VIRTUAL_Z:
        half = g.params[0] / 2
        v = _split(psi, g.qubits).copy()
        v[:, 0] *= complex(math.cos(half), -math.sin(half))
        v[:, 1] *= complex(math.cos(half), math.sin(half))
        return v.reshape(-1)
    if g.kind == MS and g.params[0] == 0.0 and g.params[1] == 0.0:
        return _apply_xx(psi, g.qubits, g.params[2] / 2)
    if len(g.qubits) == 1:
        return _apply_1q(psi, gate_matrix(g), g.qubits[0])
    return apply_matrix(psi, gate_matrix(g), g.qubits)


def apply_gate_dense(psi: np.ndarray, g: NativeGate) -> np.ndarray:
    """Reference route through the explicit gate matrix."""
    return apply_matrix(np.asarray(psi, dtype=complex), gate_matrix(g), g.qubits)


def execute(psi0: np.ndarray, circ: CircuitIR) -> np.ndarray:
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (1 << circ.n_qubits,):
        raise ValueError(f"state of shape {psi.shape} does not match {circ.n_qubits} qubits")
    for g in circ.gates:
        psi = apply_gate(psi, g)
    return psi


def apply_pauli_exponential(psi: np.ndarray, term: PauliTerm, angle: float) -> np.ndarray:
    """``exp(-i angle P) psi`` for the unit-coefficient string ``P`` of ``term``."""
    psi = np.asarray(psi, dtype=complex)
    return math.cos(angle) * psi - 1j * math.sin(angle) * apply_pauli_string(term, psi)


def commutes(a: PauliTerm, b: PauliTerm) -> bool:
    clashes = sum(1 for x, y in zip(a.axes, b.axes) if x and y and x != y)
    return clashes % 2 == 0


def step_order(terms: Iterable[PauliTerm]) -> tuple[list[PauliTerm], list[PauliTerm]]:
    """Split into (diagonal, off-diagonal) preserving the given order."""
    diag, off = [], []
    for t in terms:
        if all(a == 0 for a in t.axes):
            continue  # global phase
        (diag if t.is_diagonal() else off).append(t)
    return diag, off


class TrotterStepper:
    """Fast first-order Trotter steps of a fixed Hamiltonian on amplitudes."""

    def __init__(self, h: PauliSum | Sequence[PauliTerm]):
        terms = list(h.terms if isinstance(h, PauliSum) else h)
        n = terms[0].n_qubits if terms else h.n_qubits
        self.n_qubits = n
        diag, self.off_diagonal = step_order(terms)
        self.diagonal = diagonal_values(PauliSum(diag, n)) if diag else None

    def step(self, psi: np.ndarray, dt: float) -> np.ndarray:
        if self.diagonal is not None:
            psi = psi * np.exp(-1j * dt * self.diagonal)
        for t in self.off_diagonal:
            psi = apply_pauli_exponential(psi, t, dt * t.coefficient)
        return psi


def trotter_step(psi: np.ndarray, h: PauliSum | Sequence[PauliTerm], dt: float) -> np.ndarray:
    return TrotterStepper(h).step(np.asarray(psi, dtype=complex), dt)


# -- native compilation ------------------------------------------------------

# single-qubit frame change V with V P V^dagger = X, as native gates
def _to_x_basis(axis: int, q: int) -> list[NativeGate]:
    if axis == 1:
        return []
    if axis == 3:
        return [NativeGate(GPI2, (q,), (math.pi / 2,))]
    return [NativeGate(VIRTUAL_Z, (q,), (-math.pi / 2,))]


def _rotation(term: PauliTerm, theta: float) -> list[NativeGate]:
    """Gates realizing ``exp(-i theta/2 P)`` for a weight-1 or weight-2 string."""
    support = term.support
    if len(support) == 1:
        (q,) = support
        axis = term.axes[q]
        if axis == 3:
            return [NativeGate(VIRTUAL_Z, (q,), (theta,))]
        if axis == 1:
            return [NativeGate(GPI2, (q,), (-math.pi / 2,)),
                    NativeGate(VIRTUAL_Z, (q,), (theta,)),
                    NativeGate(GPI2, (q,), (math.pi / 2,))]
        return [NativeGate(VIRTUAL_Z, (q,), (-math.pi / 2,)),
                *_rotation(PauliTerm(1.0, _replace(term.axes, q, 1)), theta),
                NativeGate(VIRTUAL_Z, (q,), (math.pi / 2,))]
    if len(support) == 2:
        a, b = support
        pre = _to_x_basis(term.axes[a], a) + _to_x_basis(term.axes[b], b)
        post = [g.inverse() for g in reversed(pre)]
        return pre + [NativeGate(MS, (a, b), (0.0, 0.0, theta))] + post
    raise UnsupportedTermError(
        f"term {term.label} has weight {len(support)}; native compilation supports weight <= 2"
    )


def _replace(axes, q, value):
    axes = list(axes)
    axes[q] = value
    return tuple(axes)


def _commuting_runs(terms: list[PauliTerm]) -> list[list[PauliTerm]]:
    runs: list[list[PauliTerm]] = []
    for t in terms:
        if runs and all(commutes(t, u) for u in runs[-1]):
            runs[-1].append(t)
        else:
            runs.append([t])
    return runs


def _layers(run: list[PauliTerm]) -> list[list[PauliTerm]]:
    """Greedy packing of mutually commuting terms into qubit-disjoint layers."""
    singles = [t for t in run if t.weight < 2]
    pairs = sorted((t for t in run if t.weight >= 2), key=lambda t: t.support)
    layers: list[tuple[set, list]] = []
    for t in pairs:
        qs = set(t.support)
        for used, members in layers:
            if not used & qs:
                used |= qs
                members.append(t)
                break
        else:
            layers.append((set(qs), [t]))
    out = [singles] if singles else []
    return out + [members for _, members in layers]


def compile_trotter_step(h: PauliSum | Sequence[PauliTerm], dt: float) -> CircuitIR:
    """One first-order Trotter step ``prod_i exp(-i dt c_i P_i)`` in native gates.

    Diagonal terms come first (a Z layer for the Ising field), then the
    remaining terms; runs of mutually commuting two-qubit terms are packed into
    qubit-disjoint layers, which gives two entangling layers per step for an
    even periodic chain.  Passing an unmerged term list keeps duplicate bonds
    as separate gates.
    """
    terms = list(h.terms if isinstance(h, PauliSum) else h)
    if not terms:
        raise ValueError("empty Hamiltonian")
    n = terms[0].n_qubits
    circ = CircuitIR(n)
    diag, off = step_order(terms)
    for group in (diag, off):
        for run in _commuting_runs(group):
            for layer in _layers(run):
                for t in layer:
                    for g in _rotation(t, 2.0 * dt * t.coefficient):
                        circ.append(g)
    circ.barrier()
    return circ


def compile_trotter_circuit(h: PauliSum | Sequence[PauliTerm], dt: float, steps: int) -> CircuitIR:
    step = compile_trotter_step(h, dt)
    circ = CircuitIR(step.n_qubits)
    for _ in range(steps):
        circ.extend(step)
    return circ


def circuit_unitary(circ: CircuitIR) -> np.ndarray:
    """Dense unitary of a small circuit; columns are images of basis states."""
    dim = 1 << circ.n_qubits
    cols = [execute(np.eye(dim, dtype=complex)[:, k], circ) for k in range(dim)]
    return np.stack(cols, axis=1)


def measurement_basis_circuit(observable: PauliTerm) -> CircuitIR:
    """Native gates rotating ``observable`` onto a product of Z operators."""
    circ = CircuitIR(observable.n_qubits)
    for q, axis in enumerate(observable.axes):
        if axis == 1:
            circ.append(NativeGate(GPI2, (q,), (-math.pi / 2,)))
        elif axis == 2:
            circ.append(NativeGate(GPI2, (q,), (0.0,)))
    return circ


def parity_mask(observable: PauliTerm) -> int:
    x_mask, z_mask, _ = observable.masks()
    return x_mask | z_mask


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def norm_deviation(psi: np.ndarray) -> float:
    return abs(float(np.vdot(psi, psi).real) - 1.0)


__all__ = [
    "CircuitIR", "NativeGate", "TrotterStepper", "GPI2", "VIRTUAL_Z", "MS",
    "apply_gate", "apply_gate_dense", "apply_matrix", "apply_pauli_exponential", "basis_indices",
    "circuit_unitary", "compile_trotter_circuit", "compile_trotter_step", "execute",
    "gate_matrix", "measurement_basis_circuit", "trotter_step",
]
