"""Adiabatic preparation of two-eigenstate superpositions.

The interpolating Hamiltonian is ``H0 + s (H - H0)``.  Step ``q`` of ``Q``
uses ``s = q / (Q + 1)``, so the schedule never lands exactly on ``H``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import TrotterStepper
from .oracle import SpectrumSlice, diagonalize, exact_series, projection_weights, superposition
from .pauli import PauliSum, diagonal_values
from .rng import generator

TIE_TOL = 1e-9


@dataclass(frozen=True)
class DeltaTauTable:
    """Piecewise-constant per-step duration keyed by the sweep parameter.

    ``breakpoints[k]`` is the smallest parameter value at which ``values[k]``
    applies; below the first breakpoint the first value is used.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bps) != len(vals) or not vals:
            raise ValueError("delta_tau table needs equally many breakpoints and values")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("delta_tau breakpoints must be strictly increasing")
        if any(not v > 0 for v in vals):
            raise ValueError("delta_tau values must be positive")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float) -> "DeltaTauTable":
        return cls((0.0,), (value,))

    @classmethod
    def from_config(cls, spec) -> "DeltaTauTable":
        """Accept a number or a list of ``{"from": x, "delta_tau": v}`` entries."""
        if isinstance(spec, (int, float)):
            return cls.constant(float(spec))
        entries = sorted(spec, key=lambda e: e["from"])
        return cls(tuple(e["from"] for e in entries), tuple(e["delta_tau"] for e in entries))

    def to_config(self) -> list[dict]:
        return [{"from": b, "delta_tau": v} for b, v in zip(self.breakpoints, self.values)]

    def lookup(self, x: float) -> float:
        k = bisect.bisect_right(self.breakpoints, x) - 1
        return self.values[max(k, 0)]


@dataclass(frozen=True)
class ApSchedule:
    steps: int
    delta_tau: float

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps}")
        if not self.delta_tau > 0:
            raise ValueError(f"delta_tau must be positive, got {self.delta_tau}")

    @property
    def tau(self) -> float:
        return self.steps * self.delta_tau

    def fractions(self) -> np.ndarray:
        q = np.arange(1, self.steps + 1)
        return q / (self.steps + 1)


def interpolate(h0: PauliSum, h: PauliSum, s: float) -> PauliSum:
    return (1.0 - s) * h0 + s * h


def run_ap(psi0: np.ndarray, h0: PauliSum, h: PauliSum, schedule: ApSchedule) -> np.ndarray:
    """One first-order Trotter step of ``H0 + s (H - H0)`` per schedule point."""
    if h0.n_qubits != h.n_qubits:
        raise ValueError("H0 and H act on different qubit counts")
    psi = np.asarray(psi0, dtype=complex)
    for s in schedule.fractions():
        psi = TrotterStepper(interpolate(h0, h, s)).step(psi, schedule.delta_tau)
    return psi / np.linalg.norm(psi)


# -- initial states ----------------------------------------------------------


def plus_state(n_qubits: int) -> np.ndarray:
    """``|+>^n``: the equal superposition of the two ferromagnetic XX ground states."""
    dim = 1 << n_qubits
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)


def lowest_diagonal_pair(h: PauliSum, tol: float = TIE_TOL) -> tuple[int, int]:
    """Basis indices of the two lowest diagonal entries; ties go to the lower index."""
    diag = diagonal_values(h).copy()
    picked = []
    for _ in range(2):
        lowest = np.flatnonzero(diag <= diag.min() + tol)
        picked.append(int(lowest[0]))
        diag[lowest[0]] = np.inf
    return picked[0], picked[1]


def diagonal_pair_state(n_qubits: int, a: int, b: int) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[a] = psi[b] = 1.0 / math.sqrt(2.0)
    return psi


# -- diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class PrepReport:
    fidelity_ground: float
    fidelity_excited: float

    @property
    def leakage(self) -> float:
        return 1.0 - self.fidelity_ground - self.fidelity_excited


def prep_report(psi: np.ndarray, h: PauliSum, i: int = 0, j: int = 1,
                spectrum: SpectrumSlice | None = None) -> PrepReport:
    spec = spectrum if spectrum is not None else diagonalize(h)
    fg, fe = projection_weights(np.asarray(psi, dtype=complex), spec, [i, j])
    return PrepReport(fg, fe)


def orthogonal_unit_vector(spec: SpectrumSlice, i: int, j: int, seed=0) -> np.ndarray:
    """Seeded random unit vector orthogonal to ``span{|i>, |j>}``."""
    rng = generator(seed, "chi")
    dim = spec.vectors.shape[0]
    chi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    basis = spec.vectors[:, [i, j]]
    for _ in range(2):
        chi = chi - basis @ (basis.conj().T @ chi)
    return chi / np.linalg.norm(chi)


def prep_error_scan(epsilons: Sequence[float], h: PauliSum, o: PauliSum,
                    times: Sequence[float], i: int = 0, j: int = 1,
                    seed=0) -> list[tuple[float, float, float]]:
    """Deviation of ``<O(t)>`` and infidelity when the target state is perturbed.

    ``|nu> = normalize(|Psi> + eps |chi>)`` with ``chi`` orthogonal to both
    eigenstates.  Returns ``(eps, max_t |<O(t)>_nu - <O(t)>_Psi|, 1 - |<Psi|nu>|^2)``.
    """
    spec = diagonalize(h)
    target = superposition(spec, i, j)
    chi = orthogonal_unit_vector(spec, i, j, seed)
    ref = exact_series(h, o, target, times, spec).values
    rows = []
    for eps in epsilons:
        nu = target + eps * chi
        nu = nu / np.linalg.norm(nu)
        dev = float(np.max(np.abs(exact_series(h, o, nu, times, spec).values - ref)))
        infidelity = float(1.0 - abs(np.vdot(target, nu)) ** 2)
        rows.append((float(eps), dev, infidelity))
    return rows
