"""Exact-diagonalization reference: spectra, gaps, ideal series and amplitudes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .estimation import EXACT, TimeSeries
from .pauli import PauliSum, apply_pauli_sum, to_dense_matrix

DEGENERACY_RTOL = 1e-9


def degeneracy_tol(h: PauliSum) -> float:
    """Absolute tolerance ``1e-9 * ||H||`` (one-norm bound, at least 1e-9)."""
    return DEGENERACY_RTOL * max(1.0, h.one_norm())


@dataclass
class SpectrumSlice:
    """Lowest eigenpairs; ``vectors[:, k]`` belongs to ``energies[k]``."""

    energies: np.ndarray
    vectors: np.ndarray
    degeneracy_tol: float = DEGENERACY_RTOL

    def cluster(self, k: int, tol: float | None = None) -> np.ndarray:
        """Indices of all returned levels degenerate with level ``k``."""
        tol = self.degeneracy_tol if tol is None else tol
        return np.flatnonzero(np.abs(self.energies - self.energies[k]) <= tol)

    def gap(self, i: int = 0, j: int = 1) -> float:
        return float(self.energies[j] - self.energies[i])


def _adapt_to_symmetry(energies, vectors, symmetry: PauliSum, tol: float):
    """Rotate each degenerate cluster onto eigenvectors of ``symmetry``.

    Within a cluster the vectors are ordered by descending symmetry eigenvalue,
    so the even-parity partner comes first.
    """
    vectors = vectors.copy()
    k = 0
    n = len(energies)
    while k < n:
        end = k + 1
        while end < n and energies[end] - energies[k] <= tol:
            end += 1
        if end - k > 1:
            block = vectors[:, k:end]
            s_block = block.conj().T @ np.column_stack(
                [apply_pauli_sum(symmetry, block[:, c]) for c in range(end - k)])
            s_block = 0.5 * (s_block + s_block.conj().T)
            vals, rot = np.linalg.eigh(s_block)
            order = np.argsort(-vals, kind="stable")
            vectors[:, k:end] = block @ rot[:, order]
        k = end
    return vectors


def diagonalize(h: PauliSum, k: int | None = None, symmetry: PauliSum | None = None,
                tol: float | None = None) -> SpectrumSlice:
    """Dense eigendecomposition (lowest ``k`` levels; all if ``k`` is None)."""
    tol = degeneracy_tol(h) if tol is None else tol
    mat = to_dense_matrix(h)
    if k is None or k >= mat.shape[0]:
        energies, vectors = np.linalg.eigh(mat)
    else:
        energies, vectors = scipy.linalg.eigh(mat, subset_by_index=[0, k - 1])
    if symmetry is not None:
        vectors = _adapt_to_symmetry(energies, vectors, symmetry, tol)
    return SpectrumSlice(np.asarray(energies, dtype=float), vectors, tol)


def exact_gap(h: PauliSum, i: int = 0, j: int = 1) -> float:
    return diagonalize(h, k=max(i, j) + 1).gap(i, j)


def superposition(spec: SpectrumSlice, i: int = 0, j: int = 1) -> np.ndarray:
    return (spec.vectors[:, i] + spec.vectors[:, j]) / math.sqrt(2.0)


def two_level_parameters(spec: SpectrumSlice, o: PauliSum, i: int = 0, j: int = 1) -> dict:
    """Offset, amplitude, frequency and phase of ``<O(t)>`` for the equal superposition.

    With ``O_ji = <j|O|i> = A exp(i theta)`` the signal is
    ``(O_ii + O_jj)/2 + A cos((E_j - E_i) t + theta)``.
    """
    vi, vj = spec.vectors[:, i], spec.vectors[:, j]
    o_vi = apply_pauli_sum(o, vi)
    o_vj = apply_pauli_sum(o, vj)
    o_ji = complex(np.vdot(vj, o_vi))
    return {
        "offset": 0.5 * float(np.vdot(vi, o_vi).real + np.vdot(vj, o_vj).real),
        "amplitude": abs(o_ji),
        "frequency": spec.gap(i, j),
        "phase": math.atan2(o_ji.imag, o_ji.real) % (2 * math.pi),
    }


def exact_series(h: PauliSum, o: PauliSum, psi: np.ndarray, times: Sequence[float],
                 spec: SpectrumSlice | None = None) -> TimeSeries:
    """``<psi| e^{iHt} O e^{-iHt} |psi>`` from the full eigendecomposition."""
    if spec is None or spec.vectors.shape[1] != spec.vectors.shape[0]:
        spec = diagonalize(h)
    coeffs = spec.vectors.conj().T @ np.asarray(psi, dtype=complex)
    times = np.asarray(times, dtype=float)
    values = np.empty(len(times))
    for r, t in enumerate(times):
        phi = spec.vectors @ (np.exp(-1j * spec.energies * t) * coeffs)
        values[r] = np.vdot(phi, apply_pauli_sum(o, phi)).real
    return TimeSeries(times, values, np.zeros(len(times)), EXACT)


def transition_amplitude(h: PauliSum, o: PauliSum, symmetry: PauliSum | None = None,
                         i: int = 0, j: int = 1) -> float:
    """``|<j|O|i>|`` using a symmetry-adapted basis where levels are degenerate."""
    spec = diagonalize(h, k=max(i, j) + 1, symmetry=symmetry)
    if symmetry is not None and len(spec.cluster(i)) > 1:
        # the lowest-k slice may cut a cluster; redo with a full decomposition
        spec = diagonalize(h, symmetry=symmetry)
    return two_level_parameters(spec, o, i, j)["amplitude"]


def amplitude_scan(family: Callable[[float], PauliSum], o: PauliSum, grid: Sequence[float],
                   symmetry: PauliSum | None = None) -> list[tuple[float, float]]:
    return [(float(x), transition_amplitude(family(x), o, symmetry)) for x in grid]


def projection_weights(psi: np.ndarray, spec: SpectrumSlice, levels: Sequence[int],
                       tol: float | None = None) -> list[float]:
    """Squared overlap of ``psi`` with the eigenspace of each requested level.

    Levels whose eigenspaces coincide are resolved with the individual
    (possibly symmetry-adapted) eigenvectors instead.
    """
    clusters = [tuple(spec.cluster(k, tol)) for k in levels]
    shared = len(set(clusters)) < len(clusters)
    out = []
    for k, members in zip(levels, clusters):
        cols = [k] if shared else list(members)
        amps = spec.vectors[:, cols].conj().T @ psi
        out.append(float(np.sum(np.abs(amps) ** 2)))
    return out
