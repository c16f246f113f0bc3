"""Pauli strings, weighted Pauli sums, and their action on state vectors.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
basis-state index.  Axes are encoded as 0=I, 1=X, 2=Y, 3=Z.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache, reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-14
NORM_TOL = 1e-10

AXIS_LABELS = "IXYZ"

PAULI_MATRICES = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class DimensionError(ValueError):
    """Raised when a dense realization or state would exceed size limits or mismatch."""


def max_dense_qubits() -> int:
    """Dense-matrix size limit; overridable through ``GAPSCOPE_MAX_DENSE_QUBITS``."""
    return int(os.environ.get("GAPSCOPE_MAX_DENSE_QUBITS", "12"))


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    axes: tuple[int, ...]

    def __post_init__(self):
        axes = tuple(int(a) for a in self.axes)
        if len(axes) < 1:
            raise ValueError("a Pauli term needs at least one qubit")
        if any(a not in (0, 1, 2, 3) for a in axes):
            raise ValueError(f"axes must lie in {{0,1,2,3}}, got {axes}")
        coefficient = float(self.coefficient)
        if not math.isfinite(coefficient):
            raise ValueError(f"non-finite coefficient {self.coefficient!r}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "coefficient", coefficient)

    @classmethod
    def from_label(cls, coefficient: float, label: str) -> "PauliTerm":
        try:
            axes = tuple(AXIS_LABELS.index(ch) for ch in label.upper())
        except ValueError:
            raise ValueError(f"invalid Pauli label {label!r}") from None
        return cls(coefficient, axes)

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def label(self) -> str:
        return "".join(AXIS_LABELS[a] for a in self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, a in enumerate(self.axes) if a)

    @property
    def weight(self) -> int:
        return len(self.support)

    def is_diagonal(self) -> bool:
        return all(a in (0, 3) for a in self.axes)

    def masks(self) -> tuple[int, int, int]:
        """Return ``(x_mask, z_mask, n_y)`` in basis-index bit positions."""
        n = len(self.axes)
        x_mask = z_mask = 0
        n_y = 0
        for q, a in enumerate(self.axes):
            bit = 1 << (n - 1 - q)
            if a in (1, 2):
                x_mask |= bit
            if a in (2, 3):
                z_mask |= bit
            if a == 2:
                n_y += 1
        return x_mask, z_mask, n_y


class PauliSum:
    """Canonical weighted sum of Pauli strings on ``n_qubits`` qubits.

    Terms with identical axes are merged and terms with ``|c| < 1e-14`` are
    dropped.  Instances are treated as immutable.
    """

    __slots__ = ("_terms", "n_qubits")

    def __init__(self, terms: Iterable[PauliTerm], n_qubits: int | None = None):
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits is required for an empty PauliSum")
            n_qubits = terms[0].n_qubits
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        merged: dict[tuple[int, ...], float] = {}
        for t in terms:
            if t.n_qubits != n_qubits:
                raise ValueError(
                    f"term {t.label} acts on {t.n_qubits} qubits, expected {n_qubits}"
                )
            merged[t.axes] = merged.get(t.axes, 0.0) + t.coefficient
        self._terms = tuple(
            PauliTerm(c, axes)
            for axes, c in sorted(merged.items())
            if abs(c) >= MERGE_TOL
        )
        self.n_qubits = int(n_qubits)

    @property
    def terms(self) -> tuple[PauliTerm, ...]:
        return self._terms

    @classmethod
    def from_labels(cls, pairs: Iterable[tuple[float, str]], n_qubits: int | None = None) -> "PauliSum":
        return cls([PauliTerm.from_label(c, s) for c, s in pairs], n_qubits)

    @classmethod
    def single(cls, label: str, coefficient: float = 1.0) -> "PauliSum":
        return cls([PauliTerm.from_label(coefficient, label)])

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls([], n_qubits)

    def canonicalize(self) -> "PauliSum":
        return PauliSum(self._terms, self.n_qubits)

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, self._terms))

    def __repr__(self):
        body = " + ".join(f"{t.coefficient:g}*{t.label}" for t in self._terms) or "0"
        return f"PauliSum({body}; n_qubits={self.n_qubits})"

    def _check_compatible(self, other: "PauliSum"):
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._check_compatible(other)
        return PauliSum(self._terms + other._terms, self.n_qubits)

    def __sub__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        return PauliSum(
            [PauliTerm(scalar * t.coefficient, t.axes) for t in self._terms], self.n_qubits
        )

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def one_norm(self) -> float:
        """Sum of absolute coefficients; bounds any expectation value."""
        return float(sum(abs(t.coefficient) for t in self._terms))

    def is_diagonal(self) -> bool:
        return all(t.is_diagonal() for t in self._terms)

    def diagonal(self) -> np.ndarray:
        """Diagonal of the dense realization, computed without building the matrix."""
        return diagonal_values(self)

    def to_text(self) -> str:
        return "".join(f"{t.coefficient!r} {t.label}\n" for t in self._terms)

    @classmethod
    def parse(cls, text: str) -> "PauliSum":
        """Parse ``<coeff> <axes>`` lines; ``#`` starts a comment."""
        terms = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<coeff> <axes>', got {raw!r}")
            coeff = float(parts[0].replace("−", "-"))
            terms.append(PauliTerm.from_label(coeff, parts[1]))
        if not terms:
            raise ValueError("no Pauli terms found")
        n = terms[0].n_qubits
        return cls(terms, n)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PauliSum":
        return cls.parse(Path(path).read_text())

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_text())


def _check_dense_limit(n_qubits: int) -> None:
    limit = max_dense_qubits()
    if n_qubits > limit:
        raise DimensionError(
            f"{n_qubits} qubits exceeds the dense limit of {limit} "
            "(set GAPSCOPE_MAX_DENSE_QUBITS to override)"
        )


def pauli_string_matrix(axes: Sequence[int]) -> np.ndarray:
    return reduce(np.kron, (PAULI_MATRICES[a] for a in axes))


def to_dense_matrix(h: PauliSum) -> np.ndarray:
    _check_dense_limit(h.n_qubits)
    dim = 1 << h.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim)
    for t in h.terms:
        x_mask, z_mask, n_y = t.masks()
        phase = (1j) ** n_y * _parity_sign(idx & z_mask)
        # P|x> = phase(x) |x ^ x_mask>
        out[idx ^ x_mask, idx] += t.coefficient * phase
    return out


def _parity_sign(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    if hasattr(np, "bitwise_count"):
        return 1 - 2 * (np.bitwise_count(v) & 1).astype(np.int64)
    v = v.copy()
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    return 1 - 2 * parity


@lru_cache(maxsize=8)
def basis_indices(dim: int) -> np.ndarray:
    idx = np.arange(dim)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=512)
def z_signs(dim: int, z_mask: int) -> np.ndarray:
    """(-1)^popcount(x & z_mask) for every basis index x, as float64."""
    signs = _parity_sign(basis_indices(dim) & z_mask).astype(np.float64)
    signs.setflags(write=False)
    return signs


def diagonal_values(h: PauliSum) -> np.ndarray:
    dim = 1 << h.n_qubits
    out = np.zeros(dim)
    for t in h.terms:
        if t.is_diagonal():
            _, z_mask, _ = t.masks()
            out += t.coefficient * z_signs(dim, z_mask)
    return out


def apply_pauli_string(term: PauliTerm, psi: np.ndarray) -> np.ndarray:
    """Return ``P|psi>`` for the unit-coefficient string of ``term``."""
    dim = psi.shape[0]
    x_mask, z_mask, n_y = term.masks()
    out = psi * z_signs(dim, z_mask) if z_mask else psi.copy()
    if n_y % 4:
        out *= (1j) ** n_y
    if x_mask:
        n = dim.bit_length() - 1
        flips = tuple(q for q in range(n) if x_mask >> (n - 1 - q) & 1)
        out = np.ascontiguousarray(np.flip(out.reshape((2,) * n), axis=flips)).reshape(dim)
    return out


def apply_pauli_sum(h: PauliSum, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (1 << h.n_qubits,):
        raise DimensionError(f"state of shape {psi.shape} does not match {h.n_qubits} qubits")
    out = np.zeros_like(psi)
    for t in h.terms:
        out += t.coefficient * apply_pauli_string(t, psi)
    return out


def matrix_element(o: PauliSum, bra: np.ndarray, ket: np.ndarray) -> complex:
    bra = np.asarray(bra, dtype=complex)
    if bra.shape != (1 << o.n_qubits,):
        raise DimensionError(f"bra of shape {bra.shape} does not match {o.n_qubits} qubits")
    return complex(np.vdot(bra, apply_pauli_sum(o, ket)))


def expectation(o: PauliSum, psi: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=complex)
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
    value = matrix_element(o, psi, psi)
    if abs(value.imag) > NORM_TOL * max(1.0, o.one_norm()):
        raise ValueError(f"expectation has imaginary part {value.imag!r}")
    return value.real


def random_pauli_sum(n_qubits: int, n_terms: int, rng: np.random.Generator) -> PauliSum:
    """Random real-coefficient sum, used by tests and examples."""
    terms = [
        PauliTerm(rng.normal(), tuple(rng.integers(0, 4, size=n_qubits)))
        for _ in range(n_terms)
    ]
    return PauliSum(terms, n_qubits)
