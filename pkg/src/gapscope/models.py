"""Hamiltonian builders: transverse-field Ising models and Jordan-Wigner molecules."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .pauli import PauliSum, PauliTerm

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class IsingSpec:
    """Transverse-field Ising model ``-(J1/2) sum XX - (h3/2) sum Z``.

    ``dims`` is ``(L,)`` for a chain and ``(Lx, Ly)`` for a square lattice.
    """

    topology: str = "chain"
    dims: tuple[int, ...] = (4,)
    J1: float = 1.0
    h3: float = 0.0
    pbc: bool = True

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.topology == "chain":
            if len(self.dims) != 1 or self.dims[0] < 2:
                raise ValueError(f"chain needs dims=(L,) with L >= 2, got {self.dims}")
        elif self.topology == "square_lattice":
            if len(self.dims) != 2 or min(self.dims) < 2:
                raise ValueError(f"square lattice needs dims=(Lx, Ly) with both >= 2, got {self.dims}")
        else:
            raise ValueError(f"unknown topology {self.topology!r}")
        if not self.J1 > 0:
            raise ValueError(f"J1 must be positive, got {self.J1}")
        if not self.h3 >= 0:
            raise ValueError(f"h3 must be non-negative, got {self.h3}")

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    def with_field(self, h3: float) -> "IsingSpec":
        return IsingSpec(self.topology, self.dims, self.J1, h3, self.pbc)


def ising_bonds(spec: IsingSpec) -> list[tuple[int, int]]:
    """Directed nearest-neighbour bonds, duplicates from short periodic axes kept."""
    bonds = []
    if spec.topology == "chain":
        (L,) = spec.dims
        for i in range(L):
            if i + 1 < L or spec.pbc:
                bonds.append((i, (i + 1) % L))
    else:
        lx, ly = spec.dims
        for y in range(ly):
            for x in range(lx):
                site = y * lx + x
                if x + 1 < lx or spec.pbc:
                    bonds.append((site, y * lx + (x + 1) % lx))
                if y + 1 < ly or spec.pbc:
                    bonds.append((site, ((y + 1) % ly) * lx + x))
    return bonds


def _two_site(n: int, i: int, j: int, axis: int, coefficient: float) -> PauliTerm:
    axes = [0] * n
    axes[i] = axis
    axes[j] = axis
    return PauliTerm(coefficient, tuple(axes))


def ising_terms(spec: IsingSpec, include_field: bool = True) -> list[PauliTerm]:
    """Unmerged term list: field terms first, then one XX term per directed bond.

    Compiling this list (rather than the merged PauliSum) keeps one entangling
    gate per bond, which is what a lattice with extent-2 periodic axes costs on
    hardware.
    """
    n = spec.n_sites
    terms = []
    if include_field and spec.h3 != 0:
        for i in range(n):
            axes = [0] * n
            axes[i] = 3
            terms.append(PauliTerm(-spec.h3 / 2, tuple(axes)))
    for i, j in ising_bonds(spec):
        terms.append(_two_site(n, i, j, 1, -spec.J1 / 2))
    return terms


def build_ising(spec: IsingSpec) -> PauliSum:
    return PauliSum(ising_terms(spec), spec.n_sites)


def build_ising_h0(spec: IsingSpec) -> PauliSum:
    return build_ising(spec.with_field(0.0))


def ising_observable(n_sites: int, site: int = 0) -> PauliSum:
    """Single-site ``sigma^x`` observable, the default probe for Ising runs."""
    axes = [0] * n_sites
    axes[site] = 1
    return PauliSum([PauliTerm(1.0, tuple(axes))], n_sites)


def parity_operator(n_qubits: int) -> PauliSum:
    """``prod_i Z_i``; equals the z-rotation symmetry up to the phase ``(-i)^L``."""
    return PauliSum([PauliTerm(1.0, (3,) * n_qubits)], n_qubits)


def diagonal_part(h: PauliSum) -> PauliSum:
    return PauliSum([t for t in h.terms if t.is_diagonal()], h.n_qubits)


def off_diagonal_part(h: PauliSum) -> PauliSum:
    return PauliSum([t for t in h.terms if not t.is_diagonal()], h.n_qubits)


# -- fermions ---------------------------------------------------------------


@dataclass
class FermionIntegrals:
    """Second-quantized integrals over spin orbitals.

    The Hamiltonian is ``sum h_pq c+_p c_q + 1/2 sum h_pqrs c+_p c+_q c_r c_s
    + nuclear_repulsion``, with indices in the order they appear in the operator
    string.
    """

    n_orbitals: int
    one_body: np.ndarray
    two_body: np.ndarray
    nuclear_repulsion: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n_orbitals)
        if n < 1:
            raise ValueError("n_orbitals must be positive")
        self.one_body = np.asarray(self.one_body, dtype=float)
        self.two_body = np.asarray(self.two_body, dtype=float)
        if self.one_body.shape != (n, n):
            raise ValueError(f"one_body has shape {self.one_body.shape}, expected {(n, n)}")
        if self.two_body.shape != (n,) * 4:
            raise ValueError(f"two_body has shape {self.two_body.shape}, expected {(n,) * 4}")
        if not np.allclose(self.one_body, self.one_body.T, atol=SYMMETRY_TOL, rtol=0):
            raise ValueError("one_body integrals are not symmetric")
        self.nuclear_repulsion = float(self.nuclear_repulsion)

    @classmethod
    def from_json_dict(cls, data: dict) -> "FermionIntegrals":
        n = int(data["n_orbitals"])
        one = np.zeros((n, n))
        two = np.zeros((n,) * 4)
        for entry in data.get("one_body", []):
            p, q, v = entry
            _check_index(n, p, q)
            one[int(p), int(q)] = float(v)
        for entry in data.get("two_body", []):
            p, q, r, s, v = entry
            _check_index(n, p, q, r, s)
            two[int(p), int(q), int(r), int(s)] = float(v)
        meta = {k: v for k, v in data.items()
                if k not in ("n_orbitals", "one_body", "two_body", "nuclear_repulsion")}
        return cls(n, one, two, data.get("nuclear_repulsion", 0.0), meta)

    def to_json_dict(self, tol: float = 1e-12) -> dict:
        one = [[int(p), int(q), float(self.one_body[p, q])]
               for p, q in zip(*np.nonzero(np.abs(self.one_body) > tol))]
        two = [[int(p), int(q), int(r), int(s), float(self.two_body[p, q, r, s])]
               for p, q, r, s in zip(*np.nonzero(np.abs(self.two_body) > tol))]
        return {
            **self.metadata,
            "n_orbitals": int(self.n_orbitals),
            "nuclear_repulsion": self.nuclear_repulsion,
            "one_body": one,
            "two_body": two,
        }


def _check_index(n, *indices):
    for i in indices:
        if not 0 <= int(i) < n:
            raise ValueError(f"orbital index {i} out of range for n_orbitals={n}")


def load_integrals(path: str | os.PathLike) -> FermionIntegrals:
    return FermionIntegrals.from_json_dict(json.loads(Path(path).read_text()))


def save_integrals(ints: FermionIntegrals, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(ints.to_json_dict(), indent=1) + "\n")


# single-qubit products: _MUL[a][b] = (phase, c) with sigma_a sigma_b = phase sigma_c
_MUL = [[(1, 0), (1, 1), (1, 2), (1, 3)],
        [(1, 1), (1, 0), (1j, 3), (-1j, 2)],
        [(1, 2), (-1j, 3), (1, 0), (1j, 1)],
        [(1, 3), (1j, 2), (-1j, 1), (1, 0)]]


def _multiply(a: dict, b: dict) -> dict:
    out: dict = {}
    for axes_a, ca in a.items():
        for axes_b, cb in b.items():
            phase = ca * cb
            axes = []
            for x, y in zip(axes_a, axes_b):
                ph, z = _MUL[x][y]
                phase *= ph
                axes.append(z)
            key = tuple(axes)
            out[key] = out.get(key, 0) + phase
    return out


def _ladder(n: int, p: int, dagger: bool) -> dict:
    """Jordan-Wigner image of ``c_p`` (or ``c+_p``): Z..Z (X +/- iY)/2."""
    prefix = (3,) * p
    suffix = (0,) * (n - p - 1)
    sign = -1 if dagger else 1
    return {prefix + (1,) + suffix: 0.5, prefix + (2,) + suffix: 0.5j * sign}


def jordan_wigner(ints: FermionIntegrals, tol: float = 1e-12) -> PauliSum:
    n = ints.n_orbitals
    create = [_ladder(n, p, True) for p in range(n)]
    annihilate = [_ladder(n, p, False) for p in range(n)]
    acc: dict = {(0,) * n: complex(ints.nuclear_repulsion)}

    def add(op, scale):
        for k, v in op.items():
            acc[k] = acc.get(k, 0) + scale * v

    for p, q in zip(*np.nonzero(np.abs(ints.one_body) > tol)):
        add(_multiply(create[p], annihilate[q]), ints.one_body[p, q])
    pair_cache: dict = {}
    for p, q, r, s in zip(*np.nonzero(np.abs(ints.two_body) > tol)):
        if p == q or r == s:
            continue  # c+_p c+_p = 0
        left = pair_cache.get(("c", p, q))
        if left is None:
            left = pair_cache[("c", p, q)] = _multiply(create[p], create[q])
        right = pair_cache.get(("a", r, s))
        if right is None:
            right = pair_cache[("a", r, s)] = _multiply(annihilate[r], annihilate[s])
        add(_multiply(left, right), 0.5 * ints.two_body[p, q, r, s])

    terms = []
    scale = max(1.0, max((abs(v) for v in acc.values()), default=1.0))
    for axes, c in acc.items():
        if abs(c.imag) > 1e-10 * scale:
            raise ValueError(
                f"non-Hermitian integrals: term {axes} has imaginary coefficient {c.imag!r}"
            )
        terms.append(PauliTerm(c.real, axes))
    return PauliSum(terms, n)


# -- shipped fixtures --------------------------------------------------------


def fixture_dir(name: str) -> Path:
    """Directory of a shipped molecule fixture set (``h2`` or ``he2``)."""
    root = resources.files("gapscope") / "data" / "molecules" / name
    return Path(str(root))


def molecule_index(path: str | os.PathLike) -> dict:
    """Read ``index.json`` of a fixture directory: bond length -> integral file."""
    path = Path(path)
    if not path.is_dir() and not path.exists():
        candidate = fixture_dir(str(path))
        if candidate.is_dir():
            path = candidate
    index = json.loads((path / "index.json").read_text())
    index["_root"] = str(path)
    return index


def molecule_for_bond_length(path: str | os.PathLike, bond_length: float) -> FermionIntegrals:
    index = molecule_index(path)
    for entry in index["geometries"]:
        if abs(entry["bond_length"] - bond_length) < 1e-9:
            return load_integrals(Path(index["_root"]) / entry["file"])
    available = [e["bond_length"] for e in index["geometries"]]
    raise KeyError(f"no fixture at bond length {bond_length}; available: {available}")


def flip_observable(n_qubits: int, basis_a: int, basis_b: int) -> PauliSum:
    """Tensor product of I and X mapping basis state ``a`` onto ``b``."""
    diff = basis_a ^ basis_b
    if diff == 0:
        raise ValueError("basis states must differ")
    axes = tuple(1 if (diff >> (n_qubits - 1 - q)) & 1 else 0 for q in range(n_qubits))
    return PauliSum([PauliTerm(1.0, axes)], n_qubits)


def bond_lengths(path: str | os.PathLike) -> Sequence[float]:
    return [e["bond_length"] for e in molecule_index(path)["geometries"]]
