"""Regenerate the shipped H2 / He2 integral fixtures.

Requires pyscf, which is not a runtime dependency:

    pip install --target /tmp/pyscf_env pyscf
    PYTHONPATH=/tmp/pyscf_env python tools/make_molecule_fixtures.py

Integrals are restricted Hartree-Fock molecular orbitals expanded to spin
orbitals, interleaved as (0a, 0b, 1a, 1b, ...).  No frozen core, no active
space.  Two-body entries are stored for the operator order
c+_p c+_q c_r c_s, i.e. h_pqrs = (ps|qr) in chemists' notation.
"""

import json
import sys
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, scf

OUT = Path(__file__).resolve().parents[1] / "src" / "gapscope" / "data" / "molecules"

SETS = {
    "h2": dict(atom="H", basis="sto-3g",
               bond_lengths=[0.5, 0.6, 0.74, 0.9, 1.1, 1.3, 1.5, 1.8, 2.1, 2.5]),
    "he2": dict(atom="He", basis="6-31g",
                bond_lengths=[1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0]),
}


def spin_orbital_integrals(mol):
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    n = h1.shape[0]
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), n)  # (ij|kl)
    ns = 2 * n
    one = np.zeros((ns, ns))
    two = np.zeros((ns,) * 4)
    for p in range(ns):
        for q in range(ns):
            if p % 2 == q % 2:
                one[p, q] = h1[p // 2, q // 2]
    for p in range(ns):
        for q in range(ns):
            for r in range(ns):
                for s in range(ns):
                    if p % 2 == s % 2 and q % 2 == r % 2:
                        two[p, q, r, s] = eri[p // 2, s // 2, q // 2, r // 2]
    return mf.e_tot, mol.energy_nuc(), one, two


def main():
    for name, cfg in SETS.items():
        folder = OUT / name
        folder.mkdir(parents=True, exist_ok=True)
        index = {
            "molecule": cfg["atom"] + "2",
            "basis": cfg["basis"],
            "spin_orbital_order": "interleaved alpha/beta, ascending RHF orbital energy",
            "two_body_convention": "h_pqrs multiplies c+_p c+_q c_r c_s; h_pqrs = (ps|qr)",
            "generator": "tools/make_molecule_fixtures.py (pyscf RHF)",
            "geometries": [],
        }
        for r in cfg["bond_lengths"]:
            mol = gto.M(atom=f"{cfg['atom']} 0 0 0; {cfg['atom']} 0 0 {r}",
                        basis=cfg["basis"], unit="Angstrom", verbose=0)
            e_hf, e_nuc, one, two = spin_orbital_integrals(mol)
            fname = f"{name}_{r:.3f}.json"
            data = {
                "molecule": index["molecule"],
                "basis": cfg["basis"],
                "bond_length_angstrom": r,
                "hf_energy": e_hf,
                "n_electrons": mol.nelectron,
                "n_orbitals": one.shape[0],
                "nuclear_repulsion": e_nuc,
                "one_body": [[int(p), int(q), float(one[p, q])]
                             for p, q in zip(*np.nonzero(np.abs(one) > 1e-12))],
                "two_body": [[int(p), int(q), int(r_), int(s), float(two[p, q, r_, s])]
                             for p, q, r_, s in zip(*np.nonzero(np.abs(two) > 1e-12))],
            }
            (folder / fname).write_text(json.dumps(data) + "\n")
            index["geometries"].append({"bond_length": r, "file": fname, "hf_energy": e_hf})
            print(name, r, e_hf, file=sys.stderr)
        (folder / "index.json").write_text(json.dumps(index, indent=1) + "\n")


if __name__ == "__main__":
    main()
