"""Regenerate the preparation step-duration table shipped in the ising-paper preset.

For each field regime of width 0.5 (in units of J1) the table entry is the
per-step duration that maximizes the regime-averaged weight of the prepared
state on the two lowest eigenstates of a 4-site periodic chain with 15
preparation steps.  Only preparation fidelity enters the choice; gap
estimates are never consulted.

    python tools/calibrate_delta_tau.py > table.json
"""

import json

import numpy as np

from gapscope.adiabatic import ApSchedule, plus_state, prep_report, run_ap
from gapscope.models import IsingSpec, build_ising, build_ising_h0, parity_operator
from gapscope.oracle import diagonalize

L = 4
STEPS = 15
WIDTH = 0.5
FIELDS = np.round(np.arange(1.5, 6.01, 0.1), 3)
DURATIONS = np.round(np.arange(0.20, 0.51, 0.01), 3)


def fidelity_map():
    out = np.zeros((len(FIELDS), len(DURATIONS)))
    for a, h3 in enumerate(FIELDS):
        spec = IsingSpec(dims=(L,), h3=float(h3))
        h, h0 = build_ising(spec), build_ising_h0(spec)
        eig = diagonalize(h, symmetry=parity_operator(L))
        for b, d in enumerate(DURATIONS):
            rep = prep_report(run_ap(plus_state(L), h0, h, ApSchedule(STEPS, float(d))), h,
                              spectrum=eig)
            out[a, b] = rep.fidelity_ground + rep.fidelity_excited
    return out


def main():
    fid = fidelity_map()
    table = []
    lo = FIELDS[0]
    while lo < FIELDS[-1] - 1e-9:
        rows = (FIELDS >= lo - 1e-9) & (FIELDS < lo + WIDTH - 1e-9)
        best = float(DURATIONS[int(np.argmax(fid[rows].mean(axis=0)))])
        table.append({"from": round(float(lo), 3) if table else 0.0, "delta_tau": best})
        lo += WIDTH
    print(json.dumps(table))


if __name__ == "__main__":
    main()
