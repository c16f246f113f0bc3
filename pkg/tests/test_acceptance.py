"""Acceptance criteria at their pinned tolerances, one verdict line per criterion.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance criteria"
section of the terminal summary.
"""

import hashlib
import itertools
import json
import math
import time

import numpy as np
import pytest
import scipy.linalg

from gapscope.adiabatic import lowest_diagonal_pair, plus_state, prep_error_scan
from gapscope.circuits import MS, TrotterStepper, compile_trotter_circuit, compile_trotter_step
from gapscope.cli import main
from gapscope.estimation import sample_shots
from gapscope.experiment import build_problem, resolve_config, run_experiment
from gapscope.models import (IsingSpec, build_ising, ising_observable, ising_terms, jordan_wigner,
                             molecule_for_bond_length, parity_operator)
from gapscope.oracle import diagonalize, transition_amplitude
from gapscope.pauli import to_dense_matrix
from gapscope.rng import generator

HF_WEIGHT_FLOOR = 0.95  # below this the reference determinant no longer dominates the ground state


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def mean_rel_err(rows):
    return float(np.mean([r["rel_err"] for r in rows]))


def test_c1_ising_l4_noiseless(verdict):
    cfg = resolve_config({"preset": "ising-paper", "shots": "exact"})
    result, secs = timed(lambda: run_experiment(cfg))
    err = mean_rel_err(result.rows)
    ok = verdict("criterion 1", err <= 3e-2 and secs < 60 and not result.failed,
                 f"mean rel err {err:.4f} vs 0.03, {secs:.1f} s")
    assert ok


def test_c2_ising_l10_noiseless(verdict):
    cfg = resolve_config({"preset": "ising-paper", "shots": "exact", "model": {"dims": [10]}})
    result, secs = timed(lambda: run_experiment(cfg))
    err = mean_rel_err(result.rows)
    ok = verdict("criterion 2", err <= 5e-2 and secs < 300 and not result.failed,
                 f"mean rel err {err:.4f} vs 0.05, {secs:.1f} s")
    assert ok


def test_c3_amplitude_law(verdict):
    grid = np.linspace(0.25, 6.0, 24)
    worst_floor, worst_small, worst_large = math.inf, 0.0, 0.0
    for n in (4, 6, 8, 10):
        o, par = ising_observable(n), parity_operator(n)
        family = lambda x: build_ising(IsingSpec(dims=(n,), h3=x))  # noqa: E731
        for x in grid:
            worst_floor = min(worst_floor, transition_amplitude(family(x), o, par) - 1 / math.sqrt(n))
        worst_small = max(worst_small, abs(transition_amplitude(family(0.0), o, par) - 1.0))
        worst_large = max(worst_large, abs(transition_amplitude(family(100.0), o, par) - 1 / math.sqrt(n)))
    ok = verdict("criterion 3", worst_floor >= -1e-6 and worst_small <= 1e-2 and worst_large <= 1e-2,
                 f"min A-1/sqrt(L) {worst_floor:.3g}, |A(0)-1| {worst_small:.2g}, "
                 f"|A(100)-1/sqrt(L)| {worst_large:.2g}")
    assert ok


def test_c4_shot_noise_law(verdict):
    worst = 0.0
    for m, shots in itertools.product((0.0, 0.5, 0.9), (100, 8192)):
        est = np.array([sample_shots(0.5 * (1 + m), shots, generator(seed, "c4"))[0]
                        for seed in range(10_000)])
        worst = max(worst, abs(est.var(ddof=1) / ((1 - m * m) / shots) - 1))
    ok = verdict("criterion 4", worst <= 0.05, f"worst relative variance mismatch {worst:.4f} vs 0.05")
    assert ok


def test_c5_trotter_order(verdict):
    # uniform steps to a fixed time with the stepper the acquisition uses
    t = 1.0
    ratios = []
    for h3 in resolve_config({"preset": "ising-paper"})["sweep"]["values"]:
        h = build_ising(IsingSpec(dims=(4,), h3=h3))
        psi0 = plus_state(4)
        ref = scipy.linalg.expm(-1j * t * to_dense_matrix(h)) @ psi0
        errs = []
        for q in (10, 20, 40):
            stepper, psi = TrotterStepper(h), psi0
            for _ in range(q):
                psi = stepper.step(psi, t / q)
            errs.append(np.linalg.norm(psi - ref))
        ratios += [errs[0] / errs[1], errs[1] / errs[2]]
    ok = verdict("criterion 5", all(1.7 <= r <= 2.3 for r in ratios),
                 f"error ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")
    assert ok


def test_c6_preparation_error_scaling(verdict):
    h = build_ising(IsingSpec(dims=(4,), h3=3.0))
    eps = np.logspace(-4, -1, 7)
    rows = prep_error_scan(eps, h, ising_observable(4), np.linspace(0, 6, 60), seed=1)
    logs = np.log(np.array(rows))
    dev_slope = np.polyfit(logs[:, 0], logs[:, 1], 1)[0]
    inf_slope = np.polyfit(logs[:, 0], logs[:, 2], 1)[0]
    ok = verdict("criterion 6", 0.9 <= dev_slope <= 1.1 and 1.9 <= inf_slope <= 2.1,
                 f"deviation slope {dev_slope:.4f}, infidelity slope {inf_slope:.4f}")
    assert ok


def test_c7_noisy_pipeline(verdict):
    base = {"preset": "ising-hardware-l4", "sweep": {"values": [7.257]}}
    noisy, secs = timed(lambda: run_experiment(resolve_config(base)))
    clean = run_experiment(resolve_config({**base, "noise": {"enabled": False}}))
    a_noisy, a_clean = noisy.rows[0]["amplitude"], clean.rows[0]["amplitude"]
    err = noisy.rows[0]["rel_err"]
    ok = verdict("criterion 7", a_noisy < a_clean and err <= 0.2 and secs < 600,
                 f"A noisy {a_noisy:.4f} < noiseless {a_clean:.4f}, rel err {err:.4f} vs 0.2, "
                 f"{secs:.1f} s")
    assert ok


def test_c8_shot_robustness(verdict):
    per_shots = {}
    for shots in (100, 500, 1000, 8192):
        per_shots[shots] = run_experiment(resolve_config({"preset": "ising-paper", "shots": shots})).rows
    worst = 0.0
    for a, b in itertools.combinations(per_shots, 2):
        for ra, rb in zip(per_shots[a], per_shots[b]):
            z = abs(ra["gap_est"] - rb["gap_est"]) / math.hypot(ra["gap_std"], rb["gap_std"])
            worst = max(worst, z)
    ok = verdict("criterion 8", worst <= 3.0, f"largest pairwise separation {worst:.2f} sigma over "
                 f"{len(per_shots[100])} sweep points")
    assert ok


def test_c9_gate_accounting(verdict):
    counts, depths = {}, {}
    for n in (4, 10, 20):
        circ = compile_trotter_circuit(ising_terms(IsingSpec(dims=(n,), h3=3.0)), 0.1, 40)
        counts[n], depths[n] = circ.count(MS), circ.two_qubit_depth()
    chain = compile_trotter_step(ising_terms(IsingSpec(dims=(4,), h3=3.0)), 0.1).count(MS)
    lattice = compile_trotter_step(ising_terms(IsingSpec("square_lattice", (2, 2), h3=3.0)), 0.1).count(MS)
    exact80 = all(c == 80 for c in counts.values())
    ok = verdict("criterion 9", exact80 and lattice == 2 * chain,
                 f"MS counts {counts} (2q depth {depths}), lattice {lattice} vs 2x chain {2 * chain}")
    assert ok


def hf_weight(fixture, r):
    h = jordan_wigner(molecule_for_bond_length(fixture, r))
    a, _ = lowest_diagonal_pair(h)
    return float(abs(diagonalize(h, k=1).vectors[a, 0]) ** 2)


def test_c10_molecules(verdict):
    h2, secs_h2 = timed(lambda: run_experiment(resolve_config({"preset": "molecule-paper"})))
    he2, secs_he2 = timed(lambda: run_experiment(resolve_config(
        {"preset": "molecule-paper", "model": {"fixture": "he2"}})))
    exempt, bad = [], []
    for row in h2.rows:
        r = row["sweep_value"]
        good = row["status"] == "ok" and row["rel_err"] <= 5e-2
        if good:
            continue
        if hf_weight("h2", r) < HF_WEIGHT_FLOOR:
            exempt.append(f"{r:g} ({row['rel_err'] if row['rel_err'] is not None else row['status']})")
        else:
            bad.append(r)
    he2_worst = max(r["rel_err"] if r["status"] == "ok" else math.inf for r in he2.rows)
    secs = secs_h2 + secs_he2
    ok = verdict("criterion 10", not bad and he2_worst <= 5e-2 and secs < 900,
                 f"H2 failing {bad}, degraded at large bond {len(exempt)} points, "
                 f"He2 worst rel err {he2_worst:.4f}, {secs:.1f} s")
    print("degraded H2 points:", "; ".join(exempt))
    assert ok


def _hashes(d):
    return {n: hashlib.sha256((d / n).read_bytes()).hexdigest()
            for n in ("estimates.csv", "series.csv", "gap.svg")}


def test_c11_determinism(verdict, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "ising-hardware-l4", "noise": {"backend": "trajectories",
                                                                       "trajectories": 20}}))
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(tmp_path / "a" / "manifest.json"),
                 "--out-dir", str(tmp_path / "b")]) == 0
    same = _hashes(tmp_path / "a") == _hashes(tmp_path / "b")
    ok = verdict("criterion 11", same, "CSV/SVG hashes identical on rerun from manifest"
                 if same else "hashes differ on rerun")
    assert ok


# -- L=20 smoke runs (no dense oracle at this size) ---------------------------------

def oracle_trend(h3):
    """Gap at L=20 extrapolated linearly in 1/L from dense results at L=6..12."""
    sizes = np.array([6, 8, 10, 12])
    gaps = [diagonalize(build_ising(IsingSpec(dims=(int(n),), h3=h3)), k=2).gap() for n in sizes]
    return float(np.polyval(np.polyfit(1 / sizes, gaps, 1), 1 / 20))


@pytest.fixture(scope="module")
def trend():
    return {h3: oracle_trend(h3) for h3 in (3.0, 4.0)}


def _trend_check(rows, trend):
    zs = [abs(r["gap_est"] - trend[r["sweep_value"]]) / r["gap_std"] for r in rows]
    desc = ", ".join(f"h3={r['sweep_value']:g}: {r['gap_est']:.3f}+-{r['gap_std']:.3f} "
                     f"vs {trend[r['sweep_value']]:.4f}" for r in rows)
    return max(zs), desc


@pytest.fixture(scope="module")
def l20_noisy():
    return run_experiment(resolve_config({"preset": "ising-hardware-l20"}))


@pytest.mark.slow
def test_l20_noisy_finite(verdict, l20_noisy):
    finite = all(math.isfinite(r["gap_est"]) and math.isfinite(r["gap_std"]) for r in l20_noisy.rows)
    ok = verdict("L=20 noisy smoke (finiteness)", finite and not l20_noisy.failed,
                 ", ".join(f"{r['gap_est']:.4g}" for r in l20_noisy.rows))
    assert ok


@pytest.mark.slow
def test_l20_noisy_trend(verdict, l20_noisy, trend):
    worst, desc = _trend_check(l20_noisy.rows, trend)
    ok = verdict("L=20 noisy smoke (3 sigma trend)", worst <= 3.0, f"{desc}; worst {worst:.1f} sigma")
    assert ok


@pytest.mark.slow
def test_l20_noiseless_trend(verdict, trend):
    rows = run_experiment(resolve_config({"preset": "ising-hardware-l20", "noise": {"enabled": False}})).rows
    worst, desc = _trend_check(rows, trend)
    ok = verdict("L=20 noiseless smoke (3 sigma trend)", worst <= 3.0, f"{desc}; worst {worst:.1f} sigma")
    assert ok
