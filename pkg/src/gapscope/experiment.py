"""Experiment configuration, sweep orchestration, CSV rows and run manifests."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import math
import os
import platform
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import __version__
from .adiabatic import (ApSchedule, DeltaTauTable, diagonal_pair_state, lowest_diagonal_pair,
                        plus_state, run_ap)
from .circuits import CircuitIR, compile_trotter_step
from .estimation import (EXACT, FitError, acquire_series, auto_t_max, chebyshev_times,
                         fit_sinusoid, pilot_gap_guess)
from .models import (IsingSpec, build_ising, build_ising_h0, diagonal_part, flip_observable,
                     ising_observable, ising_terms, jordan_wigner, molecule_for_bond_length,
                     molecule_index)
from .noise import NoiseModel, acquire_noisy_series
from .oracle import diagonalize, exact_series
from .pauli import PauliSum, max_dense_qubits
from .rng import derive_seed

log = logging.getLogger(__name__)

DEFAULT_TROTTER_BUDGET = 40
EXACT_CURVE_POINTS = 200

ROW_COLUMNS = ["sweep_value", "gap_est", "gap_std", "amplitude", "phase", "offset",
               "gap_exact", "rel_err", "shots", "backend", "t_max", "delta_tau", "status"]
SERIES_COLUMNS = ["sweep_value", "kind", "time", "value", "sigma"]
BENCH_COLUMNS = ["sweep_value", "gap_exact", "amplitude_exact"]


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "required": ["model", "sweep", "ap", "evo"],
    "properties": {
        "preset": {"type": "string"},
        "name": {"type": "string"},
        "model": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["ising", "molecule"]},
                "topology": {"enum": ["chain", "square_lattice"]},
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 2},
                         "minItems": 1, "maxItems": 2},
                "J1": _POS,
                "pbc": {"type": "boolean"},
                "fixture": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "required": ["parameter"],
            "properties": {
                "parameter": {"enum": ["h3_over_j1", "bond_length_angstrom"]},
                "values": {"anyOf": [{"type": "null"},
                                     {"type": "array", "items": _NUM, "minItems": 1}]},
            },
            "additionalProperties": False,
        },
        "ap": {
            "type": "object",
            "required": ["steps", "delta_tau"],
            "properties": {
                "steps": {"type": "integer", "minimum": 0},
                "delta_tau": {"anyOf": [_POS, {
                    "type": "array", "minItems": 1,
                    "items": {"type": "object", "required": ["from", "delta_tau"],
                              "properties": {"from": _NUM, "delta_tau": _POS},
                              "additionalProperties": False}}]},
                "initial_state": {"enum": ["plus_all", "diagonal_pair", "custom_file"]},
                "initial_state_file": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "evo": {
            "type": "object",
            "required": ["steps"],
            "properties": {
                "steps": {"type": "integer", "minimum": 5},
                "t_max": {"anyOf": [{"const": "auto"}, _POS, {
                    "type": "array", "minItems": 1,
                    "items": {"type": "object", "required": ["from", "t_max"],
                              "properties": {"from": _NUM, "t_max": _POS},
                              "additionalProperties": False}}]},
                "periods": _POS,
                "pilot_points": {"type": "integer", "minimum": 8},
                "node_subset": {"anyOf": [{"type": "null"}, {
                    "type": "array", "items": {"type": "integer", "minimum": 0},
                    "minItems": 5, "uniqueItems": True}]},
            },
            "additionalProperties": False,
        },
        "fit": {
            "type": "object",
            "properties": {"freq_lo": {"type": "number", "minimum": 0},
                           "freq_hi": {"anyOf": [{"type": "null"}, _POS]}},
            "additionalProperties": False,
        },
        "observable": {"anyOf": [{"type": "null"},
                                 {"type": "string", "pattern": "^[IXYZixyz]+$"}]},
        "shots": {"anyOf": [{"const": "exact"}, {"type": "integer", "minimum": 1}]},
        "noise": {
            "type": "object",
            "properties": {
                "enabled": {"type": "boolean"},
                "t1_s": _POS, "t2_s": _POS, "tg1_s": _POS, "tg2_s": _POS,
                "f1": {"type": "number", "minimum": 0, "maximum": 1},
                "f2": {"type": "number", "minimum": 0, "maximum": 1},
                "readout_flip": {"type": "number", "minimum": 0, "maximum": 1},
                "backend": {"enum": ["density", "trajectories"]},
                "trajectories": {"type": "integer", "minimum": 1},
                "two_qubit_channel": {"enum": ["independent_1q", "joint_2q"]},
                "noisy_virtual_z": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "bands": {"type": "array", "items": {
            "type": "object", "required": ["from", "to"],
            "properties": {"from": {"anyOf": [_NUM, {"type": "null"}]},
                           "to": {"anyOf": [_NUM, {"type": "null"}]},
                           "label": {"type": "string"}},
            "additionalProperties": False}},
        "benchmark": {"type": "boolean"},
        "output": {
            "type": "object",
            "properties": {"csv": {"type": "string"}, "series": {"type": "string"},
                           "manifest": {"type": "string"}, "plot": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "fit": {"freq_lo": 0.0, "freq_hi": None},
    "observable": None,
    "shots": "exact",
    "noise": {"enabled": False, "t1_s": 100.0, "t2_s": 1.0, "tg1_s": 135e-6, "tg2_s": 600e-6,
              "readout_flip": 0.0039, "backend": "density", "trajectories": 100,
              "two_qubit_channel": "independent_1q", "noisy_virtual_z": False},
    "seed": 0,
    "workers": 1,
    "bands": [],
    "benchmark": True,
    "output": {"csv": "estimates.csv", "series": "series.csv", "manifest": "manifest.json",
               "plot": "gap.svg"},
}

EVO_DEFAULTS = {"t_max": "auto", "periods": 1.5, "pilot_points": 64, "node_subset": None}


def preset_names() -> list[str]:
    root = resources.files("gapscope") / "data" / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("gapscope") / "data" / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text())


def expand_presets(raw: dict, depth: int = 0) -> dict:
    """Layer ``raw`` over the preset it names (presets may name presets)."""
    if "preset" not in raw:
        return raw
    if depth > 8:
        raise ConfigError("preset chain is too deep (cycle?)")
    base = load_preset(raw["preset"])
    if base.get("preset") == raw["preset"]:
        raise ConfigError(f"preset {raw['preset']!r} refers to itself")
    return deep_merge(expand_presets(base, depth + 1), raw)


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _format_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"config error at {where}: {err.message}"


def resolve_config(raw: dict) -> dict:
    """Merge preset and defaults, validate, and apply cross-field checks."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("tool") == "gapscope" and "config" in raw:
        raw = raw["config"]  # a manifest from an earlier run
    cfg = deep_merge(DEFAULTS, expand_presets(raw))
    cfg["evo"] = deep_merge(EVO_DEFAULTS, cfg.get("evo", {}))
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        raise ConfigError("\n".join(_format_error(e) for e in errors))

    model, sweep = cfg["model"], cfg["sweep"]
    if model["kind"] == "ising":
        if sweep["parameter"] != "h3_over_j1":
            raise ConfigError("ising models sweep 'h3_over_j1'")
        model.setdefault("topology", "chain")
        model.setdefault("dims", [4])
        model.setdefault("J1", 1.0)
        model.setdefault("pbc", True)
        try:
            IsingSpec(model["topology"], tuple(model["dims"]), model["J1"], 0.0, model["pbc"])
        except ValueError as exc:
            raise ConfigError(f"config error at model: {exc}") from None
        cfg["ap"].setdefault("initial_state", "plus_all")
        if not sweep.get("values"):
            raise ConfigError("config error at sweep/values: ising sweeps need explicit values")
        if any(v < 0 for v in sweep["values"]):
            raise ConfigError("config error at sweep/values: h3_over_j1 must be >= 0")
    else:
        if sweep["parameter"] != "bond_length_angstrom":
            raise ConfigError("molecule models sweep 'bond_length_angstrom'")
        if "fixture" not in model:
            raise ConfigError("config error at model: molecule models need 'fixture'")
        try:
            index = molecule_index(model["fixture"])
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"config error at model/fixture: {exc}") from None
        if not sweep.get("values"):
            sweep["values"] = [g["bond_length"] for g in index["geometries"]]
        cfg["ap"].setdefault("initial_state", "diagonal_pair")
    if cfg["ap"]["initial_state"] == "custom_file" and "initial_state_file" not in cfg["ap"]:
        raise ConfigError("config error at ap: custom_file needs 'initial_state_file'")
    subset = cfg["evo"]["node_subset"]
    if subset is not None and max(subset) >= cfg["evo"]["steps"]:
        raise ConfigError("config error at evo/node_subset: index beyond evo.steps")
    if len(set(sweep["values"])) != len(sweep["values"]):
        raise ConfigError("config error at sweep/values: duplicate sweep values")
    noise = cfg["noise"]
    if noise["enabled"]:
        if "f1" not in noise or "f2" not in noise:
            raise ConfigError("config error at noise: gate fidelities f1 and f2 are required")
        try:
            noise_model(cfg)
        except ValueError as exc:
            raise ConfigError(f"config error at noise: {exc}") from None
        if cfg["ap"]["initial_state"] == "custom_file":
            raise ConfigError("config error at noise: custom initial states are noiseless-only")
    if noise["enabled"] or cfg["shots"] != "exact":
        obs = cfg["observable"]
        if obs is not None and not any(ch in "XYZxyz" for ch in obs):
            raise ConfigError("config error at observable: identity cannot be measured")
    DeltaTauTable.from_config(cfg["ap"]["delta_tau"])
    return cfg


def load_config(path: str | os.PathLike) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return resolve_config(raw)


def noise_model(cfg: dict) -> NoiseModel:
    n = cfg["noise"]
    return NoiseModel(fidelity_1q=n["f1"], fidelity_2q=n["f2"], t1=n["t1_s"], t2=n["t2_s"],
                      gate_time_1q=n["tg1_s"], gate_time_2q=n["tg2_s"],
                      readout_flip=n["readout_flip"], two_qubit_channel=n["two_qubit_channel"],
                      noisy_virtual_z=n["noisy_virtual_z"])


def budget(cfg: dict) -> dict:
    total = cfg["ap"]["steps"] + cfg["evo"]["steps"]
    return {"ap_steps": cfg["ap"]["steps"], "evo_steps": cfg["evo"]["steps"], "total": total,
            "default_total": DEFAULT_TROTTER_BUDGET, "non_default": total != DEFAULT_TROTTER_BUDGET}


# -- problem construction ------------------------------------------------------


@dataclass
class Problem:
    h: PauliSum
    h0: PauliSum
    psi0: np.ndarray
    observable: PauliSum
    ap_terms: Callable[[float], object]
    evo_terms: object

    @property
    def n_qubits(self) -> int:
        return self.h.n_qubits


def _load_custom_state(path: str, n_qubits: int) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".npy":
        psi = np.load(p).astype(complex)
    else:
        data = json.loads(p.read_text())
        psi = np.array([complex(re, im) for re, im in data], dtype=complex)
    if psi.shape != (1 << n_qubits,):
        raise ValueError(f"initial state in {path} has {psi.shape[0]} amplitudes, "
                         f"expected {1 << n_qubits}")
    return psi / np.linalg.norm(psi)


def build_problem(cfg: dict, value: float) -> Problem:
    model = cfg["model"]
    if model["kind"] == "ising":
        spec = IsingSpec(model["topology"], tuple(model["dims"]), model["J1"],
                         value * model["J1"], model["pbc"])
        h, h0 = build_ising(spec), build_ising_h0(spec)
        psi0 = plus_state(spec.n_sites)
        obs = ising_observable(spec.n_sites)
        ap_terms = lambda s: ising_terms(spec.with_field(s * spec.h3))  # noqa: E731
        evo_terms = ising_terms(spec)
    else:
        h = jordan_wigner(molecule_for_bond_length(model["fixture"], value))
        h0 = diagonal_part(h)
        a, b = lowest_diagonal_pair(h)
        psi0 = diagonal_pair_state(h.n_qubits, a, b)
        obs = flip_observable(h.n_qubits, a, b)
        ap_terms = lambda s: (1.0 - s) * h0 + s * h  # noqa: E731
        evo_terms = h
    init = cfg["ap"]["initial_state"]
    if init == "plus_all":
        psi0 = plus_state(h.n_qubits)
    elif init == "diagonal_pair":
        a, b = lowest_diagonal_pair(h)
        psi0 = diagonal_pair_state(h.n_qubits, a, b)
    elif init == "custom_file":
        psi0 = _load_custom_state(cfg["ap"]["initial_state_file"], h.n_qubits)
    if cfg["observable"] is not None:
        label = cfg["observable"].upper()
        if len(label) != h.n_qubits:
            raise ValueError(f"observable {label} has {len(label)} qubits, model has {h.n_qubits}")
        obs = PauliSum.single(label)
    return Problem(h, h0, psi0, obs, ap_terms, evo_terms)


def configured_t_max(spec, value: float) -> float:
    """A fixed window, or a piecewise table ``[{"from": x, "t_max": T}, ...]``."""
    if isinstance(spec, (int, float)):
        return float(spec)
    table = DeltaTauTable(tuple(e["from"] for e in sorted(spec, key=lambda e: e["from"])),
                          tuple(e["t_max"] for e in sorted(spec, key=lambda e: e["from"])))
    return table.lookup(value)


def compile_run_circuit(cfg: dict, value: float, t_max: float) -> CircuitIR:
    """Native circuit of the full run for the last node: preparation then evolution."""
    prob = build_problem(cfg, value)
    sched = ApSchedule(cfg["ap"]["steps"], DeltaTauTable.from_config(cfg["ap"]["delta_tau"]).lookup(value))
    circ = CircuitIR(prob.n_qubits)
    for s in sched.fractions():
        circ.extend(compile_trotter_step(prob.ap_terms(s), sched.delta_tau))
    prev = 0.0
    for t in chebyshev_times(cfg["evo"]["steps"], t_max):
        circ.extend(compile_trotter_step(prob.evo_terms, t - prev))
        prev = t
    return circ


# -- one sweep point -------------------------------------------------------------


@dataclass
class PointResult:
    row: dict
    series: list[dict] = field(default_factory=list)
    info: dict = field(default_factory=dict)


def _nan_row(value: float, cfg: dict, status: str) -> dict:
    row = {c: math.nan for c in ROW_COLUMNS}
    row.update(sweep_value=float(value), shots=cfg["shots"], backend=_backend_name(cfg),
               status=status, gap_exact=None, rel_err=None)
    return row


def _backend_name(cfg: dict) -> str:
    return cfg["noise"]["backend"] if cfg["noise"]["enabled"] else "statevector"


def run_point(cfg: dict, value: float) -> PointResult:
    start = time.perf_counter()
    seed = derive_seed(cfg["seed"], "point", repr(float(value)))
    info: dict = {"sweep_value": float(value), "seed": seed}
    prob = build_problem(cfg, value)
    table = DeltaTauTable.from_config(cfg["ap"]["delta_tau"])
    sched = ApSchedule(cfg["ap"]["steps"], table.lookup(value))
    info.update(delta_tau=float(sched.delta_tau), tau=float(sched.tau))

    psi_ap = run_ap(prob.psi0, prob.h0, prob.h, sched)
    evo = cfg["evo"]
    if evo["t_max"] == "auto":
        pilot = pilot_gap_guess(psi_ap, prob.h, prob.observable, points=evo["pilot_points"])
        t_max = float(auto_t_max(pilot.gap_guess, evo["periods"]))
        info.update(t_max_source="pilot", pilot={"gap_guess": float(pilot.gap_guess),
                                                 "window": float(pilot.window),
                                                 "points": int(pilot.points),
                                                 "doublings": int(pilot.doublings)})
    else:
        t_max = configured_t_max(evo["t_max"], value)
        info["t_max_source"] = "config"
    info["t_max"] = t_max
    times = chebyshev_times(evo["steps"], t_max)

    clamp_msgs: list[str] = []
    if cfg["noise"]["enabled"]:
        series, clamp_msgs = acquire_noisy_series(
            prob.psi0, [prob.ap_terms(s) for s in sched.fractions()], sched.delta_tau,
            prob.evo_terms, prob.observable, times, noise_model(cfg),
            backend=cfg["noise"]["backend"], trajectories=cfg["noise"]["trajectories"],
            shots=cfg["shots"], seed=seed, node_subset=evo["node_subset"])
    else:
        series = acquire_series(psi_ap, prob.h, prob.observable, times, shots=cfg["shots"],
                                seed=seed, node_subset=evo["node_subset"])
    info["warnings"] = clamp_msgs

    hi = cfg["fit"]["freq_hi"] or math.pi * evo["steps"] / t_max
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_sinusoid(series, (cfg["fit"]["freq_lo"], hi))

    row = {
        "sweep_value": float(value), "gap_est": fit.frequency, "gap_std": fit.gap_std,
        "amplitude": fit.amplitude, "phase": fit.phase, "offset": fit.offset,
        "gap_exact": None, "rel_err": None, "shots": cfg["shots"], "backend": _backend_name(cfg),
        "t_max": t_max, "delta_tau": sched.delta_tau,
        "status": "ok" if fit.refined else "unrefined",
    }
    series_rows = [{"sweep_value": float(value), "kind": "measured", "time": t, "value": v,
                    "sigma": s} for t, v, s in zip(series.times, series.values, series.sigmas)]
    if cfg["benchmark"] and prob.n_qubits <= max_dense_qubits():
        spec = diagonalize(prob.h)
        gap = spec.gap(0, 1)
        row["gap_exact"] = gap
        if gap > 0:
            row["rel_err"] = abs(fit.frequency - gap) / gap
        curve_t = np.linspace(0.0, t_max, EXACT_CURVE_POINTS)
        curve = exact_series(prob.h, prob.observable, psi_ap, curve_t, spec)
        series_rows += [{"sweep_value": float(value), "kind": "exact", "time": t, "value": v,
                         "sigma": 0.0} for t, v in zip(curve.times, curve.values)]
    info["runtime_s"] = time.perf_counter() - start
    return PointResult(row, series_rows, info)


def _safe_point(args) -> PointResult:
    cfg, value, runner = args
    try:
        return runner(cfg, value)
    except Exception as exc:  # isolate the failure to this sweep point
        log.warning("sweep point %r failed: %s", value, exc)
        status = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
        return PointResult(_nan_row(value, cfg, status), [],
                           {"sweep_value": float(value), "error": traceback.format_exc()})


@dataclass
class ExperimentResult:
    config: dict
    rows: list[dict]
    series: list[dict]
    points: list[dict]

    @property
    def failed(self) -> list[dict]:
        return [r for r in self.rows if str(r["status"]).startswith("failed")]


def run_experiment(cfg: dict, runner: Callable[[dict, float], PointResult] = run_point) -> ExperimentResult:
    """Run every sweep point; rows come back sorted by sweep value."""
    values = sorted(float(v) for v in cfg["sweep"]["values"])
    jobs = [(cfg, v, runner) for v in values]
    if cfg.get("workers", 1) > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            results = list(pool.map(_safe_point, jobs))
    else:
        results = [_safe_point(j) for j in jobs]
    results.sort(key=lambda r: r.row["sweep_value"])
    series = [s for r in results for s in r.series]
    return ExperimentResult(cfg, [r.row for r in results], series, [r.info for r in results])


def benchmark_rows(cfg: dict, values=None) -> list[dict]:
    """Exact gaps (and |<1|O|0>|) along a sweep for the dashed benchmark curve."""
    from .models import parity_operator
    from .oracle import transition_amplitude

    values = sorted(float(v) for v in (values if values is not None else cfg["sweep"]["values"]))
    rows = []
    for v in values:
        prob = build_problem(cfg, v)
        sym = parity_operator(prob.n_qubits) if cfg["model"]["kind"] == "ising" else None
        spec = diagonalize(prob.h)
        rows.append({"sweep_value": v, "gap_exact": spec.gap(0, 1),
                     "amplitude_exact": transition_amplitude(prob.h, prob.observable, sym)})
    return rows


# -- persistence -------------------------------------------------------------------


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        text = format(float(x), ".17g")
        # keep floats distinguishable from ints so parsing restores the type (and -0.0)
        return text if any(c in text for c in ".enai") else text + ".0"
    return str(x)


def write_csv(rows: list[dict], path: str | os.PathLike, columns: list[str] = ROW_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]


def file_sha256(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def environment_info() -> dict:
    import scipy
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "platform": platform.platform()}


def write_manifest(result: ExperimentResult, path: str | os.PathLike,
                   outputs: dict[str, str] | None = None) -> dict:
    warns = {w for p in result.points for w in p.get("warnings", [])}
    if result.config["noise"]["enabled"]:
        warns.update(noise_model(result.config).strengths()[2])  # also when every point failed
    warns = sorted(warns)
    manifest = {
        "tool": "gapscope",
        "version": __version__,
        "config": result.config,
        "budget": budget(result.config),
        "points": result.points,
        "warnings": warns,
        "failed_points": [r["sweep_value"] for r in result.failed],
        "environment": environment_info(),
        "outputs": {k: {"path": str(v), "sha256": file_sha256(v)} for k, v in (outputs or {}).items()},
    }
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True, default=_json_default) + "\n")
    return manifest


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
