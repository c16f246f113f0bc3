"""Command line entry point: ``gapscope run|oracle|plot|validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import UnsupportedTermError
from .experiment import (BENCH_COLUMNS, ROW_COLUMNS, SERIES_COLUMNS, ConfigError, benchmark_rows,
                         budget, compile_run_circuit, load_config, read_csv, resolve_config,
                         run_experiment, write_csv, write_manifest)
from .svgplot import sweep_plot, waves_plot

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3

log = logging.getLogger("gapscope")


def _xlabel(cfg: dict | None) -> str:
    if cfg and cfg["sweep"]["parameter"] == "bond_length_angstrom":
        return "bond length (angstrom)"
    return "h3 / J1"


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    cfg = resolve_config(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = budget(cfg)
    if b["non_default"]:
        log.warning("Trotter budget %d differs from the default %d", b["total"], b["default_total"])

    result = run_experiment(cfg)
    names = cfg["output"]
    paths = {"csv": out / names["csv"], "series": out / names["series"], "plot": out / names["plot"]}
    write_csv(result.rows, paths["csv"], ROW_COLUMNS)
    write_csv(result.series, paths["series"], SERIES_COLUMNS)
    bench = [r for r in result.rows if r.get("gap_exact") is not None]
    paths["plot"].write_text(sweep_plot(result.rows, bench, cfg["bands"], xlabel=_xlabel(cfg),
                                        title=cfg.get("name", "")))
    if args.dump_circuit:
        ok = [p for p in result.points if "t_max" in p and "error" not in p]
        if ok:
            first = ok[0]
            try:
                circ = compile_run_circuit(cfg, first["sweep_value"], first["t_max"])
            except UnsupportedTermError as exc:
                log.warning("circuit dump skipped: %s", exc)
            else:
                Path(args.dump_circuit).write_text(
                    f"# sweep_value {first['sweep_value']!r} t_max {first['t_max']!r}\n" + circ.dumps())
    write_manifest(result, out / names["manifest"], paths)
    for row in result.rows:
        print(f"{row['sweep_value']:.6g}\tgap={row['gap_est']:.6g}\tstatus={row['status']}")
    if result.failed:
        log.error("%d of %d sweep points failed", len(result.failed), len(result.rows))
        return EXIT_PARTIAL
    return EXIT_OK


def _parse_sweep(text: str) -> list[float]:
    """``start:stop:count`` (inclusive linspace) or a comma separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(n))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sweep {text!r}; use start:stop:count or v1,v2,...") from None


def cmd_oracle(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        if args.model is None:
            raise ConfigError("oracle needs --config or --model")
        if args.model == "ising":
            model = {"kind": "ising", "topology": args.topology, "dims": args.dims or [4],
                     "J1": args.j1, "pbc": not args.obc}
            sweep = {"parameter": "h3_over_j1", "values": [1.0]}
        else:
            model = {"kind": "molecule", "fixture": args.fixture or args.model}
            sweep = {"parameter": "bond_length_angstrom", "values": None}
        cfg = resolve_config({"model": model, "sweep": sweep,
                              "ap": {"steps": 0, "delta_tau": 1.0}, "evo": {"steps": 5}})
    values = _parse_sweep(args.sweep) if args.sweep else cfg["sweep"]["values"]
    if not values:
        raise ConfigError("oracle needs sweep values")
    rows = benchmark_rows(cfg, values)
    write_csv(rows, args.output, BENCH_COLUMNS)
    return EXIT_OK


def _bands(path):
    if not path:
        return []
    return resolve_config(json.loads(Path(path).read_text())).get("bands", [])


def _require(rows, columns, name):
    if rows:
        missing = [c for c in columns if c not in rows[0]]
        if missing:
            raise ConfigError(f"{name} is missing columns: {', '.join(missing)}")


def cmd_plot(args) -> int:
    cfg = resolve_config(json.loads(Path(args.config).read_text())) if args.config else None
    if args.mode == "sweep":
        if not args.est:
            raise ConfigError("sweep plots need --est")
        est = read_csv(args.est)
        _require(est, ["sweep_value", "gap_est", "gap_std"], args.est)
        bench = read_csv(args.bench) if args.bench else []
        _require(bench, ["sweep_value", "gap_exact"], args.bench)
        svg = sweep_plot(est, bench, cfg["bands"] if cfg else [], xlabel=_xlabel(cfg),
                         title=args.title or "")
    else:
        if not args.series:
            raise ConfigError("waves plots need --series")
        series = read_csv(args.series)
        _require(series, SERIES_COLUMNS, args.series)
        value = args.value
        estimate = None
        if args.est:
            est = read_csv(args.est)
            _require(est, ["sweep_value", "offset", "amplitude", "gap_est", "phase"], args.est)
            if value is None and est:
                value = float(est[0]["sweep_value"])
            match = [r for r in est if value is not None and abs(float(r["sweep_value"]) - value) <= 1e-12]
            estimate = match[0] if match else None
        svg = waves_plot(series, estimate, value, title=args.title or "")
    Path(args.output).write_text(svg)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    b = budget(cfg)
    print(f"ok: {cfg['model']['kind']} sweep over {len(cfg['sweep']['values'])} values; "
          f"Trotter budget {b['ap_steps']}+{b['evo_steps']}={b['total']}"
          + (" (non-default)" if b["non_default"] else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapscope", description="Spectral gaps from fitted oscillations.")
    p.add_argument("--version", action="version", version=f"gapscope {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep and write CSV, SVG and manifest")
    r.add_argument("--config", required=True, help="config JSON, preset reference or manifest")
    r.add_argument("--seed", type=int)
    r.add_argument("--out-dir", default=".")
    r.add_argument("--workers", type=int)
    r.add_argument("--dump-circuit", metavar="PATH",
                   help="write the native circuit of the first sweep point")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="exact gaps along a sweep (benchmark CSV)")
    o.add_argument("--config")
    o.add_argument("--model", help="'ising' or a molecule fixture name")
    o.add_argument("--fixture")
    o.add_argument("--topology", default="chain", choices=["chain", "square_lattice"])
    o.add_argument("--dims", type=int, nargs="+")
    o.add_argument("--j1", type=float, default=1.0)
    o.add_argument("--obc", action="store_true", help="open boundary conditions")
    o.add_argument("--sweep", help="start:stop:count or v1,v2,...")
    o.add_argument("-o", "--output", required=True)
    o.set_defaults(func=cmd_oracle)

    pl = sub.add_parser("plot", help="render a sweep or waves SVG")
    pl.add_argument("--est")
    pl.add_argument("--bench")
    pl.add_argument("--series")
    pl.add_argument("--config", help="config supplying shaded bands")
    pl.add_argument("--mode", choices=["sweep", "waves"], default="sweep")
    pl.add_argument("--value", type=float, help="sweep value shown in waves mode")
    pl.add_argument("--title")
    pl.add_argument("-o", "--output", required=True)
    pl.set_defaults(func=cmd_plot)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
