"""Command-line interface: ``resonet simulate | fit | validate | sweep``.

Exit codes: 0 success, 1 validation or fit failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import io
from .bench import PRESET_NAMES, SWEEPABLE, NoiseSpec, preset, simulate_sweep, with_param
from .calib import GEOMETRY_CLASSES, PHASE_REFERENCES, run_pipeline
from .errors import ResonetError
from .validation import run_checks

SEED_ENV = "RESONET_SEED"


def _apply_seed(scenario):
    seed = os.environ.get(SEED_ENV)
    if seed is None or scenario.noise is None:
        return scenario
    try:
        value = int(seed, 0)
    except ValueError:
        raise ResonetError(f"{SEED_ENV} must be an integer, got {seed!r}") from None
    return replace(scenario, noise=NoiseSpec(scenario.noise.sigma, value))


def _load_scenario(args):
    if getattr(args, "preset", None):
        doc = io.ConfigDocument(preset(args.preset))
        if args.config:
            cfg = io.read_config(args.config)
            doc = replace(cfg, scenario=replace(doc.scenario, noise=cfg.scenario.noise))
    elif args.config:
        doc = io.read_config(args.config)
    else:
        raise ResonetError("give --config or --preset")
    return replace(doc, scenario=_apply_seed(doc.scenario))


def cmd_simulate(args) -> int:
    doc = _load_scenario(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traces = simulate_sweep(doc.scenario)
    io.write_trace_csv(traces, args.out)
    echo = Path(args.out).with_suffix(".scenario.json")
    io.write_json(io.config_to_dict(doc), echo)
    t = doc.scenario.truth
    print(
        f"wrote {len(traces)} trace(s), {len(traces[0])} points -> {args.out}; scenario -> {echo}\n"
        f"truth: f_r={t.omega_r / (2 * math.pi):.9g} Hz Q_l={t.q_l:.6g} Q_i={t.q_i:.6g} Q_c={t.q_c:.6g}"
    )
    for note in traces[0].warnings:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    tf = io.load_trace_file(args.input)
    wanted = tuple(int(c) for c in args.port[1:])
    match = [t for t in tf.traces if t.port_pair == wanted]
    if not match:
        raise ResonetError(f"{args.port} not found in {args.input}")
    truth = None
    if args.scenario:
        truth = io.read_config(args.scenario).scenario.truth
    report = run_pipeline(
        match[0],
        window_k=args.window_k,
        geometry_class=args.geometry_class,
        phase_reference=args.phase_reference,
        truth=truth,
    )
    io.write_report_json(report, args.out)
    if args.stages_dir:
        io.write_stage_csvs(report, args.stages_dir)
    d = io.report_to_dict(report)
    summary = {k: d[k] for k in ("omega_r_hz", "q_l", "q_i", "q_c", "tau_ns", "phi_rad")}
    if "relative_errors" in d:
        summary["relative_errors"] = d["relative_errors"]
    print(json.dumps(summary, indent=2))
    return 0


def cmd_validate(args) -> int:
    checks = run_checks()
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ResonetError(f"--values must be a comma-separated list of numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    doc = _load_scenario(args)
    values = _parse_values(args.values)
    if not values:
        raise ResonetError("--values is empty")
    rows = []
    for v in values:
        t = with_param(doc.scenario, args.param, v).truth
        rows.append([v, t.omega_r / (2 * math.pi), t.q_l, t.q_i, t.q_c, t.q_c_1, t.q_c_2, t.phi])
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([args.param, "omega_r_hz", "q_l", "q_i", "q_c", "q_c_1", "q_c_2", "phi_rad"])
        for r in rows:
            w.writerow([f"{x:.17g}" for x in r])
    print(f"wrote {len(rows)} rows -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resonet", description="Resonator simulator and circle-fit calibration.")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a scenario to a trace CSV")
    sim.add_argument("--config", help="scenario or config JSON")
    sim.add_argument("--preset", choices=PRESET_NAMES)
    sim.add_argument("--out", required=True, help="output CSV")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="calibrate a measured trace")
    fit.add_argument("--in", dest="input", required=True, help="CSV or .s2p trace file")
    fit.add_argument("--port", default="s11", choices=["s11", "s21", "s12", "s22"])
    fit.add_argument("--geometry-class", choices=GEOMETRY_CLASSES)
    fit.add_argument("--window-k", type=float, default=4.0)
    fit.add_argument("--phase-reference", choices=PHASE_REFERENCES, default="center")
    fit.add_argument("--scenario", help="scenario JSON whose truth is compared with the fit")
    fit.add_argument("--out", required=True, help="report JSON")
    fit.add_argument("--stages-dir", help="directory for per-stage CSV snapshots")
    fit.set_defaults(func=cmd_fit)

    val = sub.add_parser("validate", help="run the built-in cross-checks")
    val.set_defaults(func=cmd_validate)

    sw = sub.add_parser("sweep", help="tabulate derived parameters against one scenario parameter")
    sw.add_argument("--config")
    sw.add_argument("--preset", choices=PRESET_NAMES)
    sw.add_argument("--param", required=True, choices=SWEEPABLE)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ResonetError, OSError) as exc:
        print(f"resonet {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
