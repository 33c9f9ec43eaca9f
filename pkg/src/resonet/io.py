"""Trace files (CSV, Touchstone v1), scenario/config JSON and fit-report JSON.

Files use ordinary frequency in Hz; everything else in the package works in
rad/s. The conversions happen here.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bench import FeedlineSpec, NoiseSpec, Scenario, SweepSpec, Trace, preset
from .calib import FitReport
from .errors import DomainError, ParseError, UnsupportedFormatError
from .models import AsymmetrySpec, CouplingSpec, Geometry, LumpedImpedance
from .network import LineParams

SCHEMA_VERSION = 1
PORT_PAIRS = ((1, 1), (2, 1), (1, 2), (2, 2))


def _g(x: float) -> str:
    return f"{x:.17g}"


# -- CSV ---------------------------------------------------------------------


def write_trace_csv(traces, path) -> None:
    """Write traces sharing one frequency grid as ``freq_hz, re_sXY, im_sXY, ...``."""
    traces = list(traces)
    if not traces:
        raise DomainError("nothing to write")
    freqs = traces[0].freqs
    for t in traces[1:]:
        if t.freqs.shape != freqs.shape or not np.array_equal(t.freqs, freqs):
            raise DomainError("traces written to one CSV must share a frequency grid")
    header = ["freq_hz"]
    for t in traces:
        header += [f"re_{t.name}", f"im_{t.name}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, f in enumerate(freqs):
            row = [_g(f)]
            for t in traces:
                row += [_g(t.values[i].real), _g(t.values[i].imag)]
            w.writerow(row)


def read_trace_csv(path) -> list[Trace]:
    """Read a trace CSV; rows are reported by their line number in the file."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", row=1)
    header = [h.strip() for h in rows[0]]
    if "freq_hz" not in header:
        raise ParseError("missing frequency column", row=1, column="freq_hz")
    fcol = header.index("freq_hz")
    pairs = []
    for pp in PORT_PAIRS:
        name = "s{}{}".format(*pp)
        has_re, has_im = f"re_{name}" in header, f"im_{name}" in header
        if has_re != has_im:
            missing = f"im_{name}" if has_re else f"re_{name}"
            raise ParseError("incomplete complex column pair", row=1, column=missing)
        if has_re:
            pairs.append((pp, header.index(f"re_{name}"), header.index(f"im_{name}")))
    if not pairs:
        raise ParseError("no re_sXY/im_sXY columns found", row=1)

    data = [r for r in rows[1:] if any(c.strip() for c in r)]
    n = len(data)
    freqs = np.empty(n)
    vals = {pp: np.empty(n, dtype=complex) for pp, _, _ in pairs}

    def cell(r, line, col):
        try:
            x = float(r[col])
        except (IndexError, ValueError):
            raise ParseError("cannot parse number", row=line, column=header[col]) from None
        if not math.isfinite(x):
            raise ParseError("non-finite value", row=line, column=header[col])
        return x

    line_no = 1
    k = 0
    for r in rows[1:]:
        line_no += 1
        if not any(c.strip() for c in r):
            continue
        freqs[k] = cell(r, line_no, fcol)
        if k > 0 and not freqs[k] > freqs[k - 1]:
            raise ParseError("frequencies must be strictly increasing", row=line_no, column="freq_hz")
        for pp, ic, jc in pairs:
            vals[pp][k] = complex(cell(r, line_no, ic), cell(r, line_no, jc))
        k += 1
    if n == 0:
        raise ParseError("no data rows", row=2)
    return [Trace(pp, freqs, vals[pp]) for pp, _, _ in pairs]


# -- Touchstone ----------------------------------------------------------------

_FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


@dataclass(frozen=True, eq=False)
class TraceFile:
    format: str
    path: str
    traces: list
    z0: Optional[float] = None


def _touchstone(path) -> TraceFile:
    unit, param, fmt, z0 = "GHZ", "S", "MA", 50.0
    tokens: list[tuple[float, int]] = []
    seen_option = False
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                if seen_option:
                    continue
                seen_option = True
                opts = line[1:].upper().split()
                i = 0
                while i < len(opts):
                    o = opts[i]
                    if o in _FREQ_UNITS:
                        unit = o
                    elif o in ("S", "Y", "Z", "H", "G"):
                        param = o
                    elif o in ("RI", "MA", "DB"):
                        fmt = o
                    elif o == "R" and i + 1 < len(opts):
                        try:
                            z0 = float(opts[i + 1])
                        except ValueError:
                            raise ParseError("bad reference impedance", row=line_no) from None
                        i += 1
                    else:
                        raise ParseError(f"unknown option {o!r}", row=line_no)
                    i += 1
                if param != "S":
                    raise UnsupportedFormatError(f"{param}-parameters are not supported; only S")
                continue
            for tok in line.split():
                try:
                    tokens.append((float(tok), line_no))
                except ValueError:
                    raise ParseError(f"cannot parse number {tok!r}", row=line_no) from None
    if len(tokens) % 9:
        raise ParseError("two-port records need 9 numbers each", row=tokens[-1][1] if tokens else None)
    recs = np.array([t[0] for t in tokens]).reshape(-1, 9)
    lines = [tokens[9 * i][1] for i in range(len(recs))]
    if recs.size == 0:
        raise ParseError("no data records")
    if not np.all(np.isfinite(recs)):
        bad = int(np.argwhere(~np.isfinite(recs))[0][0])
        raise ParseError("non-finite value", row=lines[bad])
    freqs = recs[:, 0] * _FREQ_UNITS[unit]
    for i in range(1, len(freqs)):
        if not freqs[i] > freqs[i - 1]:
            raise ParseError("frequencies must be strictly increasing", row=lines[i])

    def to_complex(a, b):
        if fmt == "RI":
            return a + 1j * b
        mag = a if fmt == "MA" else 10 ** (a / 20)
        return mag * np.exp(1j * np.deg2rad(b))

    # v1 two-port order: S11, S21, S12, S22
    traces = [
        Trace(pp, freqs, to_complex(recs[:, 1 + 2 * k], recs[:, 2 + 2 * k]))
        for k, pp in enumerate(PORT_PAIRS)
    ]
    return TraceFile("touchstone-v1-s2p", str(path), traces, z0)


def read_touchstone(path) -> list[Trace]:
    """Read a Touchstone v1 ``.s2p`` file (S-parameters in RI, MA or DB)."""
    return _touchstone(path).traces


def load_trace_file(path) -> TraceFile:
    """Read a CSV or Touchstone file, chosen by extension."""
    p = str(path)
    if p.lower().endswith(".s2p"):
        return _touchstone(p)
    if p.lower().endswith(".csv"):
        return TraceFile("csv", p, read_trace_csv(p))
    raise UnsupportedFormatError(f"unknown trace file type: {os.path.basename(p)}")


# -- scenario / config JSON ----------------------------------------------------


def _line_dict(line: LineParams) -> dict:
    return {"z0": line.z0, "alpha": line.alpha, "v_p": line.v_p, "length": line.length}


def _imp_dict(z: LumpedImpedance) -> dict:
    return {"r": z.r, "l": z.l, "c": z.c}


def scenario_to_dict(s: Scenario) -> dict:
    d = {
        "schema": SCHEMA_VERSION,
        "geometry": s.geometry.value,
        "line": _line_dict(s.line),
        "coupling": {"c1": s.coupling.c1, "c2": s.coupling.c2},
        "asymmetry": None,
        "feedlines": None,
        "sweep": {"f_start": s.sweep.f_start, "f_stop": s.sweep.f_stop, "n_points": s.sweep.n_points},
        "noise": None,
    }
    if s.asymmetry is not None:
        d["asymmetry"] = {"dz1": _imp_dict(s.asymmetry.dz1), "dz2": _imp_dict(s.asymmetry.dz2)}
    if s.feedlines is not None:
        fl = s.feedlines
        d["feedlines"] = {"l1": fl.l1, "l2": fl.l2, "line": None if fl.line is None else _line_dict(fl.line)}
    if s.noise is not None:
        d["noise"] = {"sigma": s.noise.sigma, "seed": int(s.noise.seed)}
    return d


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ParseError(f"missing key {key!r} in {where}", column=key)
    return d[key]


def _line_from(d, where) -> LineParams:
    return LineParams(
        float(_need(d, "z0", where)),
        float(_need(d, "alpha", where)),
        float(_need(d, "v_p", where)),
        float(_need(d, "length", where)),
    )


def _imp_from(d) -> LumpedImpedance:
    if d is None:
        return LumpedImpedance()
    c = d.get("c")
    return LumpedImpedance(float(d.get("r", 0.0)), float(d.get("l", 0.0)), None if c is None else float(c))


def scenario_from_dict(d: dict) -> Scenario:
    """Build a :class:`Scenario` from its JSON form (or from ``{"preset": name}``)."""
    if not isinstance(d, dict):
        raise ParseError("scenario must be a JSON object")
    schema = d.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise UnsupportedFormatError(f"unsupported schema version {schema!r}")
    if "preset" in d:
        base = preset(d["preset"])
        return base if d.get("noise") is None else _replace_noise(base, d["noise"])
    try:
        geom = Geometry(_need(d, "geometry", "scenario"))
    except ValueError:
        raise ParseError(f"unknown geometry {d.get('geometry')!r}", column="geometry") from None
    coup = _need(d, "coupling", "scenario")
    asym = d.get("asymmetry")
    feed = d.get("feedlines")
    sweep = d.get("sweep")
    noise = d.get("noise")
    return Scenario(
        geom,
        _line_from(_need(d, "line", "scenario"), "line"),
        CouplingSpec(float(_need(coup, "c1", "coupling")), float(coup.get("c2", 0.0))),
        asymmetry=None if asym is None else AsymmetrySpec(_imp_from(asym.get("dz1")), _imp_from(asym.get("dz2"))),
        feedlines=None
        if feed is None
        else FeedlineSpec(
            float(feed.get("l1", 0.0)),
            float(feed.get("l2", 0.0)),
            None if feed.get("line") is None else _line_from(feed["line"], "feedlines.line"),
        ),
        sweep=None
        if sweep is None
        else SweepSpec(
            float(_need(sweep, "f_start", "sweep")),
            float(_need(sweep, "f_stop", "sweep")),
            int(sweep.get("n_points", 4001)),
        ),
        noise=None if noise is None else NoiseSpec(float(_need(noise, "sigma", "noise")), int(noise.get("seed", 0))),
    )


def _replace_noise(s: Scenario, noise: dict) -> Scenario:
    from dataclasses import replace

    return replace(s, noise=NoiseSpec(float(_need(noise, "sigma", "noise")), int(noise.get("seed", 0))))


@dataclass(frozen=True)
class PipelineOptions:
    window_k: float = 4.0
    geometry_class: Optional[str] = None
    phase_reference: str = "center"
    port: str = "s11"


@dataclass(frozen=True)
class ConfigDocument:
    scenario: Scenario
    pipeline: PipelineOptions = PipelineOptions()
    outputs: dict = field(default_factory=dict)


def config_to_dict(doc: ConfigDocument) -> dict:
    p = doc.pipeline
    return {
        "schema": SCHEMA_VERSION,
        "scenario": scenario_to_dict(doc.scenario),
        "pipeline": {
            "window_k": p.window_k,
            "geometry_class": p.geometry_class,
            "phase_reference": p.phase_reference,
            "port": p.port,
        },
        "outputs": dict(doc.outputs),
    }


def config_from_dict(d: dict) -> ConfigDocument:
    """Accept either a full config document or a bare scenario object."""
    if not isinstance(d, dict):
        raise ParseError("config must be a JSON object")
    if "scenario" not in d:
        return ConfigDocument(scenario_from_dict(d))
    pl = d.get("pipeline") or {}
    opts = PipelineOptions(
        float(pl.get("window_k", 4.0)),
        pl.get("geometry_class"),
        pl.get("phase_reference", "center"),
        pl.get("port", "s11"),
    )
    return ConfigDocument(scenario_from_dict(d["scenario"]), opts, dict(d.get("outputs") or {}))


def read_config(path) -> ConfigDocument:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", row=exc.lineno) from None
    return config_from_dict(d)


def write_json(d: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(d, fh, indent=2, allow_nan=True)
        fh.write("\n")


# -- reports -----------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def report_to_dict(r: FitReport) -> dict:
    d = {
        "schema": SCHEMA_VERSION,
        "omega_r_hz": float(r.omega_r / (2 * math.pi)),
        "q_l": float(r.q_l),
        "q_i": float(r.q_i),
        "q_c": float(r.q_c),
        "tau_ns": float(r.tau * 1e9),
        "phi_rad": float(r.phi),
        "s_off_re": float(r.s_off.real),
        "s_off_im": float(r.s_off.imag),
        "amp": float(r.amp),
        "varphi1_rad": float(r.varphi1),
        "varphi2_rad": float(r.varphi2),
        "fwhm_hz": float(r.fwhm / (2 * math.pi)),
        "tau0_ns": float(r.tau0 * 1e9),
        "circle": {
            "center_re": float(r.circle.center.real),
            "center_im": float(r.circle.center.imag),
            "radius": float(r.circle.radius),
            "rms_residual": float(r.circle.rms_residual),
        },
        "geometry_class": r.geometry_class,
        "flags": list(r.flags),
        "stages": [
            {"stage": log.stage, "params": _jsonable(log.params), "residual": _jsonable(log.residual)}
            for log in r.stage_logs
        ],
    }
    if r.relative_errors is not None:
        d["relative_errors"] = {k: float(v) for k, v in r.relative_errors.items()}
    return d


def write_report_json(r: FitReport, path) -> None:
    write_json(report_to_dict(r), path)


def read_report_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_stage_csvs(r: FitReport, directory) -> list[Path]:
    """One CSV per stage snapshot, numbered in pipeline order."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, log in enumerate(r.stage_logs):
        if log.snapshot is None:
            continue
        p = out / f"{i:02d}_{log.stage}.csv"
        write_trace_csv([log.snapshot], p)
        written.append(p)
    if r.corrected is not None:
        p = out / f"{len(r.stage_logs):02d}_corrected.csv"
        write_trace_csv([r.corrected], p)
        written.append(p)
    return written
