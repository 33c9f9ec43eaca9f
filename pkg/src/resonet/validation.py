"""Built-in cross-checks run by ``resonet validate``.

Each check compares the simulator or the calibration pipeline against
reference numbers for the 6.75 GHz preset resonators and reports pass/fail
with the numbers it saw. Nothing here relaxes a tolerance to make a check pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bench import (
    HALF_WAVE_LENGTH,
    PRESET_C,
    calibration_scenario,
    reference_scenario,
    preset,
    preset_line,
    resonance_oracle,
    s_matrix_at,
    simulate_sweep,
)
from .calib import run_pipeline
from .models import CouplingSpec, Geometry, analytic_s, derive_params

# reference values for the 6.75 GHz presets
REF_HANGER = {"f_r": 6.659e9, "q_c": 3589.0, "q_l": 3221.0}
REF_NECKLACE = {"q_c": 1795.0, "q_l": 1698.0}
REF_HANGER_HALF_QC = 7082.0
REF_PIPELINE = {
    "tau_ns": (17.4, 17.9),
    "fwhm_hz": 1.41e6,
    "phi": 0.023,
    "q_l": 1655.0,
    "q_c": 1750.0,
    "q_i": 30490.0,
    "truth_errors": {"q_l": 0.01, "q_i": 0.035, "q_c": 0.01},
}


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.criterion}: {self.name} - {self.detail}"


def _rel(a, b):
    return abs(a - b) / abs(b)


def line_shape_deviation(kind: str, half_width: float = 10.0, n_points: int = 2001) -> float:
    """Largest |analytic - cascade| of the characteristic coefficient over w_r +- half_width linewidths."""
    s = reference_scenario(kind)
    truth = s.truth
    pp = s.geometry.characteristic_port
    lw = truth.omega_r / truth.q_l
    omegas = np.linspace(truth.omega_r - half_width * lw, truth.omega_r + half_width * lw, n_points)
    return max(abs(analytic_s(s.geometry, truth, pp, w) - s_matrix_at(s, w)[pp]) for w in omegas)


def check_reference_params() -> list[Check]:
    out = []
    h = reference_scenario("hanger").truth
    df = abs(h.omega_r / (2 * math.pi) - REF_HANGER["f_r"])
    ok = df <= 0.5e6 and _rel(h.q_c, REF_HANGER["q_c"]) <= 5e-3 and _rel(h.q_l, REF_HANGER["q_l"]) <= 5e-3
    out.append(
        Check(1, "hanger-lambda4 derived parameters", ok,
              f"f_r={h.omega_r / 2 / math.pi / 1e9:.6f} GHz, Q_c={h.q_c:.1f}, Q_l={h.q_l:.1f}")
    )
    for kind in ("necklace", "bridge"):
        d = reference_scenario(kind).truth
        ok = _rel(d.q_c, REF_NECKLACE["q_c"]) <= 5e-3 and _rel(d.q_l, REF_NECKLACE["q_l"]) <= 5e-3
        out.append(Check(1, f"{kind}-lambda2 derived parameters", ok, f"Q_c={d.q_c:.1f}, Q_l={d.q_l:.1f}"))
    for kind in ("hanger", "necklace", "bridge"):
        dev = line_shape_deviation(kind)
        out.append(
            Check(1, f"{kind} analytic vs cascade line shape", dev <= 5e-3,
                  f"max |analytic - cascade| = {dev:.4g} (limit 5e-3)")
        )
    return out


def check_hanger_half() -> list[Check]:
    hh = derive_params(Geometry.HANGER_HALF, preset_line(HALF_WAVE_LENGTH), CouplingSpec(PRESET_C))
    nk = reference_scenario("necklace").truth
    ratio = hh.q_c / (4 * nk.q_c)
    return [
        Check(2, "hanger-lambda2 Q_c = 4 x necklace Q_c", abs(ratio - 1) <= 0.02,
              f"Q_c={hh.q_c:.1f}, 4 x {nk.q_c:.1f} = {4 * nk.q_c:.1f}, ratio {ratio:.4f}"),
        Check(2, "hanger-lambda2 Q_c vs reference 7082", _rel(hh.q_c, REF_HANGER_HALF_QC) <= 0.02,
              f"Q_c={hh.q_c:.1f}"),
    ]


def check_pipeline() -> list[Check]:
    s = calibration_scenario()
    trace = simulate_sweep(s)[0]
    r = run_pipeline(trace, truth=s.truth)
    ref = REF_PIPELINE
    tau_ns = r.tau * 1e9
    fwhm_hz = r.fwhm / (2 * math.pi)
    out = [
        Check(3, "delay", ref["tau_ns"][0] <= tau_ns <= ref["tau_ns"][1], f"tau={tau_ns:.4f} ns"),
        Check(3, "lorentzian FWHM", _rel(fwhm_hz, ref["fwhm_hz"]) <= 0.10, f"FWHM={fwhm_hz / 1e6:.4f} MHz"),
        Check(3, "asymmetry angle", abs(r.phi - ref["phi"]) <= 0.005, f"phi={r.phi:.5f} rad"),
        Check(3, "loaded Q", _rel(r.q_l, ref["q_l"]) <= 0.01, f"Q_l={r.q_l:.1f}"),
        Check(3, "coupling Q", _rel(r.q_c, ref["q_c"]) <= 0.01, f"Q_c={r.q_c:.1f}"),
        Check(3, "internal Q", _rel(r.q_i, ref["q_i"]) <= 0.015, f"Q_i={r.q_i:.1f}"),
    ]
    for k, lim in ref["truth_errors"].items():
        e = r.relative_errors[k]
        out.append(Check(3, f"truth-relative error of {k}", e <= lim, f"{e * 100:.3f}% (limit {lim * 100:.1f}%)"))
    return out


def check_resonance_oracle() -> list[Check]:
    out = []
    for name in ("fig3-hanger", "fig3-necklace", "fig3-bridge", "appendix-f"):
        s = preset(name)
        w = resonance_oracle(s)
        rel = abs(w - s.truth.omega_r) / s.truth.omega_r
        out.append(Check(6, f"resonance oracle {name}", rel <= 2e-4, f"relative offset {rel:.3e} (limit 2e-4)"))
    return out


def run_checks() -> list[Check]:
    return check_reference_params() + check_hanger_half() + check_pipeline() + check_resonance_oracle()
