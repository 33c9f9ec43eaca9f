"""Synthetic resonator measurements: full circuits, frequency sweeps, noise and presets."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoResonanceFoundError, SweepCoverageWarning, UnsupportedScenarioError
from .models import (
    AsymmetrySpec,
    CouplingSpec,
    DerivedParams,
    Geometry,
    LumpedImpedance,
    asymmetric_params,
    derive_params,
)
from .network import (
    OPEN,
    LineParams,
    LineSegment,
    SeriesCapacitor,
    SeriesImpedance,
    ShuntImpedance,
    abcd_to_s,
    cascade,
    input_impedance,
    line_input_impedance,
    reflection,
)

MIN_SWEEP_POINTS = 16


@dataclass(frozen=True)
class FeedlineSpec:
    """Input/output feedlines; ``line=None`` reuses the resonator's Z0, alpha and v_p."""

    l1: float = 0.0
    l2: float = 0.0
    line: Optional[LineParams] = None

    def __post_init__(self):
        if self.l1 < 0 or self.l2 < 0:
            raise DomainError("feedline lengths must be non-negative")

    def segment(self, which: int, resonator_line: LineParams) -> Optional[LineSegment]:
        length = self.l1 if which == 1 else self.l2
        if length == 0:
            return None
        base = self.line if self.line is not None else resonator_line
        return LineSegment(base.with_length(length))


@dataclass(frozen=True)
class SweepSpec:
    """Linear frequency grid in Hz."""

    f_start: float
    f_stop: float
    n_points: int = 4001

    def __post_init__(self):
        if not self.f_start < self.f_stop:
            raise DomainError("f_start must be below f_stop")
        if self.f_start <= 0:
            raise DomainError("frequencies must be positive")
        if self.n_points < MIN_SWEEP_POINTS:
            raise DomainError(f"a sweep needs at least {MIN_SWEEP_POINTS} points")

    def freqs(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.n_points)

    @classmethod
    def around(cls, truth: DerivedParams, half_width: float = 25.0, n_points: int = 4001) -> "SweepSpec":
        """Grid centred on the loaded resonance, ``half_width`` linewidths either side."""
        f_r = truth.omega_r / (2 * math.pi)
        span = half_width * f_r / truth.q_l
        return cls(f_r - span, f_r + span, n_points)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive complex Gaussian noise; ``seed`` seeds numpy's PCG64 generator."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError("noise sigma must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Scenario:
    """A complete simulated measurement.

    ``line`` is the resonator line (its length sets the bare frequency for the
    geometry). ``truth`` is filled in at construction from the closed-form
    formulas and is never taken from the caller.
    """

    geometry: Geometry
    line: LineParams
    coupling: CouplingSpec
    asymmetry: Optional[AsymmetrySpec] = None
    feedlines: Optional[FeedlineSpec] = None
    sweep: Optional[SweepSpec] = None
    noise: Optional[NoiseSpec] = None
    truth: DerivedParams = field(init=False, repr=False)
    notes: tuple = field(init=False, repr=False, default=())

    def __post_init__(self):
        geom = Geometry(self.geometry)
        object.__setattr__(self, "geometry", geom)
        if not geom.is_hanger and geom is not Geometry.NECKLACE_QUARTER and self.coupling.c2 <= 0:
            raise UnsupportedScenarioError(f"{geom.value} needs two coupling capacitors")
        if self.coupling.c1 <= 0:
            raise UnsupportedScenarioError("coupling capacitor C1 must be positive")
        if geom is Geometry.NECKLACE_QUARTER and self.feedlines is not None and self.feedlines.l2 > 0:
            raise UnsupportedScenarioError("a one-port resonator has no output feedline")
        truth = derive_params(geom, self.line, self.coupling)
        notes = []
        if self.asymmetry is not None:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                truth = asymmetric_params(truth, self.asymmetry)
            notes = [str(w.message) for w in caught]
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "notes", tuple(notes))
        if self.sweep is None:
            object.__setattr__(self, "sweep", SweepSpec.around(truth))


@dataclass(frozen=True, eq=False)
class Trace:
    """One scattering coefficient sampled on a strictly increasing frequency grid (Hz)."""

    port_pair: tuple
    freqs: np.ndarray
    values: np.ndarray
    warnings: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if f.ndim != 1 or f.shape != v.shape:
            raise DomainError("frequency and value arrays must be 1-D and of equal length")
        if f.size == 0:
            raise DomainError("trace is empty")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(v))):
            raise DomainError("trace contains NaN or Inf")
        if f.size > 1 and not np.all(np.diff(f) > 0):
            raise DomainError("trace frequencies must be strictly increasing")
        object.__setattr__(self, "port_pair", tuple(int(p) for p in self.port_pair))
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.freqs

    @property
    def name(self) -> str:
        return "s{}{}".format(*self.port_pair)

    def __len__(self):
        return self.freqs.size

    def with_values(self, values) -> "Trace":
        return Trace(self.port_pair, self.freqs, values, self.warnings)

    def subset(self, mask) -> "Trace":
        return Trace(self.port_pair, self.freqs[mask], self.values[mask], self.warnings)


# -- circuits ---------------------------------------------------------------


def _const(z):
    return lambda omega: z


def _resonator_branch(s: Scenario):
    """Impedance of the element that carries the resonator, as a function of omega."""
    geom, line, c1 = s.geometry, s.line, s.coupling.c1
    if geom is Geometry.HANGER_QUARTER:
        return lambda w: 1 / (1j * w * c1) + line_input_impedance(0j, line, w)
    if geom is Geometry.HANGER_HALF:
        return lambda w: 1 / (1j * w * c1) + line_input_impedance(OPEN, line, w)
    if geom is Geometry.BRIDGE_HALF:
        stub = line.with_length(line.length / 2)
        return lambda w: line_input_impedance(0j, stub, w) / 2
    raise UnsupportedScenarioError(f"{geom.value} has no shunt resonator branch")


def build_network(s: Scenario) -> list:
    """Element chain of the scenario, left (port 1) to right (port 2).

    Absent parts (zero-length feedlines, missing asymmetries) are left out.
    For the one-port necklace-lambda/4 the chain ends with the resonator line,
    whose far end is shorted by :func:`simulate_sweep`.
    """
    geom = s.geometry
    asym = s.asymmetry
    feed = s.feedlines or FeedlineSpec()
    chain = []

    def add(elem):
        if elem is not None:
            chain.append(elem)

    def dz(k):
        if asym is None:
            return None
        imp = asym.dz1 if k == 1 else asym.dz2
        return None if imp.is_zero() else SeriesImpedance(imp)

    add(feed.segment(1, s.line))
    add(dz(1))
    if geom.is_hanger:
        add(ShuntImpedance(_resonator_branch(s)))
    elif geom is Geometry.BRIDGE_HALF:
        add(SeriesCapacitor(s.coupling.c1))
        add(ShuntImpedance(_resonator_branch(s)))
        add(SeriesCapacitor(s.coupling.c2))
    elif geom is Geometry.NECKLACE_HALF:
        add(SeriesCapacitor(s.coupling.c1))
        add(LineSegment(s.line))
        add(SeriesCapacitor(s.coupling.c2))
    else:
        add(SeriesCapacitor(s.coupling.c1))
        add(LineSegment(s.line))
        return chain
    add(dz(2))
    add(feed.segment(2, s.line))
    return chain


def s_matrix_at(s: Scenario, omega: float):
    """Scattering coefficients of the scenario circuit at one frequency.

    Returns an :class:`~resonet.network.SMatrix` for two-ports and the complex
    reflection coefficient for the one-port necklace-lambda/4.
    """
    m = cascade(build_network(s), omega)
    if s.geometry is Geometry.NECKLACE_QUARTER:
        return reflection(input_impedance(m, 0j), s.line.z0)
    return abcd_to_s(m, s.line.z0)


def simulate_sweep(s: Scenario) -> list[Trace]:
    """Simulate every port pair of the scenario on its sweep grid.

    Noise, if any, is added afterwards from one generator seeded by the
    scenario, trace by trace in port-pair order. A sweep that misses the loaded
    resonance is flagged with a :class:`SweepCoverageWarning`.
    """
    freqs = s.sweep.freqs()
    omegas = 2 * np.pi * freqs
    flags = list(s.notes)
    f_r = s.truth.omega_r / (2 * math.pi)
    if not freqs[0] <= f_r <= freqs[-1]:
        msg = f"sweep {freqs[0]:.6g}-{freqs[-1]:.6g} Hz does not cover f_r = {f_r:.6g} Hz"
        warnings.warn(msg, SweepCoverageWarning, stacklevel=2)
        flags.append(msg)

    pairs = s.geometry.port_pairs
    values = {pp: np.empty(freqs.size, dtype=complex) for pp in pairs}
    for i, w in enumerate(omegas):
        sm = s_matrix_at(s, float(w))
        if s.geometry is Geometry.NECKLACE_QUARTER:
            values[(1, 1)][i] = sm
        else:
            for pp in pairs:
                values[pp][i] = sm[pp]
    traces = [Trace(pp, freqs, values[pp], tuple(flags)) for pp in pairs]
    if s.noise is not None and s.noise.sigma > 0:
        rng = np.random.default_rng(s.noise.seed)
        traces = [add_noise(t, s.noise, rng) for t in traces]
    return traces


def add_noise(t: Trace, n: NoiseSpec, rng: Optional[np.random.Generator] = None) -> Trace:
    """Add zero-mean Gaussian noise of std ``sigma`` to both quadratures."""
    if n.sigma == 0:
        return t
    rng = np.random.default_rng(n.seed) if rng is None else rng
    noise = rng.normal(0.0, n.sigma, size=(2, len(t)))
    return t.with_values(t.values + noise[0] + 1j * noise[1])


def resonance_oracle(s: Scenario, rel_bracket: float = 0.005) -> float:
    """Loaded resonance from the circuit itself: root of Im Z = 0.

    For shunt-coupled circuits Z is the resonator branch impedance; for
    series-coupled ones it is the input impedance of the bare coupled
    resonator (no feedlines or asymmetry) with its output terminated by Z0.
    The root is bracketed within ``rel_bracket`` of the closed-form estimate.
    """
    geom = s.geometry
    z0 = s.line.z0
    if geom.is_hanger:
        branch = _resonator_branch(s)

        def im_z(w):
            return branch(w).imag
    else:
        bare = replace(s, asymmetry=None, feedlines=None)
        chain = build_network(bare)

        def im_z(w):
            m = cascade(chain, w)
            load = 0j if geom is Geometry.NECKLACE_QUARTER else z0
            return input_impedance(m, load).imag

    w_est = s.truth.omega_r
    lo, hi = w_est * (1 - rel_bracket), w_est * (1 + rel_bracket)
    if np.sign(im_z(lo)) == np.sign(im_z(hi)):
        raise NoResonanceFoundError("Im Z does not change sign around the estimated resonance")
    return brentq(im_z, lo, hi, xtol=1e-6, rtol=4 * np.finfo(float).eps, maxiter=200)


# -- presets ----------------------------------------------------------------

#: Line used by the presets: Z0 = 50 ohm, alpha = 5e-3 /m, v_p = 1.35e8 m/s.
PRESET_Z0 = 50.0
PRESET_ALPHA = 5.0e-3
PRESET_VP = 1.35e8
PRESET_C = 1.0e-14
#: Resonator lengths that put the bare resonance at 6.75 GHz.
QUARTER_WAVE_LENGTH = 5.0e-3
HALF_WAVE_LENGTH = 1.0e-2

PRESET_NAMES = ("fig3-hanger", "fig3-necklace", "fig3-bridge", "appendix-f")


def preset_line(length: float) -> LineParams:
    return LineParams(PRESET_Z0, PRESET_ALPHA, PRESET_VP, length)


def reference_scenario(kind: str) -> Scenario:
    """Symmetric 6.75 GHz resonators with 10 fF coupling capacitors.

    ``kind`` is ``"hanger"``, ``"necklace"`` or ``"bridge"``.
    """
    if kind == "hanger":
        return Scenario(Geometry.HANGER_QUARTER, preset_line(QUARTER_WAVE_LENGTH), CouplingSpec(PRESET_C))
    geom = {"necklace": Geometry.NECKLACE_HALF, "bridge": Geometry.BRIDGE_HALF}.get(kind)
    if geom is None:
        raise UnsupportedScenarioError(f"unknown preset kind {kind!r}")
    return Scenario(geom, preset_line(HALF_WAVE_LENGTH), CouplingSpec(PRESET_C, PRESET_C))


#: Half width, in linewidths, of the asymmetric-necklace preset sweep.
CALIBRATION_HALF_WIDTH = 6.0


def calibration_scenario() -> Scenario:
    """Asymmetric necklace lambda/2 resonator behind two 1.2 m feedlines.

    dZ1 = j w L1 with L1 = 1 nH and dZ2 = 2 ohm; the feedlines share the
    resonator's line parameters. The sweep spans 6 linewidths either side of
    the loaded resonance on 4001 points.
    """
    base = Scenario(
        Geometry.NECKLACE_HALF,
        preset_line(HALF_WAVE_LENGTH),
        CouplingSpec(PRESET_C, PRESET_C),
        asymmetry=AsymmetrySpec(LumpedImpedance(l=1e-9), LumpedImpedance(r=2.0)),
        feedlines=FeedlineSpec(1.2, 1.2),
    )
    return replace(base, sweep=SweepSpec.around(base.truth, CALIBRATION_HALF_WIDTH, 4001))


def preset(name: str) -> Scenario:
    if name == "appendix-f":
        return calibration_scenario()
    if name.startswith("fig3-"):
        return reference_scenario(name[len("fig3-"):])
    raise UnsupportedScenarioError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")


SWEEPABLE = ("c1", "c2", "alpha", "v_p", "z0", "length", "l1", "l2")


def with_param(s: Scenario, name: str, value: float) -> Scenario:
    """Copy of the scenario with one scalar parameter replaced (truth recomputed)."""
    if name in ("c1", "c2"):
        return replace(s, coupling=replace(s.coupling, **{name: value}))
    if name in ("alpha", "v_p", "z0", "length"):
        return replace(s, line=replace(s.line, **{name: value}))
    if name in ("l1", "l2"):
        return replace(s, feedlines=replace(s.feedlines or FeedlineSpec(), **{name: value}))
    raise DomainError(f"cannot sweep {name!r}; choose from {', '.join(SWEEPABLE)}")


def line_shape_trace(p, sweep: SweepSpec, port_pair=(1, 1)) -> Trace:
    """Sample the general distorted line shape on a sweep grid."""
    from .models import general_model_array

    freqs = sweep.freqs()
    return Trace(port_pair, freqs, general_model_array(p, 2 * np.pi * freqs))
