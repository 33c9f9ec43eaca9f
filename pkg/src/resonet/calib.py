"""Circle-fit calibration of a measured resonator trace.

The pipeline removes the cable delay, the attenuation and constant phase of
the feedlines and the rotation caused by circuit asymmetry, then reads the
loaded, coupling and internal quality factors off the corrected circle:

    unwrap -> linear phase -> lorentzian -> window -> delay -> phase fit
    -> normalize -> asymmetry -> extract

Every stage is also available as a standalone function.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bench import Trace
from .errors import (
    AsymmetryWarning,
    DelaySearchFailedError,
    DomainError,
    NoResonanceFoundError,
    NormalizationDegenerateError,
    PhaseFitFailedError,
    ResonetError,
    UnphysicalFitError,
    WindowTooSparseError,
)
from .fitting import CircleFitResult, damped_least_squares, fit_circle, golden_section
from .models import DerivedParams

GEOMETRY_CLASSES = ("reflection-necklace", "transmission-hanger")
PHASE_REFERENCES = ("center", "direct")
MIN_WINDOW_POINTS = 32
DELAY_HALF_WIDTH = 5e-9
STAGES = (
    "unwrap",
    "linear-phase",
    "lorentzian",
    "window",
    "delay",
    "phase-fit",
    "normalize",
    "asymmetry",
    "extract",
)


def _wrap(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


# -- stage 1: rough phase ----------------------------------------------------


def unwrap_phase(t: Trace) -> np.ndarray:
    """Phase of the trace with 2*pi jumps between neighbouring points removed."""
    return np.unwrap(np.angle(t.values))


def fit_linear_phase(t: Trace) -> tuple[float, float]:
    """Straight-line fit of the unwrapped phase, ``-(w*tau0 + varphi1)``.

    Returns ``(tau0, varphi1)`` with ``tau0`` in seconds. The estimate is biased
    by the phase excursion of the resonance and only seeds the delay search.
    """
    if len(t) < 2:
        raise DomainError("linear phase fit needs at least two points")
    w = t.omega
    w_mid = 0.5 * (w[0] + w[-1])
    slope, icept = np.polyfit(w - w_mid, unwrap_phase(t), 1)
    tau0 = -slope
    return float(tau0), float(-(icept - slope * w_mid))


# -- stage 2: lorentzian and window -----------------------------------------


@dataclass(frozen=True)
class LorentzianFit:
    """Lorentzian fit of ``|S|``.

    The background ``a1 + a2*x`` and amplitude ``a3 + a4*x`` use the reduced
    frequency ``x = (w - w_ref)/w_ref`` for conditioning.
    """

    omega_r0: float
    fwhm: float
    a1: float
    a2: float
    a3: float
    a4: float
    omega_ref: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise DomainError("FWHM must be positive")

    def __call__(self, omega):
        x = (np.asarray(omega) - self.omega_ref) / self.omega_ref
        u = 2 * (np.asarray(omega) - self.omega_r0) / self.fwhm
        return self.a1 + self.a2 * x + (self.a3 + self.a4 * x) / np.sqrt(1 + u * u)


def _robust_noise(y: np.ndarray) -> float:
    # second differences cancel smooth backgrounds; MAD -> sigma
    d2 = np.diff(y, 2)
    if d2.size == 0:
        return 0.0
    return float(1.4826 * np.median(np.abs(d2 - np.median(d2))) / math.sqrt(6))


def fit_lorentzian(t: Trace) -> LorentzianFit:
    """Fit a Lorentzian line with a linear background to ``|S|``.

    Raises
    ------
    NoResonanceFoundError
        If the deepest excursion from the median is under five times the
        robust noise level, or the fit does not converge.
    """
    mag = np.abs(t.values)
    w = t.omega
    if mag.size < 8:
        raise NoResonanceFoundError("too few points to locate a resonance")
    med = float(np.median(mag))
    i = int(np.argmax(np.abs(mag - med)))
    depth = float(mag[i] - med)
    noise = _robust_noise(mag)
    if abs(depth) < 5 * noise or depth == 0:
        raise NoResonanceFoundError(
            f"extremum depth {abs(depth):.3g} is within 5x the noise level {noise:.3g}"
        )
    # half-depth crossings
    half = med + depth / 2
    inside = (mag - half) * np.sign(depth) > 0
    lo = i
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = i
    while hi < mag.size - 1 and inside[hi + 1]:
        hi += 1
    step = w[1] - w[0]
    fwhm0 = max(w[hi] - w[lo], 2 * step)

    w_ref = float(w[i])
    # slopes are fitted per initial FWHM for conditioning, then rescaled
    x = (w - w_ref) / fwhm0

    def model(p):
        a1, a2, a3, a4, dw, lw = p
        u = 2 * (w - (w_ref + dw * fwhm0)) / (lw * fwhm0)
        return a1 + a2 * x + (a3 + a4 * x) / np.sqrt(1 + u * u)

    res = damped_least_squares(lambda p: model(p) - mag, [med, 0.0, depth, 0.0, 0.0, 1.0])
    if not res.success:
        raise NoResonanceFoundError(f"lorentzian fit did not converge: {res.message}")
    a1, a2, a3, a4, dw, lw = res.x
    k = w_ref / fwhm0
    return LorentzianFit(w_ref + dw * fwhm0, abs(lw) * fwhm0, a1, a2 * k, a3, a4 * k, w_ref)


def select_window(t: Trace, omega_r0: float, fwhm: float, k: float = 4.0) -> Trace:
    """Keep the points with ``|w - omega_r0| <= k * fwhm``.

    Raises
    ------
    WindowTooSparseError
        Fewer than 32 points retained, or the resonance lies within one FWHM
        of the edge of the sweep.
    """
    if not 3 <= k <= 5:
        raise DomainError(f"window multiple must lie in [3, 5], got {k}")
    w = t.omega
    if omega_r0 - fwhm < w[0] or omega_r0 + fwhm > w[-1]:
        raise WindowTooSparseError("resonance lies at the edge of the sweep")
    mask = np.abs(w - omega_r0) <= k * fwhm
    n = int(mask.sum())
    if n < MIN_WINDOW_POINTS:
        raise WindowTooSparseError(f"only {n} points within +-{k} FWHM (need {MIN_WINDOW_POINTS})")
    return t.subset(mask)


# -- stage 3: delay ----------------------------------------------------------


def remove_delay(t: Trace, tau: float) -> Trace:
    return t.with_values(np.exp(1j * t.omega * tau) * t.values)


def delay_cost(t: Trace, tau: float) -> float:
    """Sum of squared radial residuals of the delay-corrected data about its own fitted circle."""
    z = np.exp(1j * t.omega * tau) * t.values
    c = fit_circle(z)
    return float(np.sum((np.abs(z - c.center) - c.radius) ** 2))


def refine_delay(
    t: Trace, tau0: float, half_width: float = DELAY_HALF_WIDTH
) -> tuple[float, CircleFitResult, Trace]:
    """Golden-section search for the delay that makes the data most circular.

    Searches ``[tau0 - half_width, tau0 + half_width]``. If the optimum sits on
    the bracket edge the search is repeated once on a wider bracket (three
    times wider, and at least 0.4 / span of the data); a second edge hit raises
    :class:`DelaySearchFailedError`. The accepted delay never has a larger
    cost than ``tau0``.
    """
    span_hz = float(t.freqs[-1] - t.freqs[0])
    cost = lambda tau: delay_cost(t, tau)  # noqa: E731
    widths = [half_width, max(3 * half_width, 0.4 / span_hz if span_hz > 0 else 0.0)]
    best = None
    for hw in widths:
        best = golden_section(cost, tau0 - hw, tau0 + hw)
        if not best.at_boundary:
            break
    else:
        raise DelaySearchFailedError(
            f"delay optimum stuck at the search edge ({best.x * 1e9:.4g} ns around {tau0 * 1e9:.4g} ns)"
        )
    tau = best.x
    if best.fun > cost(tau0):
        tau = tau0
    corrected = remove_delay(t, tau)
    return tau, fit_circle(corrected.values), corrected


# -- stage 4: phase versus frequency -----------------------------------------


def phase_model(omega, varphi2: float, omega_r: float, q_l: float):
    return varphi2 + 2 * np.arctan(2 * q_l * (1 - np.asarray(omega) / omega_r))


def fit_phase_vs_frequency(
    t: Trace,
    omega_r_guess: Optional[float] = None,
    q_l_guess: Optional[float] = None,
    circle: Optional[CircleFitResult] = None,
    reference: str = "center",
) -> tuple[float, float, float]:
    """Fit ``varphi2 + 2 arctan(2 Q_l (1 - w/w_r))`` to the phase of a delay-free trace.

    With ``reference="center"`` the phase is measured about the fitted circle
    centre (``circle`` is fitted if not given); ``"direct"`` uses ``arg S``
    itself, which only works when the circle encloses the origin. Missing
    initial guesses come from :func:`fit_lorentzian`. A mirrored (conjugated)
    trace is handled by letting the fit run with the opposite sense of
    rotation; the returned ``q_l`` is always positive.

    Returns ``(varphi2, omega_r, q_l)`` with ``varphi2`` wrapped to (-pi, pi].
    """
    if reference not in PHASE_REFERENCES:
        raise DomainError(f"phase reference must be one of {PHASE_REFERENCES}")
    w = t.omega
    if omega_r_guess is None or q_l_guess is None:
        lor = fit_lorentzian(t)
        omega_r_guess = lor.omega_r0 if omega_r_guess is None else omega_r_guess
        q_l_guess = lor.omega_r0 / lor.fwhm if q_l_guess is None else q_l_guess
    if reference == "center":
        if circle is None:
            circle = fit_circle(t.values)
        theta = np.unwrap(np.angle(t.values - circle.center))
    else:
        theta = np.unwrap(np.angle(t.values))
    sense = 1.0 if theta[0] >= theta[-1] else -1.0
    q0 = sense * abs(q_l_guess)
    phi0 = float(np.mean(theta - phase_model(w, 0.0, omega_r_guess, q0)))

    def resid(p):
        phi2, u, logq = p
        return phase_model(w, phi2, omega_r_guess * (1 + u), sense * math.exp(logq)) - theta

    res = damped_least_squares(resid, [phi0, 0.0, math.log(abs(q0))], x_scale=[1.0, 1.0 / abs(q0), 1.0])
    phi2, u, logq = res.x
    if not res.success or not np.all(np.isfinite(res.x)):
        raise PhaseFitFailedError(
            f"phase fit did not converge ({res.message}; nfev={res.nfev}, cost={res.cost:.3g})"
        )
    omega_r = omega_r_guess * (1 + u)
    if not (w[0] <= omega_r <= w[-1]):
        raise PhaseFitFailedError(
            f"fitted resonance {omega_r / (2 * math.pi):.6g} Hz left the window "
            f"(cost={res.cost:.3g})"
        )
    return _wrap(phi2), float(omega_r), float(math.exp(logq))


# -- stage 5: attenuation and constant phase --------------------------------


def resonance_point(
    t: Trace, circle: CircleFitResult, omega_r: float, center_angle: Optional[float] = None
) -> complex:
    """Point of the fitted circle that corresponds to the resonance.

    With the centre-referenced phase fit the model angle at ``omega_r`` gives
    the point directly. Otherwise the trace is interpolated at ``omega_r`` and
    projected radially onto the circle.
    """
    if center_angle is not None:
        return circle.center + circle.radius * complex(math.cos(center_angle), math.sin(center_angle))
    w = t.omega
    s = np.interp(omega_r, w, t.values.real) + 1j * np.interp(omega_r, w, t.values.imag)
    d = s - circle.center
    if abs(d) == 0:
        raise NormalizationDegenerateError("resonance point coincides with the circle centre")
    return circle.center + circle.radius * d / abs(d)


def normalize_off_resonant(
    t: Trace, circle: CircleFitResult, omega_r: float, center_angle: Optional[float] = None
) -> tuple[Trace, complex]:
    """Divide by the far off-resonant point, the antipode of the resonance on the circle.

    Returns ``(S1 / S_off, S_off)``.
    """
    s_r = resonance_point(t, circle, omega_r, center_angle)
    s_off = 2 * circle.center - s_r
    if abs(s_off) < 1e-6:
        raise NormalizationDegenerateError(f"|S_off| = {abs(s_off):.3g} is too small to divide by")
    return t.with_values(t.values / s_off), complex(s_off)


# -- stage 6: asymmetry ------------------------------------------------------


def asymmetry_angle(circle: CircleFitResult) -> float:
    """Rotation of a normalised circle about 1 + 0j away from the real axis."""
    return _wrap(math.atan2((circle.center - 1).imag, (circle.center - 1).real) - math.pi)


def apply_asymmetry(values, phi: float):
    return math.cos(phi) * (np.asarray(values) - 1) * np.exp(-1j * phi) + 1


def correct_asymmetry(t: Trace, circle_after_norm: CircleFitResult) -> tuple[Trace, float]:
    """Rotate the normalised circle back onto the real axis and rescale by cos(phi).

    Warns with :class:`AsymmetryWarning` when ``|phi| > pi/4``.
    """
    phi = asymmetry_angle(circle_after_norm)
    if abs(phi) > math.pi / 4:
        warnings.warn(f"asymmetry angle {phi:.3g} rad exceeds pi/4", AsymmetryWarning, stacklevel=2)
    return t.with_values(apply_asymmetry(t.values, phi)), phi


def extract_q(circle_final: CircleFitResult, q_l: float, geometry_class: str) -> tuple[float, float]:
    """Internal and coupling Q from the corrected circle: ``Q_c = Q_l / (2 r)``.

    The same diameter relation holds for a necklace reflection and a hanger
    transmission; ``Q_i`` follows from ``1/Q_i = 1/Q_l - 1/Q_c``.
    """
    if geometry_class not in GEOMETRY_CLASSES:
        raise DomainError(f"geometry class must be one of {GEOMETRY_CLASSES}")
    d = 2 * circle_final.radius
    if d >= 1:
        raise UnphysicalFitError(f"circle diameter {d:.6g} >= 1 implies a non-positive internal Q")
    q_c = q_l / d
    q_i = 1 / (1 / q_l - 1 / q_c)
    return q_i, q_c


# -- orchestration -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StageLog:
    stage: str
    params: dict
    snapshot: Optional[Trace] = None
    residual: float = float("nan")


@dataclass(frozen=True, eq=False)
class FitReport:
    """Result of :func:`run_pipeline`.

    ``tau`` is in seconds and ``omega_r`` in rad/s. ``q_c`` is the effective
    coupling Q (the real part of the complex coupling, after the cos(phi)
    rescale). ``corrected`` is the whole input trace with every correction
    applied.
    """

    omega_r: float
    q_l: float
    q_i: float
    q_c: float
    tau: float
    phi: float
    varphi1: float
    varphi2: float
    s_off: complex
    circle: CircleFitResult
    stage_logs: tuple = ()
    relative_errors: Optional[dict] = None
    fwhm: float = float("nan")
    tau0: float = float("nan")
    s_r: complex = complex("nan")
    geometry_class: str = "reflection-necklace"
    flags: tuple = field(default=())
    corrected: Optional[Trace] = None

    @property
    def amp(self) -> float:
        return abs(self.s_off)

    @property
    def varphi(self) -> float:
        """Constant phase offset of the feedlines, ``-arg S_off``."""
        return _wrap(-math.atan2(self.s_off.imag, self.s_off.real))


def default_geometry_class(port_pair) -> str:
    return "reflection-necklace" if port_pair[0] == port_pair[1] else "transmission-hanger"


def correct_trace(t: Trace, tau: float, s_off: complex, phi: float) -> Trace:
    """Apply delay, normalisation and asymmetry corrections to a whole trace."""
    s2 = np.exp(1j * t.omega * tau) * t.values / s_off
    return t.with_values(apply_asymmetry(s2, phi))


def relative_errors(report_q: dict, truth: DerivedParams) -> dict:
    ref = {"omega_r": truth.omega_r, "q_l": truth.q_l, "q_i": truth.q_i, "q_c": truth.q_c}
    return {k: abs(report_q[k] - v) / v for k, v in ref.items() if math.isfinite(v)}


def run_pipeline(
    t: Trace,
    window_k: float = 4.0,
    geometry_class: Optional[str] = None,
    phase_reference: str = "center",
    truth: Optional[DerivedParams] = None,
    delay_half_width: float = DELAY_HALF_WIDTH,
) -> FitReport:
    """Run every calibration stage in order and collect a :class:`FitReport`.

    Errors raised by a stage carry the stage name in their ``stage`` attribute.
    """
    geometry_class = geometry_class or default_geometry_class(t.port_pair)
    if geometry_class not in GEOMETRY_CLASSES:
        raise DomainError(f"geometry class must be one of {GEOMETRY_CLASSES}")
    logs: list[StageLog] = []
    flags: list[str] = list(t.warnings)
    stage = STAGES[0]
    try:
        phase = unwrap_phase(t)
        logs.append(StageLog(stage, {"phase_span_rad": float(phase[-1] - phase[0])}, t))

        stage = "linear-phase"
        tau0, varphi1 = fit_linear_phase(t)
        lin_res = float(np.sqrt(np.mean((phase + t.omega * tau0 + varphi1) ** 2)))
        logs.append(StageLog(stage, {"tau0": tau0, "varphi1": varphi1}, None, lin_res))

        stage = "lorentzian"
        lor = fit_lorentzian(t)
        lor_res = float(np.sqrt(np.mean((lor(t.omega) - np.abs(t.values)) ** 2)))
        logs.append(
            StageLog(
                stage,
                {"omega_r0": lor.omega_r0, "fwhm": lor.fwhm, "a1": lor.a1, "a2": lor.a2, "a3": lor.a3, "a4": lor.a4},
                None,
                lor_res,
            )
        )

        stage = "window"
        win = select_window(t, lor.omega_r0, lor.fwhm, window_k)
        logs.append(StageLog(stage, {"k": window_k, "n_points": len(win)}, win))

        stage = "delay"
        tau, circle1, s1 = refine_delay(win, tau0, delay_half_width)
        logs.append(
            StageLog(
                stage,
                {"tau": tau, "center": circle1.center, "radius": circle1.radius},
                s1,
                circle1.rms_residual,
            )
        )

        stage = "phase-fit"
        varphi2, omega_r, q_l = fit_phase_vs_frequency(
            s1, lor.omega_r0, lor.omega_r0 / lor.fwhm, circle1, phase_reference
        )
        logs.append(StageLog(stage, {"varphi2": varphi2, "omega_r": omega_r, "q_l": q_l}, s1))

        stage = "normalize"
        angle = varphi2 if phase_reference == "center" else None
        s_r = resonance_point(s1, circle1, omega_r, angle)
        s2, s_off = normalize_off_resonant(s1, circle1, omega_r, angle)
        circle2 = fit_circle(s2.values)
        logs.append(
            StageLog(
                stage,
                {"s_r": s_r, "s_off": s_off, "center": circle2.center, "radius": circle2.radius},
                s2,
                circle2.rms_residual,
            )
        )

        stage = "asymmetry"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AsymmetryWarning)
            s3, phi = correct_asymmetry(s2, circle2)
        flags.extend(str(c.message) for c in caught)
        circle3 = fit_circle(s3.values)
        logs.append(
            StageLog(stage, {"phi": phi, "center": circle3.center, "radius": circle3.radius}, s3, circle3.rms_residual)
        )

        stage = "extract"
        q_i, q_c = extract_q(circle3, q_l, geometry_class)
        logs.append(StageLog(stage, {"q_l": q_l, "q_i": q_i, "q_c": q_c}))
    except ResonetError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise

    errs = None
    if truth is not None:
        errs = relative_errors({"omega_r": omega_r, "q_l": q_l, "q_i": q_i, "q_c": q_c}, truth)
    return FitReport(
        omega_r=omega_r,
        q_l=q_l,
        q_i=q_i,
        q_c=q_c,
        tau=tau,
        phi=phi,
        varphi1=varphi1,
        varphi2=varphi2,
        s_off=s_off,
        circle=circle3,
        stage_logs=tuple(logs),
        relative_errors=errs,
        fwhm=lor.fwhm,
        tau0=tau0,
        s_r=s_r,
        geometry_class=geometry_class,
        flags=tuple(flags),
        corrected=correct_trace(t, tau, s_off, phi),
    )
