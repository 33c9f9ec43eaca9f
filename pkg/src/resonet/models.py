"""Closed-form resonator line shapes and the parameters that feed them.

Covers the hanger (lambda/4, lambda/2), necklace (lambda/2, lambda/4) and
bridge (lambda/2) coupling geometries: loaded frequency and coupling Q from
the circuit values, the ideal and asymmetry-rotated scattering line shapes,
the general distorted model used for fitting, and the exact closed-form
S-parameters of the necklace and bridge circuits.
"""
from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    ApproximationInvalidError,
    AsymmetryTooLargeError,
    AsymmetryWarning,
    DomainError,
    NoSuchPortError,
    UnsupportedScenarioError,
)
from .network import LineParams, SMatrix, line_input_impedance

SMALL_COUPLING_LIMIT = 0.1
SMALL_ASYMMETRY_LIMIT = 0.5


class Geometry(str, enum.Enum):
    HANGER_QUARTER = "hanger-lambda4"
    HANGER_HALF = "hanger-lambda2"
    NECKLACE_HALF = "necklace-lambda2"
    NECKLACE_QUARTER = "necklace-lambda4"
    BRIDGE_HALF = "bridge-lambda2"

    @property
    def is_hanger(self) -> bool:
        return self in (Geometry.HANGER_QUARTER, Geometry.HANGER_HALF)

    @property
    def ports(self) -> tuple[int, ...]:
        return (1,) if self is Geometry.NECKLACE_QUARTER else (1, 2)

    @property
    def port_pairs(self) -> tuple[tuple[int, int], ...]:
        if self is Geometry.NECKLACE_QUARTER:
            return ((1, 1),)
        return ((1, 1), (2, 1), (1, 2), (2, 2))

    @property
    def characteristic_port(self) -> tuple[int, int]:
        """Coefficient whose circle passes through the reference point 1 + 0j."""
        return (2, 1) if self.is_hanger else (1, 1)

    @property
    def quarter_wave(self) -> bool:
        return self in (Geometry.HANGER_QUARTER, Geometry.NECKLACE_QUARTER)


@dataclass(frozen=True)
class CouplingSpec:
    c1: float
    c2: float = 0.0

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("coupling capacitances must be non-negative")

    def is_small(self, omega0: float, z0: float) -> bool:
        return max(self.c1, self.c2) * omega0 * z0 < SMALL_COUPLING_LIMIT


@dataclass(frozen=True)
class LumpedImpedance:
    """Series R + jwL (+ 1/jwC when ``c`` is set), used for circuit asymmetries."""

    r: float = 0.0
    l: float = 0.0
    c: Optional[float] = None

    def __call__(self, omega: float) -> complex:
        z = complex(self.r, omega * self.l)
        if self.c is not None:
            z += 1 / (1j * omega * self.c)
        return z

    def is_zero(self) -> bool:
        return self.r == 0 and self.l == 0 and self.c is None


@dataclass(frozen=True)
class AsymmetrySpec:
    dz1: LumpedImpedance = LumpedImpedance()
    dz2: LumpedImpedance = LumpedImpedance()

    def z1(self, omega: float, z0: float) -> complex:
        return 1 + self.dz1(omega) / z0

    def z2(self, omega: float, z0: float) -> complex:
        return 1 + self.dz2(omega) / z0

    def is_small(self, omega: float, z0: float) -> bool:
        return (
            abs(self.dz1(omega)) / z0 < SMALL_ASYMMETRY_LIMIT
            and abs(self.dz2(omega)) / z0 < SMALL_ASYMMETRY_LIMIT
        )


@dataclass(frozen=True)
class DerivedParams:
    """Loaded resonance and quality factors of a coupled resonator.

    ``q_c_1``/``q_c_2`` are effective per-port coupling Qs, so that
    ``1/q_c = 1/q_c_1 + 1/q_c_2`` and ``1/q_l = 1/q_i + 1/q_c`` hold. For a
    hanger or a one-port resonator ``q_c_2`` is infinite. With asymmetry the
    magnitude of the complex coupling Q of port k is ``q_c_k * cos(phi_k)``.
    """

    geometry: Geometry
    omega_0: float
    omega_r: float
    q_i: float
    q_c_1: float
    q_c_2: float
    q_c: float
    q_l: float
    z0: float
    phi: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0

    def delta(self, omega: float) -> float:
        """Fractional detuning from the loaded resonance, (w - w_r)/w_r."""
        return (omega - self.omega_r) / self.omega_r

    def detuning(self, omega: float) -> float:
        """Absolute detuning from the bare resonance, w - w_0."""
        return omega - self.omega_0

    @property
    def linewidth(self) -> float:
        return self.omega_r / self.q_l


@dataclass(frozen=True)
class LineShapeParams:
    """Parameters of the general distorted line shape :func:`general_model_s`.

    ``q_c`` is the magnitude of the (possibly complex) coupling Q as it appears
    in the model; the effective coupling Q is ``q_c / cos(phi)``.
    """

    amp: float
    tau: float
    varphi: float
    phi: float
    omega_r: float
    q_l: float
    q_c: float

    def __post_init__(self):
        if not self.amp > 0:
            raise DomainError("amplitude must be positive")
        if self.q_l > self.q_c:
            raise DomainError("q_l cannot exceed q_c")


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def _recip(x: float) -> float:
    return math.inf if x == 0 else 1.0 / x


def bare_omega0(geom: Geometry, line: LineParams) -> float:
    if line.length <= 0:
        raise DomainError("resonator line must have positive length")
    if geom.quarter_wave:
        return math.pi * line.v_p / (2 * line.length)
    return math.pi * line.v_p / line.length


def internal_q(line: LineParams, omega0: float) -> float:
    """Q_i = beta / (2 alpha) with beta taken at the bare resonance."""
    if line.alpha == 0:
        return math.inf
    return omega0 / (2 * line.alpha * line.v_p)


def derive_params(geom: Geometry, line: LineParams, coupling: CouplingSpec) -> DerivedParams:
    """Loaded resonance and quality factors from the first-order coupling formulas.

    The coupling Q formulas are evaluated at the loaded frequency ``omega_r``.

    Raises
    ------
    ApproximationInvalidError
        If ``omega0 * Ck * Z0`` reaches 0.1 for either coupling capacitor.
    """
    geom = Geometry(geom)
    w0 = bare_omega0(geom, line)
    z0 = line.z0
    if not coupling.is_small(w0, z0):
        raise ApproximationInvalidError(
            f"omega0*C*Z0 = {max(coupling.c1, coupling.c2) * w0 * z0:.3g} "
            f"is not small (limit {SMALL_COUPLING_LIMIT})"
        )
    c1, c2 = coupling.c1, coupling.c2
    if geom is Geometry.HANGER_QUARTER or geom is Geometry.NECKLACE_QUARTER:
        wr = w0 - 2 * z0 * c1 * w0**2 / math.pi
    elif geom is Geometry.HANGER_HALF:
        wr = w0 - z0 * c1 * w0**2 / math.pi
    else:
        wr = w0 - z0 * (c1 + c2) * w0**2 / math.pi

    k = (wr * z0) ** 2
    if geom is Geometry.HANGER_QUARTER:
        qc1, qc2 = _recip(2 * k * c1**2 / math.pi), math.inf
    elif geom is Geometry.HANGER_HALF:
        qc1, qc2 = _recip(k * c1**2 / math.pi), math.inf
    elif geom is Geometry.NECKLACE_QUARTER:
        qc1, qc2 = _recip(4 * k * c1**2 / math.pi), math.inf
    else:
        qc1, qc2 = _recip(2 * k * c1**2 / math.pi), _recip(2 * k * c2**2 / math.pi)
    qc = _recip(_inv(qc1) + _inv(qc2))
    qi = internal_q(line, w0)
    ql = _recip(_inv(qi) + _inv(qc))
    return DerivedParams(geom, w0, wr, qi, qc1, qc2, qc, ql, z0)


def asymmetric_params(
    derived: DerivedParams, asym: AsymmetrySpec, omega_ref: Optional[float] = None
) -> DerivedParams:
    """Rotate and rescale the coupling Q for small circuit asymmetries.

    ``dz1``/``dz2`` are evaluated once, at ``omega_ref`` (default: the loaded
    resonance). Hangers use ``Q'_c = Q_c (1/z1 + 1/z2) / 2``; necklace and
    bridge resonators use ``Q'_c,k = Q_c,k / z_k`` per port. The loaded Q is
    rebuilt from ``Re(1/Q'_c)`` and each port's rotation angle is
    ``-arctan(Im Q'_c,k / Re Q'_c,k)``.
    """
    w = derived.omega_r if omega_ref is None else omega_ref
    z0 = derived.z0
    if not asym.is_small(w, z0):
        warnings.warn(
            f"circuit asymmetry |dZ|/Z0 >= {SMALL_ASYMMETRY_LIMIT}; first-order formulas are rough",
            AsymmetryWarning,
            stacklevel=2,
        )
    z1, z2 = asym.z1(w, z0), asym.z2(w, z0)
    geom = derived.geometry

    def rotate(qc: float, zfactor: complex) -> tuple[float, float]:
        # returns (effective Q = 1/Re(1/Q'), phi)
        if math.isinf(qc):
            return math.inf, 0.0
        q_complex = qc * zfactor
        if q_complex.real <= 0:
            raise AsymmetryTooLargeError(f"Re(Q'_c) = {q_complex.real:.4g} is not positive")
        phi = -math.atan(q_complex.imag / q_complex.real)
        return _recip((1 / q_complex).real), phi

    if geom.is_hanger:
        qc, phi = rotate(derived.q_c, (1 / z1 + 1 / z2) / 2)
        qc1, qc2, phi1, phi2 = qc, math.inf, phi, phi
    else:
        qc1, phi1 = rotate(derived.q_c_1, 1 / z1)
        if geom is Geometry.NECKLACE_QUARTER:
            qc2, phi2 = math.inf, phi1
        else:
            qc2, phi2 = rotate(derived.q_c_2, 1 / z2)
        phi = (phi1 + phi2) / 2
        qc = _recip(_inv(qc1) + _inv(qc2))
    ql = _recip(_inv(derived.q_i) + _inv(qc))
    return replace(derived, q_c_1=qc1, q_c_2=qc2, q_c=qc, q_l=ql, phi=phi, phi1=phi1, phi2=phi2)


def _lorentz(derived: DerivedParams, omega: float) -> complex:
    return 1 / (1 + 2j * derived.q_l * derived.delta(omega))


def analytic_s(geom: Geometry, derived: DerivedParams, port_pair, omega: float) -> complex:
    """Ideal (or asymmetry-rotated) scattering coefficient near resonance.

    Valid for small fractional detuning (|delta| <~ 0.01); outside that band
    the expressions still evaluate and tend to the reference values.
    """
    geom = Geometry(geom)
    pp = tuple(port_pair)
    if pp not in geom.port_pairs:
        raise NoSuchPortError(f"{geom.value} has no port pair {pp}")
    lor = _lorentz(derived, omega)
    ql = derived.q_l
    if geom.is_hanger:
        mag = ql / (derived.q_c * math.cos(derived.phi)) if not math.isinf(derived.q_c) else 0.0
        dip = cmath.exp(1j * derived.phi) * mag * lor
        return 1 - dip if pp in ((2, 1), (1, 2)) else -dip

    def port_term(qc: float, phi: float) -> complex:
        if math.isinf(qc):
            return 0j
        return cmath.exp(1j * phi) * 2 * ql / (qc * math.cos(phi)) * lor

    if pp == (1, 1):
        return 1 - port_term(derived.q_c_1, derived.phi1)
    if pp == (2, 2):
        return 1 - port_term(derived.q_c_2, derived.phi2)
    if math.isinf(derived.q_c_1) or math.isinf(derived.q_c_2):
        return 0j
    m1 = derived.q_c_1 * math.cos(derived.phi1)
    m2 = derived.q_c_2 * math.cos(derived.phi2)
    s21 = cmath.exp(1j * derived.phi) * 2 * ql / math.sqrt(m1 * m2) * lor
    return -s21 if geom is Geometry.BRIDGE_HALF else s21


def general_model_s(p: LineShapeParams, omega: float) -> complex:
    """Distorted characteristic coefficient: delay, attenuation, offset and rotation."""
    env = p.amp * cmath.exp(-1j * (omega * p.tau + p.varphi))
    x = 2 * p.q_l * (omega / p.omega_r - 1)
    return env * (1 - cmath.exp(1j * p.phi) * (p.q_l / p.q_c) / (1 + 1j * x))


def general_model_array(p: LineShapeParams, omega):
    """Vectorised :func:`general_model_s` over a numpy array of frequencies."""
    import numpy as np

    omega = np.asarray(omega, dtype=float)
    env = p.amp * np.exp(-1j * (omega * p.tau + p.varphi))
    x = 2 * p.q_l * (omega / p.omega_r - 1)
    return env * (1 - np.exp(1j * p.phi) * (p.q_l / p.q_c) / (1 + 1j * x))


def exact_scattering(
    geom: Geometry,
    line: LineParams,
    coupling: CouplingSpec,
    asym: Optional[AsymmetrySpec],
    omega: float,
    approx: bool = False,
) -> SMatrix:
    """Closed-form S-parameters of a necklace or bridge lambda/2 resonator.

    Without asymmetry the necklace uses the exponential form of the total chain
    matrix and the bridge uses its ``u = Z0 / Z_quarter`` form. With asymmetry
    both are written in the normalised series impedances
    ``zs_k = (z_k - 1) + 1/(j w c_k)`` with ``c_k = Z0 C_k``.

    With ``approx=True`` the line functions are replaced by their small-loss,
    small-detuning expansions (``cosh -> -1``, ``sinh -> -(al + j pi D/w0)`` for
    the half-wave line, ``u -> a l/2 + j pi D / 2w0`` for the quarter-wave stubs).
    Otherwise the expressions are exact and match a chain-matrix cascade of the
    same circuit to rounding error.
    """
    geom = Geometry(geom)
    if geom not in (Geometry.NECKLACE_HALF, Geometry.BRIDGE_HALF):
        raise UnsupportedScenarioError(f"no closed form for {geom.value}")
    z0 = line.z0
    c1, c2 = z0 * coupling.c1, z0 * coupling.c2
    if c1 <= 0 or c2 <= 0:
        raise DomainError("closed forms need both coupling capacitors")
    w = omega
    w0 = bare_omega0(geom, line)
    detune = math.pi * (w - w0) / w0

    if geom is Geometry.NECKLACE_HALF:
        if approx:
            ch, sh = -1.0, -complex(line.alpha * line.length, detune)
        else:
            gl = line.gamma(w) * line.length
            ch, sh = cmath.cosh(gl), cmath.sinh(gl)
        if asym is None and not approx:
            e = cmath.exp(line.gamma(w) * line.length)
            a1, a2 = 2j * w * c1, 2j * w * c2
            den = (a1 + 1) * (a2 + 1) * e - 1 / e
            return SMatrix(
                s11=((a2 + 1) * e + (a1 - 1) / e) / den,
                s12=-4 * w**2 * c1 * c2 / den,
                s21=-4 * w**2 * c1 * c2 / den,
                s22=((a1 + 1) * e + (a2 - 1) / e) / den,
            )
        zs1, zs2 = _series_terms(asym, w, z0, c1, c2)
        den = ch * (2 + zs1 + zs2) + sh * (2 + zs1 + zs2 + zs1 * zs2)
        return SMatrix(
            s11=(ch * (zs1 + zs2) + sh * (zs1 - zs2 + zs1 * zs2)) / den,
            s12=2 / den,
            s21=2 / den,
            s22=(ch * (zs1 + zs2) + sh * (zs2 - zs1 + zs1 * zs2)) / den,
        )

    # bridge: two shorted quarter-wave stubs of length l/2 in shunt
    stub = line.with_length(line.length / 2)
    if approx:
        u = complex(line.alpha * stub.length, detune / 2)
    else:
        u = z0 / line_input_impedance(0j, stub, w)
    if asym is None:
        p = w**2 * c1 * c2
        den = (-2 * p + 1j * w * (c1 + c2)) + 2 * u * (1 + 1j * w * (c1 + c2) - p)
        return SMatrix(
            s11=(1j * w * (c1 + c2) + 2 * u * (1 + 1j * w * (c2 - c1) + p)) / den,
            s12=-2 * p / den,
            s21=-2 * p / den,
            s22=(1j * w * (c1 + c2) + 2 * u * (1 + 1j * w * (c1 - c2) + p)) / den,
        )
    zs1, zs2 = _series_terms(asym, w, z0, c1, c2)
    y = 2 * u
    den = 2 + zs1 + zs2 + y * (1 + zs1) * (1 + zs2)
    return SMatrix(
        s11=(zs1 + zs2 + y * (zs1 - zs2 + zs1 * zs2 - 1)) / den,
        s12=2 / den,
        s21=2 / den,
        s22=(zs1 + zs2 + y * (zs2 - zs1 + zs1 * zs2 - 1)) / den,
    )


def _series_terms(asym, w, z0, c1, c2):
    dz1 = asym.dz1(w) / z0 if asym is not None else 0j
    dz2 = asym.dz2(w) / z0 if asym is not None else 0j
    return dz1 + 1 / (1j * w * c1), dz2 + 1 / (1j * w * c2)


def harmonic_q(n: int, q_i_fundamental: float, q_c_fundamental: float) -> tuple[float, float]:
    """Internal and coupling Q of the n-th harmonic: ``(n*Q_i, Q_c/n)``."""
    if int(n) != n or n < 1:
        raise DomainError(f"harmonic index must be a positive integer, got {n}")
    return n * q_i_fundamental, q_c_fundamental / n
