"""Two-port chain (ABCD) algebra, element impedances and ABCD to S conversion.

Everything here is evaluated at a single angular frequency with plain Python
complex scalars. Sweeps are loops over these functions.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import DomainError, OutOfBandError, SingularElementError, SingularNetworkError

#: Sentinel load for an open-circuited line end.
OPEN = "open"
#: Returned instead of overflowing when an impedance is unbounded.
EFFECTIVELY_OPEN = complex(1e300, 0.0)

_SINGULAR_DENOMINATOR = 1e-300


@dataclass(frozen=True)
class LineParams:
    """Uniform TEM line: characteristic impedance, attenuation, phase velocity, length."""

    z0: float
    alpha: float
    v_p: float
    length: float

    def __post_init__(self):
        if not self.z0 > 0:
            raise DomainError(f"z0 must be positive, got {self.z0}")
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")
        if not self.v_p > 0:
            raise DomainError(f"v_p must be positive, got {self.v_p}")
        if not self.length >= 0:
            raise DomainError(f"length must be non-negative, got {self.length}")

    def gamma(self, omega: float) -> complex:
        """Propagation constant alpha + j*omega/v_p (loss is frequency independent)."""
        return complex(self.alpha, omega / self.v_p)

    def with_length(self, length: float) -> "LineParams":
        return LineParams(self.z0, self.alpha, self.v_p, length)


@dataclass(frozen=True)
class RlcParams:
    r: float
    l: float
    c: float
    topology: str  # "series" | "parallel"

    def __post_init__(self):
        if self.topology not in ("series", "parallel"):
            raise DomainError(f"unknown RLC topology {self.topology!r}")
        if not (self.r > 0 and self.l > 0 and self.c > 0):
            raise DomainError("R, L and C must be positive")

    @property
    def omega0(self) -> float:
        return 1.0 / math.sqrt(self.l * self.c)

    @property
    def q_i(self) -> float:
        if self.topology == "series":
            return self.omega0 * self.l / self.r
        return self.omega0 * self.r * self.c

    def impedance(self, omega: float) -> complex:
        if self.topology == "series":
            return self.r + 1j * omega * self.l + 1 / (1j * omega * self.c)
        return 1 / (1 / self.r + 1 / (1j * omega * self.l) + 1j * omega * self.c)


@dataclass(frozen=True)
class AbcdMatrix:
    a: complex
    b: complex
    c: complex
    d: complex

    def __matmul__(self, other: "AbcdMatrix") -> "AbcdMatrix":
        return AbcdMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def reciprocity_error(self) -> float:
        """|AD - BC - 1| relative to the size of the products involved."""
        scale = max(1.0, abs(self.a * self.d), abs(self.b * self.c))
        return abs(self.det - 1) / scale


IDENTITY = AbcdMatrix(1 + 0j, 0j, 0j, 1 + 0j)


@dataclass(frozen=True)
class SMatrix:
    s11: complex
    s12: complex
    s21: complex
    s22: complex

    def __getitem__(self, port_pair):
        return {
            (1, 1): self.s11,
            (1, 2): self.s12,
            (2, 1): self.s21,
            (2, 2): self.s22,
        }[tuple(port_pair)]


# -- elements -------------------------------------------------------------


@dataclass(frozen=True)
class Through:
    def abcd(self, omega: float) -> AbcdMatrix:
        return IDENTITY


@dataclass(frozen=True)
class SeriesImpedance:
    """Series element; ``z`` maps angular frequency to impedance."""

    z: Callable[[float], complex]

    def abcd(self, omega: float) -> AbcdMatrix:
        return AbcdMatrix(1 + 0j, complex(self.z(omega)), 0j, 1 + 0j)


@dataclass(frozen=True)
class ShuntImpedance:
    z: Callable[[float], complex]

    def abcd(self, omega: float) -> AbcdMatrix:
        z = complex(self.z(omega))
        if z == 0:
            raise SingularElementError("shunt element with zero impedance")
        return AbcdMatrix(1 + 0j, 0j, 1 / z, 1 + 0j)


@dataclass(frozen=True)
class LineSegment:
    line: LineParams

    def abcd(self, omega: float) -> AbcdMatrix:
        gl = self.line.gamma(omega) * self.line.length
        ch, sh = cmath.cosh(gl), cmath.sinh(gl)
        z0 = self.line.z0
        return AbcdMatrix(ch, z0 * sh, sh / z0, ch)


@dataclass(frozen=True)
class SeriesCapacitor:
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"series capacitance must be positive, got {self.c}")

    def abcd(self, omega: float) -> AbcdMatrix:
        return AbcdMatrix(1 + 0j, 1 / (1j * omega * self.c), 0j, 1 + 0j)


TwoPortElement = Through | SeriesImpedance | ShuntImpedance | LineSegment | SeriesCapacitor


def element_abcd(elem: TwoPortElement, omega: float) -> AbcdMatrix:
    """Chain matrix of a single element at angular frequency ``omega``."""
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    return elem.abcd(omega)


def cascade(elems: Sequence[TwoPortElement], omega: float) -> AbcdMatrix:
    """Left-to-right product of the element chain matrices."""
    if not elems:
        raise DomainError("cannot cascade an empty element list")
    m = element_abcd(elems[0], omega)
    for elem in elems[1:]:
        m = m @ element_abcd(elem, omega)
    return m


def abcd_to_s(m: AbcdMatrix, z0: float) -> SMatrix:
    """Scattering matrix of a two-port referenced to a real ``z0`` at both ports."""
    if not z0 > 0:
        raise DomainError(f"reference impedance must be positive, got {z0}")
    a, b, c, d = m.a, m.b / z0, m.c * z0, m.d
    den = a + b + c + d
    if abs(den) < _SINGULAR_DENOMINATOR:
        raise SingularNetworkError("A + B/Z0 + C*Z0 + D vanishes")
    return SMatrix(
        s11=(a + b - c - d) / den,
        s12=2 * (m.a * m.d - m.b * m.c) / den,
        s21=2 / den,
        s22=(-a + b - c + d) / den,
    )


def input_impedance(m: AbcdMatrix, z_load) -> complex:
    """Impedance seen at port 1 with port 2 terminated by ``z_load`` (or :data:`OPEN`)."""
    if z_load is OPEN or z_load == OPEN:
        num, den = m.a, m.c
    else:
        num, den = m.a * z_load + m.b, m.c * z_load + m.d
    return _saturating_ratio(num, den)


def reflection(z: complex, z0: float) -> complex:
    """One-port reflection coefficient of impedance ``z`` against ``z0``."""
    if z == EFFECTIVELY_OPEN:
        return 1 + 0j
    return (z - z0) / (z + z0)


def _saturating_ratio(num: complex, den: complex) -> complex:
    if abs(den) <= _SINGULAR_DENOMINATOR * max(1.0, abs(num)):
        return EFFECTIVELY_OPEN
    try:
        out = num / den
    except (ZeroDivisionError, OverflowError):
        return EFFECTIVELY_OPEN
    if not (math.isfinite(out.real) and math.isfinite(out.imag)) or abs(out) > 1e300:
        return EFFECTIVELY_OPEN
    return out


def line_input_impedance(z_load, line: LineParams, omega: float) -> complex:
    """Input impedance of a line of length ``line.length`` terminated by ``z_load``.

    ``z_load`` is a complex impedance (0 for a short) or :data:`OPEN`.
    Unbounded results come back as :data:`EFFECTIVELY_OPEN` instead of NaN/inf.
    """
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    t = cmath.tanh(line.gamma(omega) * line.length)
    z0 = line.z0
    if z_load is OPEN or z_load == OPEN:
        return _saturating_ratio(z0, t)
    return _saturating_ratio(z0 * (z_load + z0 * t), z0 + z_load * t)


# -- resonator impedances ---------------------------------------------------

RESONATOR_KINDS = ("short-quarter", "short-half", "open-half")


def resonator_omega0(kind: str, line: LineParams) -> float:
    if kind not in RESONATOR_KINDS:
        raise DomainError(f"unknown resonator kind {kind!r}")
    if line.length <= 0:
        raise DomainError("resonator line must have positive length")
    if kind == "short-quarter":
        return math.pi * line.v_p / (2 * line.length)
    return math.pi * line.v_p / line.length


def resonator_input_impedance(kind: str, line: LineParams, omega: float) -> tuple[complex, float]:
    """Small-detuning input impedance of a line resonator and its bare frequency.

    ``kind`` is ``"short-quarter"`` (shorted lambda/4), ``"short-half"``
    (shorted lambda/2) or ``"open-half"`` (open lambda/2). Returns ``(Z, omega0)``.
    Raises :class:`OutOfBandError` when ``|omega - omega0| / omega0 >= 0.1``;
    use :func:`line_input_impedance` there instead.
    """
    omega0 = resonator_omega0(kind, line)
    detuning = omega - omega0
    if abs(detuning) / omega0 >= 0.1:
        raise OutOfBandError(
            f"detuning {detuning / omega0:.3g} of omega0 is outside the small-detuning band"
        )
    al = line.alpha * line.length
    z0 = line.z0
    if kind == "short-quarter":
        return _saturating_ratio(z0, al + 1j * math.pi * detuning / (2 * omega0)), omega0
    if kind == "short-half":
        return z0 * (al + 1j * math.pi * detuning / omega0), omega0
    return _saturating_ratio(z0, al + 1j * math.pi * detuning / omega0), omega0


def rlc_equivalent(kind: str, line: LineParams) -> RlcParams:
    """Lumped RLC circuit equivalent to a line resonator near its bare resonance.

    The returned :class:`RlcParams` reproduces ``Q_i = beta / (2 alpha)`` through
    its ``q_i`` property.
    """
    omega0 = resonator_omega0(kind, line)
    al = line.alpha * line.length
    z0 = line.z0
    if kind == "short-half":
        l = math.pi * z0 / (2 * omega0)
        return RlcParams(r=z0 * al, l=l, c=1 / (omega0**2 * l), topology="series")
    c = math.pi / ((4 if kind == "short-quarter" else 2) * omega0 * z0)
    r = z0 / al if al > 0 else math.inf
    return RlcParams(r=r, l=1 / (omega0**2 * c), c=c, topology="parallel")
