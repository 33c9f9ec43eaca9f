"""Numerical fitting primitives: algebraic circle fit, golden-section search, damped least squares."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateGeometryError

_INV_PHI = (math.sqrt(5) - 1) / 2
COLLINEAR_RATIO = 1e-12


@dataclass(frozen=True)
class CircleFitResult:
    center: complex
    radius: float
    rms_residual: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DegenerateGeometryError(f"circle radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2 * self.radius


def fit_circle(points) -> CircleFitResult:
    """Taubin algebraic circle fit of complex points.

    Works on centred moments and solves the normalised algebraic problem via
    an SVD of the 3-column design matrix, so exact circles are recovered to
    rounding error.

    Raises
    ------
    DegenerateGeometryError
        Fewer than three points, or points that are (numerically) collinear.
    """
    z = np.asarray(points, dtype=complex).ravel()
    if z.size < 3:
        raise DegenerateGeometryError("circle fit needs at least three points")
    if not np.all(np.isfinite(z)):
        raise DegenerateGeometryError("circle fit input contains NaN or Inf")
    zm = z.mean()
    x, y = z.real - zm.real, z.imag - zm.imag
    sv = np.linalg.svd(np.column_stack([x, y]), compute_uv=False)
    if sv[0] == 0 or sv[-1] < COLLINEAR_RATIO * sv[0]:
        raise DegenerateGeometryError("points are collinear")

    r2 = x * x + y * y
    r2m = r2.mean()
    scale = 2 * math.sqrt(r2m)
    design = np.column_stack([(r2 - r2m) / scale, x, y])
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    a = vt[-1]
    a0 = a[0] / scale
    if a0 == 0:
        raise DegenerateGeometryError("points are collinear")
    a3 = -r2m * a0
    cx, cy = -a[1] / (2 * a0), -a[2] / (2 * a0)
    radius = math.sqrt(a[1] ** 2 + a[2] ** 2 - 4 * a0 * a3) / (2 * abs(a0))
    center = complex(cx + zm.real, cy + zm.imag)
    resid = np.abs(z - center) - radius
    return CircleFitResult(center, radius, float(np.sqrt(np.mean(resid**2))))


def circle_cost(points, circle: CircleFitResult) -> float:
    """Sum of squared radial distances of points from a circle."""
    z = np.asarray(points, dtype=complex)
    return float(np.sum((np.abs(z - circle.center) - circle.radius) ** 2))


@dataclass(frozen=True)
class ScalarMinimum:
    x: float
    fun: float
    n_eval: int
    at_boundary: bool


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 0.0,
    max_iter: int = 200,
) -> ScalarMinimum:
    """Minimise a unimodal scalar function on ``[lo, hi]`` by golden-section search.

    ``at_boundary`` is set when the bracket collapsed onto one of the original
    end points, i.e. the minimum probably lies outside the interval.
    """
    if not hi > lo:
        raise ValueError("golden_section needs lo < hi")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    tol = max(xtol, 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300))
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        n += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    # collapsed within a few final widths of an original endpoint
    width = max(b - a, tol)
    edge = min(x - lo, hi - x) <= 2 * width + 1e-9 * (hi - lo)
    return ScalarMinimum(float(x), float(fx), n, bool(edge))


@dataclass(frozen=True)
class LsqResult:
    x: np.ndarray
    cost: float
    nfev: int
    success: bool
    message: str


def damped_least_squares(
    residual: Callable[[np.ndarray], np.ndarray],
    x0,
    x_scale=None,
    max_iter: int = 200,
    xtol: float = 1e-10,
) -> LsqResult:
    """Levenberg-Marquardt fit with a finite-difference Jacobian.

    Thin wrapper over :func:`scipy.optimize.least_squares` (``method='lm'``)
    that stops when the relative parameter change drops below ``xtol`` or after
    ``max_iter`` Jacobian evaluations.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    res = least_squares(
        residual,
        x0,
        method="lm",
        x_scale=np.ones(n) if x_scale is None else np.asarray(x_scale, dtype=float),
        xtol=xtol,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_iter * (n + 1),
    )
    ok = bool(res.status > 0 and np.all(np.isfinite(res.x)))
    return LsqResult(res.x, float(res.cost), int(res.nfev), ok, str(res.message))
