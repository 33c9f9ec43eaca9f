import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonet.errors import DegenerateGeometryError
from resonet.fitting import circle_cost, damped_least_squares, fit_circle, golden_section


def ring(center, radius, n=64, a0=0.0, a1=2 * math.pi):
    t = np.linspace(a0, a1, n, endpoint=False)
    return center + radius * np.exp(1j * t)


def test_unit_circle():
    c = fit_circle(ring(0, 1, 8))
    assert abs(c.center) <= 1e-12
    assert abs(c.radius - 1) <= 1e-12


def test_normalized_circle_values():
    c = fit_circle(ring(0.527 - 0.011j, 0.473))
    assert abs(c.center - (0.527 - 0.011j)) <= 1e-9
    assert abs(c.radius - 0.473) / 0.473 <= 1e-9


def test_arc_only():
    c = fit_circle(ring(0.3 + 0.2j, 0.05, 40, 0.0, 1.0))
    assert abs(c.center - (0.3 + 0.2j)) <= 1e-9
    assert c.rms_residual <= 1e-12


@pytest.mark.parametrize("pts", [[0, 1, 2], [0j, 1 + 1j, 2 + 2j, 3 + 3j], [1, 2]])
def test_degenerate_inputs(pts):
    with pytest.raises(DegenerateGeometryError):
        fit_circle(pts)


def test_nan_rejected():
    with pytest.raises(DegenerateGeometryError):
        fit_circle([0, 1, 1j, complex("nan")])


def test_circle_cost_zero_on_exact():
    z = ring(1 + 1j, 0.5)
    assert circle_cost(z, fit_circle(z)) <= 1e-24


def test_golden_section_interior_and_boundary():
    m = golden_section(lambda x: (x - 0.3) ** 2, 0.0, 1.0)
    assert m.x == pytest.approx(0.3, abs=1e-7)
    assert not m.at_boundary
    b = golden_section(lambda x: x, 0.0, 1.0)
    assert b.at_boundary


def test_damped_least_squares_line():
    x = np.linspace(0, 1, 20)
    y = 3 * x - 2
    r = damped_least_squares(lambda p: p[0] * x + p[1] - y, [0.0, 0.0])
    assert r.success
    assert r.x == pytest.approx([3, -2], abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 1.0),
    st.integers(8, 200), st.floats(0, 2 * math.pi), st.floats(0.5, 2 * math.pi),
)
def test_exact_circle_property(cx, cy, r, n, a0, arc):
    c = fit_circle(ring(complex(cx, cy), r, n, a0, a0 + arc))
    assert abs(c.center - complex(cx, cy)) <= 1e-9 * max(1.0, abs(complex(cx, cy)))
    assert abs(c.radius - r) <= 1e-9 * r
