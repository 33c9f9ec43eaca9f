import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from resonet.bench import (
    FeedlineSpec,
    NoiseSpec,
    Scenario,
    SweepSpec,
    Trace,
    add_noise,
    calibration_scenario,
    build_network,
    reference_scenario,
    line_shape_trace,
    preset,
    resonance_oracle,
    s_matrix_at,
    simulate_sweep,
    with_param,
)
from resonet.errors import DomainError, SweepCoverageWarning, UnsupportedScenarioError
from resonet.models import AsymmetrySpec, CouplingSpec, Geometry, LineShapeParams, derive_params
from resonet.network import LineParams, cascade

GHZ = 2 * math.pi * 1e9


def test_minimal_necklace_chain():
    assert len(build_network(reference_scenario("necklace"))) == 3


def test_calibration_preset_chain():
    assert len(build_network(calibration_scenario())) == 7


def test_hanger_chain_is_single_shunt():
    s = reference_scenario("hanger")
    chain = build_network(s)
    assert len(chain) == 1
    w = s.truth.omega_r
    m = cascade(chain, w)
    z = 1 / (1j * w * 1e-14) + 50 * np.tanh(s.line.gamma(w) * s.line.length)
    assert (m.a, m.b, m.d) == (1, 0, 1)
    assert m.c == pytest.approx(1 / z, rel=1e-12)


def test_unsupported_scenarios():
    line = LineParams(50, 5e-3, 1.35e8, 1e-2)
    with pytest.raises(UnsupportedScenarioError):
        Scenario(Geometry.NECKLACE_HALF, line, CouplingSpec(1e-14))
    with pytest.raises(UnsupportedScenarioError):
        Scenario(Geometry.NECKLACE_QUARTER, line, CouplingSpec(1e-14), feedlines=FeedlineSpec(0.1, 0.2))


def test_truth_matches_models():
    s = reference_scenario("bridge")
    assert s.truth == derive_params(Geometry.BRIDGE_HALF, s.line, s.coupling)


def test_calibration_preset_truth():
    s = calibration_scenario()
    assert s.truth.q_i == pytest.approx(31416, rel=1e-4)
    assert s.truth.q_l == pytest.approx(1666, rel=1e-3)
    assert s.truth.q_c == pytest.approx(1759, rel=1e-3)
    assert s.truth.omega_0 / GHZ == pytest.approx(6.75)
    assert s.notes  # the inductive asymmetry is outside the small-asymmetry range


def test_hanger_minimum_location():
    s = reference_scenario("hanger")
    s = replace(s, sweep=SweepSpec.around(s.truth, 50, 2001))
    tr = simulate_sweep(s)
    s21 = next(t for t in tr if t.port_pair == (2, 1))
    f_min = s21.freqs[np.argmin(np.abs(s21.values))]
    step = s21.freqs[1] - s21.freqs[0]
    assert abs(f_min - 6.659e9) <= step


def test_grid_independence():
    s = reference_scenario("necklace")
    mins = []
    for n in (801, 1601):
        t = simulate_sweep(replace(s, sweep=SweepSpec.around(s.truth, 5, n)))[0]
        i = int(np.argmin(np.abs(t.values)))
        # parabolic interpolation of |s| around the minimum
        y = np.abs(t.values[i - 1 : i + 2])
        off = 0.5 * (y[0] - y[2]) / (y[0] - 2 * y[1] + y[2])
        mins.append(t.freqs[i] + off * (t.freqs[1] - t.freqs[0]))
        step = t.freqs[1] - t.freqs[0]
    assert abs(mins[0] - mins[1]) < 2 * step


def test_lossless_sweep_unitarity():
    s = reference_scenario("necklace")
    s = replace(s, line=replace(s.line, alpha=0.0), sweep=SweepSpec.around(s.truth, 10, 201))
    tr = {t.port_pair: t.values for t in simulate_sweep(s)}
    assert np.max(np.abs(np.abs(tr[1, 1]) ** 2 + np.abs(tr[2, 1]) ** 2 - 1)) <= 1e-10


def test_feedline_phase_factor():
    s = reference_scenario("necklace")
    fed = replace(s, feedlines=FeedlineSpec(0.3, 0.3))
    for w in s.truth.omega_r * (1 + np.linspace(-1e-3, 1e-3, 11)):
        g = s.line.gamma(w)
        assert abs(s_matrix_at(fed, w).s11 - np.exp(-2 * g * 0.3) * s_matrix_at(s, w).s11) <= 1e-10


def test_one_port_necklace_sweep():
    line = LineParams(50, 5e-3, 1.35e8, 5e-3)
    s = Scenario(Geometry.NECKLACE_QUARTER, line, CouplingSpec(1e-14))
    tr = simulate_sweep(s)
    assert [t.port_pair for t in tr] == [(1, 1)]
    assert np.all(np.abs(tr[0].values) <= 1 + 1e-12)
    w = resonance_oracle(s)
    assert abs(w - s.truth.omega_r) / s.truth.omega_r < 5e-4


def test_coverage_warning():
    s = reference_scenario("hanger")
    s = replace(s, sweep=SweepSpec(7.0e9, 7.1e9, 64))
    with pytest.warns(SweepCoverageWarning):
        tr = simulate_sweep(s)
    assert tr[0].warnings


def test_noise_determinism_and_zero():
    t = line_shape_trace(LineShapeParams(1, 0, 0, 0, 6.6 * GHZ, 1000, 2000), SweepSpec(6.5e9, 6.7e9, 1000))
    assert add_noise(t, NoiseSpec(0.0, 3)) is t
    a = add_noise(t, NoiseSpec(1e-3, 42))
    b = add_noise(t, NoiseSpec(1e-3, 42))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, add_noise(t, NoiseSpec(1e-3, 43)).values)


def test_noise_statistics():
    t = line_shape_trace(LineShapeParams(1, 0, 0, 0, 6.6 * GHZ, 1000, 2000), SweepSpec(6.5e9, 6.7e9, 10_000))
    d = add_noise(t, NoiseSpec(1e-3, 7)).values - t.values
    assert np.std(d.real) == pytest.approx(1e-3, rel=0.05)
    assert np.std(d.imag) == pytest.approx(1e-3, rel=0.05)


def test_scenario_noise_is_sequential_and_seeded():
    s = replace(reference_scenario("necklace"), noise=NoiseSpec(1e-3, 5))
    a = simulate_sweep(s)
    b = simulate_sweep(s)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    clean = simulate_sweep(replace(s, noise=None))
    d0 = a[0].values - clean[0].values
    d1 = a[1].values - clean[1].values
    # traces draw successive samples from one generator, so their noise differs
    assert not np.allclose(d0, d1)


def test_trace_invariants():
    with pytest.raises(DomainError):
        Trace((1, 1), [1.0, 1.0], [0j, 0j])
    with pytest.raises(DomainError):
        Trace((1, 1), [1.0, 2.0], [0j, complex("nan")])
    with pytest.raises(DomainError):
        Trace((1, 1), [1.0, 2.0], [0j])


def test_sweep_and_noise_validation():
    with pytest.raises(DomainError):
        SweepSpec(2.0, 1.0, 100)
    with pytest.raises(DomainError):
        SweepSpec(1.0, 2.0, 15)
    with pytest.raises(DomainError):
        NoiseSpec(-1.0)


def test_presets_and_with_param():
    assert preset("fig3-bridge").geometry is Geometry.BRIDGE_HALF
    with pytest.raises(UnsupportedScenarioError):
        preset("nope")
    s = reference_scenario("hanger")
    s2 = with_param(s, "c1", 2e-14)
    assert s2.coupling.c1 == 2e-14
    assert s2.truth == derive_params(s.geometry, s.line, CouplingSpec(2e-14))
    assert with_param(s, "length", 6e-3).line.length == 6e-3
    with pytest.raises(DomainError):
        with_param(s, "colour", 1.0)


@pytest.mark.parametrize("name", ["fig3-hanger", "fig3-necklace", "fig3-bridge", "appendix-f"])
def test_resonance_oracle_presets(name):
    s = preset(name)
    assert abs(resonance_oracle(s) - s.truth.omega_r) / s.truth.omega_r <= 2e-4


def test_calibration_preset_far_detuned_magnitude():
    # feedline loss 2 * alpha * l1 sets |s11| off resonance
    t = simulate_sweep(calibration_scenario())[0]
    assert abs(t.values[0]) == pytest.approx(math.exp(-2 * 5e-3 * 1.2) * 0.9966, rel=2e-3)


def test_asymmetry_zero_spec_has_no_extra_elements():
    s = replace(reference_scenario("necklace"), asymmetry=AsymmetrySpec())
    assert len(build_network(s)) == 3
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        simulate_sweep(replace(s, sweep=SweepSpec.around(s.truth, 5, 64)))
