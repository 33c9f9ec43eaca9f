"""Superconducting resonator simulator and circle-fit calibration toolkit."""
from .bench import (
    FeedlineSpec,
    NoiseSpec,
    Scenario,
    SweepSpec,
    Trace,
    add_noise,
    calibration_scenario,
    build_network,
    reference_scenario,
    preset,
    resonance_oracle,
    simulate_sweep,
)
from .calib import FitReport, run_pipeline
from .fitting import CircleFitResult, fit_circle
from .models import (
    AsymmetrySpec,
    CouplingSpec,
    DerivedParams,
    Geometry,
    LineShapeParams,
    LumpedImpedance,
    analytic_s,
    asymmetric_params,
    derive_params,
    exact_scattering,
    general_model_s,
    harmonic_q,
)
from .network import AbcdMatrix, LineParams, RlcParams, SMatrix, abcd_to_s, cascade, element_abcd

__version__ = "0.1.0"
