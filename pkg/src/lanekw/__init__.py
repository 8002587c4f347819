"""Kinematic wave traffic flow with lane-changing intensity.

Lane-changing vehicles occupy two lanes for the duration of the
maneuver, which inflates the density the traffic stream experiences:
a fraction eps of extra effective vehicles. The library models the
resulting conservation law (fd, riemann, sim), estimates eps from
vehicle trajectories (calibrate), and generates ground-truth corpora
for testing the estimation pipeline (synthetic).
"""

from .errors import (BlowupError, ConfigError, DomainError, EmptySampleError,
                     LaneKWError)
from .fd import (FundamentalDiagram, MaxSensitivityFD, TrafficState,
                 TriangularFD, check_state)
from .intensity import (ConstantIntensity, ExponentialIntensity,
                        IntensityModel, PiecewiseLocationIntensity,
                        ReciprocalIntensity, ReverseLambdaIntensity,
                        TabulatedIntensity, lane_change_duration,
                        onramp_intensity, uniform_intensity,
                        UniformTrafficSpec)
from .riemann import (RAREFACTION, SHOCK, STANDING, RiemannSolution, Wave,
                      boundary_flux, classify, demand, sample, solve, supply)
from .sim import (FREE_OUTFLOW, DemandBC, RoadScenario, SimState, StateBC,
                  SupplyBC, initial_state, mass_balance_error,
                  piecewise_constant, run, stable_dt, step,
                  write_snapshots_csv)
from .calibrate import (CalibrationSample, CapacityComparison, FitResult,
                        LaneChangeEvent, VehicleTrack, aggregate_interval,
                        aggregate_series, capacity_comparison,
                        capacity_comparison_from_samples, detect_lane_changes,
                        fit_exponential, fit_linear, fit_reciprocal,
                        read_trajectory_csv, write_trajectory_csv)
from .scenario import ConfigBundle, load_config

__version__ = "0.1.0"

__all__ = [
    "BlowupError", "ConfigError", "DomainError", "EmptySampleError",
    "LaneKWError",
    "FundamentalDiagram", "MaxSensitivityFD", "TrafficState", "TriangularFD",
    "check_state",
    "ConstantIntensity", "ExponentialIntensity", "IntensityModel",
    "PiecewiseLocationIntensity", "ReciprocalIntensity",
    "ReverseLambdaIntensity", "TabulatedIntensity", "lane_change_duration",
    "onramp_intensity", "uniform_intensity", "UniformTrafficSpec",
    "RAREFACTION", "SHOCK", "STANDING", "RiemannSolution", "Wave",
    "boundary_flux", "classify", "demand", "sample", "solve", "supply",
    "FREE_OUTFLOW", "DemandBC", "RoadScenario", "SimState", "StateBC",
    "SupplyBC", "initial_state", "mass_balance_error", "piecewise_constant",
    "run", "stable_dt", "step", "write_snapshots_csv",
    "CalibrationSample", "CapacityComparison", "FitResult", "LaneChangeEvent",
    "VehicleTrack", "aggregate_interval", "aggregate_series",
    "capacity_comparison", "capacity_comparison_from_samples",
    "detect_lane_changes", "fit_exponential", "fit_linear", "fit_reciprocal",
    "read_trajectory_csv", "write_trajectory_csv",
    "ConfigBundle", "load_config",
    "__version__",
]
