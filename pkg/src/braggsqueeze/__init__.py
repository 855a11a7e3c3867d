"""Bragg grating soliton propagation and photon-number squeezing.

The classical coupled-mode equations are integrated on a characteristics
aligned grid; quantum noise is obtained from the linearized fluctuation
equations by adjoint back-propagation of a photon-number projection.
"""
__version__ = "0.1.0"

from .model import (ConfigError, FieldPair, GratingConfig, Grid, PerturbationField, PulseConfig,
                    Setup, build_grid, sech_pulse)
from .classical import (ContainmentError, NumericalError, TrajectoryStore, classify, evolve,
                        ncme_step, photon_content, reflection, transmission)
from .adjoint import adjoint_step, back_propagate, inner_product, linearized_step, propagate
from .measurement import SqueezeResult, photon_number_projection, squeezing_ratio, vacuum_variance
from .experiments import (calibrate_gamma, convergence_study, find_threshold_intensity, run_setup,
                          sweep_intensity, sweep_length)

__all__ = [
    "ConfigError", "FieldPair", "GratingConfig", "Grid", "PerturbationField", "PulseConfig",
    "Setup", "build_grid", "sech_pulse", "ContainmentError", "NumericalError", "TrajectoryStore",
    "classify", "evolve", "ncme_step", "photon_content", "reflection", "transmission",
    "adjoint_step", "back_propagate", "inner_product", "linearized_step", "propagate",
    "SqueezeResult", "photon_number_projection", "squeezing_ratio", "vacuum_variance",
    "calibrate_gamma", "convergence_study", "find_threshold_intensity", "run_setup",
    "sweep_intensity", "sweep_length",
]
