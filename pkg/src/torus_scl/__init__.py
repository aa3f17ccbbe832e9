"""Entropy solutions of scalar conservation laws on a torus, their decay, and
numerical Young-measure and H-measure diagnostics."""

__version__ = "0.1.0"

from ._validation import ConfigError
from .decay import (
    DecayClassifier,
    DecayReport,
    TravelingWave,
    classify_decay,
    comparison_check,
    decay_curve,
    squeeze_check,
    traveling_wave,
)
from .flux import FluxPL, affine_intervals, cantor_flux, check_nd2, flux_from_spec, make_flux, nondeg_at
from .lattice import LatticeSpec, dual_lattice, enumerate_dual
from .solver import PeriodicField, Trajectory, entropy_residual, mean, solve, step

__all__ = [
    "ConfigError", "DecayClassifier", "DecayReport", "FluxPL", "LatticeSpec", "PeriodicField",
    "Trajectory", "TravelingWave", "affine_intervals", "cantor_flux", "check_nd2", "classify_decay",
    "comparison_check", "decay_curve", "dual_lattice", "entropy_residual", "enumerate_dual",
    "flux_from_spec", "make_flux", "mean", "nondeg_at", "solve", "squeeze_check", "step",
    "traveling_wave",
]
