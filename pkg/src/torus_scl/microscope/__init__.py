"""Young measures, distribution functions and H-measures of field sequences."""

from .hmeasure import (
    HMeasureEstimator,
    HMeasureMatrix,
    PropertyReport,
    check_hmeasure_properties,
    frequency_directions,
    hmeasure_estimate,
)
from .sphere import SphereBins
from .window import WindowSpec, bump
from .young import (
    DistributionField,
    YoungMeasureEstimate,
    YoungMeasureEstimator,
    default_p_grid,
    distribution_field,
    young_estimate,
)
from .localization import LocalizationReport, localization_mass, s0_distance
from .rescale import rescale_sequence, rescaled_sample_times

__all__ = [
    "DistributionField", "HMeasureEstimator", "HMeasureMatrix", "LocalizationReport", "PropertyReport",
    "SphereBins", "WindowSpec", "YoungMeasureEstimate", "YoungMeasureEstimator", "bump",
    "check_hmeasure_properties", "default_p_grid", "distribution_field", "frequency_directions",
    "hmeasure_estimate", "localization_mass", "rescale_sequence", "rescaled_sample_times",
    "s0_distance", "young_estimate",
]
