"""Numerical laboratory for distortion inequalities and mapping regularity."""

__version__ = "0.1.0"

from .catalog import MappingSpec, catalog_entries, catalog_lookup, load_grid_mapping
from .differential import (
    DifferentialSample,
    finite_difference_differential,
    jacobian_det,
    operator_norm,
    sample_differential,
)
from .distortion import (
    DistortionFrontier,
    DistortionPair,
    DistortionSample,
    distortion_residual,
    fit_minimal_distortion,
    samples_from_mapping,
    verify_distortion,
)
from .geometry import DomainRegion, ball, boundary_distance, box, region_gap
from .integrals import (
    QuadratureConfig,
    QuadratureResult,
    RadialProfile,
    ball_integral,
    energy_profile,
    fubini_check,
    isoperimetric_check,
    sphere_integral,
    unit_ball_volume,
)
from .regularity import (
    DifferentiabilityReport,
    GrowthBound,
    HolderEstimate,
    HolderPrediction,
    MonotoneProfile,
    check_differential_inequality,
    check_morrey_condition,
    check_v_monotone,
    differentiability_check,
    equicontinuity_check,
    estimate_holder,
    growth_bound,
    monotone_profile,
    predicted_exponent,
)

__all__ = [name for name in dir() if not name.startswith("_")]
