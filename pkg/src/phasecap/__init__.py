"""Condenser capacities organized by the level sets of a scalar phase.

The pipeline has three stages: tabulate level-set weights from a sampled
phase field (`fiber`), solve the weighted one-dimensional reduced problem
in closed form (`reduced`), and minimize the full grid p-Dirichlet energy
to compare against the reduced upper bound (`fullcap`).  `critical`
classifies the local regime near degenerate levels and `oracles` carries
the closed-form values the test suite checks against.
"""

from .field import (
    FIELD_MAGIC,
    AdmissibilityReport,
    Grid,
    PhaseModel,
    ScalarField,
    VectorField,
    band_mask,
    boundary_mask,
    check_admissible_levels,
    gradient,
    interpolate_values,
    load_field,
    plate_masks,
    sample_phase,
    save_field,
)
from .fiber import (
    CoareaCheck,
    FiberMesh,
    Region,
    WeightTable,
    coarea_check,
    component_weights,
    energy_weight,
    extract_fiber,
    fiber_mean_energy,
    fiber_size,
    load_weight_csv,
    pushforward_weight,
    save_weight_csv,
    weight_table,
)
from .reduced import (
    EnvelopeBounds,
    LinearComparison,
    Profile,
    ReducedReport,
    TruncatedProfile,
    eikonal_check,
    linear_profile_comparison,
    load_profile_csv,
    optimal_profile,
    reduced_capacity,
    reduced_energy,
    reparametrize_table,
    resistance,
    save_profile_csv,
    save_reduced_json,
    series_residual,
    truncated_profile,
    two_sided_bounds,
)
from .critical import (
    LocalProfileFit,
    LojasiewiczReport,
    RegimeReport,
    classify,
    fit_exponent,
    local_resistance,
    lojasiewicz_check,
    save_regime_json,
    supercritical_vanishing,
)
from .fullcap import (
    CapacityReport,
    ComparisonViolationError,
    ConstraintSet,
    FiberedEnergy,
    MinimizeOptions,
    PolarizationGap,
    TangentialSplit,
    cell_energy,
    cell_gradient,
    compare_bound,
    compose_profile,
    fibered_energy,
    p_capacity,
    polarization_gap,
    save_capacity_json,
    spherical_average,
    tangential_decompose,
    transverse_average,
)
from .oracles import (
    ModelSpec,
    monomial_capacity,
    monomial_weight,
    planar_capacity,
    radial_capacity,
    sphere_area,
)

__version__ = "0.1.0"

__all__ = [
    "FIELD_MAGIC",
    "AdmissibilityReport",
    "Grid",
    "PhaseModel",
    "ScalarField",
    "VectorField",
    "band_mask",
    "boundary_mask",
    "check_admissible_levels",
    "gradient",
    "interpolate_values",
    "load_field",
    "plate_masks",
    "sample_phase",
    "save_field",
    "CoareaCheck",
    "FiberMesh",
    "Region",
    "WeightTable",
    "coarea_check",
    "component_weights",
    "energy_weight",
    "extract_fiber",
    "fiber_mean_energy",
    "fiber_size",
    "load_weight_csv",
    "pushforward_weight",
    "save_weight_csv",
    "weight_table",
    "EnvelopeBounds",
    "LinearComparison",
    "Profile",
    "ReducedReport",
    "TruncatedProfile",
    "eikonal_check",
    "linear_profile_comparison",
    "load_profile_csv",
    "optimal_profile",
    "reduced_capacity",
    "reduced_energy",
    "reparametrize_table",
    "resistance",
    "save_profile_csv",
    "save_reduced_json",
    "series_residual",
    "truncated_profile",
    "two_sided_bounds",
    "LocalProfileFit",
    "LojasiewiczReport",
    "RegimeReport",
    "classify",
    "fit_exponent",
    "local_resistance",
    "lojasiewicz_check",
    "save_regime_json",
    "supercritical_vanishing",
    "CapacityReport",
    "ComparisonViolationError",
    "ConstraintSet",
    "FiberedEnergy",
    "MinimizeOptions",
    "PolarizationGap",
    "TangentialSplit",
    "cell_energy",
    "cell_gradient",
    "compare_bound",
    "compose_profile",
    "fibered_energy",
    "p_capacity",
    "polarization_gap",
    "save_capacity_json",
    "spherical_average",
    "tangential_decompose",
    "transverse_average",
    "ModelSpec",
    "monomial_capacity",
    "monomial_weight",
    "planar_capacity",
    "radial_capacity",
    "sphere_area",
    "__version__",
]
