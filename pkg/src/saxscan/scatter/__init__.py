"""Synthetic SAXS curves for the twelve shape classes."""
from .dispersion import apply_poisson_noise, apply_polydispersity
from .formfactors import (
    intensity_cylinder,
    intensity_dab,
    intensity_ellipsoid,
    intensity_fuzzy_sphere,
    intensity_hollow_cylinder,
    intensity_mixture,
    intensity_polymer_ev,
    intensity_sphere,
    intensity_teubner_strey,
    model_intensity,
)
from .models import (
    CLASS_NAMES,
    SHAPE_CLASSES,
    CylinderParams,
    DABParams,
    EllipsoidParams,
    FuzzySphereParams,
    HollowCylinderParams,
    MixtureParams,
    PolymerEVParams,
    ShapeClass,
    SphereParams,
    TeubnerStreyParams,
    make_qgrid,
)
from .sampling import (
    Curve,
    Dataset,
    SimulationError,
    generate_dataset,
    sample_params,
    simulate_curve,
)

__all__ = [
    "CLASS_NAMES",
    "Curve",
    "CylinderParams",
    "DABParams",
    "Dataset",
    "EllipsoidParams",
    "FuzzySphereParams",
    "HollowCylinderParams",
    "MixtureParams",
    "PolymerEVParams",
    "SHAPE_CLASSES",
    "ShapeClass",
    "SimulationError",
    "SphereParams",
    "TeubnerStreyParams",
    "apply_poisson_noise",
    "apply_polydispersity",
    "generate_dataset",
    "intensity_cylinder",
    "intensity_dab",
    "intensity_ellipsoid",
    "intensity_fuzzy_sphere",
    "intensity_hollow_cylinder",
    "intensity_mixture",
    "intensity_polymer_ev",
    "intensity_sphere",
    "intensity_teubner_strey",
    "make_qgrid",
    "model_intensity",
    "sample_params",
    "simulate_curve",
]
