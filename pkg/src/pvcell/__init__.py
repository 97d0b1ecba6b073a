"""Monte Carlo generation, measurement and parametric approximation of
3D Poisson-Voronoi typical cells, with exact transport of every result
between intensity levels."""

__version__ = "0.1.0"

from .distances import compare_families, sup_distance, tv_distance
from .fitting import (
    FitError,
    GammaParams,
    GenGammaParams,
    LognormalParams,
    fit_gamma,
    fit_gengamma,
    fit_lognormal,
    gengamma_cdf,
    gengamma_pdf,
)
from .geometry import (
    CellConstructionError,
    CellMeasures,
    ContractViolationError,
    ConvexPolytope,
    DegenerateSiteError,
    HalfSpace,
    bisector,
    clip,
    initial_cell,
    measure,
    validate_cell,
)
from .sampling import (
    FeatureSample,
    SimulationConfig,
    sample_poisson_shell,
    simulate_batch,
    typical_cell,
    typical_cell_length_1d,
)
from .scaling import scale_cdf, scale_density, scale_params, scale_sample
from .stats import (
    DensityEstimate,
    EmpiricalDistribution,
    cv_bandwidth,
    ecdf,
    face_pmf,
    kde_epanechnikov,
    moments,
)

__all__ = [
    "__version__",
    "CellConstructionError",
    "CellMeasures",
    "ContractViolationError",
    "ConvexPolytope",
    "DegenerateSiteError",
    "HalfSpace",
    "bisector",
    "clip",
    "initial_cell",
    "measure",
    "validate_cell",
    "FeatureSample",
    "SimulationConfig",
    "sample_poisson_shell",
    "simulate_batch",
    "typical_cell",
    "typical_cell_length_1d",
    "DensityEstimate",
    "EmpiricalDistribution",
    "cv_bandwidth",
    "ecdf",
    "face_pmf",
    "kde_epanechnikov",
    "moments",
    "FitError",
    "GammaParams",
    "GenGammaParams",
    "LognormalParams",
    "fit_gamma",
    "fit_gengamma",
    "fit_lognormal",
    "gengamma_cdf",
    "gengamma_pdf",
    "sup_distance",
    "tv_distance",
    "compare_families",
    "scale_cdf",
    "scale_density",
    "scale_params",
    "scale_sample",
]
