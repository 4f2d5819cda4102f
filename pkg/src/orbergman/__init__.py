"""Weighted Bergman densities on one-dimensional Kahler orbifold models."""

__version__ = "0.1.0"

from .weights import (  # noqa: F401
    WeightSystem,
    check_admissible,
    convolve,
    residue_moment,
    root_order_at_one,
    solve_weights,
)
from .geometry import (  # noqa: F401
    BumpSpec,
    OrbifoldModel,
    PointRef,
    distance_to_singular,
    make_football,
    make_projective_line,
    make_teardrop,
    model_from_descriptor,
    perturb_metric,
    scalar_curvature,
    volume_ratio_and_laplacian,
)
from .bergman import (  # noqa: F401
    KernelTable,
    SectionBasis,
    density,
    dimension,
    quotient_oracle_density,
    section_basis,
    weighted_density,
)
from .asymptotics import (  # noqa: F401
    ExpansionFit,
    SingularProfile,
    decay_slope,
    derivative_remainder,
    fit_expansion,
    oscillation_spectrum,
    predicted_b,
    singular_model,
    sup_remainder,
    w_diagnostic,
)
from .errors import (  # noqa: F401
    ConfigInvalid,
    DegenerateData,
    FiberActionNotFaithful,
    IllConditioned,
    Infeasible,
    MetricNotPositive,
    MismatchedOrder,
    OrbergmanError,
    QuadratureNotConverged,
)
