"""Cubical homology, random cubical set models and Monte Carlo limit-theorem checks."""
from .cubes import (
    Chain,
    CubicalSet,
    ElementaryCube,
    Window,
    boundary,
    cubical_product,
    enumerate_cubes,
    faces_all,
    primary_faces,
    scalar_product,
    supercubes,
)
from .errors import (
    ClosureError,
    CubicalError,
    DegenerateCubeError,
    DimensionMismatchError,
    InvalidModelError,
    MissingValueError,
    NonProductModelError,
    OutOfRegionError,
    PlanError,
    PropertyViolation,
    TorsionAlarm,
)
from .filtration import (
    BettiCurve,
    Configuration,
    Filtration,
    LifetimeSum,
    PersistenceDiagram,
    betti_curve,
    betti_curves,
    birth_time,
    build_filtration,
    lifetime_sum_from_curve,
    lifetime_sum_from_diagram,
    persistence_diagram,
)
from .homology import BettiVector, betti, build_boundary_matrix, compare_fields, euler_characteristic
from .models import (
    ModelSpec,
    SampleSeed,
    marginal_cdf,
    resample_origin,
    sample_configuration,
    translate_configuration,
)

__version__ = "0.1.0"
