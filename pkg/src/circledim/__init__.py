"""Multicritical circle maps: dynamical partitions, invariant measures,
and Hausdorff dimension estimates."""

from .cf import (
    ContinuedFraction,
    DiophantineProfile,
    convergents,
    diophantine_profile,
    generate_quotients,
    golden_cf,
    periodic_cf,
    theorem1_bounds,
)
from .errors import (
    AmbiguousComparisonError,
    CircleDimError,
    DomainError,
    GeometryError,
    InvalidFamilyError,
    InvalidInputError,
    PrecisionError,
    TuningError,
)
from .maps import (
    MapSpec,
    derivatives,
    eval_lift,
    iterate_orbit,
    make_map,
    schwarzian,
    validate_map,
)
from .measure import (
    arc_measure,
    atom_measure,
    build_cover,
    cover_report,
    hausdorff_content_sum,
    local_dimension_samples,
    signature,
    singularity_certificate,
)
from .partition import (
    BridgeDecomposition,
    DynamicalPartition,
    PartitionHierarchy,
    bridge_decomposition,
    build_partition,
    refine_check,
)
from .rotation import (
    RotationReading,
    birkhoff_estimate,
    closest_return_quotients,
    tune_parameter,
)
from .surd import QuadraticIrrational, golden_mean

__version__ = "0.1.0"
