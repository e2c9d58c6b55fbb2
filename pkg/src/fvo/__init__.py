"""Virtual-orbital fragmentation: many-body expansion of correlation energies
over partitions of the virtual space, with qubit-resource accounting."""

from .errors import (
    ConfigError,
    ConsistencyError,
    ConvergenceError,
    DegenerateGapError,
    DependencyError,
    FVOError,
    ParseError,
    ResourceLimitError,
    SolverError,
    UsageError,
)
from .fragmentation import (
    OrbitalCentroids,
    OrbitalPartition,
    SubsetKey,
    partition_blocks,
    partition_by_centroid,
    partition_by_energy,
    partition_explicit,
    read_sidecar,
    subset_union,
)
from .integrals import MOIntegrals, parse_fcidump, read_fcidump, write_fcidump
from .mbe import (
    KCAL_PER_HARTREE,
    MBEReport,
    SpatialExpansionInput,
    SpatialFragmentRun,
    delta_term,
    expand,
    hierarchical_expand,
    mbe_expand,
    spatial_expand,
)
from .reference import OccupiedSpace, fock_diagonal, hf_reference_energy
from .resources import ansatz_estimate, budget_for_plan, qubit_count
from .solvers import CorrelationResult, SubspaceSpec, fci_energy, mp2_energy, solve
from . import vqe  # noqa: F401  registers the "vqe" solver

__version__ = "0.1.0"
