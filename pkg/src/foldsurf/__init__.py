"""Closed surface subgroups in random graphs of free groups.

The package builds folded surface pieces over chains in a free group,
glues them along matched boundaries, and certifies the result by
malnormality and rigidity checks on the underlying graphs.
"""

from ._backend import available_backends, backend_name
from .builder import (
    BuilderConfig,
    Chain,
    Pairing,
    build_by_enumeration,
    build_f_folded,
    default_target,
    enumerate_pairings,
    mark_branch_positions,
    pairing_to_fatgraph,
    quotient_vertices,
    tag_f_vertices,
)
from .errors import *  # noqa: F401,F403
from .errors import __all__ as _errors_all
from .fatgraph import (
    ClosedSurfaceCertificate,
    Fatgraph,
    SurfacePiece,
    check_boundary_in_Z,
    euler_and_genus,
    glue,
    is_f_folded,
    locate_f_vertices,
    make_surface_piece,
    trace_boundary,
    verify_certificate,
    verify_incompressible,
    verify_piece,
)
from .model import (
    EXPERIMENT_COLUMNS,
    ExperimentGrid,
    ExperimentTable,
    GraphOfGroupsSpec,
    RandomHomSpec,
    build_certificate,
    image_core,
    run_experiment,
    run_trial,
    sample_homomorphism,
    sample_splitting,
    small_cancellation_ratio,
)
from .stallings import (
    CoreGraph,
    LiftReport,
    MalnormalityWitness,
    ProductGraph,
    canonical_form,
    chain_graph,
    core,
    cycle_graph,
    disjoint_union,
    fiber_product,
    fold,
    is_folded,
    is_fully_rigid,
    is_isomorphic,
    is_malnormal_family,
    lifts_of_loop,
    rose_of_words,
    transition_map,
)
from .words import (
    Alphabet,
    CyclicWord,
    PseudorandomParams,
    PseudorandomReport,
    SubwordCensus,
    Word,
    abelianize,
    census,
    cyclic_reduce,
    free_reduce,
    is_homologically_trivial,
    is_pseudorandom,
    num_reduced_words,
    sample_reduced_word,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "Word",
    "CyclicWord",
    "CoreGraph",
    "ProductGraph",
    "Fatgraph",
    "SurfacePiece",
    "ClosedSurfaceCertificate",
    "LiftReport",
    "MalnormalityWitness",
    "PseudorandomParams",
    "PseudorandomReport",
    "SubwordCensus",
    "Chain",
    "Pairing",
    "BuilderConfig",
    "RandomHomSpec",
    "GraphOfGroupsSpec",
    "ExperimentGrid",
    "ExperimentTable",
    "EXPERIMENT_COLUMNS",
    "abelianize",
    "build_by_enumeration",
    "build_certificate",
    "build_f_folded",
    "check_boundary_in_Z",
    "euler_and_genus",
    "glue",
    "is_f_folded",
    "locate_f_vertices",
    "make_surface_piece",
    "trace_boundary",
    "verify_certificate",
    "verify_incompressible",
    "verify_piece",
    "available_backends",
    "backend_name",
    "canonical_form",
    "census",
    "chain_graph",
    "core",
    "cycle_graph",
    "cyclic_reduce",
    "default_target",
    "disjoint_union",
    "enumerate_pairings",
    "fiber_product",
    "fold",
    "free_reduce",
    "image_core",
    "is_folded",
    "is_fully_rigid",
    "is_homologically_trivial",
    "is_isomorphic",
    "is_malnormal_family",
    "is_pseudorandom",
    "lifts_of_loop",
    "mark_branch_positions",
    "num_reduced_words",
    "pairing_to_fatgraph",
    "quotient_vertices",
    "rose_of_words",
    "run_experiment",
    "run_trial",
    "sample_homomorphism",
    "sample_reduced_word",
    "sample_splitting",
    "small_cancellation_ratio",
    "tag_f_vertices",
    "transition_map",
    "__version__",
    *_errors_all,
]
