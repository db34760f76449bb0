"""Conic relaxations of QCQPs: builders, solver, completion and dual recovery."""

from .build import (
    build_dual_fsocp,
    build_dual_ssocp,
    build_fsdp,
    build_fsocp,
    build_ssdp,
    build_ssocp,
    extract_dual_parts,
    extract_entries,
)
from .chordal import (
    ChordalExtension,
    CliqueSet,
    Graph,
    OverlapSet,
    chordal_extension,
    is_chordal,
    maximal_cliques,
    overlap_set,
)
from .completion import (
    PartialMatrix,
    Range,
    det_T,
    feasible_range,
    in_T_bar,
    in_T_plus,
    is_psd_completable,
    log_det_T,
    sdp_complete,
    zero_fill,
)
from .generators import LatticeSpec, ZeroDiagSpec, gen_lattice, gen_zero_diag
from .model import (
    AggregatePattern,
    HomogenizedData,
    QcqpInstance,
    aggregate_pattern,
    homogenize,
    load_instance,
    save_instance,
)
from .program import (
    ConicProgram,
    StandardForm,
    export_sdpa,
    program_objective,
    to_standard_form,
    variable_values,
)
from .recovery import DualSolution, dual_residual, full_to_sparse, sparse_to_full
from .solver import Solution, SolverConfig, solve
from .sparsemat import SparseSymMatrix

__version__ = "0.1.0"
