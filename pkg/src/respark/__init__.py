"""Spectral sparsification of weighted graphs over edge streams.

The pipeline: effective resistances give per-edge sampling probabilities,
an incremental resparsification step maintains N weighted copies per kept
edge as blocks arrive, and the verification instruments measure how far
the result sits from the reference projection. A seeded experiment
harness reruns the whole construction under many tape seeds and reports
event rates with exact binomial intervals.
"""

from .graph import (
    Edge,
    GraphConnectivityError,
    ProjectionContext,
    PseudoinverseFactors,
    WeightedGraph,
    build_laplacian,
    component_count,
    is_connected,
    lambda_max_bound,
    projection_context,
    projection_matrix,
    pseudo_factorize,
    read_edge_list,
    write_edge_list,
)
from .harness import (
    ExperimentReport,
    GeneratorSpec,
    clopper_pearson,
    emit_report,
    generate,
    load_report_json,
    read_report_rows,
    run_experiment,
    tree_first_order,
)
from .resistance import (
    AccuracyModel,
    ResistanceEstimate,
    cg_resistances,
    exact_resistance,
    exact_resistances,
    inject_alpha_noise,
    resistances_from_sparsifier,
)
from .sparsify import (
    ConfigError,
    EdgeCopy,
    Sparsifier,
    StreamConfig,
    StreamStepError,
    StreamTrace,
    compute_budget,
    indicator_stream,
    partition_stream,
    read_sparsifier,
    resparsify,
    single_edge_stream,
    stream_sparsify,
    write_sparsifier,
)
from .tape import RandomTape
from .verify import (
    DiagnosticsRecord,
    DominatingSample,
    count_event,
    dkw_epsilon,
    dominance_check,
    projection_error,
    quadratic_variation,
    read_diagnostics,
    sample_dominating_w0,
    sample_dominating_w0_batch,
    spectral_check,
    write_diagnostics,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyModel",
    "ConfigError",
    "DiagnosticsRecord",
    "DominatingSample",
    "Edge",
    "EdgeCopy",
    "ExperimentReport",
    "GeneratorSpec",
    "GraphConnectivityError",
    "ProjectionContext",
    "PseudoinverseFactors",
    "RandomTape",
    "ResistanceEstimate",
    "Sparsifier",
    "StreamConfig",
    "StreamStepError",
    "StreamTrace",
    "WeightedGraph",
    "build_laplacian",
    "cg_resistances",
    "clopper_pearson",
    "component_count",
    "compute_budget",
    "count_event",
    "dkw_epsilon",
    "dominance_check",
    "emit_report",
    "exact_resistance",
    "exact_resistances",
    "generate",
    "indicator_stream",
    "inject_alpha_noise",
    "is_connected",
    "lambda_max_bound",
    "load_report_json",
    "partition_stream",
    "projection_context",
    "projection_error",
    "projection_matrix",
    "pseudo_factorize",
    "quadratic_variation",
    "read_diagnostics",
    "read_edge_list",
    "read_report_rows",
    "read_sparsifier",
    "resistances_from_sparsifier",
    "resparsify",
    "run_experiment",
    "sample_dominating_w0",
    "sample_dominating_w0_batch",
    "single_edge_stream",
    "spectral_check",
    "stream_sparsify",
    "tree_first_order",
    "write_diagnostics",
    "write_edge_list",
    "write_sparsifier",
    "__version__",
]
