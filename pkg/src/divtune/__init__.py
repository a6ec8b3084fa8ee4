"""Replication-aware divergent index-design tuning."""

from .model import (
    CandidateIndex,
    ConstraintSet,
    CostBreakdown,
    DivergentDesign,
    FailureLoadSkewConstraint,
    IndexPropertyLimit,
    LoadSkewConstraint,
    MaterializationConstraint,
    QueryStatement,
    RoutingFunctions,
    SlotOption,
    SolverControls,
    Table,
    TemplatePlan,
    TuningRequest,
    UpdateCostBound,
    UpdateStatement,
    Workload,
    canonical_json,
    dump_design,
    dump_workload,
    load_design,
    load_workload,
    validate_design,
    validate_request,
)
from .bip import BinaryProgram, build_program, decode, embed_design, to_lp_string
from .solver import Solution, refine, solve
from .recommender import ParetoPoint, TuneResult, pareto, tune
from .baselines import divergent_heuristic, uniform_design
from .routing import complete_failure_routing, route_by_similarity, route_top_m

__version__ = "0.1.0"

__all__ = [
    "BinaryProgram",
    "CandidateIndex",
    "ConstraintSet",
    "CostBreakdown",
    "DivergentDesign",
    "FailureLoadSkewConstraint",
    "IndexPropertyLimit",
    "LoadSkewConstraint",
    "MaterializationConstraint",
    "ParetoPoint",
    "QueryStatement",
    "RoutingFunctions",
    "SlotOption",
    "Solution",
    "SolverControls",
    "Table",
    "TemplatePlan",
    "TuneResult",
    "TuningRequest",
    "UpdateCostBound",
    "UpdateStatement",
    "Workload",
    "build_program",
    "canonical_json",
    "complete_failure_routing",
    "decode",
    "divergent_heuristic",
    "dump_design",
    "dump_workload",
    "embed_design",
    "load_design",
    "load_workload",
    "pareto",
    "refine",
    "route_by_similarity",
    "route_top_m",
    "solve",
    "to_lp_string",
    "tune",
    "uniform_design",
    "validate_design",
    "validate_request",
    "__version__",
]
