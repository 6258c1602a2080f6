"""Solver toolkit for parallel machine scheduling with precedence lags,
machine downtimes and calendar-limited cumulative resources."""

from .anneal import Move, SAParams, SolveResult, accept, apply_move, cooling_rate, sample_move, solve
from .construct import ActiveSet, construct, update_active
from .core import (
    CostBreakdown,
    Defect,
    Instance,
    Job,
    Machine,
    Placement,
    Resource,
    Schedule,
    SetupTable,
    SolutionRepr,
    instance_from_dict,
    instance_to_dict,
    precedence_order_ok,
    read_instance,
    read_schedule,
    validate_instance,
    write_instance,
    write_schedule,
)
from .decoder import (
    ResourceTimeline,
    ViolationReport,
    check_feasibility,
    compute_end,
    decode,
    earliest_start,
    evaluate,
)
from .exact import (
    OracleResult,
    PlaceholderJob,
    SearchLimits,
    build_placeholder_jobs,
    enumerate_representations,
    exhaustive_time_indexed,
    export_constraint_model,
)
from .gen import GenConfig, PRESETS, ReferenceSolution, generate, preset

__version__ = "0.1.0"
