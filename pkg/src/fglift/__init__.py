"""Factor graph completion and lifting.

Complete factor graphs whose factors have known structure but missing
potentials by transferring tables from structurally indistinguishable
known factors, then group the result into a lifted representation by
colour passing, and check the completion by exact inference.
"""
from .colours import (
    Colouring,
    FactorClass,
    Grouping,
    colour_passing_step,
    grounded_equivalence_check,
    grouping_from_colouring,
    grouping_report,
    initial_colouring,
    refine_to_fixpoint,
    run_colour_passing,
)
from .errors import (
    DomainMismatch,
    FactorGraphError,
    GenerationInfeasible,
    InconsistentEvidence,
    InfiniteDivergence,
    ParseError,
    StateSpaceTooLarge,
    UnknownFactorPresent,
    UnknownNode,
)
from .inference import Marginal, compression_ratio, kld, variable_elimination
from .model import (
    BOOL_RANGE,
    BackgroundKnowledge,
    Factor,
    FactorGraph,
    RandomVariable,
    RangeSpec,
    Violation,
    joint_distribution,
    state_space_size,
    validate,
    validate_background,
)
from .modelio import (
    parse_background,
    parse_evidence,
    parse_model,
    parse_queries,
    serialize_background,
    serialize_evidence,
    serialize_model,
    serialize_queries,
)
from .synth import (
    ExperimentConfig,
    GeneratedInstance,
    InstanceResult,
    QueryResult,
    generate_instance,
    run_experiment,
)
from .tables import PotentialTable, alignment_axes, canonical_info, canonical_table, tables_equal
from .transfer import (
    CandidateSet,
    CompletionResult,
    Selection,
    TransferReport,
    candidate_sets,
    complete_and_lift,
    indistinguishable,
    possibly_identical,
    select_transfer_class,
    transfer_report_text,
    two_step_neighbourhood,
)

__version__ = "0.1.0"

__all__ = [
    "BOOL_RANGE",
    "BackgroundKnowledge",
    "CandidateSet",
    "Colouring",
    "CompletionResult",
    "DomainMismatch",
    "ExperimentConfig",
    "Factor",
    "FactorClass",
    "FactorGraph",
    "FactorGraphError",
    "GeneratedInstance",
    "GenerationInfeasible",
    "Grouping",
    "InconsistentEvidence",
    "InfiniteDivergence",
    "InstanceResult",
    "Marginal",
    "ParseError",
    "PotentialTable",
    "QueryResult",
    "RandomVariable",
    "RangeSpec",
    "Selection",
    "StateSpaceTooLarge",
    "TransferReport",
    "UnknownFactorPresent",
    "UnknownNode",
    "Violation",
    "alignment_axes",
    "candidate_sets",
    "canonical_info",
    "canonical_table",
    "colour_passing_step",
    "complete_and_lift",
    "compression_ratio",
    "generate_instance",
    "grounded_equivalence_check",
    "grouping_from_colouring",
    "grouping_report",
    "indistinguishable",
    "initial_colouring",
    "joint_distribution",
    "kld",
    "parse_background",
    "parse_evidence",
    "parse_model",
    "parse_queries",
    "possibly_identical",
    "refine_to_fixpoint",
    "run_colour_passing",
    "run_experiment",
    "select_transfer_class",
    "serialize_background",
    "serialize_evidence",
    "serialize_model",
    "serialize_queries",
    "state_space_size",
    "tables_equal",
    "transfer_report_text",
    "two_step_neighbourhood",
    "validate",
    "validate_background",
    "variable_elimination",
]
