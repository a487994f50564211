"""Sequential diagnosis of propositional knowledge bases.

The package takes a diagnosis problem instance (a knowledge base, background
theory, and positive/negative test cases), computes its leading minimal
diagnoses, and drives an interactive loop that asks the most informative
true/false questions until one diagnosis remains.  Query computation runs in
four phases and needs no reasoner calls for the first two.
"""

from .diag import Diagnosis, leading_diagnoses, minimal_conflict
from .dpi import (
    DPI,
    AdmissibilityError,
    DpiFormatError,
    QPartition,
    apply_answer,
    load_dpi,
    make_dpi,
    parse_dpi,
    q_partition_of,
)
from .enrich import enrich_query
from .logic import Formula, ParseError, parse_formula
from .optimize import optimize_query
from .qpsearch import Measure, enumerate_cqps, find_q_partition
from .queryselect import Criterion, select_query_for_q_partition
from .session import (
    Session,
    SessionConfig,
    SessionError,
    SessionFinished,
    SimulatedOracle,
    run_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "DPI",
    "AdmissibilityError",
    "Criterion",
    "Diagnosis",
    "DpiFormatError",
    "Formula",
    "Measure",
    "ParseError",
    "QPartition",
    "Session",
    "SessionConfig",
    "SessionError",
    "SessionFinished",
    "SimulatedOracle",
    "apply_answer",
    "enrich_query",
    "enumerate_cqps",
    "find_q_partition",
    "leading_diagnoses",
    "load_dpi",
    "make_dpi",
    "minimal_conflict",
    "optimize_query",
    "parse_dpi",
    "parse_formula",
    "q_partition_of",
    "run_simulation",
    "select_query_for_q_partition",
    "__version__",
]
