"""Role-based access-control policy verification.

Parse policies and constraints, close role implications, decide each
constraint with concrete witnesses, and emit Prover9/Mace4 input files.
"""

from .constraints import (
    AccessCoverage, AccessDiversity, ConstraintSpec, ExclusiveChoice,
    ForbiddenAssignment, InvalidConstraint, MinRolesPerRecord,
    MinUsersPerRecord, PermissionCoverage, Polarity, Prerequisite,
    RecordCoverage, RoleCoverage, SodRecords, SodRoles, Status,
    UniqueRolePerRecord, UserCoverage, VerificationResult, describe,
    polarity_of, render,
)
from .evaluator import check, constraint_to_formula, status_from_truth
from .logic import IllSortedFormula, oracle_eval
from .model import (
    ClosedPolicy, DuplicateDeclaration, MalformedIdentifier, Policy,
    PolicyError, SelfImplication, UndeclaredIdentifier, close_roles,
    derive_access, make_policy, validate_policy,
)
from .parser import (
    BadThreshold, Document, SourceError, UnknownConstraintKeyword,
    parse_constraints, parse_document, parse_policy, print_canonical,
    print_canonical_constraints, print_canonical_policy,
)
from .prover import (
    BinaryNotFound, EmissionMode, LaunchFailure, OutcomeKind, ProverEmission,
    ProverOutcome, RunnerConfig, emit_assumptions, emit_goal,
    interpret_output, run_external, verify_emission,
)

__version__ = "0.1.0"

__all__ = [
    "AccessCoverage", "AccessDiversity", "BadThreshold", "BinaryNotFound",
    "ClosedPolicy", "ConstraintSpec", "Document", "DuplicateDeclaration",
    "EmissionMode", "ExclusiveChoice", "ForbiddenAssignment",
    "IllSortedFormula", "InvalidConstraint", "LaunchFailure",
    "MalformedIdentifier", "MinRolesPerRecord", "MinUsersPerRecord",
    "OutcomeKind", "PermissionCoverage", "Polarity", "Policy", "PolicyError",
    "Prerequisite",
    "ProverEmission", "ProverOutcome", "RecordCoverage", "RoleCoverage",
    "RunnerConfig", "SelfImplication", "SodRecords", "SodRoles",
    "SourceError", "Status", "UndeclaredIdentifier", "UniqueRolePerRecord",
    "UnknownConstraintKeyword", "UserCoverage", "VerificationResult",
    "check", "close_roles", "constraint_to_formula", "derive_access",
    "describe", "emit_assumptions", "emit_goal", "interpret_output",
    "make_policy", "oracle_eval", "parse_constraints", "parse_document",
    "parse_policy", "polarity_of", "print_canonical",
    "print_canonical_constraints", "print_canonical_policy", "render",
    "run_external", "status_from_truth", "validate_policy",
    "verify_emission",
]
