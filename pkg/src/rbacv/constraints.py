"""The fourteen constraint families, their parameters, and polarity.

Each family is a frozen dataclass; a constraint file line parses to exactly
one instance. Polarity records how a prover outcome on the family's formula
maps back to constraint status: for a positive-form family a proof means the
constraint holds, for a negative-form family a proof exhibits a violation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

from .model import Policy, UndeclaredIdentifier


class Polarity(enum.Enum):
    POSITIVE_FORM = "positive"   # formula provable <=> constraint satisfied
    NEGATIVE_FORM = "negative"   # formula provable <=> constraint violated


class Status(enum.Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"


@dataclass(frozen=True)
class Prerequisite:
    """Every holder of ``trigger_role`` must also hold ``required_role``."""
    trigger_role: str
    required_role: str
    keyword = "prerequisite"


@dataclass(frozen=True)
class SodRoles:
    """No user may hold two distinct roles from the conflict set."""
    conflict_set: frozenset[str]
    keyword = "sod-roles"


@dataclass(frozen=True)
class RoleCoverage:
    """Every role has at least one user."""
    keyword = "role-coverage"


@dataclass(frozen=True)
class UserCoverage:
    """Every user is assigned at least one role."""
    keyword = "user-coverage"


@dataclass(frozen=True)
class ExclusiveChoice:
    """Holders of a trigger-set role may hold at most one choice-set role."""
    trigger_set: frozenset[str]
    choice_set: frozenset[str]
    keyword = "exclusive"


@dataclass(frozen=True)
class ForbiddenAssignment:
    """No user in ``user_set`` may hold any role in ``role_set``."""
    user_set: frozenset[str]
    role_set: frozenset[str]
    keyword = "forbid"


@dataclass(frozen=True)
class RecordCoverage:
    """Every record is assigned to at least one role."""
    keyword = "record-coverage"


@dataclass(frozen=True)
class PermissionCoverage:
    """Every role is given permission to at least one record."""
    keyword = "permission-coverage"


@dataclass(frozen=True)
class MinRolesPerRecord:
    """At least ``k`` roles hold permission on ``record``."""
    record: str
    k: int
    keyword = "min-roles"


@dataclass(frozen=True)
class UniqueRolePerRecord:
    """``record`` is assigned to exactly one role."""
    record: str
    keyword = "unique-role"


@dataclass(frozen=True)
class SodRecords:
    """No role may hold permission on two distinct conflict-set records."""
    conflict_set: frozenset[str]
    keyword = "sod-records"


@dataclass(frozen=True)
class AccessCoverage:
    """Every user can access at least one record."""
    keyword = "access-coverage"


@dataclass(frozen=True)
class MinUsersPerRecord:
    """At least ``k`` users can access ``record``."""
    record: str
    k: int
    keyword = "min-users"


@dataclass(frozen=True)
class AccessDiversity:
    """At least ``k_users`` users spanning ``m_roles`` roles access ``record``."""
    record: str
    k_users: int
    m_roles: int
    keyword = "diversity"


ConstraintSpec = Union[
    Prerequisite, SodRoles, RoleCoverage, UserCoverage, ExclusiveChoice,
    ForbiddenAssignment, RecordCoverage, PermissionCoverage, MinRolesPerRecord,
    UniqueRolePerRecord, SodRecords, AccessCoverage, MinUsersPerRecord,
    AccessDiversity,
]

_NEGATIVE_FAMILIES = (SodRoles, ExclusiveChoice, ForbiddenAssignment,
                      SodRecords, UniqueRolePerRecord)


class InvalidConstraint(ValueError):
    """Constraint parameters violate the family's invariants."""


def polarity_of(c: ConstraintSpec) -> Polarity:
    """Polarity is a function of the family alone, never of the parameters."""
    if isinstance(c, _NEGATIVE_FAMILIES):
        return Polarity.NEGATIVE_FORM
    return Polarity.POSITIVE_FORM


@dataclass(frozen=True)
class VerificationResult:
    """Outcome of deciding one constraint over one closed policy.

    ``witnesses`` carries the tuples that demonstrate a violation (the
    conflicting assignments for negative-form families, the uncovered
    elements or short-counted targets for coverage and threshold families).
    It is empty whenever the constraint is satisfied. By default each
    offending left-hand element contributes its lexicographically first
    violating tuple; ``violation_count`` is the total number of violating
    tuples, which exhaustive enumeration would return instead.
    """

    constraint: ConstraintSpec
    status: Status
    witnesses: tuple[tuple[str, ...], ...]
    explanation: str
    violation_count: int = 0

    @property
    def satisfied(self) -> bool:
        return self.status is Status.SATISFIED


def validate_constraint(c: ConstraintSpec, p: Policy) -> ConstraintSpec:
    """Check parameter invariants against a policy's declarations."""
    def need(names, universe, what):
        for name in sorted(names):
            if name not in universe:
                raise UndeclaredIdentifier(name, type(c).keyword, what)

    if isinstance(c, Prerequisite):
        need([c.trigger_role, c.required_role], p.roles, "role")
    elif isinstance(c, SodRoles):
        if len(c.conflict_set) < 2:
            raise InvalidConstraint("sod-roles needs a conflict set of at least 2 roles")
        need(c.conflict_set, p.roles, "role")
    elif isinstance(c, ExclusiveChoice):
        if not c.trigger_set:
            raise InvalidConstraint("exclusive needs a non-empty trigger set")
        if len(c.choice_set) < 2:
            raise InvalidConstraint("exclusive needs a choice set of at least 2 roles")
        need(c.trigger_set | c.choice_set, p.roles, "role")
    elif isinstance(c, ForbiddenAssignment):
        if not c.user_set or not c.role_set:
            raise InvalidConstraint("forbid needs non-empty user and role sets")
        need(c.user_set, p.users, "user")
        need(c.role_set, p.roles, "role")
    elif isinstance(c, MinRolesPerRecord):
        if c.k < 1:
            raise InvalidConstraint("min-roles threshold must be at least 1")
        need([c.record], p.records, "record")
    elif isinstance(c, UniqueRolePerRecord):
        need([c.record], p.records, "record")
    elif isinstance(c, SodRecords):
        if len(c.conflict_set) < 2:
            raise InvalidConstraint("sod-records needs a conflict set of at least 2 records")
        need(c.conflict_set, p.records, "record")
    elif isinstance(c, MinUsersPerRecord):
        if c.k < 1:
            raise InvalidConstraint("min-users threshold must be at least 1")
        need([c.record], p.records, "record")
    elif isinstance(c, AccessDiversity):
        if c.k_users < 1 or c.m_roles < 1:
            raise InvalidConstraint("diversity thresholds must be at least 1")
        if c.m_roles > c.k_users:
            raise InvalidConstraint("diversity role threshold cannot exceed the user threshold")
        need([c.record], p.records, "record")
    return c


def _set_text(names: frozenset[str]) -> str:
    return "{" + ", ".join(sorted(names)) + "}"


def describe(c: ConstraintSpec) -> str:
    """One-sentence English rendering for reports."""
    if isinstance(c, Prerequisite):
        return (f"every user holding role {c.trigger_role} must also hold "
                f"role {c.required_role}")
    if isinstance(c, SodRoles):
        return f"no user may hold two of the conflicting roles {_set_text(c.conflict_set)}"
    if isinstance(c, RoleCoverage):
        return "every role has at least one user"
    if isinstance(c, UserCoverage):
        return "every user is assigned at least one role"
    if isinstance(c, ExclusiveChoice):
        return (f"no user holding a role in {_set_text(c.trigger_set)} may hold "
                f"more than one role in {_set_text(c.choice_set)}")
    if isinstance(c, ForbiddenAssignment):
        return (f"no user in {_set_text(c.user_set)} may hold a role "
                f"in {_set_text(c.role_set)}")
    if isinstance(c, RecordCoverage):
        return "every record is assigned to at least one role"
    if isinstance(c, PermissionCoverage):
        return "every role is given permission to at least one record"
    if isinstance(c, MinRolesPerRecord):
        return f"at least {c.k} roles hold permission on {c.record}"
    if isinstance(c, UniqueRolePerRecord):
        return f"record {c.record} is assigned to exactly one role"
    if isinstance(c, SodRecords):
        return f"no role may hold permission on two of the conflicting records {_set_text(c.conflict_set)}"
    if isinstance(c, AccessCoverage):
        return "every user can access at least one record"
    if isinstance(c, MinUsersPerRecord):
        return f"at least {c.k} users can access {c.record}"
    if isinstance(c, AccessDiversity):
        return (f"at least {c.k_users} users spanning at least {c.m_roles} roles "
                f"can access {c.record}")
    raise TypeError(f"not a constraint: {c!r}")


def _brace_list(names: frozenset[str]) -> str:
    return "{ " + " ".join(sorted(names)) + " }"


def render(c: ConstraintSpec) -> str:
    """Canonical constraint-file line for the instance."""
    if isinstance(c, Prerequisite):
        return f"prerequisite {c.trigger_role} requires {c.required_role}"
    if isinstance(c, SodRoles):
        return f"sod-roles {_brace_list(c.conflict_set)}"
    if isinstance(c, RoleCoverage):
        return "role-coverage"
    if isinstance(c, UserCoverage):
        return "user-coverage"
    if isinstance(c, ExclusiveChoice):
        return (f"exclusive {_brace_list(c.trigger_set)} "
                f"choose-one-of {_brace_list(c.choice_set)}")
    if isinstance(c, ForbiddenAssignment):
        return f"forbid {_brace_list(c.user_set)} from {_brace_list(c.role_set)}"
    if isinstance(c, RecordCoverage):
        return "record-coverage"
    if isinstance(c, PermissionCoverage):
        return "permission-coverage"
    if isinstance(c, MinRolesPerRecord):
        return f"min-roles {c.record} {c.k}"
    if isinstance(c, UniqueRolePerRecord):
        return f"unique-role {c.record}"
    if isinstance(c, SodRecords):
        return f"sod-records {_brace_list(c.conflict_set)}"
    if isinstance(c, AccessCoverage):
        return "access-coverage"
    if isinstance(c, MinUsersPerRecord):
        return f"min-users {c.record} {c.k}"
    if isinstance(c, AccessDiversity):
        return f"diversity {c.record} {c.k_users} {c.m_roles}"
    raise TypeError(f"not a constraint: {c!r}")
