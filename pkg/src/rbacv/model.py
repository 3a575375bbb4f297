"""Relational RBAC policy model.

A policy declares three finite universes (users, roles, records) and three
relations over them: user-to-role assignments, role-to-role implications
("every holder of the first role also holds the second"), and role-to-record
permissions. Closing the assignment relation under implications and joining
it with permissions yields the derived user-to-record access relation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class PolicyError(ValueError):
    """Base class for policy validation failures."""


class UndeclaredIdentifier(PolicyError):
    """A relation references a name missing from its declaration class."""

    def __init__(self, name: str, relation: str, expected_class: str):
        self.name = name
        self.relation = relation
        self.expected_class = expected_class
        super().__init__(f"{relation} references {name!r}, which is not a declared {expected_class}")


class DuplicateDeclaration(PolicyError):
    """A name is declared twice, either in one class or across classes."""

    def __init__(self, name: str, classes: str):
        self.name = name
        super().__init__(f"{name!r} is declared more than once ({classes})")


class SelfImplication(PolicyError):
    """An implication edge from a role to itself."""

    def __init__(self, role: str):
        self.role = role
        super().__init__(f"role {role!r} implies itself")


class MalformedIdentifier(PolicyError):
    """A declared name is not a valid identifier token."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"{name!r} is not a valid identifier (letters, digits, underscore; "
                         "must not start with a digit)")


@dataclass(frozen=True)
class Policy:
    """Declared universes plus the three base relations.

    Instances are plain data; nothing is checked at construction time.
    Run :func:`validate_policy` before handing a policy to the rest of
    the library.
    """

    users: frozenset[str] = frozenset()
    roles: frozenset[str] = frozenset()
    records: frozenset[str] = frozenset()
    assignments: frozenset[tuple[str, str]] = frozenset()
    implications: frozenset[tuple[str, str]] = frozenset()
    permissions: frozenset[tuple[str, str]] = frozenset()


@dataclass(frozen=True)
class ClosedPolicy:
    """A policy with assignments closed under implications and access derived.

    ``closed_assignments`` is the least superset of ``base.assignments``
    closed under the implication edges; ``access`` is exactly the join of
    ``closed_assignments`` with ``base.permissions``. Values are immutable;
    re-closing is a no-op.
    """

    base: Policy
    closed_assignments: frozenset[tuple[str, str]]
    access: frozenset[tuple[str, str]]

    def roles_of(self, user: str) -> frozenset[str]:
        return frozenset(r for (u, r) in self.closed_assignments if u == user)

    def records_of(self, user: str) -> frozenset[str]:
        return frozenset(o for (u, o) in self.access if u == user)


def make_policy(users=(), roles=(), records=(), assignments=(), implications=(),
                permissions=()) -> Policy:
    """Build a Policy from any iterables (convenience constructor)."""
    return Policy(
        users=frozenset(users),
        roles=frozenset(roles),
        records=frozenset(records),
        assignments=frozenset(tuple(p) for p in assignments),
        implications=frozenset(tuple(p) for p in implications),
        permissions=frozenset(tuple(p) for p in permissions),
    )


def validate_policy(raw: Policy) -> Policy:
    """Check every Policy invariant, returning the policy unchanged on success.

    Raises MalformedIdentifier, DuplicateDeclaration, UndeclaredIdentifier,
    or SelfImplication; the message names the offending token and relation.
    """
    for name in sorted(raw.users | raw.roles | raw.records):
        if not IDENTIFIER_RE.match(name):
            raise MalformedIdentifier(name)

    # Names are unique across declaration classes as well as within them:
    # Prover9 emission turns every name into a constant, so a user and a
    # role sharing a name would silently denote one object.
    for name in sorted(raw.users & raw.roles):
        raise DuplicateDeclaration(name, "users and roles")
    for name in sorted(raw.users & raw.records):
        raise DuplicateDeclaration(name, "users and records")
    for name in sorted(raw.roles & raw.records):
        raise DuplicateDeclaration(name, "roles and records")

    for user, role in sorted(raw.assignments):
        if user not in raw.users:
            raise UndeclaredIdentifier(user, "assign", "user")
        if role not in raw.roles:
            raise UndeclaredIdentifier(role, "assign", "role")
    for first, second in sorted(raw.implications):
        if first not in raw.roles:
            raise UndeclaredIdentifier(first, "implies", "role")
        if second not in raw.roles:
            raise UndeclaredIdentifier(second, "implies", "role")
        if first == second:
            raise SelfImplication(first)
    for role, record in sorted(raw.permissions):
        if role not in raw.roles:
            raise UndeclaredIdentifier(role, "permit", "role")
        if record not in raw.records:
            raise UndeclaredIdentifier(record, "permit", "record")
    return raw


def close_roles(p: Policy) -> ClosedPolicy:
    """Close assignments under implications and derive the access relation.

    Closure is the least fixpoint: a user holds role r exactly when some
    implication path (length >= 0) leads from one of their directly
    assigned roles to r. Implication cycles are fine; the fixpoint is
    still well defined. Access is materialized eagerly as the join
    { (u, o) | exists r: (u, r) closed and (r, o) permitted }.
    """
    reachable: dict[str, frozenset[str]] = {
        role: _reachable_from(role, p.implications) for role in p.roles
    }
    closed = frozenset(
        (user, target)
        for (user, role) in p.assignments
        for target in reachable[role]
    )
    by_role: dict[str, set[str]] = {}
    for role, record in p.permissions:
        by_role.setdefault(role, set()).add(record)
    access = frozenset(
        (user, record)
        for (user, role) in closed
        for record in by_role.get(role, ())
    )
    return ClosedPolicy(base=p, closed_assignments=closed, access=access)


def derive_access(p: ClosedPolicy) -> frozenset[tuple[str, str]]:
    """Return the user-to-record access relation of a closed policy."""
    return p.access


def _reachable_from(role: str, implications: frozenset[tuple[str, str]]) -> frozenset[str]:
    seen = {role}
    frontier = [role]
    while frontier:
        current = frontier.pop()
        for first, second in implications:
            if first == current and second not in seen:
                seen.add(second)
                frontier.append(second)
    return frozenset(seen)
