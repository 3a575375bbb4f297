"""Closed-world decision procedures for every constraint family.

Each family check is a direct set computation over a closed policy; all of
them read the closed assignment relation, never the raw one, so implied
roles count everywhere. Checks always decide Satisfied or Violated, and a
violated result names concrete witnesses.

:func:`constraint_to_formula` renders any constraint instance as a sorted
first-order formula whose polarity-interpreted truth must coincide with the
family check; :mod:`rbacv.logic` evaluates those formulas exhaustively and
serves as the independent oracle for the whole module.
"""

from __future__ import annotations

import itertools

from .constraints import (
    AccessCoverage, AccessDiversity, ConstraintSpec, ExclusiveChoice,
    ForbiddenAssignment, MinRolesPerRecord, MinUsersPerRecord,
    PermissionCoverage, Polarity, Prerequisite, RecordCoverage, RoleCoverage,
    SodRecords, SodRoles, Status, UniqueRolePerRecord, UserCoverage,
    VerificationResult, polarity_of, validate_constraint,
)
from .logic import (
    And, Const, Eq, Exists, ForAll, Formula, HasAccessAtom, HasRoleAtom,
    Implies, MemberOf, Not, PermissionAtom, Sort, Var, conj, disj, exists_all,
)
from .model import ClosedPolicy

Witness = tuple[str, ...]

TOTALITY_SIDES = ("role-has-user", "user-has-role", "record-has-role", "role-has-record")


def check(p: ClosedPolicy, c: ConstraintSpec, exhaustive: bool = False) -> VerificationResult:
    """Decide one constraint over a closed policy.

    With ``exhaustive`` the result carries every violating tuple; by default
    each offending left-hand element contributes only its first tuple.
    Raises UndeclaredIdentifier or InvalidConstraint for parameters that do
    not fit the policy.
    """
    validate_constraint(c, p.base)
    if isinstance(c, Prerequisite):
        return check_prerequisite(p, c.trigger_role, c.required_role)
    if isinstance(c, SodRoles):
        return check_sod_roles(p, c.conflict_set, exhaustive)
    if isinstance(c, RoleCoverage):
        return check_totality(p, "role-has-user")
    if isinstance(c, UserCoverage):
        return check_totality(p, "user-has-role")
    if isinstance(c, ExclusiveChoice):
        return check_exclusive_choice(p, c.trigger_set, c.choice_set, exhaustive)
    if isinstance(c, ForbiddenAssignment):
        return check_forbidden_assignment(p, c.user_set, c.role_set, exhaustive)
    if isinstance(c, RecordCoverage):
        return check_totality(p, "record-has-role")
    if isinstance(c, PermissionCoverage):
        return check_totality(p, "role-has-record")
    if isinstance(c, MinRolesPerRecord):
        return check_min_roles_per_record(p, c.record, c.k)
    if isinstance(c, UniqueRolePerRecord):
        return check_unique_role_per_record(p, c.record, exhaustive)
    if isinstance(c, SodRecords):
        return check_sod_records(p, c.conflict_set, exhaustive)
    if isinstance(c, AccessCoverage):
        return check_access_coverage(p)
    if isinstance(c, MinUsersPerRecord):
        return check_min_users_per_record(p, c.record, c.k)
    if isinstance(c, AccessDiversity):
        return check_access_diversity(p, c.record, c.k_users, c.m_roles)
    raise TypeError(f"not a constraint: {c!r}")


def _satisfied(c: ConstraintSpec, explanation: str) -> VerificationResult:
    return VerificationResult(c, Status.SATISFIED, (), explanation)


def _violated(c: ConstraintSpec, witnesses: list[Witness], explanation: str,
              total: int | None = None) -> VerificationResult:
    return VerificationResult(c, Status.VIOLATED, tuple(witnesses), explanation,
                              violation_count=total if total is not None else len(witnesses))


def _condense(tuples: list[Witness], exhaustive: bool) -> tuple[list[Witness], int]:
    """Keep the first tuple per left element unless exhaustive output is asked."""
    tuples = sorted(tuples)
    if exhaustive:
        return tuples, len(tuples)
    kept: list[Witness] = []
    seen: set[str] = set()
    for t in tuples:
        if t[0] not in seen:
            seen.add(t[0])
            kept.append(t)
    return kept, len(tuples)


def _names(items) -> str:
    return ", ".join(items)


def check_prerequisite(p: ClosedPolicy, trigger: str, required: str) -> VerificationResult:
    c = Prerequisite(trigger, required)
    offenders = sorted(
        u for u in p.base.users
        if trigger in p.roles_of(u) and required not in p.roles_of(u)
    )
    if not offenders:
        return _satisfied(c, f"every holder of {trigger} also holds {required}")
    return _violated(c, [(u,) for u in offenders],
                     f"{_names(offenders)} holds {trigger} without {required}")


def check_sod_roles(p: ClosedPolicy, conflict_set: frozenset[str],
                    exhaustive: bool = False) -> VerificationResult:
    c = SodRoles(frozenset(conflict_set))
    clashes = [
        (u, r1, r2)
        for u in p.base.users
        for r1, r2 in itertools.combinations(sorted(conflict_set & p.roles_of(u)), 2)
    ]
    if not clashes:
        return _satisfied(c, "no user holds two of the conflicting roles "
                             f"{_names(sorted(conflict_set))}")
    witnesses, total = _condense(clashes, exhaustive)
    first = witnesses[0]
    return _violated(c, witnesses,
                     f"{first[0]} holds conflicting roles {first[1]} and {first[2]} "
                     f"({total} violating combination{'s' if total != 1 else ''})",
                     total)


def check_totality(p: ClosedPolicy, side: str) -> VerificationResult:
    """Coverage checks: every element of one sort appears in a relation.

    ``side`` picks the universal sort and the relation column, covering the
    role/user coverage pair over assignments and the record/role pair over
    permissions. Empty universal sides are vacuously satisfied.
    """
    if side == "role-has-user":
        c, universe = RoleCoverage(), p.base.roles
        covered = {r for (_, r) in p.closed_assignments}
        missing_text = "roles with no user"
    elif side == "user-has-role":
        c, universe = UserCoverage(), p.base.users
        covered = {u for (u, _) in p.closed_assignments}
        missing_text = "users with no role"
    elif side == "record-has-role":
        c, universe = RecordCoverage(), p.base.records
        covered = {o for (_, o) in p.base.permissions}
        missing_text = "records assigned to no role"
    elif side == "role-has-record":
        c, universe = PermissionCoverage(), p.base.roles
        covered = {r for (r, _) in p.base.permissions}
        missing_text = "roles with no permission"
    else:
        raise ValueError(f"unknown totality side {side!r}")
    uncovered = sorted(universe - covered)
    if not uncovered:
        return _satisfied(c, "nothing uncovered")
    return _violated(c, [(x,) for x in uncovered], f"{missing_text}: {_names(uncovered)}")


def check_exclusive_choice(p: ClosedPolicy, trigger_set: frozenset[str],
                           choice_set: frozenset[str],
                           exhaustive: bool = False) -> VerificationResult:
    c = ExclusiveChoice(frozenset(trigger_set), frozenset(choice_set))
    hits = []
    for u in p.base.users:
        roles = p.roles_of(u)
        for a in sorted(roles & trigger_set):
            for b1, b2 in itertools.combinations(sorted(roles & choice_set), 2):
                hits.append((u, a, b1, b2))
    if not hits:
        return _satisfied(c, f"no holder of {_names(sorted(trigger_set))} holds two of "
                             f"{_names(sorted(choice_set))}")
    witnesses, total = _condense(hits, exhaustive)
    first = witnesses[0]
    return _violated(c, witnesses,
                     f"{first[0]} holds {first[1]} together with both {first[2]} and {first[3]}",
                     total)


def check_forbidden_assignment(p: ClosedPolicy, user_set: frozenset[str],
                               role_set: frozenset[str],
                               exhaustive: bool = False) -> VerificationResult:
    c = ForbiddenAssignment(frozenset(user_set), frozenset(role_set))
    hits = [(u, r) for (u, r) in p.closed_assignments if u in user_set and r in role_set]
    if not hits:
        return _satisfied(c, f"no user in {_names(sorted(user_set))} holds a forbidden role")
    witnesses, total = _condense(hits, exhaustive)
    first = witnesses[0]
    return _violated(c, witnesses, f"{first[0]} holds forbidden role {first[1]}", total)


def check_min_roles_per_record(p: ClosedPolicy, record: str, k: int) -> VerificationResult:
    c = MinRolesPerRecord(record, k)
    holders = sorted(r for (r, o) in p.base.permissions if o == record)
    held = f"{record} is held by {len(holders)} role{'s' if len(holders) != 1 else ''}"
    if holders:
        held += f" ({_names(holders)})"
    if len(holders) >= k:
        return _satisfied(c, f"{held}; threshold {k} met")
    return _violated(c, [(record,)], f"{held}; threshold {k} not met")


def check_unique_role_per_record(p: ClosedPolicy, record: str,
                                 exhaustive: bool = False) -> VerificationResult:
    c = UniqueRolePerRecord(record)
    holders = sorted(r for (r, o) in p.base.permissions if o == record)
    if len(holders) == 1:
        return _satisfied(c, f"{record} is held by exactly one role ({holders[0]})")
    if not holders:
        # The empty witness tuple stands for the missing holder.
        return _violated(c, [()], f"no role holds {record}")
    pairs: list[Witness] = list(itertools.combinations(holders, 2))
    shown = pairs if exhaustive else pairs[:1]
    return _violated(c, shown,
                     f"{record} is held by {len(holders)} roles ({_names(holders)})",
                     len(pairs))


def check_sod_records(p: ClosedPolicy, conflict_set: frozenset[str],
                      exhaustive: bool = False) -> VerificationResult:
    c = SodRecords(frozenset(conflict_set))
    hits = []
    for role in p.base.roles:
        held = sorted(o for (r, o) in p.base.permissions if r == role and o in conflict_set)
        hits.extend((role, o1, o2) for o1, o2 in itertools.combinations(held, 2))
    if not hits:
        return _satisfied(c, "no role holds two of the conflicting records "
                             f"{_names(sorted(conflict_set))}")
    witnesses, total = _condense(hits, exhaustive)
    first = witnesses[0]
    return _violated(c, witnesses,
                     f"{first[0]} holds permissions on both {first[1]} and {first[2]}",
                     total)


def check_access_coverage(p: ClosedPolicy) -> VerificationResult:
    c = AccessCoverage()
    uncovered = sorted(p.base.users - {u for (u, _) in p.access})
    if not uncovered:
        return _satisfied(c, "every user can access at least one record")
    return _violated(c, [(u,) for u in uncovered],
                     f"users with no access at all: {_names(uncovered)}")


def check_min_users_per_record(p: ClosedPolicy, record: str, k: int) -> VerificationResult:
    c = MinUsersPerRecord(record, k)
    accessors = sorted(u for (u, o) in p.access if o == record)
    text = f"{len(accessors)} user{'s' if len(accessors) != 1 else ''} access {record}"
    if accessors:
        text += f" ({_names(accessors)})"
    if len(accessors) >= k:
        return _satisfied(c, f"{text}; threshold {k} met")
    return _violated(c, [(record,)], f"{text}; threshold {k} not met")


def check_access_diversity(p: ClosedPolicy, record: str, k_users: int,
                           m_roles: int) -> VerificationResult:
    """Require ``k_users`` distinct accessors whose held roles span ``m_roles``.

    Each chosen user contributes one of their closed roles as a witnessing
    role; the role need not be the one granting the access. The count of
    distinct roles reachable that way equals a maximum matching between the
    accessors and their roles, so the decision is a matching bound plus an
    accessor count. The satisfying assignment reported in the explanation is
    found by brute force, iterating users and candidate roles in sorted
    order, which is exponential in ``k_users`` and meant for desk scale.
    """
    c = AccessDiversity(record, k_users, m_roles)
    accessors = sorted(u for (u, o) in p.access if o == record)
    if len(accessors) < k_users:
        named = f" ({_names(accessors)})" if accessors else ""
        return _violated(c, [(record,)],
                         f"only {len(accessors)} user{'s' if len(accessors) != 1 else ''} "
                         f"access {record}{named}; need {k_users}")
    spread = _max_role_matching(p, accessors)
    if spread < m_roles:
        return _violated(c, [(record,)],
                         f"{len(accessors)} users access {record} but their roles span "
                         f"at most {spread} distinct role{'s' if spread != 1 else ''}; "
                         f"need {m_roles}")
    assignment = _first_diverse_assignment(p, accessors, k_users, m_roles)
    pairs = ", ".join(f"{u} via {r}" for u, r in assignment)
    return _satisfied(c, f"{record} is accessible to {pairs}")


def _max_role_matching(p: ClosedPolicy, users: list[str]) -> int:
    """Size of a maximum user-to-role matching over closed assignments."""
    matched_role_of: dict[str, str] = {}

    def try_assign(user: str, taken: set[str]) -> bool:
        for role in sorted(p.roles_of(user)):
            if role in taken:
                continue
            taken.add(role)
            holder = matched_role_of.get(role)
            if holder is None or try_assign(holder, taken):
                matched_role_of[role] = user
                return True
        return False

    size = 0
    for user in users:
        if try_assign(user, set()):
            size += 1
    return size


def _first_diverse_assignment(p: ClosedPolicy, accessors: list[str], k: int,
                              m: int) -> list[tuple[str, str]]:
    for combo in itertools.combinations(accessors, k):
        pools = [sorted(p.roles_of(u)) for u in combo]
        for pick in itertools.product(*pools):
            if len(set(pick)) >= m:
                return list(zip(combo, pick))
    raise AssertionError("called without a satisfying assignment")


# --- formula rendering -------------------------------------------------

def _user_vars(n: int) -> list[Var]:
    return [Var(name, Sort.USER) for name in _var_names(n)]


def _var_names(n: int) -> list[str]:
    pool = ["x", "y", "v", "u", "w"]
    if n <= len(pool):
        return pool[:n]
    return pool + [f"x{i}" for i in range(1, n - len(pool) + 1)]


def _pairwise_distinct(variables: list[Var]) -> list[Formula]:
    return [Not(Eq(a, b)) for a, b in itertools.combinations(variables, 2)]


def _role_spread(role_vars: list[Var], m: int) -> list[Formula]:
    """Conjuncts stating that at least ``m`` distinct roles appear.

    For m = 2 this is the anchored disjunction "some role differs from the
    first"; larger m expands into a disjunction over all m-element choices
    with pairwise disequalities.
    """
    if m <= 1:
        return []
    if m == 2:
        return [disj(*(Not(Eq(role_vars[0], rv)) for rv in role_vars[1:]))]
    options = [
        conj(*_pairwise_distinct(list(subset)))
        for subset in itertools.combinations(role_vars, m)
    ]
    return [disj(*options)]


def constraint_to_formula(c: ConstraintSpec, p) -> tuple[Formula, Polarity]:
    """Render a constraint instance as a closed sorted formula.

    Thresholds expand into that many existential variables with pairwise
    disequalities; conflict sets become explicit membership atoms. The
    formula's truth under :func:`rbacv.logic.oracle_eval`, read through the
    returned polarity, matches the family check by construction.
    """
    validate_constraint(c, p)
    polarity = polarity_of(c)
    if isinstance(c, Prerequisite):
        x = Var("x", Sort.USER)
        f: Formula = ForAll(x, Implies(HasRoleAtom(x, Const(c.trigger_role, Sort.ROLE)),
                                       HasRoleAtom(x, Const(c.required_role, Sort.ROLE))))
    elif isinstance(c, SodRoles):
        x, y, v = Var("x", Sort.USER), Var("y", Sort.ROLE), Var("v", Sort.ROLE)
        f = exists_all([x, y, v], conj(
            HasRoleAtom(x, y), HasRoleAtom(x, v),
            MemberOf(y, c.conflict_set), MemberOf(v, c.conflict_set),
            Not(Eq(y, v)),
        ))
    elif isinstance(c, RoleCoverage):
        x, y = Var("x", Sort.ROLE), Var("y", Sort.USER)
        f = ForAll(x, Exists(y, HasRoleAtom(y, x)))
    elif isinstance(c, UserCoverage):
        x, y = Var("x", Sort.USER), Var("y", Sort.ROLE)
        f = ForAll(x, Exists(y, HasRoleAtom(x, y)))
    elif isinstance(c, ExclusiveChoice):
        x = Var("x", Sort.USER)
        y, v, w = Var("y", Sort.ROLE), Var("v", Sort.ROLE), Var("w", Sort.ROLE)
        f = exists_all([x, y, v, w], conj(
            HasRoleAtom(x, y), HasRoleAtom(x, v), HasRoleAtom(x, w),
            MemberOf(y, c.trigger_set),
            MemberOf(v, c.choice_set), MemberOf(w, c.choice_set),
            Not(Eq(v, w)),
        ))
    elif isinstance(c, ForbiddenAssignment):
        x, y = Var("x", Sort.USER), Var("y", Sort.ROLE)
        f = exists_all([x, y], conj(
            MemberOf(x, c.user_set), MemberOf(y, c.role_set), HasRoleAtom(x, y),
        ))
    elif isinstance(c, RecordCoverage):
        x, y = Var("x", Sort.RECORD), Var("y", Sort.ROLE)
        f = ForAll(x, Exists(y, PermissionAtom(y, x)))
    elif isinstance(c, PermissionCoverage):
        x, y = Var("x", Sort.ROLE), Var("y", Sort.RECORD)
        f = ForAll(x, Exists(y, PermissionAtom(x, y)))
    elif isinstance(c, MinRolesPerRecord):
        rec = Const(c.record, Sort.RECORD)
        role_vars = [Var(name, Sort.ROLE) for name in _var_names(c.k)]
        f = exists_all(role_vars, conj(
            *[PermissionAtom(rv, rec) for rv in role_vars],
            *_pairwise_distinct(role_vars),
        ))
    elif isinstance(c, UniqueRolePerRecord):
        rec = Const(c.record, Sort.RECORD)
        x, y, v = Var("x", Sort.ROLE), Var("y", Sort.ROLE), Var("v", Sort.ROLE)
        no_holder = Not(Exists(x, PermissionAtom(x, rec)))
        two_holders = exists_all([y, v], conj(
            PermissionAtom(y, rec), PermissionAtom(v, rec), Not(Eq(y, v)),
        ))
        f = disj(no_holder, two_holders)
    elif isinstance(c, SodRecords):
        x, y, v = Var("x", Sort.ROLE), Var("y", Sort.RECORD), Var("v", Sort.RECORD)
        f = exists_all([x, y, v], conj(
            PermissionAtom(x, y), PermissionAtom(x, v),
            MemberOf(y, c.conflict_set), MemberOf(v, c.conflict_set),
            Not(Eq(y, v)),
        ))
    elif isinstance(c, AccessCoverage):
        x, y = Var("x", Sort.USER), Var("y", Sort.RECORD)
        f = ForAll(x, Exists(y, HasAccessAtom(x, y)))
    elif isinstance(c, MinUsersPerRecord):
        rec = Const(c.record, Sort.RECORD)
        user_vars = _user_vars(c.k)
        f = exists_all(user_vars, conj(
            *[HasAccessAtom(uv, rec) for uv in user_vars],
            *_pairwise_distinct(user_vars),
        ))
    elif isinstance(c, AccessDiversity):
        rec = Const(c.record, Sort.RECORD)
        user_vars = _user_vars(c.k_users)
        role_vars = [Var(f"r{i}", Sort.ROLE) for i in range(1, c.k_users + 1)]
        f = exists_all(user_vars + role_vars, conj(
            *[HasAccessAtom(uv, rec) for uv in user_vars],
            *[HasRoleAtom(uv, rv) for uv, rv in zip(user_vars, role_vars)],
            *_role_spread(role_vars, c.m_roles),
            *_pairwise_distinct(user_vars),
        ))
    else:
        raise TypeError(f"not a constraint: {c!r}")
    return f, polarity


def status_from_truth(truth: bool, polarity: Polarity) -> Status:
    """Map a formula's truth value to constraint status via its polarity."""
    if polarity is Polarity.POSITIVE_FORM:
        return Status.SATISFIED if truth else Status.VIOLATED
    return Status.VIOLATED if truth else Status.SATISFIED
