"""Differential harness: family checks versus exhaustive formula evaluation.

Generates seeded random policies over small universes, renders one random
instance of every applicable constraint family per policy, and compares the
family check's status against the Tarskian truth value of the family's
formula read through its polarity. Disagreements are shrunk by greedily
dropping relation facts before being reported, so a failure prints a small
reproducer document.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import constraints as cs
from .evaluator import check, constraint_to_formula, status_from_truth
from .logic import oracle_eval
from .model import ClosedPolicy, Policy, close_roles, make_policy
from .parser import Document, print_canonical

MAX_USERS = 6
MAX_ROLES = 6
MAX_RECORDS = 8


@dataclass(frozen=True)
class Disagreement:
    policy: Policy
    constraint: cs.ConstraintSpec
    check_status: cs.Status
    oracle_status: cs.Status

    def reproducer(self) -> str:
        return print_canonical(Document(self.policy, (self.constraint,)))


@dataclass(frozen=True)
class DiffReport:
    cases: int
    comparisons: int
    disagreement: Disagreement | None

    @property
    def agreed(self) -> bool:
        return self.disagreement is None


def random_policy(rng: random.Random) -> Policy:
    n_users = rng.randint(0, MAX_USERS)
    n_roles = rng.randint(0, MAX_ROLES)
    n_records = rng.randint(0, MAX_RECORDS)
    users = [f"U{i}" for i in range(1, n_users + 1)]
    roles = [f"R{i}" for i in range(1, n_roles + 1)]
    records = [f"O{i}" for i in range(1, n_records + 1)]
    assignments = {(u, r) for u in users for r in roles if rng.random() < 0.3}
    implications = {
        (a, b) for a in roles for b in roles if a != b and rng.random() < 0.12
    }
    permissions = {(r, o) for r in roles for o in records if rng.random() < 0.3}
    return make_policy(users, roles, records, assignments, implications, permissions)


def random_constraints(rng: random.Random, p: Policy) -> list[cs.ConstraintSpec]:
    """One instance per family whose parameters the policy can supply."""
    users = sorted(p.users)
    roles = sorted(p.roles)
    records = sorted(p.records)
    out: list[cs.ConstraintSpec] = [
        cs.RoleCoverage(), cs.UserCoverage(), cs.RecordCoverage(),
        cs.PermissionCoverage(), cs.AccessCoverage(),
    ]
    if roles:
        out.append(cs.Prerequisite(rng.choice(roles), rng.choice(roles)))
    if len(roles) >= 2:
        size = rng.randint(2, min(4, len(roles)))
        out.append(cs.SodRoles(frozenset(rng.sample(roles, size))))
        trigger = frozenset(rng.sample(roles, rng.randint(1, 2)))
        choice = frozenset(rng.sample(roles, rng.randint(2, min(3, len(roles)))))
        out.append(cs.ExclusiveChoice(trigger, choice))
    if users and roles:
        out.append(cs.ForbiddenAssignment(
            frozenset(rng.sample(users, rng.randint(1, min(2, len(users))))),
            frozenset(rng.sample(roles, rng.randint(1, min(2, len(roles))))),
        ))
    if records:
        record = rng.choice(records)
        out.append(cs.MinRolesPerRecord(record, rng.randint(1, 3)))
        out.append(cs.UniqueRolePerRecord(rng.choice(records)))
        out.append(cs.MinUsersPerRecord(rng.choice(records), rng.randint(1, 3)))
        k_users = rng.randint(1, 3)
        out.append(cs.AccessDiversity(rng.choice(records), k_users,
                                      rng.randint(1, k_users)))
    if len(records) >= 2:
        size = rng.randint(2, min(4, len(records)))
        out.append(cs.SodRecords(frozenset(rng.sample(records, size))))
    return out


def _statuses(closed: ClosedPolicy, c: cs.ConstraintSpec) -> tuple[cs.Status, cs.Status]:
    formula, polarity = constraint_to_formula(c, closed.base)
    truth, _ = oracle_eval(closed, formula)
    return check(closed, c).status, status_from_truth(truth, polarity)


def _disagrees(p: Policy, c: cs.ConstraintSpec) -> bool:
    actual, expected = _statuses(close_roles(p), c)
    return actual is not expected


def shrink(p: Policy, c: cs.ConstraintSpec) -> Policy:
    """Greedily drop relation facts while the disagreement persists."""
    current = p
    changed = True
    while changed:
        changed = False
        for attr in ("assignments", "implications", "permissions"):
            for fact in sorted(getattr(current, attr)):
                candidate_facts = frozenset(getattr(current, attr)) - {fact}
                candidate = Policy(**{
                    **{f: getattr(current, f)
                       for f in ("users", "roles", "records",
                                 "assignments", "implications", "permissions")},
                    attr: candidate_facts,
                })
                if _disagrees(candidate, c):
                    current = candidate
                    changed = True
    return current


def run_diff(seed: int, cases: int) -> DiffReport:
    """Compare checks against the formula oracle over ``cases`` policies."""
    rng = random.Random(seed)
    comparisons = 0
    for case in range(cases):
        policy = random_policy(rng)
        closed = close_roles(policy)
        for c in random_constraints(rng, policy):
            comparisons += 1
            actual, expected = _statuses(closed, c)
            if actual is not expected:
                small = shrink(policy, c)
                small_closed = close_roles(small)
                small_actual, small_expected = _statuses(small_closed, c)
                return DiffReport(case + 1, comparisons, Disagreement(
                    small, c, small_actual, small_expected))
    return DiffReport(cases, comparisons, None)
