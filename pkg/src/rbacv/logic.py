"""Finite-domain first-order formulas and their exhaustive evaluation.

Formulas are sorted: every variable ranges over exactly one of the three
policy sorts (user, role, record). Atoms are the two base relations, the
derived access relation, equality, and membership in a literal finite set.
Evaluation is plain Tarskian truth over the declared universes, with the
role relation read from the closed assignments. There is no proof search;
quantifiers are expanded by enumeration, so this stays honest only at desk
scale.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterator, Union

from .model import ClosedPolicy


class Sort(enum.Enum):
    USER = "user"
    ROLE = "role"
    RECORD = "record"


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class Const:
    name: str
    sort: Sort


Term = Union[Var, Const]


@dataclass(frozen=True)
class HasRoleAtom:
    user: Term
    role: Term


@dataclass(frozen=True)
class PermissionAtom:
    role: Term
    record: Term


@dataclass(frozen=True)
class HasAccessAtom:
    user: Term
    record: Term


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class MemberOf:
    """Membership of a term in a literal set of declared names."""
    term: Term
    members: frozenset[str]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class ForAll:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


Formula = Union[
    HasRoleAtom, PermissionAtom, HasAccessAtom, Eq, MemberOf,
    Not, And, Or, Implies, Iff, ForAll, Exists,
]


class IllSortedFormula(ValueError):
    """The formula breaks sorting or binding discipline."""


def conj(*parts: Formula) -> Formula:
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def disj(*parts: Formula) -> Formula:
    return parts[0] if len(parts) == 1 else Or(tuple(parts))


def exists_all(variables: list[Var], body: Formula) -> Formula:
    for var in reversed(variables):
        body = Exists(var, body)
    return body


def ensure_well_sorted(f: Formula) -> None:
    """Reject open formulas, rebinding, and sort mismatches.

    Every variable must be bound exactly once across the whole formula and
    every atom position must receive a term of the expected sort.
    """
    bound_names: set[str] = set()

    def term_sort(t: Term, scope: dict[str, Sort]) -> Sort:
        if isinstance(t, Const):
            return t.sort
        if t.name not in scope:
            raise IllSortedFormula(f"variable {t.name!r} is used but not in scope")
        if scope[t.name] is not t.sort:
            raise IllSortedFormula(f"variable {t.name!r} used at sort {t.sort.value}, "
                                   f"bound at sort {scope[t.name].value}")
        return t.sort

    def expect(t: Term, sort: Sort, scope: dict[str, Sort], where: str) -> None:
        if term_sort(t, scope) is not sort:
            raise IllSortedFormula(f"{where} expects a {sort.value}, "
                                   f"got a {term_sort(t, scope).value}")

    def walk(g: Formula, scope: dict[str, Sort]) -> None:
        if isinstance(g, HasRoleAtom):
            expect(g.user, Sort.USER, scope, "HasRole left")
            expect(g.role, Sort.ROLE, scope, "HasRole right")
        elif isinstance(g, PermissionAtom):
            expect(g.role, Sort.ROLE, scope, "Permission left")
            expect(g.record, Sort.RECORD, scope, "Permission right")
        elif isinstance(g, HasAccessAtom):
            expect(g.user, Sort.USER, scope, "HasAccess left")
            expect(g.record, Sort.RECORD, scope, "HasAccess right")
        elif isinstance(g, Eq):
            if term_sort(g.left, scope) is not term_sort(g.right, scope):
                raise IllSortedFormula("equality compares terms of different sorts")
        elif isinstance(g, MemberOf):
            term_sort(g.term, scope)
        elif isinstance(g, Not):
            walk(g.body, scope)
        elif isinstance(g, (And, Or)):
            for part in g.parts:
                walk(part, scope)
        elif isinstance(g, (Implies, Iff)):
            walk(g.left, scope)
            walk(g.right, scope)
        elif isinstance(g, (ForAll, Exists)):
            if g.var.name in bound_names:
                raise IllSortedFormula(f"variable {g.var.name!r} is bound more than once")
            bound_names.add(g.var.name)
            walk(g.body, {**scope, g.var.name: g.var.sort})
        else:
            raise IllSortedFormula(f"not a formula node: {g!r}")

    walk(f, {})


def _domain(p: ClosedPolicy, sort: Sort) -> list[str]:
    if sort is Sort.USER:
        return sorted(p.base.users)
    if sort is Sort.ROLE:
        return sorted(p.base.roles)
    return sorted(p.base.records)


def _holds(p: ClosedPolicy, g: Formula, env: dict[str, str]) -> bool:
    def val(t: Term) -> str:
        return t.name if isinstance(t, Const) else env[t.name]

    if isinstance(g, HasRoleAtom):
        return (val(g.user), val(g.role)) in p.closed_assignments
    if isinstance(g, PermissionAtom):
        return (val(g.role), val(g.record)) in p.base.permissions
    if isinstance(g, HasAccessAtom):
        return (val(g.user), val(g.record)) in p.access
    if isinstance(g, Eq):
        return val(g.left) == val(g.right)
    if isinstance(g, MemberOf):
        return val(g.term) in g.members
    if isinstance(g, Not):
        return not _holds(p, g.body, env)
    if isinstance(g, And):
        return all(_holds(p, part, env) for part in g.parts)
    if isinstance(g, Or):
        return any(_holds(p, part, env) for part in g.parts)
    if isinstance(g, Implies):
        return (not _holds(p, g.left, env)) or _holds(p, g.right, env)
    if isinstance(g, Iff):
        return _holds(p, g.left, env) == _holds(p, g.right, env)
    if isinstance(g, ForAll):
        return all(_holds(p, g.body, {**env, g.var.name: elem})
                   for elem in _domain(p, g.var.sort))
    if isinstance(g, Exists):
        return any(_holds(p, g.body, {**env, g.var.name: elem})
                   for elem in _domain(p, g.var.sort))
    raise IllSortedFormula(f"not a formula node: {g!r}")


def _existential_prefix(f: Formula) -> tuple[list[Var], Formula]:
    prefix: list[Var] = []
    while isinstance(f, Exists):
        prefix.append(f.var)
        f = f.body
    return prefix, f


def oracle_eval(p: ClosedPolicy, f: Formula) -> tuple[bool, list[tuple[str, ...]]]:
    """Evaluate a closed formula and enumerate its leading witnesses.

    Returns the formula's truth value together with every satisfying
    binding of the outermost existential block, in lexicographic order.
    Formulas that do not start with an existential quantifier get an
    empty witness list.
    """
    ensure_well_sorted(f)
    prefix, matrix = _existential_prefix(f)
    if not prefix:
        return _holds(p, f, {}), []
    witnesses: list[tuple[str, ...]] = []
    domains: Iterator = itertools.product(*(_domain(p, v.sort) for v in prefix))
    for binding in domains:
        env = {v.name: elem for v, elem in zip(prefix, binding)}
        if _holds(p, matrix, env):
            witnesses.append(tuple(binding))
    return bool(witnesses), witnesses
