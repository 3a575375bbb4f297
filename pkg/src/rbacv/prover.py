"""Prover9/Mace4 input emission and output interpretation.

Emitted files carry an assumptions list and a goals list, each period-
terminated statement on its own line, using only the prover's core operator
set (- | & -> <-> all exists = !=). Two emission styles exist: *enumerate*
expands universal claims into explicit constant disjunctions, leaving the
theory open-world, while *complete* additionally asserts a negated literal
for every absent assignment and permission pair so goals become refutable
as well as provable.

Constants whose name would lex as a prover variable (lowercase u through z)
are renamed with a ``C_`` prefix; the renaming map rides along on every
emission so reports can translate back.
"""

from __future__ import annotations

import enum
import itertools
import re
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .constraints import (
    AccessCoverage, AccessDiversity, ConstraintSpec, ExclusiveChoice,
    ForbiddenAssignment, MinRolesPerRecord, MinUsersPerRecord,
    PermissionCoverage, Polarity, Prerequisite, RecordCoverage, RoleCoverage,
    SodRecords, SodRoles, Status, UniqueRolePerRecord, UserCoverage,
    polarity_of, validate_constraint,
)
from .model import ClosedPolicy

ACCESS_RULE = "all x all y all z (Has_Role(x,y) & Permission(y,z) -> Has_Access(x,z))."
VACUOUS_GOAL = "all x (x = x)."

PROVED_MARKER = "THEOREM PROVED"
_MODEL_BLOCK_RE = re.compile(r"^=+ *MODEL *=+", re.MULTILINE)

_VARIABLE_INITIALS = "uvwxyz"


class EmissionMode(enum.Enum):
    ENUMERATE = "enumerate"
    COMPLETE = "complete"


class OutcomeKind(enum.Enum):
    PROVED = "proved"
    COUNTEREXAMPLE_FOUND = "counterexample"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class ProverOutcome:
    kind: OutcomeKind
    raw: str
    note: str = ""


@dataclass(frozen=True)
class ProverEmission:
    """One prover run: assumption block, goal block, and how to read a proof."""

    assumptions: str
    goal: str
    polarity: Polarity
    mangled_names: dict[str, str] = field(default_factory=dict)

    def input_text(self) -> str:
        return (
            "formulas(assumptions).\n"
            + self.assumptions
            + "end_of_list.\n"
            + "\n"
            + "formulas(goals).\n"
            + self.goal
            + "end_of_list.\n"
        )


@dataclass(frozen=True)
class RunnerConfig:
    """External binary invocation: path, timeout, optional working directory."""

    binary: str
    timeout_s: float = 30.0
    workdir: str | None = None


class BinaryNotFound(OSError):
    pass


class LaunchFailure(OSError):
    pass


def mangle_names(names) -> dict[str, str]:
    """Assign every name an emitted token that cannot lex as a variable.

    Tokens starting with lowercase u through z get a ``C_`` prefix, repeated
    if the prefixed form is itself taken, so the map is always injective.
    """
    mangled: dict[str, str] = {}
    taken = set(names)
    for name in sorted(names):
        token = name
        while token[0] in _VARIABLE_INITIALS or (token != name and token in taken):
            token = "C_" + token
        if token != name:
            while token in taken:
                token = "C_" + token
        mangled[name] = token
        taken.add(token)
    return mangled


def _disjunction(var: str, tokens) -> str:
    return " | ".join(f"{var} = {tok}" for tok in tokens)


def _membership(var: str, names, mangled: dict[str, str]) -> str:
    return "(" + _disjunction(var, sorted(mangled[n] for n in names)) + ")"


def emit_assumptions(p: ClosedPolicy, mode: EmissionMode,
                     conflict_sets: tuple[frozenset[str], ...] = (),
                     mangled: dict[str, str] | None = None) -> str:
    """Render the policy as an assumptions block.

    Always emitted: one positive ground literal per assignment and per
    permission, one universally quantified conditional per implication,
    the access derivation rule, and pairwise disequalities for each
    conflict set attached to the run. Complete mode widens the positive
    assignments to the closed relation and adds one negated literal per
    absent pair, so positive and negative literals partition the full
    user-role and role-record crosses.
    """
    m = mangled if mangled is not None else policy_mangling(p)
    users = sorted(p.base.users)
    roles = sorted(p.base.roles)
    records = sorted(p.base.records)
    positive_assignments = (
        p.closed_assignments if mode is EmissionMode.COMPLETE else p.base.assignments
    )

    lines: list[str] = []
    lines += [f"Has_Role({m[u]},{m[r]})." for u, r in sorted(positive_assignments)]
    if mode is EmissionMode.COMPLETE:
        lines += [
            f"-Has_Role({m[u]},{m[r]})."
            for u in users for r in roles
            if (u, r) not in positive_assignments
        ]
    lines += [
        f"all x (Has_Role(x,{m[a]}) -> Has_Role(x,{m[b]}))."
        for a, b in sorted(p.base.implications)
    ]
    lines += [f"Permission({m[r]},{m[o]})." for r, o in sorted(p.base.permissions)]
    if mode is EmissionMode.COMPLETE:
        lines += [
            f"-Permission({m[r]},{m[o]})."
            for r in roles for o in records
            if (r, o) not in p.base.permissions
        ]
    lines.append(ACCESS_RULE)
    for conflict_set in conflict_sets:
        tokens = sorted(m[name] for name in conflict_set)
        lines += [f"{a} != {b}." for a, b in itertools.combinations(tokens, 2)]
    return "".join(line + "\n" for line in lines)


def policy_mangling(p: ClosedPolicy) -> dict[str, str]:
    return mangle_names(p.base.users | p.base.roles | p.base.records)


def _existential_block(names: list[str]) -> str:
    return " ".join(f"exists {n}" for n in names)


def _threshold_vars(n: int) -> list[str]:
    pool = ["x", "y", "v", "u", "w"]
    if n <= len(pool):
        return pool[:n]
    return pool + [f"x{i}" for i in range(1, n - len(pool) + 1)]


def _pairwise(names: list[str]) -> list[str]:
    return [f"{a} != {b}" for a, b in itertools.combinations(names, 2)]


def _guarded(guard: str, body: str, mode: EmissionMode) -> str:
    """Paper-style goal with a free universal variable, or its explicitly
    quantified form in complete mode."""
    if mode is EmissionMode.COMPLETE:
        return f"all x ({guard} -> {body})."
    return f"{guard} -> {body}."


def _record_guarded(record_token: str, body: str, mode: EmissionMode) -> str:
    guard = f"z = {record_token}"
    if mode is EmissionMode.COMPLETE:
        return f"all z ({guard} -> {body})."
    return f"{guard} -> {body}."


def _coverage_goal(universe_tokens: list[str], body: str, mode: EmissionMode) -> str:
    if not universe_tokens:
        return VACUOUS_GOAL
    return _guarded(_disjunction("x", universe_tokens), body, mode)


def emit_goal(c: ConstraintSpec, p: ClosedPolicy, mode: EmissionMode) -> ProverEmission:
    """Build the complete prover input for one constraint.

    Enumerate mode reproduces the constant-disjunction style for universal
    claims, drawing the disjunction from the declarations, or for the
    prerequisite family from the users currently holding the trigger role.
    Complete mode states the same goals as explicitly quantified formulas,
    with the prerequisite family guarded by the trigger role itself.
    """
    validate_constraint(c, p.base)
    m = policy_mangling(p)
    user_tokens = sorted(m[u] for u in p.base.users)
    role_tokens = sorted(m[r] for r in p.base.roles)
    record_tokens = sorted(m[o] for o in p.base.records)
    conflict_sets: tuple[frozenset[str], ...] = ()

    if isinstance(c, Prerequisite):
        trigger, required = m[c.trigger_role], m[c.required_role]
        if mode is EmissionMode.COMPLETE:
            goal = f"all x (Has_Role(x,{trigger}) -> Has_Role(x,{required}))."
        else:
            holders = sorted(m[u] for u in p.base.users
                             if c.trigger_role in p.roles_of(u))
            if holders:
                goal = f"{_disjunction('x', holders)} -> Has_Role(x,{required})."
            else:
                goal = VACUOUS_GOAL
    elif isinstance(c, SodRoles):
        conflict_sets = (c.conflict_set,)
        goal = (f"exists x exists y exists z (Has_Role(x,y) & Has_Role(x,z) & "
                f"{_membership('y', c.conflict_set, m)} & "
                f"{_membership('z', c.conflict_set, m)} & y != z).")
    elif isinstance(c, RoleCoverage):
        goal = _coverage_goal(role_tokens, "exists y (Has_Role(y,x))", mode)
    elif isinstance(c, UserCoverage):
        goal = _coverage_goal(user_tokens, "exists y (Has_Role(x,y))", mode)
    elif isinstance(c, ExclusiveChoice):
        conflict_sets = (c.choice_set,)
        goal = (f"exists x exists y exists z exists v (Has_Role(x,y) & Has_Role(x,z) & "
                f"Has_Role(x,v) & {_membership('y', c.trigger_set, m)} & "
                f"{_membership('z', c.choice_set, m)} & "
                f"{_membership('v', c.choice_set, m)} & z != v).")
    elif isinstance(c, ForbiddenAssignment):
        goal = (f"exists x exists y ({_membership('x', c.user_set, m)} & "
                f"{_membership('y', c.role_set, m)} & Has_Role(x,y)).")
    elif isinstance(c, RecordCoverage):
        goal = _coverage_goal(record_tokens, "exists y (Permission(y,x))", mode)
    elif isinstance(c, PermissionCoverage):
        goal = _coverage_goal(role_tokens, "exists y (Permission(x,y))", mode)
    elif isinstance(c, MinRolesPerRecord):
        variables = _threshold_vars(c.k)
        parts = [f"Permission({v},z)" for v in variables] + _pairwise(variables)
        body = f"{_existential_block(variables)} ({' & '.join(parts)})"
        goal = _record_guarded(m[c.record], body, mode)
    elif isinstance(c, UniqueRolePerRecord):
        rec = m[c.record]
        goal = (f"(exists x exists y (Permission(x,{rec}) & Permission(y,{rec}) & "
                f"x != y)) | -(exists v (Permission(v,{rec}))).")
    elif isinstance(c, SodRecords):
        conflict_sets = (c.conflict_set,)
        goal = (f"exists x exists y exists z (Permission(x,y) & Permission(x,z) & "
                f"{_membership('y', c.conflict_set, m)} & "
                f"{_membership('z', c.conflict_set, m)} & y != z).")
    elif isinstance(c, AccessCoverage):
        goal = _coverage_goal(user_tokens, "exists y (Has_Access(x,y))", mode)
    elif isinstance(c, MinUsersPerRecord):
        variables = _threshold_vars(c.k)
        parts = [f"Has_Access({v},z)" for v in variables] + _pairwise(variables)
        body = f"{_existential_block(variables)} ({' & '.join(parts)})"
        goal = _record_guarded(m[c.record], body, mode)
    elif isinstance(c, AccessDiversity):
        user_vars = _threshold_vars(c.k_users)
        role_vars = [f"r{i}" for i in range(1, c.k_users + 1)]
        parts = [f"Has_Access({v},z)" for v in user_vars]
        parts += [f"Has_Role({uv},{rv})" for uv, rv in zip(user_vars, role_vars)]
        spread = _role_spread_text(role_vars, c.m_roles)
        if spread:
            parts.append(spread)
        parts += _pairwise(user_vars)
        body = (f"{_existential_block(user_vars)} {_existential_block(role_vars)} "
                f"({' & '.join(parts)})")
        goal = _record_guarded(m[c.record], body, mode)
    else:
        raise TypeError(f"not a constraint: {c!r}")

    assumptions = emit_assumptions(p, mode, conflict_sets, mangled=m)
    return ProverEmission(assumptions=assumptions, goal=goal + "\n",
                          polarity=polarity_of(c), mangled_names=m)


def _role_spread_text(role_vars: list[str], m: int) -> str:
    if m <= 1:
        return ""
    if m == 2:
        return "(" + " | ".join(f"{role_vars[0]} != {rv}" for rv in role_vars[1:]) + ")"
    options = [
        "(" + " & ".join(_pairwise(list(subset))) + ")"
        for subset in itertools.combinations(role_vars, m)
    ]
    return "(" + " | ".join(options) + ")"


def interpret_output(raw: str, polarity: Polarity) -> tuple[ProverOutcome, Status | None]:
    """Classify captured prover output and map it back to a status.

    A proof confirms a positive-form constraint and refutes a negative-form
    one; a counterexample does the opposite; anything else is unresolved and
    yields no status at all.
    """
    if PROVED_MARKER in raw:
        outcome = ProverOutcome(OutcomeKind.PROVED, raw)
    elif _MODEL_BLOCK_RE.search(raw) or "interpretation(" in raw:
        outcome = ProverOutcome(OutcomeKind.COUNTEREXAMPLE_FOUND, raw)
    else:
        outcome = ProverOutcome(OutcomeKind.UNRESOLVED, raw)
    return outcome, map_outcome(outcome.kind, polarity)


def map_outcome(kind: OutcomeKind, polarity: Polarity) -> Status | None:
    if kind is OutcomeKind.UNRESOLVED:
        return None
    proved = kind is OutcomeKind.PROVED
    positive = polarity is Polarity.POSITIVE_FORM
    return Status.SATISFIED if proved == positive else Status.VIOLATED


def run_external(e: ProverEmission, runner: RunnerConfig) -> ProverOutcome:
    """Run one emission through an external prover binary and classify."""
    binary = Path(runner.binary)
    if not binary.exists() or not binary.is_file():
        raise BinaryNotFound(f"prover binary not found: {runner.binary}")
    with tempfile.TemporaryDirectory(dir=runner.workdir) as tmp:
        input_path = Path(tmp) / "input.in"
        input_path.write_text(e.input_text(), encoding="utf-8")
        try:
            proc = subprocess.run(
                [str(binary), "-f", str(input_path)],
                capture_output=True, text=True,
                timeout=runner.timeout_s,
                cwd=runner.workdir,
            )
        except subprocess.TimeoutExpired:
            return ProverOutcome(OutcomeKind.UNRESOLVED, "",
                                 note=f"timed out after {runner.timeout_s}s")
        except OSError as exc:
            raise LaunchFailure(f"could not launch {runner.binary}: {exc}") from exc
    raw = (proc.stdout or "") + (proc.stderr or "")
    outcome, _ = interpret_output(raw, e.polarity)
    return outcome


# --- emission grammar checker -------------------------------------------

_EMISSION_TOKEN_RE = re.compile(
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><->|->|!=|=|\||&|-|\(|\)|,|\.)"
    r"|(?P<ws>\s+)"
    r"|(?P<bad>.)"
)


class _StatementParser:
    """Recursive-descent recognizer for single-line emitted statements.

    Accepts the fragment the emitter produces: prefix predicates over plain
    name terms, equality and disequality, the five connectives, and chained
    ``all``/``exists`` quantifiers. Collects every name used in term
    position together with the quantifier scope it appeared under.
    """

    def __init__(self, text: str):
        self.tokens: list[tuple[str, str]] = []
        self.pos = 0
        self.term_names: list[tuple[str, frozenset[str]]] = []
        self.bound_names: set[str] = set()
        for match in _EMISSION_TOKEN_RE.finditer(text):
            kind = match.lastgroup
            if kind == "ws":
                continue
            if kind == "bad":
                raise ValueError(f"illegal character {match.group()!r}")
            self.tokens.append((kind, match.group()))

    def peek(self) -> tuple[str, str]:
        if self.pos >= len(self.tokens):
            return ("eof", "")
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        kind, got = self.take()
        if got != text:
            raise ValueError(f"expected {text!r}, got {got or 'end of statement'!r}")

    def parse_statement(self) -> None:
        self.formula(frozenset())
        self.expect(".")
        if self.peek()[0] != "eof":
            raise ValueError(f"trailing input after '.': {self.peek()[1]!r}")

    def formula(self, scope: frozenset[str]) -> None:
        self.implied(scope)
        while self.peek()[1] == "<->":
            self.take()
            self.implied(scope)

    def implied(self, scope: frozenset[str]) -> None:
        self.disjunct(scope)
        if self.peek()[1] == "->":
            self.take()
            self.implied(scope)

    def disjunct(self, scope: frozenset[str]) -> None:
        self.conjunct(scope)
        while self.peek()[1] == "|":
            self.take()
            self.conjunct(scope)

    def conjunct(self, scope: frozenset[str]) -> None:
        self.unary(scope)
        while self.peek()[1] == "&":
            self.take()
            self.unary(scope)

    def unary(self, scope: frozenset[str]) -> None:
        kind, text = self.peek()
        if text == "-":
            self.take()
            self.unary(scope)
            return
        if text in ("all", "exists"):
            self.take()
            var_kind, var_name = self.take()
            if var_kind != "name":
                raise ValueError(f"{text} must bind a name, got {var_name!r}")
            self.bound_names.add(var_name)
            self.unary(scope | {var_name})
            return
        if text == "(":
            self.take()
            self.formula(scope)
            self.expect(")")
            return
        if kind == "name":
            self.atom(scope)
            return
        raise ValueError(f"unexpected token {text or 'end of statement'!r}")

    def atom(self, scope: frozenset[str]) -> None:
        _, name = self.take()
        if self.peek()[1] == "(":
            self.take()
            self.term(scope)
            while self.peek()[1] == ",":
                self.take()
                self.term(scope)
            self.expect(")")
        else:
            self.term_names.append((name, scope))
            self._eq_tail(scope)

    def term(self, scope: frozenset[str]) -> None:
        kind, name = self.take()
        if kind != "name":
            raise ValueError(f"expected a term, got {name!r}")
        self.term_names.append((name, scope))

    def _eq_tail(self, scope: frozenset[str]) -> None:
        op = self.take()[1]
        if op not in ("=", "!="):
            raise ValueError(f"expected '=' or '!=', got {op!r}")
        self.term(scope)


def verify_emission(text: str, constants: frozenset[str] = frozenset()) -> list[str]:
    """Check an emitted input file against the emission grammar.

    Returns a list of problems, empty when the file is well formed: the two
    list blocks in order, every statement period-terminated and parseable
    with the core operator set, no constant token starting with lowercase u
    through z, and no constant captured by a quantifier. ``constants`` are
    the emitted tokens from the producing emission's renaming map.
    """
    problems: list[str] = []
    lines = [ln for ln in text.splitlines()]
    structure = [
        "formulas(assumptions).", "end_of_list.",
        "formulas(goals).", "end_of_list.",
    ]
    blocks: list[list[tuple[int, str]]] = [[], []]
    marker = 0
    in_assumptions_or_goals = -1
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if marker < len(structure) and stripped == structure[marker]:
            if stripped.startswith("formulas"):
                in_assumptions_or_goals = marker // 2
            else:
                in_assumptions_or_goals = -1
            marker += 1
            continue
        if in_assumptions_or_goals < 0:
            problems.append(f"line {lineno}: statement outside any list block")
            continue
        blocks[in_assumptions_or_goals].append((lineno, stripped))
    if marker != len(structure):
        problems.append(f"missing list marker {structure[marker]!r}")

    for block_index, statements in enumerate(blocks):
        in_goals = block_index == 1
        for lineno, statement in statements:
            try:
                parser = _StatementParser(statement)
                parser.parse_statement()
            except ValueError as exc:
                problems.append(f"line {lineno}: {exc}")
                continue
            for name, scope in parser.term_names:
                if name in scope:
                    continue  # bound variable
                if name[0] in _VARIABLE_INITIALS:
                    # Lexes as a variable; free variables are only the
                    # paper-style implicit universals in goal statements.
                    if not in_goals:
                        problems.append(
                            f"line {lineno}: free variable {name!r} in assumptions")
                    if name in constants:
                        problems.append(
                            f"line {lineno}: constant {name!r} lexes as a variable")
            if constants:
                captured = parser.bound_names & constants
                for name in sorted(captured):
                    problems.append(
                        f"line {lineno}: quantifier captures constant {name!r}")
    return problems
