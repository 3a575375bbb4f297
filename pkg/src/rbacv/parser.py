"""Line-oriented policy and constraint file parsing.

The policy grammar declares names with ``users``/``roles``/``records`` and
states facts with ``assign``/``implies``/``permit``; the constraint grammar
has one keyword per family. ``#`` starts a comment, blank lines are ignored,
declarations must precede every use, and a policy file and a constraint file
may also be combined into a single document since the two keyword sets are
disjoint. Every rejected input carries a 1-based line and column pointing at
the offending token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import constraints as cs
from .model import IDENTIFIER_RE, Policy, make_policy, validate_policy

POLICY_KEYWORDS = ("users", "roles", "records", "assign", "implies", "permit")

CONSTRAINT_KEYWORDS = (
    "prerequisite", "sod-roles", "role-coverage", "user-coverage", "exclusive",
    "forbid", "record-coverage", "permission-coverage", "min-roles",
    "unique-role", "unique-roles-all", "sod-records", "access-coverage",
    "min-users", "diversity",
)

_TOKEN_RE = re.compile(r"\{|\}|[^\s{}]+")


class SourceError(ValueError):
    """A rejected input, located by 1-based line and column."""

    def __init__(self, line: int, column: int, message: str, snippet: str):
        self.line = line
        self.column = column
        self.message = message
        self.snippet = snippet
        super().__init__(f"line {line}, column {column}: {message}\n  {snippet}")


class UnknownConstraintKeyword(SourceError):
    pass


class BadThreshold(SourceError):
    pass


@dataclass(frozen=True)
class Document:
    """A parsed policy together with its constraints, in file order."""
    policy: Policy
    constraints: tuple[cs.ConstraintSpec, ...] = ()


@dataclass
class _Token:
    text: str
    line: int
    column: int
    snippet: str

    def fail(self, message: str) -> SourceError:
        return SourceError(self.line, self.column, message, self.snippet)


@dataclass
class _Builder:
    users: list[str] = field(default_factory=list)
    roles: list[str] = field(default_factory=list)
    records: list[str] = field(default_factory=list)
    assignments: set[tuple[str, str]] = field(default_factory=set)
    implications: set[tuple[str, str]] = field(default_factory=set)
    permissions: set[tuple[str, str]] = field(default_factory=set)

    def declared_anywhere(self, name: str) -> str | None:
        for bucket, label in ((self.users, "user"), (self.roles, "role"),
                              (self.records, "record")):
            if name in bucket:
                return label
        return None

    def policy(self) -> Policy:
        return make_policy(self.users, self.roles, self.records,
                           self.assignments, self.implications, self.permissions)


def _tokenize(text: str) -> list[list[_Token]]:
    """Split into lines of tokens, comments stripped, blank lines dropped."""
    lines: list[list[_Token]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("#", 1)[0]
        tokens = [
            _Token(m.group(), lineno, m.start() + 1, raw)
            for m in _TOKEN_RE.finditer(code)
        ]
        if tokens:
            lines.append(tokens)
    return lines


class _LineParser:
    """Cursor over one statement line."""

    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def keyword(self) -> _Token:
        return self.tokens[0]

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def take(self, what: str) -> _Token:
        if self.done():
            last = self.tokens[-1]
            raise SourceError(last.line, last.column + len(last.text),
                              f"expected {what} after {last.text!r}", last.snippet)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def take_identifier(self, what: str) -> _Token:
        tok = self.take(what)
        if not IDENTIFIER_RE.match(tok.text):
            raise tok.fail(f"{tok.text!r} is not a valid identifier")
        return tok

    def take_literal(self, literal: str) -> _Token:
        tok = self.take(f"{literal!r}")
        if tok.text != literal:
            raise tok.fail(f"expected {literal!r}, got {tok.text!r}")
        return tok

    def take_int(self, what: str, minimum: int = 1) -> tuple[int, _Token]:
        tok = self.take(what)
        if not re.fullmatch(r"\d+", tok.text):
            raise BadThreshold(tok.line, tok.column,
                               f"{what} must be a decimal integer, got {tok.text!r}",
                               tok.snippet)
        value = int(tok.text)
        if value < minimum:
            raise BadThreshold(tok.line, tok.column,
                               f"{what} must be at least {minimum}, got {value}",
                               tok.snippet)
        return value, tok

    def take_set(self, what: str, minimum: int) -> tuple[frozenset[str], _Token]:
        opener = self.take_literal("{")
        names: list[str] = []
        while True:
            tok = self.take(f"identifier or '}}' in {what}")
            if tok.text == "}":
                break
            if not IDENTIFIER_RE.match(tok.text):
                raise tok.fail(f"{tok.text!r} is not a valid identifier")
            if tok.text in names:
                raise tok.fail(f"{tok.text!r} listed twice in {what}")
            names.append(tok.text)
        if len(names) < minimum:
            raise opener.fail(f"{what} needs at least {minimum} "
                              f"name{'s' if minimum != 1 else ''}")
        return frozenset(names), opener

    def finish(self) -> None:
        if not self.done():
            extra = self.tokens[self.pos]
            raise extra.fail(f"unexpected trailing token {extra.text!r}")


def _parse_declaration(line: _LineParser, builder: _Builder) -> None:
    bucket = {"users": builder.users, "roles": builder.roles,
              "records": builder.records}[line.keyword.text]
    while not line.done():
        tok = line.take_identifier("name")
        existing = builder.declared_anywhere(tok.text)
        if existing is not None:
            raise tok.fail(f"{tok.text!r} is already declared as a {existing}")
        bucket.append(tok.text)


def _declared(line: _LineParser, builder: _Builder, what: str) -> _Token:
    tok = line.take_identifier(what)
    bucket = {"user": builder.users, "role": builder.roles,
              "record": builder.records}[what]
    if tok.text not in bucket:
        raise tok.fail(f"{tok.text!r} is not a declared {what}")
    return tok


def _parse_policy_statement(line: _LineParser, builder: _Builder) -> None:
    keyword = line.keyword.text
    if keyword in ("users", "roles", "records"):
        _parse_declaration(line, builder)
    elif keyword == "assign":
        user = _declared(line, builder, "user")
        role = _declared(line, builder, "role")
        builder.assignments.add((user.text, role.text))
    elif keyword == "implies":
        first = _declared(line, builder, "role")
        second = _declared(line, builder, "role")
        if first.text == second.text:
            raise second.fail(f"role {second.text!r} cannot imply itself")
        builder.implications.add((first.text, second.text))
    elif keyword == "permit":
        role = _declared(line, builder, "role")
        record = _declared(line, builder, "record")
        builder.permissions.add((role.text, record.text))
    line.finish()


def _parse_constraint_statement(line: _LineParser, policy: Policy) -> list[cs.ConstraintSpec]:
    keyword = line.keyword
    line.pos = 1
    spec: cs.ConstraintSpec
    if keyword.text == "prerequisite":
        trigger = line.take_identifier("trigger role")
        line.take_literal("requires")
        required = line.take_identifier("required role")
        spec = cs.Prerequisite(trigger.text, required.text)
    elif keyword.text == "sod-roles":
        names, _ = line.take_set("conflict set", 2)
        spec = cs.SodRoles(names)
    elif keyword.text == "role-coverage":
        spec = cs.RoleCoverage()
    elif keyword.text == "user-coverage":
        spec = cs.UserCoverage()
    elif keyword.text == "record-coverage":
        spec = cs.RecordCoverage()
    elif keyword.text == "permission-coverage":
        spec = cs.PermissionCoverage()
    elif keyword.text == "access-coverage":
        spec = cs.AccessCoverage()
    elif keyword.text == "exclusive":
        trigger_set, _ = line.take_set("trigger set", 1)
        line.take_literal("choose-one-of")
        choice_set, _ = line.take_set("choice set", 2)
        spec = cs.ExclusiveChoice(trigger_set, choice_set)
    elif keyword.text == "forbid":
        user_set, _ = line.take_set("user set", 1)
        line.take_literal("from")
        role_set, _ = line.take_set("role set", 1)
        spec = cs.ForbiddenAssignment(user_set, role_set)
    elif keyword.text == "min-roles":
        record = line.take_identifier("record")
        k, _ = line.take_int("role threshold")
        spec = cs.MinRolesPerRecord(record.text, k)
    elif keyword.text == "unique-role":
        record = line.take_identifier("record")
        spec = cs.UniqueRolePerRecord(record.text)
    elif keyword.text == "unique-roles-all":
        line.finish()
        return [cs.UniqueRolePerRecord(rec) for rec in sorted(policy.records)]
    elif keyword.text == "sod-records":
        names, _ = line.take_set("conflict set", 2)
        spec = cs.SodRecords(names)
    elif keyword.text == "min-users":
        record = line.take_identifier("record")
        k, _ = line.take_int("user threshold")
        spec = cs.MinUsersPerRecord(record.text, k)
    elif keyword.text == "diversity":
        record = line.take_identifier("record")
        k, _ = line.take_int("user threshold")
        m, m_tok = line.take_int("role threshold")
        if m > k:
            raise BadThreshold(m_tok.line, m_tok.column,
                               f"role threshold {m} cannot exceed user threshold {k}",
                               m_tok.snippet)
        spec = cs.AccessDiversity(record.text, k, m)
    else:
        raise UnknownConstraintKeyword(keyword.line, keyword.column,
                                       f"unknown constraint keyword {keyword.text!r}",
                                       keyword.snippet)
    line.finish()
    try:
        cs.validate_constraint(spec, policy)
    except ValueError as exc:
        raise keyword.fail(str(exc)) from exc
    return [spec]


def parse_document(text: str) -> Document:
    """Parse a combined document: policy statements plus constraint lines."""
    builder = _Builder()
    constraint_lines: list[_LineParser] = []
    for tokens in _tokenize(text):
        line = _LineParser(tokens)
        keyword = line.take("statement keyword")
        if keyword.text in POLICY_KEYWORDS:
            if constraint_lines:
                raise keyword.fail("policy statements must come before constraints")
            _parse_policy_statement(line, builder)
        elif keyword.text in CONSTRAINT_KEYWORDS:
            constraint_lines.append(line)
        else:
            raise UnknownConstraintKeyword(
                keyword.line, keyword.column,
                f"unknown statement keyword {keyword.text!r}", keyword.snippet)
    policy = validate_policy(builder.policy())
    parsed: list[cs.ConstraintSpec] = []
    for line in constraint_lines:
        parsed.extend(_parse_constraint_statement(line, policy))
    return Document(policy=policy, constraints=tuple(parsed))


def parse_policy(text: str) -> Policy:
    """Parse a policy file; constraint keywords are rejected here."""
    builder = _Builder()
    for tokens in _tokenize(text):
        line = _LineParser(tokens)
        keyword = line.take("statement keyword")
        if keyword.text not in POLICY_KEYWORDS:
            raise keyword.fail(f"unknown policy statement keyword {keyword.text!r}")
        _parse_policy_statement(line, builder)
    return validate_policy(builder.policy())


def parse_constraints(text: str, policy: Policy) -> list[cs.ConstraintSpec]:
    """Parse a constraint file against an already validated policy."""
    parsed: list[cs.ConstraintSpec] = []
    for tokens in _tokenize(text):
        line = _LineParser(tokens)
        keyword = line.take("constraint keyword")
        if keyword.text not in CONSTRAINT_KEYWORDS:
            raise UnknownConstraintKeyword(
                keyword.line, keyword.column,
                f"unknown constraint keyword {keyword.text!r}", keyword.snippet)
        parsed.extend(_parse_constraint_statement(line, policy))
    return parsed


def print_canonical_policy(p: Policy) -> str:
    """Deterministic policy rendering: the three declaration lines, then
    one fact per line, everything sorted."""
    lines = [
        " ".join(["users", *sorted(p.users)]).rstrip(),
        " ".join(["roles", *sorted(p.roles)]).rstrip(),
        " ".join(["records", *sorted(p.records)]).rstrip(),
    ]
    lines += [f"assign {u} {r}" for u, r in sorted(p.assignments)]
    lines += [f"implies {a} {b}" for a, b in sorted(p.implications)]
    lines += [f"permit {r} {o}" for r, o in sorted(p.permissions)]
    return "\n".join(lines) + "\n"


def print_canonical_constraints(specs) -> str:
    return "".join(cs.render(c) + "\n" for c in specs)


def print_canonical(d: Document) -> str:
    """Canonical document text; parsing it back reproduces ``d`` exactly."""
    return print_canonical_policy(d.policy) + print_canonical_constraints(d.constraints)
