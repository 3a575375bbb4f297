from __future__ import annotations

import random

import pytest

from rbacv import (
    AccessDiversity, BadThreshold, Document, Policy, SodRoles, SourceError,
    UniqueRolePerRecord, UnknownConstraintKeyword, parse_constraints,
    parse_document, parse_policy, print_canonical, print_canonical_policy,
)
from rbacv.oracle_diff import random_constraints, random_policy
from tests.conftest import UNIVERSITY_POLICY_TEXT, university_policy


class TestParsePolicy:
    def test_university_fixture_file(self):
        assert parse_policy(UNIVERSITY_POLICY_TEXT) == university_policy()

    def test_minimal_policy_without_records(self):
        p = parse_policy("users A\nroles R\nassign A R")
        assert p == Policy(users=frozenset({"A"}), roles=frozenset({"R"}),
                           assignments=frozenset({("A", "R")}))

    def test_forward_reference_rejected_with_position(self):
        with pytest.raises(SourceError) as excinfo:
            parse_policy("assign A R\nusers A\nroles R")
        assert excinfo.value.line == 1
        assert excinfo.value.column == 8
        assert "A" in excinfo.value.snippet

    def test_statement_kind_order_is_free(self):
        text = "roles R\nusers A\nassign A R\nrecords O\npermit R O"
        p = parse_policy(text)
        assert ("R", "O") in p.permissions

    def test_duplicate_declaration_rejected(self):
        with pytest.raises(SourceError, match="already declared"):
            parse_policy("users A\nusers A")
        with pytest.raises(SourceError, match="already declared as a user"):
            parse_policy("users A\nroles A")

    def test_self_implication_rejected(self):
        with pytest.raises(SourceError, match="imply itself"):
            parse_policy("roles R\nimplies R R")

    def test_comments_and_blank_lines_ignored(self):
        bare = parse_policy("users A\nroles R\nassign A R")
        noisy = parse_policy(
            "# heading\n\nusers A # trailing\n\n# banner\nroles R\nassign A R\n")
        assert bare == noisy

    def test_bad_identifier_positioned(self):
        with pytest.raises(SourceError) as excinfo:
            parse_policy("users Ann 9lives")
        assert excinfo.value.line == 1
        assert excinfo.value.column == 11

    def test_missing_argument_reported(self):
        with pytest.raises(SourceError, match="expected"):
            parse_policy("users A\nroles R\nassign A")

    def test_trailing_token_reported(self):
        with pytest.raises(SourceError, match="trailing"):
            parse_policy("users A\nroles R\nassign A R extra")

    def test_constraint_keyword_rejected_in_policy_file(self):
        with pytest.raises(SourceError, match="policy statement"):
            parse_policy("users A\nrole-coverage")


class TestParseConstraints:
    def test_sod_roles_line(self, university):
        specs = parse_constraints(
            "sod-roles { Instructor Secretary Student }", university)
        assert specs == [SodRoles(frozenset({"Instructor", "Secretary", "Student"}))]

    def test_diversity_line(self, university):
        specs = parse_constraints("diversity REC3 3 2", university)
        assert specs == [AccessDiversity("REC3", 3, 2)]

    def test_zero_threshold_rejected(self, university):
        with pytest.raises(BadThreshold):
            parse_constraints("min-users REC1 0", university)

    def test_non_numeric_threshold_rejected(self, university):
        with pytest.raises(BadThreshold):
            parse_constraints("min-users REC1 two", university)

    def test_diversity_role_threshold_bound(self, university):
        with pytest.raises(BadThreshold, match="cannot exceed"):
            parse_constraints("diversity REC1 2 3", university)

    def test_unknown_keyword(self, university):
        with pytest.raises(UnknownConstraintKeyword) as excinfo:
            parse_constraints("role-coverage\nseparation REC1", university)
        assert excinfo.value.line == 2
        assert excinfo.value.column == 1

    def test_undeclared_name_positioned(self, university):
        with pytest.raises(SourceError, match="REC9") as excinfo:
            parse_constraints("min-users REC9 2", university)
        assert excinfo.value.line == 1

    def test_small_conflict_set_rejected(self, university):
        with pytest.raises(SourceError, match="at least 2"):
            parse_constraints("sod-roles { Instructor }", university)

    def test_repeated_set_member_rejected(self, university):
        with pytest.raises(SourceError, match="listed twice"):
            parse_constraints("sod-roles { Chair Chair }", university)

    def test_unclosed_set_rejected(self, university):
        with pytest.raises(SourceError, match="expected"):
            parse_constraints("sod-roles { Chair Dean", university)

    def test_unique_roles_all_expands_per_record_sorted(self, university):
        specs = parse_constraints("unique-roles-all", university)
        assert specs == [UniqueRolePerRecord(f"REC{i}") for i in range(1, 8)]

    def test_every_family_parses(self, university):
        text = "\n".join([
            "prerequisite Chair requires Instructor",
            "sod-roles { Instructor Secretary Student }",
            "role-coverage",
            "user-coverage",
            "exclusive { Instructor } choose-one-of { Chair Dean }",
            "forbid { John } from { Dean Chair }",
            "record-coverage",
            "permission-coverage",
            "min-roles REC4 2",
            "unique-role REC6",
            "sod-records { REC1 REC2 REC5 }",
            "access-coverage",
            "min-users REC1 2",
            "diversity REC3 3 2",
        ])
        specs = parse_constraints(text, university)
        assert len(specs) == 14
        assert len({type(s) for s in specs}) == 14


class TestCanonicalPrinting:
    def test_university_round_trip(self, university):
        text = UNIVERSITY_POLICY_TEXT + "\n".join([
            "sod-roles { Instructor Secretary Student }",
            "role-coverage",
            "min-users REC1 2",
        ])
        doc = parse_document(text)
        assert parse_document(print_canonical(doc)) == doc

    def test_empty_document_prints_header_lines_only(self):
        doc = Document(Policy())
        text = print_canonical(doc)
        assert text == "users\nroles\nrecords\n"
        assert parse_document(text) == doc

    def test_one_constraint_per_family_keeps_input_order(self, university):
        lines = [
            "diversity REC3 3 2",
            "role-coverage",
            "prerequisite TA requires Student",
            "sod-records { REC1 REC2 REC5 }",
        ]
        doc = parse_document(UNIVERSITY_POLICY_TEXT + "\n".join(lines))
        printed = print_canonical(doc)
        assert printed.splitlines()[-4:] == lines

    def test_canonical_policy_is_sorted(self):
        printed = print_canonical_policy(university_policy())
        lines = printed.splitlines()
        assert lines[0].startswith("users ")
        assert lines[0].split()[1:] == sorted(lines[0].split()[1:])

    def test_random_documents_round_trip(self):
        rng = random.Random(424242)
        for _ in range(250):
            policy = random_policy(rng)
            constraints = tuple(random_constraints(rng, policy))
            doc = Document(policy, constraints)
            assert parse_document(print_canonical(doc)) == doc


class TestErrorPositions:
    CASES = [
        ("users Ann\nroles R\nassign Ann Q", 3, 12, "Q"),
        ("users Ann\nassign Ann", 2, 11, "Ann"),
        ("users An{n", 1, 9, "{"),
        ("min-users", 1, 10, "min-users"),
    ]

    @pytest.mark.parametrize("text,line,column,token", CASES)
    def test_error_line_contains_offending_token(self, text, line, column, token):
        with pytest.raises(SourceError) as excinfo:
            parse_document(text)
        err = excinfo.value
        assert err.line == line
        assert err.column == column
        assert token in err.snippet
