from __future__ import annotations

import os
import stat

import pytest

from rbacv import (
    AccessDiversity, BinaryNotFound, EmissionMode, ExclusiveChoice,
    ForbiddenAssignment, MinRolesPerRecord, MinUsersPerRecord, OutcomeKind,
    PermissionCoverage, Polarity, Prerequisite, RecordCoverage, RoleCoverage,
    RunnerConfig, SodRecords, SodRoles, Status, UniqueRolePerRecord,
    UserCoverage, AccessCoverage, close_roles, emit_assumptions, emit_goal,
    interpret_output, make_policy, run_external, validate_policy,
    verify_emission,
)
from rbacv.prover import ProverEmission, mangle_names

ENUMERATE = EmissionMode.ENUMERATE
COMPLETE = EmissionMode.COMPLETE

ALL_FIXTURE_INSTANCES = [
    Prerequisite("Chair", "Instructor"),
    SodRoles(frozenset({"Instructor", "Secretary", "Student"})),
    RoleCoverage(),
    UserCoverage(),
    ExclusiveChoice(frozenset({"Instructor"}), frozenset({"Chair", "Dean"})),
    ForbiddenAssignment(frozenset({"John"}), frozenset({"Dean", "Chair"})),
    RecordCoverage(),
    PermissionCoverage(),
    MinRolesPerRecord("REC4", 2),
    UniqueRolePerRecord("REC6"),
    SodRecords(frozenset({"REC1", "REC2", "REC5"})),
    AccessCoverage(),
    MinUsersPerRecord("REC1", 2),
    AccessDiversity("REC3", 3, 2),
]


class TestMangling:
    def test_safe_names_unchanged(self):
        mapping = mangle_names({"Sam", "REC1", "Chair"})
        assert mapping == {"Sam": "Sam", "REC1": "REC1", "Chair": "Chair"}

    def test_variable_lookalikes_prefixed(self):
        mapping = mangle_names({"victor", "x1", "zone", "Alpha"})
        assert mapping["victor"] == "C_victor"
        assert mapping["x1"] == "C_x1"
        assert mapping["zone"] == "C_zone"
        assert mapping["Alpha"] == "Alpha"

    def test_injective_under_collisions(self):
        mapping = mangle_names({"x1", "C_x1"})
        assert len(set(mapping.values())) == 2
        assert mapping["C_x1"] == "C_x1"
        assert mapping["x1"] == "C_C_x1"

    def test_no_token_starts_with_variable_initial(self):
        mapping = mangle_names({c + "tail" for c in "uvwxyzabc"})
        assert all(tok[0] not in "uvwxyz" for tok in mapping.values())


class TestEmitAssumptions:
    def test_enumerate_counts(self, university_closed):
        text = emit_assumptions(university_closed, ENUMERATE)
        lines = text.splitlines()
        assert sum(1 for l in lines if l.startswith("Has_Role(")) == 7
        assert sum(1 for l in lines if l.startswith("Permission(")) == 8
        assert sum(1 for l in lines if l.startswith("all x (Has_Role")) == 3
        assert sum(1 for l in lines if l.startswith("-")) == 0
        assert "all x all y all z (Has_Role(x,y) & Permission(y,z) " \
               "-> Has_Access(x,z))." in lines

    def test_complete_literal_partition(self, university_closed):
        text = emit_assumptions(university_closed, COMPLETE)
        lines = text.splitlines()
        pos_roles = sum(1 for l in lines if l.startswith("Has_Role("))
        neg_roles = sum(1 for l in lines if l.startswith("-Has_Role("))
        pos_perms = sum(1 for l in lines if l.startswith("Permission("))
        neg_perms = sum(1 for l in lines if l.startswith("-Permission("))
        assert pos_roles + neg_roles == 30      # |U| * |R|
        assert pos_perms + neg_perms == 42      # |R| * |O|
        assert pos_perms == 8 and neg_perms == 34

    def test_complete_mode_positives_follow_closure(self, university_closed):
        # The implication axioms derive Has_Role(David,Student); asserting
        # its negation would make the theory inconsistent, so completion is
        # computed against the closed relation.
        text = emit_assumptions(university_closed, COMPLETE)
        assert "Has_Role(David,Student)." in text.splitlines()
        assert "-Has_Role(David,Student)." not in text

    def test_empty_policy_emits_only_access_rule(self):
        closed = close_roles(validate_policy(make_policy()))
        for mode in (ENUMERATE, COMPLETE):
            text = emit_assumptions(closed, mode)
            assert text == ("all x all y all z (Has_Role(x,y) & Permission(y,z) "
                            "-> Has_Access(x,z)).\n")

    def test_conflict_sets_become_pairwise_disequalities(self, university_closed):
        text = emit_assumptions(
            university_closed, ENUMERATE,
            conflict_sets=(frozenset({"Instructor", "Secretary", "Student"}),))
        lines = text.splitlines()
        assert "Instructor != Secretary." in lines
        assert "Instructor != Student." in lines
        assert "Secretary != Student." in lines

    def test_byte_stability(self, university_closed):
        for mode in (ENUMERATE, COMPLETE):
            assert emit_assumptions(university_closed, mode) == \
                emit_assumptions(university_closed, mode)


class TestEmitGoal:
    def test_prerequisite_enumerate_uses_trigger_holders(self, university_closed):
        e = emit_goal(Prerequisite("Chair", "Instructor"), university_closed, ENUMERATE)
        assert e.goal == "x = James -> Has_Role(x,Instructor).\n"
        e2 = emit_goal(Prerequisite("Instructor", "Student"), university_closed,
                       ENUMERATE)
        assert e2.goal == ("x = David | x = James | x = John "
                           "-> Has_Role(x,Student).\n")

    def test_prerequisite_complete_is_directly_quantified(self, university_closed):
        e = emit_goal(Prerequisite("Chair", "Instructor"), university_closed, COMPLETE)
        assert e.goal == "all x (Has_Role(x,Chair) -> Has_Role(x,Instructor)).\n"

    def test_role_coverage_enumerate_matches_declaration_disjunction(
            self, university_closed):
        e = emit_goal(RoleCoverage(), university_closed, ENUMERATE)
        assert e.goal == ("x = Chair | x = Dean | x = Instructor | x = Secretary "
                          "| x = Student | x = TA -> exists y (Has_Role(y,x)).\n")

    def test_sod_goal_same_in_both_modes(self, university_closed):
        c = SodRoles(frozenset({"Instructor", "Secretary", "Student"}))
        goals = {emit_goal(c, university_closed, mode).goal
                 for mode in (ENUMERATE, COMPLETE)}
        assert goals == {
            "exists x exists y exists z (Has_Role(x,y) & Has_Role(x,z) & "
            "(y = Instructor | y = Secretary | y = Student) & "
            "(z = Instructor | z = Secretary | z = Student) & y != z).\n"
        }

    def test_min_users_expands_into_three_existentials(self, university_closed):
        e = emit_goal(MinUsersPerRecord("REC3", 3), university_closed, ENUMERATE)
        assert e.goal == ("z = REC3 -> exists x exists y exists v "
                          "(Has_Access(x,z) & Has_Access(y,z) & Has_Access(v,z) "
                          "& x != y & x != v & y != v).\n")

    def test_diversity_matches_the_anchored_disjunction(self, university_closed):
        e = emit_goal(AccessDiversity("REC3", 3, 2), university_closed, ENUMERATE)
        assert e.goal == (
            "z = REC3 -> exists x exists y exists v "
            "exists r1 exists r2 exists r3 "
            "(Has_Access(x,z) & Has_Access(y,z) & Has_Access(v,z) & "
            "Has_Role(x,r1) & Has_Role(y,r2) & Has_Role(v,r3) & "
            "(r1 != r2 | r1 != r3) & x != y & x != v & y != v).\n")

    def test_unique_role_goal_covers_zero_and_many(self, university_closed):
        e = emit_goal(UniqueRolePerRecord("REC6"), university_closed, ENUMERATE)
        assert e.goal == ("(exists x exists y (Permission(x,REC6) & "
                          "Permission(y,REC6) & x != y)) | "
                          "-(exists v (Permission(v,REC6))).\n")
        assert e.polarity is Polarity.NEGATIVE_FORM

    def test_vacuous_goal_for_empty_universal_side(self):
        closed = close_roles(validate_policy(make_policy(users=["Ann"])))
        e = emit_goal(RoleCoverage(), closed, ENUMERATE)
        assert e.goal == "all x (x = x).\n"

    def test_conflict_disequalities_attached_to_assumptions(self, university_closed):
        e = emit_goal(SodRecords(frozenset({"REC1", "REC2", "REC5"})),
                      university_closed, ENUMERATE)
        assert "REC1 != REC2." in e.assumptions.splitlines()

    def test_polarity_rides_along(self, university_closed):
        for c in ALL_FIXTURE_INSTANCES:
            for mode in (ENUMERATE, COMPLETE):
                e = emit_goal(c, university_closed, mode)
                from rbacv import polarity_of
                assert e.polarity is polarity_of(c)

    def test_mangled_constants_in_emission(self):
        closed = close_roles(validate_policy(make_policy(
            users=["victor"], roles=["worker"], records=["vault"],
            assignments=[("victor", "worker")],
            permissions=[("worker", "vault")],
        )))
        e = emit_goal(MinUsersPerRecord("vault", 1), closed, COMPLETE)
        assert "Has_Role(C_victor,C_worker)." in e.assumptions
        assert "C_vault" in e.goal
        assert e.mangled_names == {"victor": "C_victor", "worker": "C_worker",
                                   "vault": "C_vault"}
        assert verify_emission(e.input_text(),
                               frozenset(e.mangled_names.values())) == []


class TestEmissionGrammar:
    def test_all_fixture_emissions_pass(self, university_closed):
        for c in ALL_FIXTURE_INSTANCES:
            for mode in (ENUMERATE, COMPLETE):
                e = emit_goal(c, university_closed, mode)
                problems = verify_emission(e.input_text(),
                                           frozenset(e.mangled_names.values()))
                assert problems == [], (c, mode, problems)

    def test_random_policy_emissions_pass(self):
        import random
        from rbacv.oracle_diff import random_constraints, random_policy
        rng = random.Random(777)
        for _ in range(25):
            policy = random_policy(rng)
            closed = close_roles(policy)
            for c in random_constraints(rng, policy):
                for mode in (ENUMERATE, COMPLETE):
                    e = emit_goal(c, closed, mode)
                    problems = verify_emission(
                        e.input_text(), frozenset(e.mangled_names.values()))
                    assert problems == [], (c, mode, problems)

    def test_missing_period_rejected(self):
        text = ("formulas(assumptions).\nHas_Role(A,B)\nend_of_list.\n\n"
                "formulas(goals).\nall x (x = x).\nend_of_list.\n")
        assert any("expected '.'" in p for p in verify_emission(text))

    def test_unbalanced_parens_rejected(self):
        text = ("formulas(assumptions).\nHas_Role(A,B.\nend_of_list.\n\n"
                "formulas(goals).\nall x (x = x).\nend_of_list.\n")
        assert verify_emission(text)

    def test_foreign_operator_rejected(self):
        text = ("formulas(assumptions).\nHas_Role(A,B) + Q(C).\nend_of_list.\n\n"
                "formulas(goals).\nall x (x = x).\nend_of_list.\n")
        assert any("illegal character" in p for p in verify_emission(text))

    def test_missing_block_marker_rejected(self):
        text = "formulas(assumptions).\nHas_Role(A,B).\nend_of_list.\n"
        assert any("missing list marker" in p for p in verify_emission(text))

    def test_unmangled_constant_detected(self):
        text = ("formulas(assumptions).\nHas_Role(victor,B).\nend_of_list.\n\n"
                "formulas(goals).\nall x (x = x).\nend_of_list.\n")
        problems = verify_emission(text, constants=frozenset({"victor", "B"}))
        assert any("lexes as a variable" in p for p in problems)

    def test_statement_outside_blocks_rejected(self):
        text = ("Has_Role(A,B).\nformulas(assumptions).\nend_of_list.\n\n"
                "formulas(goals).\nall x (x = x).\nend_of_list.\n")
        assert any("outside any list block" in p for p in verify_emission(text))


class TestInterpretOutput:
    PROVED = "== PROOF ==\nTHEOREM PROVED\n== end of proof =="
    MODEL = ("============================== MODEL ==============================\n"
             "interpretation( 2, [number=1, seconds=0], [\n"
             "  relation(Has_Role(_,_), [0,0,0,0])]).\n")

    def test_proved_positive_is_satisfied(self):
        outcome, status = interpret_output(self.PROVED, Polarity.POSITIVE_FORM)
        assert outcome.kind is OutcomeKind.PROVED
        assert status is Status.SATISFIED

    def test_proved_negative_is_violated(self):
        _, status = interpret_output(self.PROVED, Polarity.NEGATIVE_FORM)
        assert status is Status.VIOLATED

    def test_counterexample_positive_is_violated(self):
        outcome, status = interpret_output(self.MODEL, Polarity.POSITIVE_FORM)
        assert outcome.kind is OutcomeKind.COUNTEREXAMPLE_FOUND
        assert status is Status.VIOLATED

    def test_counterexample_negative_is_satisfied(self):
        _, status = interpret_output(self.MODEL, Polarity.NEGATIVE_FORM)
        assert status is Status.SATISFIED

    def test_empty_output_is_unresolved_without_status(self):
        for polarity in (Polarity.POSITIVE_FORM, Polarity.NEGATIVE_FORM):
            outcome, status = interpret_output("", polarity)
            assert outcome.kind is OutcomeKind.UNRESOLVED
            assert status is None

    def test_garbage_output_is_unresolved(self):
        outcome, status = interpret_output("SEARCH FAILED\nexit 2",
                                           Polarity.POSITIVE_FORM)
        assert outcome.kind is OutcomeKind.UNRESOLVED
        assert status is None


def _stub_binary(tmp_path, name: str, body: str) -> str:
    path = tmp_path / name
    path.write_text(f"#!/bin/sh\n{body}\n")
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


def _emission() -> ProverEmission:
    return ProverEmission(assumptions="Has_Role(A,B).\n",
                          goal="exists x (Has_Role(x,B)).\n",
                          polarity=Polarity.POSITIVE_FORM)


class TestRunExternal:
    def test_proved_classified(self, tmp_path):
        binary = _stub_binary(tmp_path, "fakeprover", "echo THEOREM PROVED")
        outcome = run_external(_emission(), RunnerConfig(binary=binary))
        assert outcome.kind is OutcomeKind.PROVED

    def test_input_file_reaches_the_binary(self, tmp_path):
        copied = tmp_path / "seen.in"
        binary = _stub_binary(tmp_path, "fakeprover", f'cat "$2" > {copied}')
        run_external(_emission(), RunnerConfig(binary=binary))
        content = copied.read_text()
        assert content.startswith("formulas(assumptions).\n")
        assert "end_of_list." in content
        assert "formulas(goals)." in content

    def test_timeout_maps_to_unresolved_with_note(self, tmp_path):
        binary = _stub_binary(tmp_path, "slowprover", "sleep 5")
        outcome = run_external(_emission(),
                               RunnerConfig(binary=binary, timeout_s=0.2))
        assert outcome.kind is OutcomeKind.UNRESOLVED
        assert "timed out" in outcome.note

    def test_missing_binary_raises(self):
        with pytest.raises(BinaryNotFound):
            run_external(_emission(), RunnerConfig(binary="/no/such/prover"))

    def test_garbage_output_is_unresolved(self, tmp_path):
        binary = _stub_binary(tmp_path, "noisy", "echo nothing to see")
        outcome = run_external(_emission(), RunnerConfig(binary=binary))
        assert outcome.kind is OutcomeKind.UNRESOLVED


@pytest.mark.skipif(not os.environ.get("RBACV_PROVER_PATH"),
                    reason="no external prover binary configured")
class TestExternalParity:
    def test_complete_mode_agrees_with_engine(self, university_closed):
        from rbacv import check
        runner = RunnerConfig(binary=os.environ["RBACV_PROVER_PATH"],
                              timeout_s=20)
        for c in ALL_FIXTURE_INSTANCES:
            e = emit_goal(c, university_closed, COMPLETE)
            outcome = run_external(e, runner)
            _, status = interpret_output(outcome.raw, e.polarity)
            if status is not None:
                assert status is check(university_closed, c).status, c
