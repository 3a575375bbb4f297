"""Command-line verifier: check, emit, oracle-diff.

``check`` decides a constraint file against a policy file and reports per
constraint; exit status 0 means everything is satisfied, 1 means at least
one violation, 2 means the run never produced a report (bad files, bad
flags). ``emit`` writes one prover input file per constraint plus a tab
separated manifest. ``oracle-diff`` runs the differential harness.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .constraints import (
    ConstraintSpec, Status, VerificationResult, describe, polarity_of, render,
)
from .evaluator import check as run_check
from .model import ClosedPolicy, Policy, close_roles
from .oracle_diff import run_diff
from .parser import SourceError, parse_constraints, parse_policy
from .prover import (
    BinaryNotFound, EmissionMode, LaunchFailure, OutcomeKind, RunnerConfig,
    emit_goal, map_outcome, run_external,
)

PROVER_PATH_ENV = "RBACV_PROVER_PATH"
WITNESS_DISPLAY_LIMIT = 10


@dataclass(frozen=True)
class ReportEntry:
    index: int
    constraint: ConstraintSpec
    result: VerificationResult
    prover_kind: OutcomeKind | None = None
    prover_status: Status | None = None


@dataclass(frozen=True)
class Report:
    policy_summary: dict[str, int]
    entries: tuple[ReportEntry, ...]
    elapsed_ms: int

    @property
    def overall(self) -> Status:
        if all(e.result.status is Status.SATISFIED for e in self.entries):
            return Status.SATISFIED
        return Status.VIOLATED


def summarize_policy(p: Policy) -> dict[str, int]:
    return {
        "users": len(p.users),
        "roles": len(p.roles),
        "records": len(p.records),
        "assignments": len(p.assignments),
        "implications": len(p.implications),
        "permissions": len(p.permissions),
    }


def build_report(closed: ClosedPolicy, specs: list[ConstraintSpec],
                 exhaustive: bool = False,
                 runner: RunnerConfig | None = None) -> Report:
    start = time.perf_counter()
    entries = []
    for index, c in enumerate(specs, start=1):
        result = run_check(closed, c, exhaustive=exhaustive)
        prover_kind = prover_status = None
        if runner is not None:
            emission = emit_goal(c, closed, EmissionMode.COMPLETE)
            outcome = run_external(emission, runner)
            prover_kind = outcome.kind
            prover_status = map_outcome(outcome.kind, emission.polarity)
        entries.append(ReportEntry(index, c, result, prover_kind, prover_status))
    elapsed_ms = int((time.perf_counter() - start) * 1000)
    return Report(summarize_policy(closed.base), tuple(entries), elapsed_ms)


def render_text(report: Report, show_timing: bool = True,
                all_witnesses: bool = False) -> str:
    summary = report.policy_summary
    lines = [
        "policy: "
        + ", ".join(f"{summary[key]} {key}" for key in
                    ("users", "roles", "records", "assignments",
                     "implications", "permissions"))
    ]
    for e in report.entries:
        status = "SATISFIED" if e.result.satisfied else "VIOLATED "
        lines.append(f"[{e.index:>2}] {status} {render(e.constraint)}")
        lines.append(f"     {e.result.explanation}")
        shown = e.result.witnesses if all_witnesses \
            else e.result.witnesses[:WITNESS_DISPLAY_LIMIT]
        for witness in shown:
            lines.append("     witness: " + (" ".join(witness) or "(none)"))
        hidden = len(e.result.witnesses) - len(shown)
        if hidden > 0:
            lines.append(f"     ... {hidden} more witnesses")
        if e.prover_kind is not None:
            verdict = e.prover_status.value if e.prover_status else "no status"
            lines.append(f"     prover: {e.prover_kind.value} -> {verdict}")
    violated = sum(1 for e in report.entries if not e.result.satisfied)
    lines.append(f"overall: {report.overall.value.upper()} "
                 f"({violated} of {len(report.entries)} violated)")
    if show_timing:
        lines.append(f"elapsed: {report.elapsed_ms} ms")
    return "\n".join(lines) + "\n"


def render_json(report: Report, show_timing: bool = True,
                all_witnesses: bool = False) -> str:
    results = []
    for e in report.entries:
        shown = e.result.witnesses if all_witnesses \
            else e.result.witnesses[:WITNESS_DISPLAY_LIMIT]
        entry = {
            "index": e.index,
            "constraint": render(e.constraint),
            "family": type(e.constraint).keyword,
            "description": describe(e.constraint),
            "polarity": polarity_of(e.constraint).value,
            "status": e.result.status.value,
            "witnesses": [list(w) for w in shown],
            "violation_count": e.result.violation_count,
            "explanation": e.result.explanation,
        }
        if e.prover_kind is not None:
            entry["prover_outcome"] = e.prover_kind.value
            entry["prover_status"] = (
                e.prover_status.value if e.prover_status else None)
        results.append(entry)
    payload = {
        "policy_summary": report.policy_summary,
        "results": results,
        "overall": report.overall.value,
    }
    if show_timing:
        payload["elapsed_ms"] = report.elapsed_ms
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def report_from_json(text: str) -> dict:
    """Parse a JSON report back into statuses and witness tuples."""
    payload = json.loads(text)
    return {
        "overall": Status(payload["overall"]),
        "results": [
            {
                "constraint": item["constraint"],
                "status": Status(item["status"]),
                "witnesses": [tuple(w) for w in item["witnesses"]],
            }
            for item in payload["results"]
        ],
    }


def _load(policy_path: str, constraints_path: str) -> tuple[Policy, list[ConstraintSpec]]:
    policy_text = Path(policy_path).read_text(encoding="utf-8")
    policy = parse_policy(policy_text)
    constraints_text = Path(constraints_path).read_text(encoding="utf-8")
    specs = parse_constraints(constraints_text, policy)
    return policy, specs


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_check(args: argparse.Namespace) -> int:
    try:
        policy, specs = _load(args.policy, args.constraints)
    except (OSError, SourceError, ValueError) as exc:
        return _fail(str(exc))
    runner = None
    if args.via_prover:
        binary = args.prover_path or os.environ.get(PROVER_PATH_ENV)
        if not binary:
            return _fail(f"--via-prover needs --prover-path or ${PROVER_PATH_ENV}")
        runner = RunnerConfig(binary=binary, timeout_s=args.prover_timeout)
    closed = close_roles(policy)
    try:
        report = build_report(closed, specs, exhaustive=args.all_witnesses,
                              runner=runner)
    except (BinaryNotFound, LaunchFailure) as exc:
        return _fail(str(exc))
    renderer = render_json if args.format == "json" else render_text
    sys.stdout.write(renderer(report, show_timing=not args.no_timing,
                              all_witnesses=args.all_witnesses))
    return 0 if report.overall is Status.SATISFIED else 1


def cmd_emit(args: argparse.Namespace) -> int:
    try:
        policy, specs = _load(args.policy, args.constraints)
    except (OSError, SourceError, ValueError) as exc:
        return _fail(str(exc))
    closed = close_roles(policy)
    mode = EmissionMode(args.mode)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = ["file\tconstraint\tpolarity"]
        for index, c in enumerate(specs, start=1):
            emission = emit_goal(c, closed, mode)
            name = f"{index:03d}_{type(c).keyword}.in"
            (out_dir / name).write_text(emission.input_text(), encoding="utf-8")
            manifest.append(f"{name}\t{render(c)}\t{emission.polarity.value}")
        (out_dir / "manifest.tsv").write_text(
            "\n".join(manifest) + "\n", encoding="utf-8")
    except OSError as exc:
        return _fail(str(exc))
    print(f"wrote {len(specs)} prover input file(s) and manifest.tsv to {out_dir}")
    return 0


def cmd_oracle_diff(args: argparse.Namespace) -> int:
    report = run_diff(args.seed, args.cases)
    if report.agreed:
        print(f"oracle-diff: {report.comparisons} comparisons over "
              f"{report.cases} policies, all agreed (seed {args.seed})")
        return 0
    d = report.disagreement
    print("oracle-diff: DISAGREEMENT after "
          f"{report.comparisons} comparisons (seed {args.seed})")
    print(f"  check says:  {d.check_status.value}")
    print(f"  oracle says: {d.oracle_status.value}")
    print("reproducer document:")
    sys.stdout.write(d.reproducer())
    return 1


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbacv",
        description="Verify role-based access-control policies against "
                    "separation-of-duty and coverage constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--format", choices=("text", "json"), default="text")
    shared.add_argument("--all-witnesses", action="store_true",
                        help="enumerate every violating tuple instead of the "
                             "first per offender")
    shared.add_argument("--no-timing", action="store_true",
                        help="omit elapsed time for byte-identical reports")

    p_check = sub.add_parser("check", parents=[shared],
                             help="evaluate constraints against a policy")
    p_check.add_argument("policy")
    p_check.add_argument("constraints")
    p_check.add_argument("--via-prover", action="store_true",
                         help="also run each constraint through an external "
                              "prover binary in complete mode")
    p_check.add_argument("--prover-path", default=None,
                         help=f"prover binary (default ${PROVER_PATH_ENV})")
    p_check.add_argument("--prover-timeout", type=float, default=30.0)
    p_check.set_defaults(func=cmd_check)

    p_emit = sub.add_parser("emit", parents=[shared],
                            help="write prover input files and a manifest")
    p_emit.add_argument("policy")
    p_emit.add_argument("constraints")
    p_emit.add_argument("--mode", choices=("enumerate", "complete"),
                        default="complete")
    p_emit.add_argument("--out", required=True, help="output directory")
    p_emit.set_defaults(func=cmd_emit)

    p_diff = sub.add_parser("oracle-diff", parents=[shared],
                            help="compare family checks with the formula oracle")
    p_diff.add_argument("--seed", type=int, default=42)
    p_diff.add_argument("--cases", type=_positive_int, default=500)
    p_diff.set_defaults(func=cmd_oracle_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
