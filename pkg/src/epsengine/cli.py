"""Command line driver: run a problem, re-check a trace, explain a step."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass

from .language import num, substitute, to_sexpr
from .problems import ParseError, Problem, parse_problem
from .process import (
    HStep,
    Outcome,
    ProcessInvariantError,
    compute_plan,
    extract_witness,
    run,
)
from .substitution import Substitution, models, serialize

EXIT_SOLVED = 0
EXIT_INPUT = 1
EXIT_STEP_LIMIT = 2
EXIT_INTERNAL = 3

DEFAULT_MAX_STEPS = 10**6


@dataclass
class RunConfig:
    max_steps: int = DEFAULT_MAX_STEPS
    check: bool = False
    trace: str | None = None
    fmt: str = "text"

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max-steps must be at least 1")


def _problem_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _encode(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def step_record(step: HStep) -> dict:
    return {
        "type": "step",
        "step": step.index,
        "I": step.cr_index,
        "rankCase": step.case,
        "rank": step.rank,
        "e": step.e,
        "v": step.v,
        "before": step.before,
        "after": step.after,
        "added": list(step.added),
        "removed": list(step.removed),
        "P": list(step.p_after),
        "Vadded": {str(k): v for k, v in sorted(step.v_added.items())},
        "Vremoved": list(step.v_removed),
        "solving": step.solving,
    }


def trace_lines(problem_text: str, problem: Problem, outcome: Outcome) -> list[str]:
    lines = [
        _encode(
            {"type": "header", "format": 1, "problem": _problem_digest(problem_text)}
        )
    ]
    lines += [_encode(step_record(s)) for s in outcome.steps]
    lines.append(
        _encode(
            {
                "type": "summary",
                "status": outcome.status,
                "steps": len(outcome.steps),
                "final": serialize(outcome.hs.sub),
            }
        )
    )
    return lines


def _report_witnesses(problem: Problem, outcome: Outcome, out) -> None:
    for spec in problem.goals:
        try:
            n = extract_witness(outcome.hs.sub, spec.goal)
        except ProcessInvariantError:
            print(f"goal {spec.goal.text}: not decided true", file=out)
            continue
        instance = substitute(spec.goal.phi, {0: num(n)})
        truth = models(Substitution.empty().extended(), instance)
        print(
            f"goal {spec.goal.text}: witness {n}; "
            f"instance {to_sexpr(instance)} is {'true' if truth else 'false'}",
            file=out,
        )


def cmd_run(path: str, cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        text = open(path, encoding="utf-8").read()
        problem = parse_problem(text)
    except OSError as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT
    except ParseError as e:
        print(f"error: {path}:{e}", file=err)
        return EXIT_INPUT
    max_steps = cfg.max_steps
    if max_steps == DEFAULT_MAX_STEPS:
        max_steps = problem.option("max-steps", DEFAULT_MAX_STEPS)
    outcome = run(problem.crits, problem.ctx, max_steps=max_steps, check=cfg.check)
    lines = trace_lines(text, problem, outcome)
    if cfg.trace:
        with open(cfg.trace, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    if cfg.fmt == "structured":
        for line in lines:
            print(line, file=out)
    else:
        for s in outcome.steps:
            print(
                f"step {s.index}: Cr[{s.cr_index}] case {s.case} "
                f"rank {s.rank}: {s.e} := {s.v}",
                file=out,
            )
        if outcome.solved:
            print(f"solved in {len(outcome.steps)} steps", file=out)
        else:
            print(f"{outcome.status}: {outcome.diagnostics}", file=out)
        print(f"final substitution: {serialize(outcome.hs.sub)}", file=out)
        if outcome.solved:
            _report_witnesses(problem, outcome, out)
    if outcome.status == "solved":
        return EXIT_SOLVED
    if outcome.status == "step-limit":
        return EXIT_STEP_LIMIT
    return EXIT_INTERNAL


def cmd_check(trace_path: str, problem_path: str, out=None, err=None) -> int:
    """Replay a trace: re-derive every step and compare record for record."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        recorded = [
            json.loads(line)
            for line in open(trace_path, encoding="utf-8")
            if line.strip()
        ]
        text = open(problem_path, encoding="utf-8").read()
        problem = parse_problem(text)
    except OSError as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT
    except (ParseError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT
    if not recorded or recorded[0].get("type") != "header":
        print("trace: missing header record", file=err)
        return EXIT_INPUT
    if recorded[0].get("problem") != _problem_digest(text):
        print("trace: header does not match the problem file", file=err)
        return EXIT_INPUT
    rec_steps = [r for r in recorded if r.get("type") == "step"]
    rec_summary = [r for r in recorded if r.get("type") == "summary"]

    if rec_summary and rec_summary[0].get("status") == "step-limit":
        max_steps = len(rec_steps)
    else:
        max_steps = max(
            problem.option("max-steps", DEFAULT_MAX_STEPS), len(rec_steps)
        )
    outcome = run(problem.crits, problem.ctx, max_steps=max_steps, check=True)
    if outcome.status == "internal-error":
        print(f"replay failed invariants: {outcome.diagnostics}", file=err)
        return EXIT_INTERNAL
    derived = [step_record(s) for s in outcome.steps]
    for i, rec in enumerate(rec_steps):
        if i >= len(derived):
            print(f"divergence at step {i}: replay has no such step", file=err)
            return EXIT_INPUT
        if rec != derived[i]:
            keys = sorted(
                k for k in set(rec) | set(derived[i]) if rec.get(k) != derived[i].get(k)
            )
            print(
                f"divergence at step {i}: fields {', '.join(keys)}", file=err
            )
            return EXIT_INPUT
    if len(derived) != len(rec_steps):
        print(
            f"divergence at step {len(rec_steps)}: trace is missing steps",
            file=err,
        )
        return EXIT_INPUT
    if rec_summary:
        want = {
            "type": "summary",
            "status": outcome.status,
            "steps": len(outcome.steps),
            "final": serialize(outcome.hs.sub),
        }
        if rec_summary[0] != want:
            print("divergence in summary record", file=err)
            return EXIT_INPUT
    print(f"trace verified: {len(rec_steps)} steps", file=out)
    return EXIT_SOLVED



def cmd_explain(path: str, step_index: int, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        text = open(path, encoding="utf-8").read()
        problem = parse_problem(text)
    except OSError as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT
    except ParseError as e:
        print(f"error: {path}:{e}", file=err)
        return EXIT_INPUT
    max_steps = problem.option("max-steps", DEFAULT_MAX_STEPS)
    outcome = run(problem.crits, problem.ctx, max_steps=max_steps)
    if step_index == len(outcome.steps) and outcome.solved:
        print("already solving", file=out)
        return EXIT_SOLVED
    if step_index >= len(outcome.steps) or step_index < 0:
        print(
            f"error: step {step_index} out of range "
            f"(process ran {len(outcome.steps)} steps)",
            file=err,
        )
        return EXIT_INPUT
    before = run(problem.crits, problem.ctx, max_steps=step_index)
    plan = compute_plan(before.hs, problem.crits, problem.ctx)
    assert plan is not None
    cf = problem.crits[plan.cr_index]
    record = outcome.steps[step_index]
    print(f"step {step_index}", file=out)
    print(f"  chosen Cr[{plan.cr_index}]: {cf.kind} {to_sexpr(cf.formula)}", file=out)
    print(f"  analysis: {cf.kind} names {record.e} with value {record.v}", file=out)
    print(f"  rank {record.rank}, case {record.case}", file=out)
    print(f"  before: {serialize(before.hs.sub)}", file=out)
    after = run(problem.crits, problem.ctx, max_steps=step_index + 1)
    print(f"  after:  {serialize(after.hs.sub)}", file=out)
    print(f"  P: {list(before.hs.p)} -> {list(after.hs.p)}", file=out)
    return EXIT_SOLVED


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="epsengine",
        description="Run the substitution repair process over a problem file.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run a problem to a solving substitution")
    p_run.add_argument("problem")
    p_run.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p_run.add_argument(
        "--check",
        action="store_true",
        help="verify correctness and history validity after every step",
    )
    p_run.add_argument("--trace", help="write the structured trace to a file")
    p_run.add_argument(
        "--format", choices=("text", "structured"), default="text", dest="fmt"
    )
    p_run.add_argument(
        "--explain",
        type=int,
        default=None,
        metavar="K",
        help="describe step K of the run instead of running it",
    )

    p_check = sub.add_parser("check", help="replay and verify a recorded trace")
    p_check.add_argument("trace")
    p_check.add_argument("problem")

    p_explain = sub.add_parser("explain", help="describe one step of the run")
    p_explain.add_argument("problem")
    p_explain.add_argument("step", type=int)

    args = ap.parse_args(argv)
    if args.cmd == "run":
        if args.explain is not None:
            return cmd_explain(args.problem, args.explain)
        try:
            cfg = RunConfig(
                max_steps=args.max_steps,
                check=args.check,
                trace=args.trace,
                fmt=args.fmt,
            )
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        return cmd_run(args.problem, cfg)
    if args.cmd == "check":
        return cmd_check(args.trace, args.problem)
    return cmd_explain(args.problem, args.step)


if __name__ == "__main__":
    sys.exit(main())
