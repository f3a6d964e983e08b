"""Command-line front end.

    python main.py check docs/examples/yes-voi-graph.json
    python main.py synthesize graph.json --decision X --context Z --k-override 1 --out scm.json
    python main.py meu scm.json --scope-edits "X-Z"
    python main.py voi scm.json --decision X --context Z
    python main.py reproduce obstacle-2

Reports are JSON on stdout (or --json-out); logs go to stderr.
Exit codes: 0 ok, 1 reproduce mismatch, 2 input error, 3 budget exceeded, 4 internal failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Optional

from pydantic import ValidationError

from .criteria import check_graph
from .errors import INPUT_ERRORS, BudgetExceeded, LemmaHypothesisFailed, UnknownFixture
from .fixtures import fixture_names, reproduce
from .graph_core import parse_scoped_graph
from .materiality_builder import synthesize
from .policy_search import apply_scope_edits, meu, stochastic_bound_check, voi_detail
from .reports import Rational, Report, SynthesisResult, check_result, digest, meu_model, voi_model
from .scm_engine import expected_utility, load_scm, reference_policy
from .settings import Settings, load_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_INTERNAL = 4

K_OVERRIDE_COMMANDS = {"synthesize", "reproduce"}


class CommandContext:
    """Parsed arguments plus the settings they override."""

    def __init__(self, args: argparse.Namespace, settings: Settings):
        self.args = args
        self.settings = settings

    @property
    def budget(self) -> int:
        return self.settings.policy_budget

    @property
    def threads(self) -> int:
        return self.settings.threads

    def read(self, path: str) -> bytes:
        return Path(path).read_bytes()

    def report(self, command: str, inputs: list[str | bytes], result: dict, warnings: list[str] = (), ok: bool = True) -> Report:
        warnings = list(warnings)
        if self.args.k_override is not None and command not in K_OVERRIDE_COMMANDS:
            warnings.append(f"--k-override has no effect on {command}")
        return Report(
            command=command,
            inputs_digest=digest(command, *inputs),
            seed=self.settings.seed,
            threads=self.threads,
            ok=ok,
            warnings=warnings,
            result=result,
        )


def cmd_check(ctx: CommandContext) -> Report:
    raw = ctx.read(ctx.args.graph)
    g = parse_scoped_graph(raw)
    logger.info(f"Checking {len(g.decisions)} decisions in {ctx.args.graph}")
    report = check_graph(g)
    return ctx.report("check", [raw], check_result(report).model_dump(mode="json"), report.warnings)


def cmd_synthesize(ctx: CommandContext) -> Report:
    args = ctx.args
    raw = ctx.read(args.graph)
    g = parse_scoped_graph(raw)
    paths, params, scm = synthesize(g, args.decision, args.context, args.k_override)
    compliant = expected_utility(scm, reference_policy(scm), ctx.threads)
    scm_json = scm.to_json()
    if args.out:
        Path(args.out).write_text(scm_json + "\n")
        logger.info(f"Wrote materiality SCM to {args.out}")
    result = SynthesisResult(
        decision=args.decision,
        context=args.context,
        k=params.k,
        b=params.b,
        c=params.c,
        k_override=params.k_override,
        paths=paths.describe(),
        compliant_utility=Rational.of(compliant),
        scm=json.loads(scm_json),
    )
    warnings = [params.warning] if params.warning else []
    inputs = [raw, args.decision, args.context, str(args.k_override)]
    return ctx.report("synthesize", inputs, result.model_dump(mode="json", exclude_none=True), warnings)


def cmd_meu(ctx: CommandContext) -> Report:
    args = ctx.args
    raw = ctx.read(args.scm)
    scm = load_scm(raw)
    scope = scm.default_scope()
    if args.scope_edits:
        scope = apply_scope_edits(scope, args.scope_edits)
    result = meu(scm, scope, ctx.budget, ctx.threads)
    body = meu_model(result).model_dump(mode="json")
    warnings = []
    if args.stochastic_samples:
        # mixed policies can never beat the deterministic optimum
        held = stochastic_bound_check(scm, scope, args.stochastic_samples, ctx.settings.seed, result.value)
        body["stochastic_bound_holds"] = held
        if not held:
            warnings.append("a sampled mixed policy exceeded the deterministic MEU")
    inputs = [raw, args.scope_edits or "", str(args.stochastic_samples)]
    return ctx.report("meu", inputs, body, warnings)


def cmd_voi(ctx: CommandContext) -> Report:
    args = ctx.args
    raw = ctx.read(args.scm)
    scm = load_scm(raw)
    with_context, without_context = voi_detail(scm, None, args.decision, args.context, ctx.budget, ctx.threads)
    body = voi_model(args.decision, args.context, with_context, without_context).model_dump(mode="json")
    return ctx.report("voi", [raw, args.decision, args.context], body)


def cmd_reproduce(ctx: CommandContext) -> Report:
    args = ctx.args
    names = [args.fixture] if args.fixture else fixture_names()
    unknown = [n for n in names if n not in fixture_names()]
    if unknown:
        raise UnknownFixture(unknown[0], fixture_names())
    k_override = args.k_override if args.k_override is not None else 1
    results = [reproduce(n, k_override, ctx.budget, ctx.threads) for n in names]
    ok = all(r.ok for r in results)
    body = {"fixtures": [r.model_dump(mode="json") for r in results]}
    warnings = [f"{r.fixture}: {c.label}" for r in results for c in r.checks if not c.ok]
    return ctx.report("reproduce", [*names, str(k_override)], body, warnings, ok)


COMMANDS: dict[str, Callable[[CommandContext], Report]] = {
    "check": cmd_check,
    "synthesize": cmd_synthesize,
    "meu": cmd_meu,
    "voi": cmd_voi,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Seed for sampled checks (default MATERIALITY_SEED)")
    common.add_argument("--threads", type=int, default=None, help="Worker threads for MEU search (default 1)")
    common.add_argument("--budget", type=int, default=None, help="Maximum enumerated policies")
    common.add_argument("--json-out", default=None, help="Write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="Include wall-clock seconds in the report")
    common.add_argument("--log-level", default=None, help="Logging level (default MATERIALITY_LOG_LEVEL)")
    common.add_argument(
        "--k-override", type=int, default=None,
        help=(
            "k for synthesized models instead of the derived one (reproduce defaults to 1). "
            "Below the derived k the counting guarantee is void: decisions that follow each other "
            "directly on the control path can leave the value of information at 0, and k >= 2 "
            "usually makes the policy space too large to enumerate. Ignored by check, meu and voi."
        ),
    )

    parser = argparse.ArgumentParser(prog="materiality", description="Materiality checks for scoped causal decision graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="Run every graphical criterion on a scoped graph")
    check.add_argument("graph", help="Scoped graph JSON file")

    synth = sub.add_parser("synthesize", parents=[common], help="Build a model in which a context is material")
    synth.add_argument("graph", help="Scoped graph JSON file")
    synth.add_argument("--decision", required=True)
    synth.add_argument("--context", required=True)
    synth.add_argument("--out", default=None, help="Write the synthesized SCM JSON here")

    meu_parser = sub.add_parser("meu", parents=[common], help="Maximum expected utility of an SCM")
    meu_parser.add_argument("scm", help="SCM JSON file")
    meu_parser.add_argument("--scope-edits", default="", help='Edits like "X0-Z0,X1+C"')
    meu_parser.add_argument("--stochastic-samples", type=int, default=0, help="Also sample this many mixed policies")

    voi_parser = sub.add_parser("voi", parents=[common], help="Value of one context for one decision")
    voi_parser.add_argument("scm", help="SCM JSON file")
    voi_parser.add_argument("--decision", required=True)
    voi_parser.add_argument("--context", required=True)

    rep = sub.add_parser("reproduce", parents=[common], help="Run a named fixture against its expected values")
    rep.add_argument("fixture", nargs="?", default=None, help="Fixture name (all fixtures when omitted)")
    return parser


def _emit(report: Report, json_out: Optional[str]) -> None:
    text = report.to_json()
    if json_out:
        Path(json_out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def run(argv: Optional[list[str]] = None) -> int:
    """Parse arguments, run one command, write its report. Returns the exit code."""
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(
            policy_budget=args.budget, threads=args.threads, seed=args.seed, log_level=args.log_level)
    except ValueError as e:
        logger.error(str(e))
        return EXIT_INPUT
    if args.log_level:
        logging.getLogger().setLevel(getattr(logging, args.log_level.upper(), logging.INFO))
    ctx = CommandContext(args, settings)

    started = time.perf_counter()
    try:
        report = COMMANDS[args.command](ctx)
    except (*INPUT_ERRORS, ValidationError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_INPUT
    except BudgetExceeded as e:
        logger.error(f"{args.command}: budget exceeded: {e}")
        return EXIT_BUDGET
    except LemmaHypothesisFailed as e:
        logger.exception(f"{args.command}: internal failure: {e}")
        return EXIT_INTERNAL
    if args.timing:
        report.timing = round(time.perf_counter() - started, 3)

    _emit(report, args.json_out)
    logger.info(f"{args.command} finished, ok={report.ok}")
    return EXIT_OK if report.ok else EXIT_MISMATCH


def main(argv: Optional[list[str]] = None) -> int:
    try:
        level = load_settings().log_level
    except ValueError:
        level = "INFO"
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(argv)
