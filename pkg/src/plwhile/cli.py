"""Command-line driver: ``plwhile run|check|advantage|lint``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .checks import lint
from .dist import fmt_weight
from .game import GameError, advantage_with_witness, experiment_value, init_system, show_strategy
from .interp import EvalFault, ExecStats, init_memory, run_proc
from .parser import ParseError, parse
from .script import check_script
from .syntax import Context

OK, FAILED, USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plwhile", description="Relational proofs and exact games for plWhile.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="print the exact output distribution of a procedure")
    run.add_argument("file")
    run.add_argument("--proc", required=True, help="Module.proc")
    run.add_argument("--args", nargs="*", default=[], help="constant names")
    run.add_argument("--fuel", type=int, default=64)
    run.add_argument("--no-init", action="store_true", help="start from type defaults instead of running init")

    chk = sub.add_parser("check", help="check the proof script of a goal or claim")
    chk.add_argument("file")
    chk.add_argument("--goal", required=True)
    chk.add_argument("--fuel", type=int, default=64)

    adv = sub.add_parser("advantage", help="exact optimal distinguishing advantage")
    adv.add_argument("file")
    adv.add_argument("--left", required=True)
    adv.add_argument("--right", required=True)
    adv.add_argument("--depth", type=int, default=4)
    adv.add_argument("--fuel", type=int, default=64)
    adv.add_argument("--experiment", action="store_true", help="also print the guessing-experiment success probability")

    lnt = sub.add_parser("lint", help="type and guard checks")
    lnt.add_argument("file")
    return ap


def _load(path: str) -> Context:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Usage(f"{path}: {exc.strerror}") from None
    try:
        src = parse(text)
    except ParseError as exc:
        raise _Usage(f"{path}:{exc.line}:{exc.col}: {exc.message}") from None
    try:
        return Context(src)
    except (ValueError, KeyError) as exc:
        raise _Usage(f"{path}: {exc}") from None


def _lint_or_fail(ctx: Context, path: str) -> None:
    issues = lint(ctx)
    if issues:
        raise _Usage("\n".join(f"{path}: {i}" for i in issues))


def _const(ctx: Context, text: str):
    if text in ("true", "false"):
        return text == "true"
    if text in ctx.consts:
        return ctx.consts[text]
    raise _Usage(f"unknown constant {text}")


def cmd_run(a, out) -> int:
    ctx = _load(a.file)
    _lint_or_fail(ctx, a.file)
    module, _, proc = a.proc.partition(".")
    if module not in ctx.modules or not ctx.modules[module].has_proc(proc):
        raise _Usage(f"unknown procedure {a.proc}")
    args = tuple(_const(ctx, t) for t in a.args)
    m = init_memory(ctx, module)
    stats = ExecStats()
    try:
        if not a.no_init and proc != "init" and ctx.modules[module].has_proc("init"):
            states = run_proc(ctx, module, "init", (), m, a.fuel, stats).map(lambda r: r[0])
        else:
            from .dist import Dist

            states = Dist.dirac(m)
        res = states.bind(lambda mm: run_proc(ctx, module, proc, args, mm, a.fuel, stats)).map(lambda r: r[1])
    except (EvalFault, ValueError) as exc:
        print(f"error: {exc}", file=out)
        return FAILED
    print(res.text(), file=out)
    if stats.exhausted:
        print(f"note: a loop ran out of fuel ({a.fuel}); missing mass {fmt_weight(1 - res.mass())}", file=out)
    return OK


def cmd_check(a, out) -> int:
    ctx = _load(a.file)
    _lint_or_fail(ctx, a.file)
    if a.goal not in ctx.goals and a.goal not in ctx.claims:
        raise _Usage(f"no goal or claim named {a.goal}")
    res = check_script(ctx, a.goal, a.fuel)
    print(res.text(), file=out)
    return OK if res.proven else FAILED


def cmd_advantage(a, out) -> int:
    ctx = _load(a.file)
    _lint_or_fail(ctx, a.file)
    if a.depth < 0:
        raise _Usage("--depth must be non-negative")
    try:
        left = init_system(ctx, a.left, a.fuel)
        right = init_system(ctx, a.right, a.fuel)
        value, witness = advantage_with_witness(ctx, left, right, a.depth, a.fuel)
    except GameError as exc:
        raise _Usage(str(exc)) from None
    print(fmt_weight(value), file=out)
    if value > 0:
        print(show_strategy(witness), file=out)
    if a.experiment:
        print(f"experiment: {fmt_weight(experiment_value(ctx, left, right, a.depth, a.fuel))}", file=out)
    return OK if value == 0 else FAILED


def cmd_lint(a, out) -> int:
    ctx = _load(a.file)
    issues = lint(ctx)
    for i in issues:
        print(f"{a.file}: {i}", file=out)
    if issues:
        return USAGE
    print("ok", file=out)
    return OK


def main(argv: Optional[list] = None, out=None) -> int:
    out = out or sys.stdout
    ap = _parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    handler = {"run": cmd_run, "check": cmd_check, "advantage": cmd_advantage, "lint": cmd_lint}[a.cmd]
    try:
        return handler(a, out)
    except _Usage as exc:
        print(str(exc), file=out if a.cmd == "lint" else sys.stderr)
        return USAGE


def entry() -> None:
    sys.exit(main())
