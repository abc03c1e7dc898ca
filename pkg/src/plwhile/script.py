"""Running proof scripts against goals and claims."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .printer import show_assertion, show_block, show_tactic
from .relational import Outcome, ProofFailure, RelGoal, TacticError, apply_tactic
from .syntax import Context

__all__ = ["ScriptResult", "check_script", "describe_goal", "run_tactics"]


@dataclass
class ScriptResult:
    status: str  # proven | stuck | counterexample
    goal: Optional[str] = None
    reason: str = ""
    open_goal: Optional[RelGoal] = None
    outcome: Optional[Outcome] = None
    steps: list = field(default_factory=list)

    @property
    def proven(self) -> bool:
        return self.status == "proven"

    def text(self) -> str:
        if self.proven:
            return f"{self.goal}: proven"
        lines = [f"{self.goal}: {self.status}: {self.reason}"]
        if self.open_goal is not None:
            lines.append(describe_goal(self.open_goal, indent=1))
        if self.outcome is not None and self.outcome.m1 is not None:
            lines.extend("  " + ln for ln in self.outcome.text().splitlines()[1:])
        return "\n".join(lines)


def describe_goal(g: RelGoal, indent: int = 0) -> str:
    pad = "  " * indent
    lines = [f"{pad}left:", show_block(g.left, indent + 1), f"{pad}right:", show_block(g.right, indent + 1)]
    lines.append(f"{pad}pre:  {show_assertion(g.pre)}")
    lines.append(f"{pad}post: {show_assertion(g.post)}")
    return "\n".join(lines)


def run_tactics(goal: RelGoal, tactics, ctx: Context, fuel: int = 64, name: str = "") -> ScriptResult:
    """Apply ``tactics`` in order, always to the first open goal."""
    name = name or goal.name
    goals = [goal]
    steps: list = []
    for tac in tactics:
        where = show_tactic(tac)
        if tac.pos:
            where += f" (line {tac.pos[0]})"
        if tac.name == "done":
            if goals:
                return ScriptResult("stuck", name, f"{where}: {len(goals)} goal(s) still open", goals[0], steps=steps)
            continue
        if not goals:
            return ScriptResult("stuck", name, f"{where}: no goals left", steps=steps)
        current = goals[0]
        try:
            new = apply_tactic(current, tac, ctx, fuel)
        except ProofFailure as exc:
            status = "counterexample" if exc.outcome.kind == "counterexample" else "stuck"
            return ScriptResult(status, name, f"{where}: {exc.outcome.summary()}", current, exc.outcome, steps)
        except TacticError as exc:
            return ScriptResult("stuck", name, f"{where}: {exc}", current, steps=steps)
        steps.append((where, len(new)))
        goals = list(new) + goals[1:]
    if goals:
        return ScriptResult("stuck", name, f"proof incomplete: {len(goals)} goal(s) still open", goals[0], steps=steps)
    return ScriptResult("proven", name, steps=steps)


def check_script(ctx: Context, name: str, fuel: int = 64) -> ScriptResult:
    """Check the proof of a goal, or of every goal listed by a claim."""
    if name in ctx.claims:
        last = None
        for g in ctx.claims[name].goals:
            last = check_script(ctx, g, fuel)
            if not last.proven:
                return last
        return ScriptResult("proven", name, steps=last.steps if last else [])
    if name not in ctx.goals:
        raise KeyError(f"no goal or claim named {name}")
    proof = ctx.proofs.get(name)
    if proof is None:
        return ScriptResult("stuck", name, "no proof script for this goal", RelGoal.from_def(ctx.goals[name], ctx))
    return run_tactics(RelGoal.from_def(ctx.goals[name], ctx), proof.tactics, ctx, fuel, name)
