"""Tactics for labeled syntax: declassify, secrnd and secrndasgn, plus the invariant."""

from __future__ import annotations

from dataclasses import dataclass

from . import syntax as S
from .assertions import assertion_vars, sec_inv_clauses, sec_inv_key, tag
from .relational import RelGoal, TacticError, block_names, fresh_name
from .syntax import Atom, Context, Labeled, MapType, conj
from .values import Conf, Memory

__all__ = [
    "SecInvariantSpec",
    "sec_invariant_clauses",
    "sec_invariant_eval",
    "tactic_declassify",
    "tactic_secrnd",
    "tactic_secrndasgn",
]


@dataclass(frozen=True)
class SecInvariantSpec:
    left: str
    right: str
    dist: S.DistExpr

    def assertion(self) -> S.SecInv:
        return S.SecInv(self.left, self.right, self.dist)


def _keys(spec: SecInvariantSpec, m1: Memory, m2: Memory) -> set:
    return set(m1.read(spec.left).domain()) | set(m2.read(spec.right).domain())


def sec_invariant_eval(spec: SecInvariantSpec, ctx: Context, m1: Memory, m2: Memory) -> bool:
    d = ctx.eval_dist(spec.dist)
    t, tp = m1.read(spec.left), m2.read(spec.right)
    return all(sec_inv_key(t, tp, d, k) for k in _keys(spec, m1, m2))


def sec_invariant_clauses(spec: SecInvariantSpec, ctx: Context, m1: Memory, m2: Memory) -> tuple:
    """Per clause, whether it holds at every key."""
    d = ctx.eval_dist(spec.dist)
    t, tp = m1.read(spec.left), m2.read(spec.right)
    res = [True] * 4
    for k in _keys(spec, m1, m2):
        for i, ok in enumerate(sec_inv_clauses(t, tp, d, k)):
            res[i] = res[i] and ok
    return tuple(res)


def _first(prog: tuple, kind) -> int:
    for i, c in enumerate(prog):
        if isinstance(c, kind):
            return i
    return -1


def tactic_declassify(goal: RelGoal, ctx: Context, side: int) -> RelGoal:
    """Rewrite the first top-level secure read into a label update and a value copy."""
    prog = goal.prog(side)
    i = _first(prog, S.SecRead)
    if i < 0:
        raise TacticError("declassify: no secure read left in the program")
    c = prog[i]
    src = c.source
    relabel = S.Assign(src, S.Triple(S.Proj(1, src), S.Proj(2, src), S.Const(Conf.LEAKED)))
    copy = S.Assign(c.target, S.Proj(1, src))
    return goal.with_prog(side, prog[:i] + (relabel, copy) + prog[i + 1:])


def _used_names(goal: RelGoal, ctx: Context, side: int) -> set:
    used = set(goal.decls(side)) | block_names(goal.prog(side), ctx)
    used |= {n for _, n in assertion_vars(goal.pre, ctx) | assertion_vars(goal.post, ctx)}
    return used


def tactic_secrnd(goal: RelGoal, ctx: Context, side: int) -> RelGoal:
    """Rewrite the first top-level secure sampling into a fresh sampling and a labeled store."""
    prog = goal.prog(side)
    i = _first(prog, S.SecSample)
    if i < 0:
        raise TacticError("secrnd: no secure sampling left in the program")
    c = prog[i]
    ty = _labeled_type(goal, side, c.target)
    v = fresh_name("v", _used_names(goal, ctx, side))
    new = (
        S.Sample(S.Var(v), c.dist),
        S.Assign(c.target, S.Triple(S.Var(v), S.DistVal(c.dist), S.Const(Conf.SECRET))),
    )
    g = goal.with_prog(side, prog[:i] + new + prog[i + 1:])
    return g.add_var(side, v, S.TName(ty.base))


def _labeled_type(goal: RelGoal, side: int, target) -> Labeled:
    decls = goal.decls(side)
    if isinstance(target, S.Var):
        ty = decls.get(target.name)
    else:
        mt = decls.get(target.map)
        ty = mt.val if isinstance(mt, MapType) else None
    if not isinstance(ty, Labeled):
        raise TacticError("target is not labeled")
    return ty


def tactic_secrndasgn(goal: RelGoal, ctx: Context, tmap: str, key, lv: str) -> list:
    """Replace a left-only secure sampling by a value borrowed from the right memory.

    Expects ``t[x] <~$ d; r <~ t[x]`` on the left and ``r <~ t[x]`` on the right.
    Returns the obligation on the borrowed value and the rewritten judgment.
    """
    if isinstance(key, str):
        key = S.Var(key)
    left, right = goal.left, goal.right
    shape = "secrndasgn: expected t[x] <~$ d; r <~ t[x] on the left and r <~ t[x] on the right"
    if len(left) != 2 or len(right) != 1:
        raise TacticError(shape)
    samp, read_l = left
    read_r = right[0]
    if not (isinstance(samp, S.SecSample) and isinstance(read_l, S.SecRead) and isinstance(read_r, S.SecRead)):
        raise TacticError(shape)
    entry = S.Lookup(tmap, key)
    for what, e in (("left sampling", samp.target), ("left read", read_l.source), ("right read", read_r.source)):
        if not isinstance(e, S.Lookup) or e.map != tmap:
            raise TacticError(f"secrndasgn: {what} does not use map {tmap}")
        if e.key != key:
            raise TacticError(f"secrndasgn: key of the {what} differs from the given key")
    if read_l.target != read_r.target:
        raise TacticError("secrndasgn: the two reads store into different targets")
    if lv in _used_names(goal, ctx, 1) or lv in _used_names(goal, ctx, 2):
        raise TacticError(f"secrndasgn: {lv} is not fresh")
    ty = _labeled_type(goal, 1, samp.target)
    d = samp.dist
    x1, x2 = tag(key, 1), tag(key, 2)
    lv1 = S.Var(lv, 1)
    right_entry = S.Lookup(tmap, x2, 2)
    pre = conj(goal.pre, Atom(S.Eq(lv1, right_entry)))
    post1 = conj(
        Atom(S.Eq(lv1, right_entry)),
        S.ANot(S.IsLeaked(lv1)),
        Atom(S.Not(S.InDom(tmap, x1, 1))),
        Atom(S.InDom(tmap, x2, 2)),
    )
    post2 = conj(goal.post, S.SampledFrom(S.Lookup(tmap, x1, 1), d), S.SecInv(tmap, tmap, d))
    base = goal.add_var(1, lv, S.Labeled(ty.base)).replace(aug_left=goal.aug_left + (lv,), pre=pre)
    g1 = base.replace(left=(), right=(), post=post1)
    g2 = base.replace(left=(S.Assign(entry, S.Var(lv)), read_l), post=post2)
    return [g1, g2]
