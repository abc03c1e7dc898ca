"""Exact denotational interpreter: expressions, commands and procedure calls."""

from __future__ import annotations

import itertools
from typing import Iterator, Mapping

from .dist import Dist
from .syntax import (
    And,
    Assign,
    Bot,
    Call,
    Command,
    Cond,
    Const,
    Context,
    DistVal,
    EmptyMap,
    Eq,
    If,
    InDom,
    Lookup,
    MapType,
    Not,
    OpCall,
    Or,
    Proj,
    Sample,
    SecRead,
    SecSample,
    Skip,
    Triple,
    Type,
    Var,
    While,
)
from .values import UNIT, Conf, FMap, LabeledValue, Memory, proj

__all__ = [
    "EvalFault",
    "ExecStats",
    "enumerate_memories",
    "eval_expr",
    "exec_block",
    "init_memory",
    "lossless_check",
    "proc_vars",
    "run_proc",
]


class EvalFault(Exception):
    """Raised when a program reads an unset map entry or is otherwise stuck."""


class ExecStats:
    """Mutable side channel recording whether some while loop ran out of fuel."""

    def __init__(self):
        self.exhausted = False


def eval_expr(e, ctx: Context, mems: tuple, strict: bool = True):
    """Evaluate ``e``; untagged names read ``mems[0]``, side ``s`` reads ``mems[s-1]``
    and side 0 (bound names of assertions) reads ``mems[-1]``.

    In strict mode (program code) reading an unset entry raises :class:`EvalFault`.
    Otherwise it yields ``None``, which stands for ⊥.
    """

    def ev(e):
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Var):
            return _mem(mems, e.side).read(e.name)
        if isinstance(e, Lookup):
            k = ev(e.key)
            v = _mem(mems, e.side).lookup(e.map, k)
            if v is None and strict:
                raise EvalFault(f"read of unset entry {e.map}[{k}]")
            return v
        if isinstance(e, InDom):
            return _mem(mems, e.side).lookup(e.map, ev(e.key)) is not None
        if isinstance(e, Eq):
            return ev(e.left) == ev(e.right)
        if isinstance(e, Not):
            return not _truth(ev(e.arg))
        if isinstance(e, And):
            return _truth(ev(e.left)) and _truth(ev(e.right))
        if isinstance(e, Or):
            return _truth(ev(e.left)) or _truth(ev(e.right))
        if isinstance(e, Cond):
            return ev(e.then) if _truth(ev(e.test)) else ev(e.other)
        if isinstance(e, Proj):
            lv = ev(e.arg)
            if lv is None:
                return None
            if not isinstance(lv, LabeledValue):
                raise TypeError(f"projection of a plain value {lv!r}")
            return proj(e.index, lv)
        if isinstance(e, Triple):
            v = ev(e.value)
            if v is None:
                return None
            return LabeledValue(v, ev(e.origin), ev(e.conf))
        if isinstance(e, Bot):
            return None
        if isinstance(e, DistVal):
            return ctx.eval_dist(e.dist, ev)
        if isinstance(e, EmptyMap):
            return FMap()
        if isinstance(e, OpCall):
            op = ctx.ops[e.name]
            frame = Memory({p.name: ev(a) for p, a in zip(op.params, e.args)})
            return eval_expr(op.body, ctx, (frame,), strict)
        raise TypeError(f"not an expression: {e!r}")

    return ev(e)


def _mem(mems: tuple, side):
    # side None: program memory; 1/2: relational sides; 0: quantifier bindings (last slot)
    if side is None:
        return mems[0]
    if side == 0:
        return mems[-1]
    return mems[side - 1]


def _truth(v) -> bool:
    return bool(v) if v is not None else False


def eval_dist(d, ctx: Context, m: Memory, strict: bool = True) -> Dist:
    return ctx.eval_dist(d, lambda e: eval_expr(e, ctx, (m,), strict))


def assign(target, value, ctx: Context, m: Memory) -> Memory:
    if isinstance(target, Var):
        return m.set(target.name, value)
    if isinstance(target, Lookup):
        return m.set_entry(target.map, eval_expr(target.key, ctx, (m,)), value)
    raise TypeError(f"not an assignable target: {target!r}")


def exec_block(block, ctx: Context, m: Memory, fuel: int = 64, stats: ExecStats | None = None) -> Dist:
    """Run a command sequence from ``m``; each while loop may unroll at most ``fuel`` times."""
    d = Dist.dirac(m)
    for c in block:
        d = d.bind(lambda mm, c=c: exec_cmd(c, ctx, mm, fuel, stats))
    return d


def exec_cmd(c: Command, ctx: Context, m: Memory, fuel: int, stats: ExecStats | None) -> Dist:
    if isinstance(c, Skip):
        return Dist.dirac(m)
    if isinstance(c, Assign):
        return Dist.dirac(assign(c.target, eval_expr(c.expr, ctx, (m,)), ctx, m))
    if isinstance(c, Sample):
        return eval_dist(c.dist, ctx, m).map(lambda v: assign(c.target, v, ctx, m))
    if isinstance(c, If):
        branch = c.then if eval_expr(c.cond, ctx, (m,)) else c.other
        return exec_block(branch, ctx, m, fuel, stats)
    if isinstance(c, While):
        return _unroll(c, ctx, m, fuel, fuel, stats)
    if isinstance(c, SecRead):
        src = c.source
        if isinstance(src, Var):
            lv = m.read(src.name)
            m2 = m.set(src.name, LabeledValue(lv.value, lv.origin, Conf.LEAKED))
        else:
            k = eval_expr(src.key, ctx, (m,))
            lv = m.lookup(src.map, k)
            if lv is None:
                raise EvalFault(f"secure read of unset entry {src.map}[{k}]")
            m2 = m.set_entry(src.map, k, LabeledValue(lv.value, lv.origin, Conf.LEAKED))
        return Dist.dirac(assign(c.target, lv.value, ctx, m2))
    if isinstance(c, SecSample):
        d = eval_dist(c.dist, ctx, m)
        return d.map(lambda v: assign(c.target, LabeledValue(v, d, Conf.SECRET), ctx, m))
    if isinstance(c, Call):
        return _call(c, ctx, m, fuel, stats)
    raise TypeError(f"not a command: {c!r}")


def _unroll(c: While, ctx, m, k: int, fuel: int, stats) -> Dist:
    if not eval_expr(c.cond, ctx, (m,)):
        return Dist.dirac(m)
    if k == 0:
        if stats is not None:
            stats.exhausted = True
        return Dist.empty()
    return exec_block(c.body, ctx, m, fuel, stats).bind(lambda m2: _unroll(c, ctx, m2, k - 1, fuel, stats))


def _enter(proc, ctx: Context, args: tuple, m: Memory) -> tuple[Memory, dict]:
    names = [p.name for p in proc.params] + [v.name for v in proc.locals]
    saved = {n: m[n] for n in names if n in m}
    frame = {p.name: a for p, a in zip(proc.params, args)}
    frame.update({v.name: ctx.default(v.type) for v in proc.locals})
    return m.update(frame), saved


def _leave(proc, m: Memory, saved: dict) -> Memory:
    names = [p.name for p in proc.params] + [v.name for v in proc.locals]
    return m.without(n for n in names if n not in saved).update(saved)


def _call(c: Call, ctx: Context, m: Memory, fuel: int, stats) -> Dist:
    proc = ctx.module_of_proc(c.module, c.proc)
    args = tuple(eval_expr(a, ctx, (m,)) for a in c.args)
    inner, saved = _enter(proc, ctx, args, m)

    def finish(m2: Memory) -> Memory:
        ret = eval_expr(proc.ret, ctx, (m2,)) if proc.ret is not None else UNIT
        m3 = _leave(proc, m2, saved)
        return assign(c.target, ret, ctx, m3) if c.target is not None else m3

    return exec_block(proc.body, ctx, inner, fuel, stats).map(finish)


def init_memory(ctx: Context, module: str) -> Memory:
    """Globals of ``module`` at their type defaults (before ``init`` runs)."""
    return Memory({v.name: ctx.default(v.type) for v in ctx.modules[module].globals})


def run_proc(ctx: Context, module: str, proc: str, args, m: Memory, fuel: int = 64,
             stats: ExecStats | None = None) -> Dist:
    """Distribution over ``(final memory, return value)`` pairs.

    The final memory keeps exactly the names bound in ``m``; parameters and
    locals of the callee are discarded.
    """
    p = ctx.module_of_proc(module, proc)
    if len(args) != len(p.params):
        raise ValueError(f"{module}.{proc} expects {len(p.params)} arguments, got {len(args)}")
    inner, saved = _enter(p, ctx, tuple(args), m)

    def finish(m2: Memory):
        ret = eval_expr(p.ret, ctx, (m2,)) if p.ret is not None else UNIT
        return (_leave(p, m2, saved), ret)

    return exec_block(p.body, ctx, inner, fuel, stats).map(finish)


# -- enumeration -------------------------------------------------------------


def domain(ctx: Context, ty: Type) -> tuple:
    """Every value of a variable of type ``ty``; maps range over all partial functions."""
    if isinstance(ty, MapType):
        keys = ctx.types[ty.key]
        entry = (None,) + ctx.values(ty.val)
        out = []
        for combo in itertools.product(entry, repeat=len(keys)):
            out.append(FMap({k: v for k, v in zip(keys, combo) if v is not None}))
        return tuple(out)
    return ctx.values(ty)


def enumerate_memories(ctx: Context, decls: Mapping[str, Type]) -> Iterator[Memory]:
    """All memories over ``decls`` in lexicographic order of the declaration order."""
    names = list(decls)
    doms = [domain(ctx, decls[n]) for n in names]
    for combo in itertools.product(*doms):
        yield Memory(dict(zip(names, combo)))


def proc_vars(ctx: Context, module: str, proc: str) -> dict:
    mod = ctx.modules[module]
    p = mod.proc(proc)
    decls = {v.name: v.type for v in mod.globals}
    decls.update({v.name: v.type for v in p.params})
    decls.update({v.name: v.type for v in p.locals})
    return decls


def lossless_check(block, ctx: Context, decls: Mapping[str, Type], fuel: int = 64) -> bool:
    """True iff ``block`` has mass 1 from every memory over ``decls``.

    A memory from which the block faults counts as not lossless.
    """
    for m in enumerate_memories(ctx, decls):
        try:
            if exec_block(block, ctx, m, fuel).mass() != 1:
                return False
        except EvalFault:
            return False
    return True


__all__ += ["assign", "domain", "eval_dist", "exec_cmd"]
