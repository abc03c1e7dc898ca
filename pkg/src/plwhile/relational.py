"""Relational judgments: goals, exhaustive semantic discharge, and kernel tactics."""

from __future__ import annotations

import dataclasses
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Optional

from . import syntax as S
from .assertions import (
    assertion_vars,
    bound_names,
    expand_preds,
    holds,
    map_expr,
    subst,
    subst_bound,
    tag,
    tag_dist,
)
from .checks import exposed_reads, goal_decls, must_writes, reads_writes
from .coupling import lift_check
from .dist import Dist
from .interp import EvalFault, ExecStats, exec_block
from .syntax import (
    AAnd,
    Atom,
    Context,
    Forall,
    Labeled,
    MapType,
    PredRef,
    SecInv,
    SecInvAt,
    Truth,
    VarEq,
    conj,
)
from .values import Conf, FMap, LabeledValue, Memory

__all__ = [
    "Outcome",
    "ProofFailure",
    "RelGoal",
    "TacticError",
    "apply_tactic",
    "discharge",
    "pre_pairs",
]


class TacticError(Exception):
    """A tactic does not apply to the goal's shape."""


class ProofFailure(TacticError):
    """A closing tactic found a counterexample."""

    def __init__(self, outcome: "Outcome", message: str = ""):
        super().__init__(message or outcome.summary())
        self.outcome = outcome


@dataclass(frozen=True)
class RelGoal:
    """``left ~ right : pre ==> post`` over the variable layouts ``vars1``/``vars2``."""

    left: tuple
    right: tuple
    pre: object
    post: object
    vars1: tuple  # of (name, Type)
    vars2: tuple
    aug_left: tuple = ()
    name: str = ""

    @classmethod
    def from_def(cls, g: S.GoalDef, ctx: Context) -> "RelGoal":
        d1, d2 = goal_decls(g, ctx)
        return cls(g.left, g.right, g.pre, g.post, tuple(d1.items()), tuple(d2.items()), (), g.name)

    def decls(self, side: int) -> dict:
        return dict(self.vars1 if side == 1 else self.vars2)

    def prog(self, side: int) -> tuple:
        return self.left if side == 1 else self.right

    def with_prog(self, side: int, block: tuple, **kw) -> "RelGoal":
        key = "left" if side == 1 else "right"
        return dataclasses.replace(self, **{key: tuple(block)}, **kw)

    def add_var(self, side: int, name: str, ty) -> "RelGoal":
        key = "vars1" if side == 1 else "vars2"
        cur = getattr(self, key)
        if any(n == name for n, _ in cur):
            return self
        return dataclasses.replace(self, **{key: cur + ((name, ty),)})

    def replace(self, **kw) -> "RelGoal":
        return dataclasses.replace(self, **kw)


# -- discharge ---------------------------------------------------------------


@dataclass
class Outcome:
    kind: str  # proven | counterexample | fuel | fault
    m1: Optional[Memory] = None
    m2: Optional[Memory] = None
    d1: Optional[Dist] = None
    d2: Optional[Dist] = None
    hint: Optional[str] = None
    pairs: int = 0

    @property
    def proven(self) -> bool:
        return self.kind == "proven"

    def summary(self) -> str:
        if self.proven:
            return f"proven ({self.pairs} memory pairs)"
        what = {"counterexample": "counterexample", "fuel": "fuel exhausted", "fault": "evaluation fault"}[self.kind]
        return f"{what}" + (f": {self.hint}" if self.hint else "")

    def text(self) -> str:
        lines = [self.summary()]
        if self.m1 is not None:
            lines.append(f"  left memory:  {self.m1}")
            lines.append(f"  right memory: {self.m2}")
        if self.d1 is not None:
            lines.append(f"  left output:  {self.d1.text()}")
            lines.append(f"  right output: {self.d2.text()}")
        return "\n".join(lines)


class PartialStore:
    """A memory under construction; maps are held as mutable dicts."""

    def __init__(self, decls: dict, ctx: Context):
        self.scalars: dict = {}
        self.maps: dict = {}
        self._cache: dict = {}
        for n, t in decls.items():
            if isinstance(t, MapType):
                self.maps[n] = {}
            else:
                self.scalars[n] = ctx.default(t)

    def read(self, name: str):
        if name in self.maps:
            fm = self._cache.get(name)
            if fm is None:
                fm = self._cache[name] = FMap(self.maps[name])
            return fm
        try:
            return self.scalars[name]
        except KeyError:
            raise KeyError(f"unbound variable {name}") from None

    def lookup(self, name: str, key):
        return self.maps[name].get(key)

    def put(self, name: str, key, value) -> None:
        if key is None and name not in self.maps:
            self.scalars[name] = value
            return
        self._cache.pop(name, None)
        entries = self.maps[name]
        if value is None:
            entries.pop(key, None)
        else:
            entries[key] = value

    def freeze(self) -> Memory:
        d = dict(self.scalars)
        for n in self.maps:
            d[n] = self.read(n)
        return Memory(d)


def relevant_vars(goal: RelGoal, ctx: Context) -> tuple[set, set]:
    """Per side, the names whose initial value can influence the judgment."""
    pv = assertion_vars(goal.pre, ctx)
    qv = assertion_vars(goal.post, ctx)
    out = []
    for side in (1, 2):
        prog = goal.prog(side)
        decls = goal.decls(side)
        rel = {n for s, n in pv if s == side}
        rel |= exposed_reads(prog, ctx)
        rel |= {n for s, n in qv if s == side} - must_writes(prog, ctx)
        out.append({n for n in rel if n in decls})
    return out[0], out[1]


def flatten_pre(a, ctx: Context, goal: RelGoal) -> list:
    """Split a precondition into small conjuncts so each can be checked early."""
    if isinstance(a, PredRef):
        return flatten_pre(ctx.preds[a.name].body, ctx, goal)
    if isinstance(a, AAnd):
        return [x for p in a.parts for x in flatten_pre(p, ctx, goal)]
    if isinstance(a, Truth) and a.value:
        return []
    if isinstance(a, Forall):
        out = []
        for v in ctx.values(S.TName(a.type)):
            out.extend(flatten_pre(subst_bound(a.body, a.var, S.Const(v)), ctx, goal))
        return out
    if isinstance(a, SecInv):
        ty = goal.decls(1).get(a.left)
        if not isinstance(ty, MapType):
            return [a]
        return [SecInvAt(a.left, a.right, a.dist, k) for k in ctx.types[ty.key]]
    if isinstance(a, VarEq):
        return [VarEq((n,)) for n in a.names]
    return [a]


def slot_deps(a, ctx: Context) -> set:
    """Memory slots ``(side, name, key)`` an atom reads; key ``None`` means every entry."""
    out: set = set()

    def ex(e):
        def f(x):
            if isinstance(x, S.Var) and x.side in (1, 2):
                out.add((x.side, x.name, None))
                return x
            if isinstance(x, (S.Lookup, S.InDom)) and x.side in (1, 2):
                if isinstance(x.key, S.Const):
                    out.add((x.side, x.map, x.key.value))
                else:
                    out.add((x.side, x.map, None))
                    ex(x.key)
                return x
            return None

        map_expr(e, f)

    def walk(a):
        if isinstance(a, SecInvAt):
            out.add((1, a.left, a.key))
            out.add((2, a.right, a.key))
        elif isinstance(a, S.Atom):
            ex(a.expr)
        elif isinstance(a, S.IsLeaked):
            ex(a.arg)
        elif isinstance(a, S.SampledFrom):
            ex(a.arg)
            if isinstance(a.dist, S.Point):
                ex(a.dist.expr)
        elif isinstance(a, S.LabelEq):
            ex(a.left)
            ex(a.right)
        elif isinstance(a, (S.AAnd, S.AOr)):
            for p in a.parts:
                walk(p)
        elif isinstance(a, S.ANot):
            walk(a.arg)
        elif isinstance(a, S.AImp):
            walk(a.left)
            walk(a.right)
        else:
            for s, n in assertion_vars(a, ctx):
                out.add((s, n, None))

    walk(a)
    return out


def _slots(goal: RelGoal, ctx: Context, rel1: set, rel2: set) -> list:
    d = {1: goal.decls(1), 2: goal.decls(2)}
    rel = {1: rel1, 2: rel2}
    names = list(d[1]) + [n for n in d[2] if n not in d[1]]
    scalars, maps, labeled = [], [], []
    for n in names:
        for side in (1, 2):
            ty = d[side].get(n)
            if ty is None or n not in rel[side]:
                continue
            if isinstance(ty, MapType):
                continue
            bucket = labeled if isinstance(ty, Labeled) else scalars
            bucket.append((side, n, None, ctx.values(ty)))
    for n in names:
        tys = {side: d[side].get(n) for side in (1, 2)}
        keys = None
        for side in (1, 2):
            if isinstance(tys[side], MapType) and n in rel[side]:
                keys = ctx.types[tys[side].key]
        if keys is None:
            continue
        for k in keys:
            for side in (1, 2):
                ty = tys[side]
                if isinstance(ty, MapType) and n in rel[side]:
                    maps.append((side, n, k, (None,) + ctx.values(ty.val)))
    return scalars + maps + labeled


def pre_pairs(goal: RelGoal, ctx: Context) -> Iterator[tuple[Memory, Memory]]:
    """Every memory pair satisfying the precondition, in canonical enumeration order.

    Names that cannot influence the judgment stay at their type defaults.
    """
    rel1, rel2 = relevant_vars(goal, ctx)
    slots = _slots(goal, ctx, rel1, rel2)
    stores = {1: PartialStore(goal.decls(1), ctx), 2: PartialStore(goal.decls(2), ctx)}
    index: dict = defaultdict(list)
    for i, (side, n, k, _) in enumerate(slots):
        index[(side, n, None)].append(i)
        index[(side, n, k)].append(i)
    checks: dict = defaultdict(list)
    for atom in flatten_pre(goal.pre, ctx, goal):
        positions = [i for dep in slot_deps(atom, ctx) for i in index.get(dep, ())]
        checks[max(positions, default=-1)].append(atom)

    def ok(i):
        return all(holds(a, ctx, stores[1], stores[2]) for a in checks.get(i, ()))

    def rec(i):
        if i == len(slots):
            yield stores[1].freeze(), stores[2].freeze()
            return
        side, n, k, dom = slots[i]
        st = stores[side]
        for v in dom:
            st.put(n, k, v)
            if ok(i):
                yield from rec(i + 1)
        if k is not None:
            st.put(n, k, None)

    if ok(-1):
        yield from rec(0)


def _top_conjuncts(a, ctx: Context) -> list:
    if isinstance(a, PredRef):
        return _top_conjuncts(ctx.preds[a.name].body, ctx)
    if isinstance(a, AAnd):
        return [x for p in a.parts for x in _top_conjuncts(p, ctx)]
    return [a]


def _failing_conjunct(post, ctx: Context, d1: Dist, d2: Dist) -> Optional[str]:
    from .printer import show_assertion

    for c in _top_conjuncts(post, ctx):
        if not lift_check(lambda a, b: holds(c, ctx, a, b), d1, d2):
            return show_assertion(c)
    return None


class _Runner:
    def __init__(self, goal: RelGoal, ctx: Context, fuel: int):
        self.goal, self.ctx, self.fuel = goal, ctx, fuel
        self.cache = ({}, {})
        self.exhausted = [False, False]
        self.rel_cache: dict = {}
        # the postcondition only sees these names, so memories agreeing on them share a verdict
        fv = assertion_vars(goal.post, ctx)
        self.post_names = tuple(frozenset(n for s, n in fv if s == side) for side in (1, 2))
        self.proj_cache = ({}, {})
        self.lift_cache: dict = {}

    def run(self, side: int, m: Memory) -> Dist:
        cache = self.cache[side - 1]
        d = cache.get(m)
        if d is None:
            stats = ExecStats()
            d = exec_block(self.goal.prog(side), self.ctx, m, self.fuel, stats)
            if stats.exhausted:
                self.exhausted[side - 1] = True
            cache[m] = d
        return d

    def projected(self, side: int, m: Memory) -> Dist:
        cache = self.proj_cache[side - 1]
        d = cache.get(m)
        if d is None:
            names = self.post_names[side - 1]
            d = cache[m] = self.run(side, m).map(lambda mm: mm.restrict(names))
        return d

    def lifts(self, m1: Memory, m2: Memory) -> bool:
        """Whether the outputs from ``m1``/``m2`` lift the postcondition.

        The postcondition reads only ``post_names``, so a coupling of the
        projected outputs exists exactly when one of the full outputs does.
        """
        p1, p2 = self.projected(1, m1), self.projected(2, m2)
        key = (p1, p2)
        r = self.lift_cache.get(key)
        if r is None:
            r = self.lift_cache[key] = lift_check(self.rel, p1, p2)
        return r

    def rel(self, a: Memory, b: Memory) -> bool:
        key = (a, b)
        r = self.rel_cache.get(key)
        if r is None:
            r = self.rel_cache[key] = holds(self.goal.post, self.ctx, a, b)
        return r

    def failure(self, m1, m2, d1, d2) -> Outcome:
        kind = "fuel" if any(self.exhausted) else "counterexample"
        hint = _failing_conjunct(self.goal.post, self.ctx, d1, d2)
        if kind == "fuel":
            hint = "a loop ran out of fuel" + (f"; failing: {hint}" if hint else "")
        return Outcome(kind, m1, m2, d1, d2, hint)


def discharge(goal: RelGoal, ctx: Context, fuel: int = 64, lazy: bool = False) -> Outcome:
    """Decide the judgment by enumerating every memory pair allowed by the precondition.

    With ``lazy`` the right map of the precondition's ``inv`` is read as a
    distribution: secret entries drawn from the invariant's distribution are
    grouped and weighted by it before the lifting check.
    """
    runner = _Runner(goal, ctx, fuel)
    if lazy:
        return _discharge_lazy(goal, ctx, runner)
    pairs = 0
    worst = None  # canonically smallest failing pair
    for m1, m2 in pre_pairs(goal, ctx):
        pairs += 1
        key = (m1.canon(), m2.canon())
        if worst is not None and key >= worst[0]:
            continue
        try:
            ok = runner.lifts(m1, m2)
        except EvalFault as exc:
            worst = (key, Outcome("fault", m1, m2, hint=str(exc)))
            continue
        if not ok:
            worst = (key, (m1, m2, runner.run(1, m1), runner.run(2, m2)))
    if worst is None:
        return Outcome("proven", pairs=pairs)
    out = worst[1]
    if not isinstance(out, Outcome):
        out = runner.failure(*out)
    out.pairs = pairs
    return out


# -- lazy (distribution-weighted) discharge ----------------------------------

_HIDDEN = "?"


def _find_inv(a, ctx: Context) -> Optional[SecInv]:
    for c in _top_conjuncts(a, ctx):
        if isinstance(c, SecInv):
            return c
    return None


def _mask(lv: LabeledValue) -> LabeledValue:
    return LabeledValue(_HIDDEN, lv.origin, lv.conf)


def _skeleton(goal: RelGoal, inv: SecInv, d: Dist, m1: Memory, m2: Memory):
    right = m2.read(inv.right)
    hidden = tuple(k for k in right if right[k].conf is Conf.SECRET and right[k].origin == d)
    vector = tuple(right[k].value for k in hidden)
    r2 = right
    for k in hidden:
        r2 = r2.set(k, _mask(right[k]))
    left = m1.read(inv.left)
    l2 = left
    for k in left:
        if left[k].conf is Conf.SECRET:
            l2 = l2.set(k, _mask(left[k]))
    mm1 = m1.set(inv.left, l2)
    for n, ty in goal.vars1:
        if isinstance(ty, Labeled) and m1[n].conf is Conf.SECRET:
            mm1 = mm1.set(n, _mask(m1[n]))
    return (mm1, m2.set(inv.right, r2), hidden), vector


def _discharge_lazy(goal: RelGoal, ctx: Context, runner: _Runner) -> Outcome:
    import itertools

    inv = _find_inv(expand_preds(goal.pre, ctx), ctx)
    if inv is None:
        raise TacticError("lazy discharge needs an inv(...) conjunct in the precondition")
    d = ctx.eval_dist(inv.dist)
    groups: dict = {}
    for m1, m2 in pre_pairs(goal, ctx):
        key, vec = _skeleton(goal, inv, d, m1, m2)
        groups.setdefault(key, []).append((vec, m1, m2))
    pairs = 0
    for (_, _, hidden), members in groups.items():
        pairs += len(members)
        vecs = [v for v, _, _ in members]
        full = list(itertools.product(d.support(), repeat=len(hidden)))
        try:
            if sorted(vecs, key=repr) == sorted(full, key=repr) and len(set(vecs)) == len(vecs):
                parts1, parts2 = [], []
                for vec, m1, m2 in members:
                    w = 1
                    for v in vec:
                        w *= d.weight(v)
                    parts1.append((w, runner.run(1, m1)))
                    parts2.append((w, runner.run(2, m2)))
                d1, d2 = Dist.mixture(parts1), Dist.mixture(parts2)
                if not lift_check(runner.rel, d1, d2):
                    _, m1, m2 = members[0]
                    out = runner.failure(m1, m2, d1, d2)
                    out.pairs = pairs
                    return out
            else:
                for _, m1, m2 in members:
                    d1, d2 = runner.run(1, m1), runner.run(2, m2)
                    if not lift_check(runner.rel, d1, d2):
                        out = runner.failure(m1, m2, d1, d2)
                        out.pairs = pairs
                        return out
        except EvalFault as exc:
            _, m1, m2 = members[0]
            return Outcome("fault", m1, m2, hint=str(exc), pairs=pairs)
    return Outcome("proven", pairs=pairs)


# -- program transformations -------------------------------------------------


def rename_expr(e, ren: dict):
    def f(x):
        if isinstance(x, S.Var) and x.name in ren:
            new = ren[x.name]
            return S.Var(new, x.side) if isinstance(new, str) else new
        if isinstance(x, (S.Lookup, S.InDom)) and x.map in ren:
            new = ren[x.map]
            name = new if isinstance(new, str) else new.name
            return type(x)(name, rename_expr(x.key, ren), x.side)
        return None

    return map_expr(e, f)


def rename_dist(d, ren: dict):
    return S.Point(rename_expr(d.expr, ren)) if isinstance(d, S.Point) else d


def rename_block(block, ren: dict) -> tuple:
    """Rename identifiers in ``block``; values of ``ren`` are names or replacement expressions."""
    out = []
    for c in block:
        if isinstance(c, S.Assign):
            out.append(S.Assign(rename_expr(c.target, ren), rename_expr(c.expr, ren), pos=c.pos))
        elif isinstance(c, S.Sample):
            out.append(S.Sample(rename_expr(c.target, ren), rename_dist(c.dist, ren), pos=c.pos))
        elif isinstance(c, S.SecSample):
            out.append(S.SecSample(rename_expr(c.target, ren), rename_dist(c.dist, ren), pos=c.pos))
        elif isinstance(c, S.SecRead):
            out.append(S.SecRead(rename_expr(c.target, ren), rename_expr(c.source, ren), pos=c.pos))
        elif isinstance(c, S.If):
            out.append(S.If(rename_expr(c.cond, ren), rename_block(c.then, ren), rename_block(c.other, ren), pos=c.pos))
        elif isinstance(c, S.While):
            out.append(S.While(rename_expr(c.cond, ren), rename_block(c.body, ren), pos=c.pos))
        elif isinstance(c, S.Call):
            tgt = rename_expr(c.target, ren) if c.target is not None else None
            out.append(S.Call(tgt, c.module, c.proc, tuple(rename_expr(a, ren) for a in c.args), pos=c.pos))
        else:
            out.append(c)
    return tuple(out)


def block_names(block, ctx: Context) -> set:
    r, w = reads_writes(block, ctx)
    return r | w


def fresh_name(base: str, used: set, start: int = 0) -> str:
    k = start
    while f"{base}#{k}" in used:
        k += 1
    return f"{base}#{k}"


def default_expr(ty, ctx: Context):
    if isinstance(ty, MapType):
        return S.EmptyMap()
    if isinstance(ty, Labeled):
        return S.Triple(S.Const(ctx.types[ty.base][0]), S.Bot(), S.Const(Conf.LEAKED))
    return S.Const(ctx.default(ty))


def _inline_at(goal: RelGoal, side: int, idx: int, ctx: Context) -> RelGoal:
    prog = goal.prog(side)
    call: S.Call = prog[idx]
    proc = ctx.module_of_proc(call.module, call.proc)
    decls = goal.decls(side)
    used = set(decls) | block_names(prog, ctx) | {n for _, n in assertion_vars(goal.pre, ctx) | assertion_vars(goal.post, ctx)}
    ren: dict = {}
    for v in proc.params + proc.locals:
        ren[v.name] = fresh_name(v.name, used, 1)
        used.add(ren[v.name])
    body = rename_block(proc.body, ren)
    ret = rename_expr(proc.ret, ren) if proc.ret is not None else None
    types = {ren[v.name]: v.type for v in proc.params + proc.locals}
    _, body_writes = reads_writes(body, ctx)
    prefix: list = []
    subst_map: dict = {}
    for prm, arg in zip(proc.params, call.args):
        p2 = ren[prm.name]
        if p2 not in body_writes and (isinstance(arg, S.Const) or (isinstance(arg, S.Var) and arg.name not in body_writes)):
            subst_map[p2] = arg
            del types[p2]
        else:
            prefix.append(S.Assign(S.Var(p2), arg))
    body = rename_block(body, subst_map)
    ret = rename_expr(ret, subst_map) if ret is not None else None
    exposed = exposed_reads(body, ctx)
    suffix: list = []
    if call.target is not None:
        local_names = {ren[v.name] for v in proc.locals}
        tgt = call.target
        if (isinstance(ret, S.Var) and ret.name in local_names and ret.name not in exposed
                and isinstance(tgt, S.Var) and tgt.name not in block_names(body, ctx)):
            body = rename_block(body, {ret.name: tgt.name})
            del types[ret.name]
        else:
            suffix.append(S.Assign(tgt, ret))
    for v in proc.locals:
        n = ren[v.name]
        if n in types and n in exposed_reads(body, ctx):
            prefix.append(S.Assign(S.Var(n), default_expr(v.type, ctx)))
    new_prog = prog[:idx] + tuple(prefix) + body + tuple(suffix) + prog[idx + 1:]
    g = goal.with_prog(side, new_prog)
    for n, ty in types.items():
        g = g.add_var(side, n, ty)
    return g


def _sides(side: Optional[int]) -> tuple:
    return (1, 2) if side is None else (side,)


def tactic_inline(goal: RelGoal, ctx: Context, side: Optional[int] = None, target: Optional[str] = None) -> RelGoal:
    done = False
    for s in _sides(side):
        prog = goal.prog(s)
        for i, c in enumerate(prog):
            if isinstance(c, S.Call) and (target is None or target == f"{c.module}.{c.proc}" or target == c.proc):
                goal = _inline_at(goal, s, i, ctx)
                done = True
                break
    if not done:
        raise TacticError("inline: no matching procedure call")
    return goal


def negate(e):
    return e.arg if isinstance(e, S.Not) else S.Not(e)


def tactic_case(goal: RelGoal, ctx: Context, side: int, expr=None) -> list:
    if expr is not None:
        cond = tag(expr, side)
        return [
            goal.replace(pre=conj(goal.pre, Atom(cond))),
            goal.replace(pre=conj(goal.pre, Atom(negate(cond)))),
        ]
    prog = goal.prog(side)
    if not prog or not isinstance(prog[0], S.If):
        raise TacticError("case: the first statement is not a conditional")
    c = prog[0]
    cond = tag(c.cond, side)
    return [
        goal.with_prog(side, c.then + prog[1:], pre=conj(goal.pre, Atom(cond))),
        goal.with_prog(side, c.other + prog[1:], pre=conj(goal.pre, Atom(negate(cond)))),
    ]


def tactic_swap(goal: RelGoal, ctx: Context, side: int, i: int, j: int) -> RelGoal:
    prog = list(goal.prog(side))
    if abs(i - j) != 1 or min(i, j) < 1 or max(i, j) > len(prog):
        raise TacticError(f"swap: statements {i} and {j} are not adjacent positions of the program")
    a, b = sorted((i - 1, j - 1))
    ra, wa = reads_writes((prog[a],), ctx)
    rb, wb = reads_writes((prog[b],), ctx)
    clash = (wa & (rb | wb)) | (wb & ra)
    if clash:
        raise TacticError(f"swap: statements depend on each other through {', '.join(sorted(clash))}")
    prog[a], prog[b] = prog[b], prog[a]
    return goal.with_prog(side, prog)


def tactic_seq(goal: RelGoal, ctx: Context, i: int, j: int, mid) -> list:
    if not (0 <= i <= len(goal.left) and 0 <= j <= len(goal.right)):
        raise TacticError("seq: split point outside the programs")
    return [
        goal.replace(left=goal.left[:i], right=goal.right[:j], post=mid),
        goal.replace(left=goal.left[i:], right=goal.right[j:], pre=mid),
    ]


def _is_scalar(goal: RelGoal, side: int, target) -> bool:
    return isinstance(target, S.Var) and not isinstance(goal.decls(side).get(target.name), MapType)


def wp_write(goal: RelGoal, ctx: Context, side: int, target, value, post):
    """Weakest precondition of writing tagged ``value`` into ``target`` on ``side``."""
    if _is_scalar(goal, side, target):
        return subst(post, ctx, side, target.name, value)
    if (side, target.map) not in assertion_vars(post, ctx):
        return post
    return S.Updated(side, tag(target, side), value, post)


def tactic_assign(goal: RelGoal, ctx: Context, side: Optional[int] = None) -> RelGoal:
    post = goal.post
    count = 0
    for s in _sides(side):
        prog = list(goal.prog(s))
        while prog and isinstance(prog[-1], S.Assign):
            c = prog.pop()
            post = wp_write(goal, ctx, s, c.target, tag(c.expr, s), post)
            count += 1
        goal = goal.with_prog(s, prog)
    if count == 0:
        raise TacticError("assign: no trailing deterministic assignment")
    return goal.replace(post=post)


def _const_dist(d) -> bool:
    return isinstance(d, (S.Named, S.Uniform))


def tactic_rnd(goal: RelGoal, ctx: Context, side: Optional[int] = None) -> RelGoal:
    used = bound_names(goal.post, ctx)
    u = fresh_name("u", used)
    uvar = S.Var(u, 0)
    if side is None:
        a = goal.left[-1] if goal.left else None
        b = goal.right[-1] if goal.right else None
        if not isinstance(a, S.Sample) or not isinstance(b, S.Sample):
            raise TacticError("rnd: both programs must end with a sampling")
        d1, d2 = tag_dist(a.dist, 1), tag_dist(b.dist, 2)
        extra = S.A_TRUE
        if _const_dist(d1) and _const_dist(d2):
            if ctx.eval_dist(d1) != ctx.eval_dist(d2):
                raise TacticError("rnd: the two samplings use different distributions")
        else:
            extra = S.SameDist(d1, d2)
        body = wp_write(goal, ctx, 2, b.target, uvar, goal.post)
        body = wp_write(goal, ctx, 1, a.target, uvar, body)
        post = conj(extra, S.ForallIn(u, d1, body))
        return goal.replace(left=goal.left[:-1], right=goal.right[:-1], post=post)
    prog = goal.prog(side)
    if not prog or not isinstance(prog[-1], S.Sample):
        raise TacticError(f"rnd: the {'left' if side == 1 else 'right'} program must end with a sampling")
    c = prog[-1]
    d = tag_dist(c.dist, side)
    extra = S.A_TRUE
    if _const_dist(d):
        if ctx.eval_dist(d).mass() != 1:
            raise TacticError("rnd: one-sided sampling from a distribution that is not lossless")
    else:
        extra = S.Lossless(d)
    post = conj(extra, S.ForallIn(u, d, wp_write(goal, ctx, side, c.target, uvar, goal.post)))
    return goal.with_prog(side, prog[:-1], post=post)


def tactic_skip(goal: RelGoal, ctx: Context, fuel: int) -> list:
    if goal.left or goal.right:
        raise TacticError("skip: both programs must be empty")
    out = discharge(goal, ctx, fuel)
    if not out.proven:
        raise ProofFailure(out, "skip: precondition does not imply postcondition; " + out.summary())
    return []


def tactic_auto(goal: RelGoal, ctx: Context, fuel: int) -> list:
    out = discharge(goal, ctx, fuel)
    if not out.proven:
        if out.kind == "counterexample" and _holds_lazily(goal, ctx, fuel):
            # not a real counterexample: the failing pair fixes a value that is still secret
            raise TacticError(
                "auto: the goal only holds with secret right entries read as samples; "
                "borrow the stored value with secrndasgn first"
            )
        raise ProofFailure(out, "auto: " + out.summary())
    return []


def _holds_lazily(goal: RelGoal, ctx: Context, fuel: int) -> bool:
    if _find_inv(expand_preds(goal.pre, ctx), ctx) is None:
        return False
    return discharge(goal, ctx, fuel, lazy=True).proven


def apply_tactic(goal: RelGoal, tac: S.Tactic, ctx: Context, fuel: int = 64) -> list:
    """Apply one tactic; returns the goals that replace ``goal`` (empty when closed)."""
    from . import lazy

    n, side, args = tac.name, tac.side, tac.args
    if n == "inline":
        return [tactic_inline(goal, ctx, side, args[0] if args else None)]
    if n == "case":
        if side is None:
            raise TacticError("case: a side ({1} or {2}) is required")
        return tactic_case(goal, ctx, side, args[0] if args else None)
    if n == "swap":
        if side is None or len(args) != 2:
            raise TacticError("swap: usage is swap {side} i j")
        return [tactic_swap(goal, ctx, side, int(args[0]), int(args[1]))]
    if n == "seq":
        if len(args) == 2:
            return tactic_seq(goal, ctx, int(args[0]), int(args[0]), args[1])
        if len(args) == 3:
            return tactic_seq(goal, ctx, int(args[0]), int(args[1]), args[2])
        raise TacticError("seq: usage is seq i [j] {assertion}")
    if n == "assign":
        return [tactic_assign(goal, ctx, side)]
    if n == "rnd":
        return [tactic_rnd(goal, ctx, side)]
    if n == "skip":
        return tactic_skip(goal, ctx, fuel)
    if n == "auto":
        return tactic_auto(goal, ctx, fuel)
    if n == "declassify":
        return [lazy.tactic_declassify(goal, ctx, _need_side(side, n))]
    if n == "secrnd":
        return [lazy.tactic_secrnd(goal, ctx, _need_side(side, n))]
    if n == "secrndasgn":
        if len(args) != 3:
            raise TacticError("secrndasgn: usage is secrndasgn <map> <key> <fresh-var>")
        return lazy.tactic_secrndasgn(goal, ctx, *args)
    raise TacticError(f"unknown tactic {n}")


def _need_side(side, name):
    if side is None:
        raise TacticError(f"{name}: a side ({{1}} or {{2}}) is required")
    return side


__all__ += ["default_expr", "fresh_name", "rename_block", "relevant_vars", "wp_write"]
