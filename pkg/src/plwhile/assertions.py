"""Relational assertions: evaluation on memory pairs, substitution, dependencies."""

from __future__ import annotations

from typing import Optional

from . import syntax as S
from .dist import Dist
from .interp import eval_expr
from .syntax import (
    AAnd,
    AImp,
    ANot,
    AOr,
    Atom,
    Context,
    Forall,
    ForallIn,
    IsLeaked,
    LabelEq,
    Lossless,
    PredRef,
    SameDist,
    SampledFrom,
    SecInv,
    SecInvAt,
    Truth,
    Updated,
    VarEq,
)
from .values import FMap, Memory, in_R, is_leaked, label_eq

__all__ = [
    "assertion_vars",
    "check_assertion",
    "holds",
    "sec_inv_clauses",
    "sec_inv_key",
    "subst",
    "subst_bound",
    "tag",
]

EMPTY_ENV = Memory()


# -- the secure-assignment invariant ----------------------------------------


def sec_inv_clauses(t, tp, d: Dist, k) -> tuple[bool, bool, bool, bool]:
    """Truth of the four invariant clauses at key ``k`` (``t`` left map, ``tp`` right map)."""
    a = t.get(k)
    b = tp.get(k)
    c1 = b is None or in_R(b, d)
    c2 = a is None or (b is not None and a.value == b.value)
    c3 = a is None or not is_leaked(a) or a == b
    c4 = a is not None or b is None or not is_leaked(b)
    return c1, c2, c3, c4


def sec_inv_key(t, tp, d: Dist, k) -> bool:
    return all(sec_inv_clauses(t, tp, d, k))


def sec_inv(t: FMap, tp: FMap, d: Dist) -> bool:
    """All clauses at every key; keys outside both domains satisfy them vacuously."""
    return all(sec_inv_key(t, tp, d, k) for k in t.domain() | tp.domain())


# -- evaluation --------------------------------------------------------------


def holds(a, ctx: Context, m1, m2, env: Memory = EMPTY_ENV) -> bool:
    """Truth of assertion ``a`` on the pair ``(m1, m2)``.

    Unset entries read as ⊥; every label predicate is false on ⊥.
    """
    mems = (m1, m2, env)

    def ev(e):
        return eval_expr(e, ctx, mems, strict=False)

    def dist(d) -> Dist:
        return ctx.eval_dist(d, ev)

    if isinstance(a, Truth):
        return a.value
    if isinstance(a, VarEq):
        return all(m1.read(n) == m2.read(n) for n in a.names)
    if isinstance(a, Atom):
        v = ev(a.expr)
        return bool(v) if v is not None else False
    if isinstance(a, IsLeaked):
        return is_leaked(ev(a.arg))
    if isinstance(a, SampledFrom):
        return in_R(ev(a.arg), dist(a.dist))
    if isinstance(a, LabelEq):
        x, y = ev(a.left), ev(a.right)
        return x is not None and y is not None and label_eq(x, y)
    if isinstance(a, SecInv):
        return sec_inv(m1.read(a.left), m2.read(a.right), dist(a.dist))
    if isinstance(a, SecInvAt):
        return sec_inv_key(m1.read(a.left), m2.read(a.right), dist(a.dist), a.key)
    if isinstance(a, AAnd):
        return all(holds(p, ctx, m1, m2, env) for p in a.parts)
    if isinstance(a, AOr):
        return any(holds(p, ctx, m1, m2, env) for p in a.parts)
    if isinstance(a, ANot):
        return not holds(a.arg, ctx, m1, m2, env)
    if isinstance(a, AImp):
        return not holds(a.left, ctx, m1, m2, env) or holds(a.right, ctx, m1, m2, env)
    if isinstance(a, Forall):
        return all(holds(a.body, ctx, m1, m2, env.set(a.var, v)) for v in ctx.values(S.TName(a.type)))
    if isinstance(a, ForallIn):
        return all(holds(a.body, ctx, m1, m2, env.set(a.var, v)) for v in dist(a.dist).support())
    if isinstance(a, PredRef):
        return holds(ctx.preds[a.name].body, ctx, m1, m2, env)
    if isinstance(a, Updated):
        v = ev(a.expr)
        pair = [m1, m2]
        m = _freeze(pair[a.side - 1])
        if isinstance(a.target, S.Var):
            m = m.set(a.target.name, v)
        else:
            m = m.set_entry(a.target.map, ev(a.target.key), v)
        pair[a.side - 1] = m
        return holds(a.body, ctx, pair[0], pair[1], env)
    if isinstance(a, SameDist):
        return dist(a.left) == dist(a.right)
    if isinstance(a, Lossless):
        return dist(a.dist).mass() == 1
    raise TypeError(f"not an assertion: {a!r}")


def _freeze(m) -> Memory:
    return m if isinstance(m, Memory) else m.freeze()


# -- syntactic operations ----------------------------------------------------


def map_expr(e, f):
    """Rebuild expression ``e`` bottom-up; ``f`` may replace any node (return None to keep)."""
    r = f(e)
    if r is not None:
        return r
    if isinstance(e, S.Lookup):
        return S.Lookup(e.map, map_expr(e.key, f), e.side)
    if isinstance(e, S.InDom):
        return S.InDom(e.map, map_expr(e.key, f), e.side)
    if isinstance(e, S.Eq):
        return S.Eq(map_expr(e.left, f), map_expr(e.right, f))
    if isinstance(e, S.And):
        return S.And(map_expr(e.left, f), map_expr(e.right, f))
    if isinstance(e, S.Or):
        return S.Or(map_expr(e.left, f), map_expr(e.right, f))
    if isinstance(e, S.Not):
        return S.Not(map_expr(e.arg, f))
    if isinstance(e, S.Cond):
        return S.Cond(map_expr(e.test, f), map_expr(e.then, f), map_expr(e.other, f))
    if isinstance(e, S.OpCall):
        return S.OpCall(e.name, tuple(map_expr(a, f) for a in e.args))
    if isinstance(e, S.Proj):
        return S.Proj(e.index, map_expr(e.arg, f))
    if isinstance(e, S.Triple):
        return S.Triple(map_expr(e.value, f), map_expr(e.origin, f), map_expr(e.conf, f))
    if isinstance(e, S.DistVal):
        return S.DistVal(map_dist(e.dist, f))
    return e


def map_dist(d, f):
    if isinstance(d, S.Point):
        return S.Point(map_expr(d.expr, f))
    return d


def tag(e, side: int):
    """Attach side ``side`` to every identifier of a program expression."""

    def f(x):
        if isinstance(x, S.Var):
            return S.Var(x.name, side)
        if isinstance(x, S.Lookup):
            return S.Lookup(x.map, tag(x.key, side), side)
        if isinstance(x, S.InDom):
            return S.InDom(x.map, tag(x.key, side), side)
        return None

    return map_expr(e, f)


def tag_dist(d, side: int):
    return S.Point(tag(d.expr, side)) if isinstance(d, S.Point) else d


def _subst_expr(e, side: int, name: str, repl):
    def f(x):
        if isinstance(x, S.Var) and x.side == side and x.name == name:
            return repl
        if isinstance(x, (S.Lookup, S.InDom)) and x.side == side and x.map == name:
            if not isinstance(repl, S.Var):
                raise ValueError(f"cannot substitute a non-variable for map {name}")
            return type(x)(repl.name, _subst_expr(x.key, side, name, repl), repl.side)
        return None

    return map_expr(e, f)


def assertion_vars(a, ctx: Context) -> set:
    """``(side, name)`` pairs read by ``a``; bound names are excluded."""
    out: set = set()

    def ex(e):
        def f(x):
            if isinstance(x, S.Var) and x.side in (1, 2):
                out.add((x.side, x.name))
            elif isinstance(x, (S.Lookup, S.InDom)) and x.side in (1, 2):
                out.add((x.side, x.map))
            return None

        map_expr(e, f)

    def dx(d):
        if isinstance(d, S.Point):
            ex(d.expr)

    def walk(a):
        if isinstance(a, VarEq):
            for n in a.names:
                out.add((1, n))
                out.add((2, n))
        elif isinstance(a, Atom):
            ex(a.expr)
        elif isinstance(a, IsLeaked):
            ex(a.arg)
        elif isinstance(a, SampledFrom):
            ex(a.arg)
            dx(a.dist)
        elif isinstance(a, LabelEq):
            ex(a.left)
            ex(a.right)
        elif isinstance(a, (SecInv, SecInvAt)):
            out.add((1, a.left))
            out.add((2, a.right))
        elif isinstance(a, (AAnd, AOr)):
            for p in a.parts:
                walk(p)
        elif isinstance(a, ANot):
            walk(a.arg)
        elif isinstance(a, AImp):
            walk(a.left)
            walk(a.right)
        elif isinstance(a, (Forall, ForallIn)):
            if isinstance(a, ForallIn):
                dx(a.dist)
            walk(a.body)
        elif isinstance(a, PredRef):
            walk(ctx.preds[a.name].body)
        elif isinstance(a, Updated):
            inner = assertion_vars(a.body, ctx)
            name = a.target.name if isinstance(a.target, S.Var) else a.target.map
            # an update the body never looks at reads nothing
            if (a.side, name) in inner:
                ex(a.expr)
                if isinstance(a.target, S.Var):
                    inner.discard((a.side, name))
                else:
                    ex(a.target.key)
            out.update(inner)
        elif isinstance(a, SameDist):
            dx(a.left)
            dx(a.right)
        elif isinstance(a, Lossless):
            dx(a.dist)

    walk(a)
    return out


def subst(a, ctx: Context, side: int, name: str, repl):
    """Replace variable ``name`` on ``side`` by the side-tagged expression ``repl``."""
    if (side, name) not in assertion_vars(a, ctx):
        return a
    e = lambda x: _subst_expr(x, side, name, repl)  # noqa: E731
    d = lambda x: S.Point(e(x.expr)) if isinstance(x, S.Point) else x  # noqa: E731

    if isinstance(a, VarEq):
        keep: list = []
        rest: list = []
        for n in a.names:
            l, r = e(S.Var(n, 1)), e(S.Var(n, 2))
            if isinstance(l, S.Var) and isinstance(r, S.Var) and l.name == r.name and (l.side, r.side) == (1, 2):
                keep.append(l.name)
            else:
                rest.append(Atom(S.Eq(l, r)))
        parts = ([VarEq(tuple(keep))] if keep else []) + rest
        return parts[0] if len(parts) == 1 else AAnd(tuple(parts))
    if isinstance(a, Atom):
        x = e(a.expr)
        if (isinstance(x, S.Eq) and isinstance(x.left, S.Var) and isinstance(x.right, S.Var)
                and x.left.name == x.right.name and (x.left.side, x.right.side) == (1, 2)):
            return VarEq((x.left.name,))
        return Atom(x)
    if isinstance(a, IsLeaked):
        return IsLeaked(e(a.arg))
    if isinstance(a, SampledFrom):
        return SampledFrom(e(a.arg), d(a.dist))
    if isinstance(a, LabelEq):
        return LabelEq(e(a.left), e(a.right))
    if isinstance(a, (SecInv, SecInvAt)):
        if not isinstance(repl, S.Var):
            raise ValueError(f"cannot substitute into invariant map {name}")
        left, right = a.left, a.right
        if side == 1 and left == name:
            left = repl.name
        if side == 2 and right == name:
            right = repl.name
        if isinstance(a, SecInv):
            return SecInv(left, right, a.dist)
        return SecInvAt(left, right, a.dist, a.key)
    if isinstance(a, AAnd):
        return AAnd(tuple(subst(p, ctx, side, name, repl) for p in a.parts))
    if isinstance(a, AOr):
        return AOr(tuple(subst(p, ctx, side, name, repl) for p in a.parts))
    if isinstance(a, ANot):
        return ANot(subst(a.arg, ctx, side, name, repl))
    if isinstance(a, AImp):
        return AImp(subst(a.left, ctx, side, name, repl), subst(a.right, ctx, side, name, repl))
    if isinstance(a, Forall):
        return Forall(a.var, a.type, subst(a.body, ctx, side, name, repl))
    if isinstance(a, ForallIn):
        return ForallIn(a.var, d(a.dist), subst(a.body, ctx, side, name, repl))
    if isinstance(a, PredRef):
        return subst(ctx.preds[a.name].body, ctx, side, name, repl)
    if isinstance(a, Updated):
        target = a.target if isinstance(a.target, S.Var) else S.Lookup(a.target.map, e(a.target.key), a.target.side)
        shadowed = a.side == side and isinstance(a.target, S.Var) and a.target.name == name
        body = a.body if shadowed else subst(a.body, ctx, side, name, repl)
        return Updated(a.side, target, e(a.expr), body)
    if isinstance(a, SameDist):
        return SameDist(d(a.left), d(a.right))
    if isinstance(a, Lossless):
        return Lossless(d(a.dist))
    return a


def subst_bound(a, var: str, repl):
    """Replace the bound name ``var`` (side 0) by ``repl``; stops under a rebinding."""

    def f(x):
        if isinstance(x, S.Var) and x.side == 0 and x.name == var:
            return repl
        return None

    e = lambda x: map_expr(x, f)  # noqa: E731
    d = lambda x: S.Point(e(x.expr)) if isinstance(x, S.Point) else x  # noqa: E731

    if isinstance(a, Atom):
        x = e(a.expr)
        if (isinstance(x, S.Eq) and isinstance(x.left, S.Var) and isinstance(x.right, S.Var)
                and x.left.name == x.right.name and (x.left.side, x.right.side) == (1, 2)):
            return VarEq((x.left.name,))
        return Atom(x)
    if isinstance(a, IsLeaked):
        return IsLeaked(e(a.arg))
    if isinstance(a, SampledFrom):
        return SampledFrom(e(a.arg), d(a.dist))
    if isinstance(a, LabelEq):
        return LabelEq(e(a.left), e(a.right))
    if isinstance(a, (AAnd, AOr)):
        return type(a)(tuple(subst_bound(p, var, repl) for p in a.parts))
    if isinstance(a, ANot):
        return ANot(subst_bound(a.arg, var, repl))
    if isinstance(a, AImp):
        return AImp(subst_bound(a.left, var, repl), subst_bound(a.right, var, repl))
    if isinstance(a, Forall):
        return a if a.var == var else Forall(a.var, a.type, subst_bound(a.body, var, repl))
    if isinstance(a, ForallIn):
        body = a.body if a.var == var else subst_bound(a.body, var, repl)
        return ForallIn(a.var, d(a.dist), body)
    if isinstance(a, Updated):
        target = a.target if isinstance(a.target, S.Var) else S.Lookup(a.target.map, e(a.target.key), a.target.side)
        return Updated(a.side, target, e(a.expr), subst_bound(a.body, var, repl))
    if isinstance(a, SameDist):
        return SameDist(d(a.left), d(a.right))
    if isinstance(a, Lossless):
        return Lossless(d(a.dist))
    return a


def bound_names(a, ctx: Context) -> set:
    out: set = set()

    def walk(a):
        if isinstance(a, (Forall, ForallIn)):
            out.add(a.var)
            walk(a.body)
        elif isinstance(a, (AAnd, AOr)):
            for p in a.parts:
                walk(p)
        elif isinstance(a, ANot):
            walk(a.arg)
        elif isinstance(a, AImp):
            walk(a.left)
            walk(a.right)
        elif isinstance(a, Updated):
            walk(a.body)
        elif isinstance(a, PredRef):
            walk(ctx.preds[a.name].body)

    walk(a)
    return out


def expand_preds(a, ctx: Context):
    """Inline every predicate reference."""
    if isinstance(a, PredRef):
        return expand_preds(ctx.preds[a.name].body, ctx)
    if isinstance(a, (AAnd, AOr)):
        return type(a)(tuple(expand_preds(p, ctx) for p in a.parts))
    if isinstance(a, ANot):
        return ANot(expand_preds(a.arg, ctx))
    if isinstance(a, AImp):
        return AImp(expand_preds(a.left, ctx), expand_preds(a.right, ctx))
    if isinstance(a, Forall):
        return Forall(a.var, a.type, expand_preds(a.body, ctx))
    if isinstance(a, ForallIn):
        return ForallIn(a.var, a.dist, expand_preds(a.body, ctx))
    if isinstance(a, Updated):
        return Updated(a.side, a.target, a.expr, expand_preds(a.body, ctx))
    return a


# -- typing ------------------------------------------------------------------


def check_assertion(a, ctx: Context, d1: dict, d2: dict, bound: Optional[dict] = None) -> list:
    """Typing problems in ``a`` given the left/right layouts ``d1``/``d2``."""
    from .checks import BOOL, Labeled, _TypeError, dist_type, type_of

    bound = dict(bound or {})
    out: list = []

    def look(name, side):
        if side == 1:
            return d1.get(name)
        if side == 2:
            return d2.get(name)
        if side == 0:
            return bound.get(name)
        return None

    def ty(e):
        return type_of(e, ctx, look)

    def labeled(e, what):
        t = ty(e)
        if not isinstance(t, Labeled):
            raise _TypeError(f"{what} applied to non-labeled {t}")
        return t

    def walk(a):
        try:
            if isinstance(a, VarEq):
                for n in a.names:
                    if n not in d1 or n not in d2:
                        raise _TypeError(f"unknown identifier {n} in ={{...}}")
            elif isinstance(a, Atom):
                if ty(a.expr) != BOOL:
                    raise _TypeError("atom is not boolean")
            elif isinstance(a, IsLeaked):
                labeled(a.arg, "is_leaked")
            elif isinstance(a, SampledFrom):
                t = labeled(a.arg, "sampled_from")
                if dist_type(a.dist, ctx, look).base != t.base:
                    raise _TypeError("sampled_from distribution over the wrong type")
            elif isinstance(a, LabelEq):
                if labeled(a.left, "label_eq") != labeled(a.right, "label_eq"):
                    raise _TypeError("label_eq on different types")
            elif isinstance(a, SecInv):
                for name, d in ((a.left, d1), (a.right, d2)):
                    t = d.get(name)
                    if not isinstance(t, S.MapType) or not isinstance(t.val, Labeled):
                        raise _TypeError(f"inv expects a labeled map, got {name}")
                dist_type(a.dist, ctx, look)
            elif isinstance(a, (AAnd, AOr)):
                for p in a.parts:
                    walk(p)
            elif isinstance(a, ANot):
                walk(a.arg)
            elif isinstance(a, AImp):
                walk(a.left)
                walk(a.right)
            elif isinstance(a, Forall):
                if a.type not in ctx.types and a.type not in ("bool", "unit"):
                    raise _TypeError(f"unknown type {a.type}")
                old = bound.get(a.var)
                bound[a.var] = S.TName(a.type)
                walk(a.body)
                bound[a.var] = old
            elif isinstance(a, ForallIn):
                old = bound.get(a.var)
                bound[a.var] = S.TName(dist_type(a.dist, ctx, look).base)
                walk(a.body)
                bound[a.var] = old
            elif isinstance(a, PredRef):
                if a.name not in ctx.preds:
                    raise _TypeError(f"unknown predicate {a.name}")
                walk(ctx.preds[a.name].body)
            elif isinstance(a, Updated):
                walk(a.body)
        except _TypeError as exc:
            out.append(str(exc))

    walk(a)
    return out
