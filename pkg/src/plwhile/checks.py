"""Static checks: typing, the labeled-syntax guard, and variable-usage analyses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import syntax as S
from .syntax import (
    BOOL,
    CONF,
    UNIT_T,
    Context,
    DistOf,
    Labeled,
    MapType,
    TName,
    is_labeled,
)
from .values import UNIT, Conf, Elem

__all__ = [
    "Issue",
    "exposed_reads",
    "free_vars",
    "goal_decls",
    "guard_check",
    "lint",
    "must_writes",
    "reads_writes",
    "well_formed",
]


@dataclass(frozen=True)
class Issue:
    where: str
    message: str
    pos: Optional[tuple] = None
    ident: Optional[str] = None

    def __str__(self) -> str:
        at = f" (line {self.pos[0]}, col {self.pos[1]})" if self.pos else ""
        return f"{self.where}{at}: {self.message}"


class _TypeError(Exception):
    pass


BOT_T = TName("⊥")
EMPTY_T = TName("empty")


# -- typing ------------------------------------------------------------------


def _compatible(expected, actual) -> bool:
    if expected == actual:
        return True
    if isinstance(expected, DistOf) and actual == BOT_T:
        return True
    if isinstance(expected, MapType) and actual == EMPTY_T:
        return True
    return False


def dist_type(d, ctx: Context, lookup) -> DistOf:
    if isinstance(d, S.Named):
        if d.name not in ctx.dists:
            raise _TypeError(f"unknown distribution {d.name}")
        return DistOf(ctx.dist_types[d.name])
    if isinstance(d, S.Uniform):
        if d.type not in ctx.types:
            raise _TypeError(f"unknown type {d.type}")
        return DistOf(d.type)
    if isinstance(d, S.Point):
        t = type_of(d.expr, ctx, lookup)
        if not isinstance(t, TName) or t.name not in ctx.types:
            raise _TypeError(f"point distribution over non-enumerated type {t}")
        return DistOf(t.name)
    raise _TypeError(f"not a distribution expression: {d!r}")


def type_of(e, ctx: Context, lookup: Callable[[str, Optional[int]], object]):
    """Infer the type of ``e``; ``lookup(name, side)`` resolves identifiers."""

    def var(name, side):
        t = lookup(name, side)
        if t is None:
            raise _TypeError(f"unknown identifier {name}")
        return t

    def map_of(name, side, key) -> MapType:
        t = var(name, side)
        if not isinstance(t, MapType):
            raise _TypeError(f"{name} is not a map")
        kt = type_of(key, ctx, lookup)
        if kt != TName(t.key):
            raise _TypeError(f"key of {name} has type {kt}, expected {t.key}")
        return t

    if isinstance(e, S.Const):
        v = e.value
        if isinstance(v, bool):
            return BOOL
        if isinstance(v, Elem):
            return TName(v.type)
        if v is UNIT:
            return UNIT_T
        if isinstance(v, Conf):
            return CONF
        raise _TypeError(f"bad constant {v!r}")
    if isinstance(e, S.Var):
        return var(e.name, e.side)
    if isinstance(e, S.Lookup):
        return map_of(e.map, e.side, e.key).val
    if isinstance(e, S.InDom):
        map_of(e.map, e.side, e.key)
        return BOOL
    if isinstance(e, S.Eq):
        a, b = type_of(e.left, ctx, lookup), type_of(e.right, ctx, lookup)
        if not (_compatible(a, b) or _compatible(b, a)):
            raise _TypeError(f"cannot compare {a} with {b}")
        return BOOL
    if isinstance(e, S.Not):
        _expect(BOOL, type_of(e.arg, ctx, lookup), "negation")
        return BOOL
    if isinstance(e, (S.And, S.Or)):
        _expect(BOOL, type_of(e.left, ctx, lookup), "connective")
        _expect(BOOL, type_of(e.right, ctx, lookup), "connective")
        return BOOL
    if isinstance(e, S.Cond):
        _expect(BOOL, type_of(e.test, ctx, lookup), "condition")
        a, b = type_of(e.then, ctx, lookup), type_of(e.other, ctx, lookup)
        if a != b:
            raise _TypeError(f"branches have types {a} and {b}")
        return a
    if isinstance(e, S.OpCall):
        if e.name not in ctx.ops:
            raise _TypeError(f"unknown operator {e.name}")
        op = ctx.ops[e.name]
        if len(op.params) != len(e.args):
            raise _TypeError(f"{e.name} expects {len(op.params)} arguments")
        for p, a in zip(op.params, e.args):
            _expect(p.type, type_of(a, ctx, lookup), f"argument {p.name} of {e.name}")
        return op.ret
    if isinstance(e, S.Proj):
        t = type_of(e.arg, ctx, lookup)
        if not isinstance(t, Labeled):
            raise _TypeError(f"projection of non-labeled type {t}")
        return {1: TName(t.base), 2: DistOf(t.base), 3: CONF}[e.index]
    if isinstance(e, S.Triple):
        v = type_of(e.value, ctx, lookup)
        if not isinstance(v, TName) or v.name not in ctx.types:
            raise _TypeError(f"labeled value over non-enumerated type {v}")
        _expect(DistOf(v.name), type_of(e.origin, ctx, lookup), "origin")
        _expect(CONF, type_of(e.conf, ctx, lookup), "confidentiality")
        return Labeled(v.name)
    if isinstance(e, S.Bot):
        return BOT_T
    if isinstance(e, S.DistVal):
        return dist_type(e.dist, ctx, lookup)
    if isinstance(e, S.EmptyMap):
        return EMPTY_T
    raise _TypeError(f"not an expression: {e!r}")


def _expect(expected, actual, what: str) -> None:
    if _compatible(expected, actual):
        return
    if is_labeled(expected) != is_labeled(actual):
        plain = "labeled value used where plain expected" if is_labeled(actual) else "plain value used where labeled expected"
        raise _TypeError(f"{what}: {plain} ({actual} vs {expected})")
    raise _TypeError(f"{what}: type mismatch, {actual} vs {expected}")


def _scope(decls: dict):
    return lambda name, side: decls.get(name)


def check_block(block, ctx: Context, decls: dict, where: str, out: list) -> None:
    look = _scope(decls)
    for c in block:
        try:
            _check_cmd(c, ctx, decls, look, where, out)
        except _TypeError as exc:
            out.append(Issue(where, str(exc), c.pos))


def _check_cmd(c, ctx, decls, look, where, out) -> None:
    if isinstance(c, S.Skip):
        return
    if isinstance(c, S.Assign):
        _expect(type_of(c.target, ctx, look), type_of(c.expr, ctx, look), "assignment")
    elif isinstance(c, S.Sample):
        tt = type_of(c.target, ctx, look)
        if not isinstance(tt, TName):
            raise _TypeError(f"sampling into a {'labeled' if is_labeled(tt) else 'non-scalar'} target; use <~$ for labeled targets")
        _expect(DistOf(tt.name), dist_type(c.dist, ctx, look), "sampling")
    elif isinstance(c, (S.If, S.While)):
        _expect(BOOL, type_of(c.cond, ctx, look), "condition")
        check_block(c.then if isinstance(c, S.If) else c.body, ctx, decls, where, out)
        if isinstance(c, S.If):
            check_block(c.other, ctx, decls, where, out)
    elif isinstance(c, S.SecRead):
        if not isinstance(c.source, (S.Var, S.Lookup)):
            raise _TypeError("secure read source must be a variable or map entry")
        st = type_of(c.source, ctx, look)
        if not isinstance(st, Labeled):
            raise _TypeError(f"secure read from non-labeled {st}")
        _expect(type_of(c.target, ctx, look), TName(st.base), "secure read")
    elif isinstance(c, S.SecSample):
        tt = type_of(c.target, ctx, look)
        if not isinstance(tt, Labeled):
            raise _TypeError(f"secure sampling into non-labeled {tt}")
        _expect(DistOf(tt.base), dist_type(c.dist, ctx, look), "secure sampling")
    elif isinstance(c, S.Call):
        if c.module not in ctx.modules:
            raise _TypeError(f"unknown module {c.module}")
        mod = ctx.modules[c.module]
        if not mod.has_proc(c.proc):
            raise _TypeError(f"unknown procedure {c.module}.{c.proc}")
        p = mod.proc(c.proc)
        if len(p.params) != len(c.args):
            raise _TypeError(f"{c.module}.{c.proc} expects {len(p.params)} arguments")
        for prm, a in zip(p.params, c.args):
            _expect(prm.type, type_of(a, ctx, look), f"argument {prm.name}")
        for g in mod.globals:
            if decls.get(g.name) != g.type:
                raise _TypeError(f"call site does not bind global {g.name} of {c.module}")
        if c.target is not None:
            if p.ret_type is None:
                raise _TypeError(f"{c.module}.{c.proc} returns nothing")
            _expect(type_of(c.target, ctx, look), p.ret_type, "call result")
    else:
        raise _TypeError(f"not a command: {c!r}")


def _check_type(ty, ctx: Context) -> Optional[str]:
    names = []
    if isinstance(ty, TName):
        if ty.name in ("bool", "unit", "conf"):
            return None
        names = [ty.name]
    elif isinstance(ty, Labeled):
        names = [ty.base]
    elif isinstance(ty, MapType):
        names = [ty.key, ty.val.name if isinstance(ty.val, TName) else ty.val.base]
    for n in names:
        if n not in ctx.types and n not in ("bool", "unit"):
            return f"unknown type {n}"
    return None


def well_formed(module: S.Module, ctx: Context) -> list:
    """Type errors of ``module``; the empty list means well formed."""
    out: list = []
    gdecls = {}
    for g in module.globals:
        msg = _check_type(g.type, ctx)
        if msg:
            out.append(Issue(f"module {module.name}", msg, g.pos, g.name))
        gdecls[g.name] = g.type
    seen = set()
    for p in module.procs:
        where = f"{module.name}.{p.name}"
        if p.name in seen:
            out.append(Issue(where, "procedure declared twice", p.pos))
        seen.add(p.name)
        decls = dict(gdecls)
        for v in p.params + p.locals:
            msg = _check_type(v.type, ctx)
            if msg:
                out.append(Issue(where, msg, v.pos, v.name))
            decls[v.name] = v.type
        check_block(p.body, ctx, decls, where, out)
        if p.ret is not None:
            try:
                if p.ret_type is None:
                    raise _TypeError("return value in a procedure without result type")
                _expect(p.ret_type, type_of(p.ret, ctx, _scope(decls)), "return")
            except _TypeError as exc:
                out.append(Issue(where, str(exc), p.pos))
        elif p.ret_type is not None:
            out.append(Issue(where, "missing return", p.pos))
    return out


# -- guard -------------------------------------------------------------------


def _labeled_mentions(e, labeled: set) -> list:
    """Labeled identifiers appearing in ``e`` outside a ``dom`` map operand."""
    found: list = []

    def walk(e):
        if isinstance(e, S.Var):
            if e.name in labeled:
                found.append(e.name)
        elif isinstance(e, S.Lookup):
            if e.map in labeled:
                found.append(e.map)
            walk(e.key)
        elif isinstance(e, S.InDom):
            walk(e.key)
        elif isinstance(e, (S.Eq, S.And, S.Or)):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, S.Not):
            walk(e.arg)
        elif isinstance(e, S.Cond):
            walk(e.test)
            walk(e.then)
            walk(e.other)
        elif isinstance(e, S.OpCall):
            for a in e.args:
                walk(a)
        elif isinstance(e, S.Proj):
            walk(e.arg)
        elif isinstance(e, S.Triple):
            walk(e.value)
            walk(e.origin)
            walk(e.conf)
        elif isinstance(e, S.DistVal) and isinstance(e.dist, S.Point):
            walk(e.dist.expr)

    walk(e)
    return found


def _dist_mentions(d, labeled):
    return _labeled_mentions(d.expr, labeled) if isinstance(d, S.Point) else []


def guard_block(block, labeled: set, where: str) -> list:
    """Violations of the rule that labeled names only flow through the dedicated syntax."""
    out: list = []

    def flag(c, names, role):
        for n in dict.fromkeys(names):
            out.append(Issue(where, f"labeled identifier {n} used in {role}", c.pos, n))

    def target_key(t):
        return _labeled_mentions(t.key, labeled) if isinstance(t, S.Lookup) else []

    def labeled_slot(t):
        return isinstance(t, S.Var) and t.name in labeled or isinstance(t, S.Lookup) and t.map in labeled

    for c in block:
        if isinstance(c, S.Assign):
            whole_reset = isinstance(c.target, S.Var) and isinstance(c.expr, S.EmptyMap)
            if not whole_reset:
                flag(c, _labeled_mentions(c.target, labeled), "the target of a plain assignment")
            flag(c, _labeled_mentions(c.expr, labeled), "a plain expression")
        elif isinstance(c, S.Sample):
            flag(c, _labeled_mentions(c.target, labeled), "the target of a plain sampling")
            flag(c, _dist_mentions(c.dist, labeled), "a distribution expression")
        elif isinstance(c, S.If):
            flag(c, _labeled_mentions(c.cond, labeled), "a branch condition")
            out.extend(guard_block(c.then, labeled, where))
            out.extend(guard_block(c.other, labeled, where))
        elif isinstance(c, S.While):
            flag(c, _labeled_mentions(c.cond, labeled), "a loop condition")
            out.extend(guard_block(c.body, labeled, where))
        elif isinstance(c, S.SecRead):
            flag(c, _labeled_mentions(c.target, labeled), "the target of a secure read")
            if not labeled_slot(c.source):
                flag(c, _labeled_mentions(c.source, labeled), "a secure read source expression")
            flag(c, target_key(c.source), "a map key")
        elif isinstance(c, S.SecSample):
            flag(c, target_key(c.target), "a map key")
            flag(c, _dist_mentions(c.dist, labeled), "a distribution expression")
        elif isinstance(c, S.Call):
            for a in c.args:
                flag(c, _labeled_mentions(a, labeled), "a procedure argument")
            if c.target is not None:
                flag(c, _labeled_mentions(c.target, labeled), "the target of a call")
    return out


def guard_check(module: S.Module, ctx: Context) -> list:
    """Guard violations in every procedure of ``module``; empty means accepted."""
    out: list = []
    gl = {g.name for g in module.globals if is_labeled(g.type)}
    for p in module.procs:
        where = f"{module.name}.{p.name}"
        labeled = gl | {v.name for v in p.params + p.locals if is_labeled(v.type)}
        labeled -= {v.name for v in p.params + p.locals if not is_labeled(v.type)}
        out.extend(guard_block(p.body, labeled, where))
        if p.ret is not None:
            for n in dict.fromkeys(_labeled_mentions(p.ret, labeled)):
                out.append(Issue(where, f"labeled identifier {n} used in a return value", p.pos, n))
        for v in p.params:
            if is_labeled(v.type):
                out.append(Issue(where, f"labeled parameter {v.name} would be passed as a plain value", v.pos, v.name))
    return out


# -- goals -------------------------------------------------------------------


def called_modules(block, ctx: Context, acc: Optional[list] = None) -> list:
    acc = [] if acc is None else acc
    for c in block:
        if isinstance(c, S.Call):
            if c.module not in acc:
                acc.append(c.module)
                if c.module in ctx.modules:
                    for p in ctx.modules[c.module].procs:
                        called_modules(p.body, ctx, acc)
        elif isinstance(c, S.If):
            called_modules(c.then, ctx, acc)
            called_modules(c.other, ctx, acc)
        elif isinstance(c, S.While):
            called_modules(c.body, ctx, acc)
    return acc


def goal_decls(goal: S.GoalDef, ctx: Context) -> tuple[dict, dict]:
    """Left and right variable layouts: declared goal vars plus globals of called modules."""
    out = []
    for block in (goal.left, goal.right):
        decls = {v.name: v.type for v in goal.vars}
        for mname in called_modules(block, ctx):
            if mname not in ctx.modules:
                continue
            for g in ctx.modules[mname].globals:
                if g.name in decls and decls[g.name] != g.type:
                    raise ValueError(f"global {mname}.{g.name} clashes with another declaration")
                decls.setdefault(g.name, g.type)
        out.append(decls)
    return out[0], out[1]


def lint(ctx: Context) -> list:
    """Typing and guard issues for every module and goal of a file."""
    out: list = []
    for op in ctx.ops.values():
        decls = {p.name: p.type for p in op.params}
        try:
            _expect(op.ret, type_of(op.body, ctx, _scope(decls)), f"operator {op.name}")
        except _TypeError as exc:
            out.append(Issue(f"op {op.name}", str(exc), op.pos))
    for m in ctx.modules.values():
        errs = well_formed(m, ctx)
        out.extend(errs)
        if not errs:
            out.extend(guard_check(m, ctx))
    for g in ctx.goals.values():
        where = f"goal {g.name}"
        try:
            d1, d2 = goal_decls(g, ctx)
        except ValueError as exc:
            out.append(Issue(where, str(exc), g.pos))
            continue
        n = len(out)
        check_block(g.left, ctx, d1, where, out)
        check_block(g.right, ctx, d2, where, out)
        if len(out) == n:
            out.extend(guard_block(g.left, {k for k, t in d1.items() if is_labeled(t)}, where))
            out.extend(guard_block(g.right, {k for k, t in d2.items() if is_labeled(t)}, where))
        from .assertions import check_assertion

        for label, a in (("pre", g.pre), ("post", g.post)):
            for msg in check_assertion(a, ctx, d1, d2):
                out.append(Issue(f"{where} {label}", msg, g.pos))
    return out


# -- usage analyses ----------------------------------------------------------


def expr_vars(e) -> set:
    out: set = set()

    def walk(e):
        if isinstance(e, S.Var):
            out.add(e.name)
        elif isinstance(e, (S.Lookup, S.InDom)):
            out.add(e.map)
            walk(e.key)
        elif isinstance(e, (S.Eq, S.And, S.Or)):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, S.Not):
            walk(e.arg)
        elif isinstance(e, S.Cond):
            walk(e.test)
            walk(e.then)
            walk(e.other)
        elif isinstance(e, S.OpCall):
            for a in e.args:
                walk(a)
        elif isinstance(e, S.Proj):
            walk(e.arg)
        elif isinstance(e, S.Triple):
            walk(e.value)
            walk(e.origin)
            walk(e.conf)
        elif isinstance(e, S.DistVal):
            walk_dist(e.dist)

    def walk_dist(d):
        if isinstance(d, S.Point):
            walk(d.expr)

    walk(e)
    return out


def dist_vars(d) -> set:
    return expr_vars(d.expr) if isinstance(d, S.Point) else set()


def _target_parts(t) -> tuple[str, set]:
    """(written base name, names read to locate the slot)."""
    if isinstance(t, S.Var):
        return t.name, set()
    return t.map, {t.map} | expr_vars(t.key)


def _proc_frame(p) -> set:
    return {v.name for v in p.params + p.locals}


def reads_writes(block, ctx: Context) -> tuple[set, set]:
    """Names possibly read and possibly written by ``block``, through calls."""
    reads: set = set()
    writes: set = set()
    for c in block:
        if isinstance(c, S.Assign):
            w, r = _target_parts(c.target)
            writes.add(w)
            reads |= r | expr_vars(c.expr)
        elif isinstance(c, S.Sample):
            w, r = _target_parts(c.target)
            writes.add(w)
            reads |= r | dist_vars(c.dist)
        elif isinstance(c, S.SecSample):
            w, r = _target_parts(c.target)
            writes.add(w)
            reads |= r | dist_vars(c.dist)
        elif isinstance(c, S.SecRead):
            w, r = _target_parts(c.target)
            ws, rs = _target_parts(c.source)
            writes |= {w, ws}
            reads |= r | rs | {ws}
        elif isinstance(c, S.If):
            reads |= expr_vars(c.cond)
            for b in (c.then, c.other):
                r, w = reads_writes(b, ctx)
                reads |= r
                writes |= w
        elif isinstance(c, S.While):
            reads |= expr_vars(c.cond)
            r, w = reads_writes(c.body, ctx)
            reads |= r
            writes |= w
        elif isinstance(c, S.Call):
            p = ctx.module_of_proc(c.module, c.proc)
            frame = _proc_frame(p)
            r, w = reads_writes(p.body, ctx)
            if p.ret is not None:
                r |= expr_vars(p.ret)
            reads |= (r - frame)
            writes |= (w - frame)
            for a in c.args:
                reads |= expr_vars(a)
            if c.target is not None:
                tw, tr = _target_parts(c.target)
                writes.add(tw)
                reads |= tr
    return reads, writes


def free_vars(block, ctx: Context) -> set:
    """All identifiers read or written by ``block``, including inside called procedures."""
    if not isinstance(block, tuple):
        block = (block,)
    r, w = reads_writes(block, ctx)
    return r | w


def _walk_exposed(block, ctx: Context, defined: frozenset) -> tuple[set, frozenset]:
    exposed: set = set()
    d = set(defined)
    for c in block:
        if isinstance(c, (S.Assign, S.Sample, S.SecSample)):
            used = expr_vars(c.expr) if isinstance(c, S.Assign) else dist_vars(c.dist)
            _, r = _target_parts(c.target)
            exposed |= (used | r) - d
            if isinstance(c.target, S.Var):
                d.add(c.target.name)
        elif isinstance(c, S.SecRead):
            _, r = _target_parts(c.target)
            ws, rs = _target_parts(c.source)
            exposed |= (r | rs | {ws}) - d
            if isinstance(c.target, S.Var):
                d.add(c.target.name)
        elif isinstance(c, S.If):
            exposed |= expr_vars(c.cond) - d
            e1, d1 = _walk_exposed(c.then, ctx, frozenset(d))
            e2, d2 = _walk_exposed(c.other, ctx, frozenset(d))
            exposed |= e1 | e2
            d = set(d1 & d2)
        elif isinstance(c, S.While):
            exposed |= expr_vars(c.cond) - d
            e1, _ = _walk_exposed(c.body, ctx, frozenset(d))
            exposed |= e1
        elif isinstance(c, S.Call):
            for a in c.args:
                exposed |= expr_vars(a) - d
            p = ctx.module_of_proc(c.module, c.proc)
            frame = _proc_frame(p)
            inner_def = frozenset(d | frame)
            e1, d1 = _walk_exposed(p.body, ctx, inner_def)
            if p.ret is not None:
                e1 |= expr_vars(p.ret) - d1
            exposed |= e1 - frame
            d |= set(d1) - frame
            if c.target is not None:
                _, r = _target_parts(c.target)
                exposed |= r - d
                if isinstance(c.target, S.Var):
                    d.add(c.target.name)
    return exposed, frozenset(d)


def exposed_reads(block, ctx: Context) -> set:
    """Names whose initial value ``block`` may observe."""
    return _walk_exposed(block, ctx, frozenset())[0]


def must_writes(block, ctx: Context) -> set:
    """Names that ``block`` overwrites wholesale on every path."""
    return set(_walk_exposed(block, ctx, frozenset())[1])


def labeled_names(decls: dict) -> set:
    return {n for n, t in decls.items() if is_labeled(t)}


__all__ += ["called_modules", "check_block", "dist_type", "expr_vars", "guard_block", "labeled_names", "type_of"]
