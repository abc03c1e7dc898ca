"""Pretty-printer producing text the parser reads back to the same tree."""

from __future__ import annotations

from . import syntax as S
from .dist import Dist, fmt, fmt_weight
from .values import UNIT, Conf, Elem

__all__ = [
    "show_assertion",
    "show_block",
    "show_command",
    "show_dist",
    "show_expr",
    "show_file",
    "show_goal",
    "show_item",
    "show_tactic",
    "show_type",
]

INDENT = "  "


def _side(side) -> str:
    return f"{{{side}}}" if side else ""


def show_type(ty) -> str:
    return str(ty)


def show_dist(d) -> str:
    if isinstance(d, S.Named):
        return d.name
    if isinstance(d, S.Uniform):
        return f"uniform {d.type}"
    if isinstance(d, S.Point):
        return f"point({show_expr(d.expr)})"
    raise TypeError(f"not a distribution expression: {d!r}")


def _const(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if v is UNIT:
        return "()"
    if isinstance(v, Conf):
        return "SECRET" if v is Conf.SECRET else "LEAKED"
    if isinstance(v, Elem):
        return v.name
    return fmt(v)


# precedence: 0 conditional, 1 or, 2 and, 3 equality, 4 unary, 5 primary
def _prec(e) -> int:
    if isinstance(e, S.Cond):
        return 0
    if isinstance(e, S.Or):
        return 1
    if isinstance(e, S.And):
        return 2
    if isinstance(e, S.Eq) or (isinstance(e, S.Not) and isinstance(e.arg, S.Eq)):
        return 3
    if isinstance(e, (S.Not, S.Proj, S.InDom)):
        return 4
    return 5


def show_expr(e, level: int = 0) -> str:
    text = _expr(e)
    return f"({text})" if _prec(e) < level else text


def _expr(e) -> str:
    if isinstance(e, S.Const):
        return _const(e.value)
    if isinstance(e, S.Var):
        return e.name + _side(e.side)
    if isinstance(e, S.Lookup):
        return f"{e.map}{_side(e.side)}[{show_expr(e.key)}]"
    if isinstance(e, S.InDom):
        return f"dom {e.map}{_side(e.side)} {show_expr(e.key, 5)}"
    if isinstance(e, S.Eq):
        return f"{show_expr(e.left, 4)} = {show_expr(e.right, 4)}"
    if isinstance(e, S.Not):
        if isinstance(e.arg, S.Eq):
            return f"{show_expr(e.arg.left, 4)} <> {show_expr(e.arg.right, 4)}"
        return "!" + show_expr(e.arg, 4)
    if isinstance(e, S.And):
        return f"{show_expr(e.left, 2)} && {show_expr(e.right, 3)}"
    if isinstance(e, S.Or):
        return f"{show_expr(e.left, 1)} || {show_expr(e.right, 2)}"
    if isinstance(e, S.Cond):
        return f"if {show_expr(e.test)} then {show_expr(e.then)} else {show_expr(e.other)}"
    if isinstance(e, S.OpCall):
        return f"{e.name}({', '.join(show_expr(a) for a in e.args)})"
    if isinstance(e, S.Proj):
        return f"pi{e.index} {show_expr(e.arg, 4)}"
    if isinstance(e, S.Triple):
        return f"({show_expr(e.value)}, {show_expr(e.origin)}, {show_expr(e.conf)})"
    if isinstance(e, S.Bot):
        return "bot"
    if isinstance(e, S.EmptyMap):
        return "empty"
    if isinstance(e, S.DistVal):
        return show_dist(e.dist)
    raise TypeError(f"not an expression: {e!r}")


# -- commands --


def _lval(t) -> str:
    return show_expr(t)


def show_command(c, depth: int = 0) -> str:
    pad = INDENT * depth
    if isinstance(c, S.Skip):
        return pad + "skip;"
    if isinstance(c, S.Assign):
        return f"{pad}{_lval(c.target)} <- {show_expr(c.expr)};"
    if isinstance(c, S.Sample):
        return f"{pad}{_lval(c.target)} <$ {show_dist(c.dist)};"
    if isinstance(c, S.SecSample):
        return f"{pad}{_lval(c.target)} <~$ {show_dist(c.dist)};"
    if isinstance(c, S.SecRead):
        return f"{pad}{_lval(c.target)} <~ {_lval(c.source)};"
    if isinstance(c, S.Call):
        call = f"{c.module}.{c.proc}({', '.join(show_expr(a) for a in c.args)})"
        if c.target is None:
            return f"{pad}{call};"
        return f"{pad}{_lval(c.target)} <@ {call};"
    if isinstance(c, S.If):
        text = f"{pad}if ({show_expr(c.cond)}) {_braced(c.then, depth)}"
        if c.other:
            text += f" else {_braced(c.other, depth)}"
        return text
    if isinstance(c, S.While):
        return f"{pad}while ({show_expr(c.cond)}) {_braced(c.body, depth)}"
    raise TypeError(f"not a command: {c!r}")


def _braced(block, depth: int) -> str:
    if not block:
        return "{ }"
    inner = "\n".join(show_command(c, depth + 1) for c in block)
    return "{\n" + inner + "\n" + INDENT * depth + "}"


def show_block(block, depth: int = 0) -> str:
    """Commands one per line; ``(empty)`` for an empty block."""
    if not block:
        return INDENT * depth + "(empty)"
    return "\n".join(show_command(c, depth) for c in block)


# -- assertions --

# precedence: 0 binder, 1 implication, 2 disjunction, 3 conjunction, 4 negation, 5 atom
def _aprec(a) -> int:
    if isinstance(a, (S.Forall, S.ForallIn, S.Updated)):
        return 0
    if isinstance(a, S.AImp):
        return 1
    if isinstance(a, S.AOr):
        return 2
    if isinstance(a, S.AAnd):
        return 3
    if isinstance(a, S.ANot):
        return 4
    return 5


def show_assertion(a, level: int = 0) -> str:
    text = _assertion(a)
    return f"({text})" if _aprec(a) < level else text


def _assertion(a) -> str:
    if isinstance(a, S.Truth):
        return "true" if a.value else "false"
    if isinstance(a, S.VarEq):
        return "={" + ", ".join(a.names) + "}"
    if isinstance(a, S.Atom):
        text = show_expr(a.expr)
        # a bare parenthesized expression followed by nothing parses as an atom again,
        # but a leading '(' that closes early would be read as a nested assertion
        return text
    if isinstance(a, S.IsLeaked):
        return f"is_leaked({show_expr(a.arg)})"
    if isinstance(a, S.SampledFrom):
        return f"sampled_from({show_expr(a.arg)}, {show_dist(a.dist)})"
    if isinstance(a, S.LabelEq):
        return f"label_eq({show_expr(a.left)}, {show_expr(a.right)})"
    if isinstance(a, S.SecInv):
        return f"inv({a.left}{{1}}, {a.right}{{2}}, {show_dist(a.dist)})"
    if isinstance(a, S.SecInvAt):
        return f"inv({a.left}{{1}}, {a.right}{{2}}, {show_dist(a.dist)}) at {fmt(a.key)}"
    if isinstance(a, S.AAnd):
        if not a.parts:
            return "true"
        return " /\\ ".join(show_assertion(p, 4) for p in a.parts)
    if isinstance(a, S.AOr):
        if not a.parts:
            return "false"
        return " \\/ ".join(show_assertion(p, 3) for p in a.parts)
    if isinstance(a, S.ANot):
        return "~" + show_assertion(a.arg, 4)
    if isinstance(a, S.AImp):
        return f"{show_assertion(a.left, 2)} => {show_assertion(a.right, 0)}"
    if isinstance(a, S.Forall):
        return f"forall {a.var}: {a.type}, {show_assertion(a.body)}"
    if isinstance(a, S.ForallIn):
        return f"forall {a.var} in {show_dist(a.dist)}, {show_assertion(a.body)}"
    if isinstance(a, S.PredRef):
        return a.name
    if isinstance(a, S.Updated):
        t = a.target
        tgt = t.name if isinstance(t, S.Var) else f"{t.map}[{show_expr(t.key)}]"
        return f"let{{{a.side}}} {tgt} := {show_expr(a.expr)} in {show_assertion(a.body)}"
    if isinstance(a, S.SameDist):
        return f"samedist({show_dist(a.left)}, {show_dist(a.right)})"
    if isinstance(a, S.Lossless):
        return f"lossless({show_dist(a.dist)})"
    raise TypeError(f"not an assertion: {a!r}")


# -- declarations --


def show_tactic(t: S.Tactic) -> str:
    parts = [t.name]
    if t.side:
        parts.append(_side(t.side))
    for a in t.args:
        if isinstance(a, int):
            parts.append(str(a))
        elif isinstance(a, str):
            parts.append(a)
        elif t.name == "case":
            parts.append(f"({show_expr(a)})")
        elif t.name == "seq":
            parts.append("{" + show_assertion(a) + "}")
        else:
            parts.append(show_expr(a, 5))
    return " ".join(parts) + ";"


def _decls(decls, depth: int) -> list:
    return [f"{INDENT * depth}var {d.name}: {show_type(d.type)};" for d in decls]


def _proc(p: S.Proc) -> str:
    params = ", ".join(f"{d.name}: {show_type(d.type)}" for d in p.params)
    head = f"{INDENT}proc {p.name}({params})"
    if p.ret_type is not None:
        head += f": {show_type(p.ret_type)}"
    lines = [head + " {"] + _decls(p.locals, 2)
    lines += [show_command(c, 2) for c in p.body]
    if p.ret is not None:
        lines.append(f"{INDENT * 2}return {show_expr(p.ret)};")
    lines.append(INDENT + "}")
    return "\n".join(lines)


def show_goal(name: str, decls, left, right, pre, post) -> str:
    lines = [f"goal {name} {{"] + _decls(decls, 1)
    lines.append(f"{INDENT}left {_braced(left, 1)}")
    lines.append(f"{INDENT}right {_braced(right, 1)}")
    lines.append(f"{INDENT}pre {show_assertion(pre)};")
    lines.append(f"{INDENT}post {show_assertion(post)};")
    lines.append("}")
    return "\n".join(lines)


def show_item(item) -> str:
    if isinstance(item, S.TypeDecl):
        return f"type {item.name} = {{{', '.join(item.elements)}}};"
    if isinstance(item, S.DistDef):
        if item.weights is None:
            return f"dist {item.name}: {item.type} = uniform;"
        body = ", ".join(f"{n}: {fmt_weight(w)}" for n, w in item.weights)
        return f"dist {item.name}: {item.type} = {{{body}}};"
    if isinstance(item, S.OpDef):
        params = ", ".join(f"{d.name}: {show_type(d.type)}" for d in item.params)
        return f"op {item.name}({params}): {show_type(item.ret)} = {show_expr(item.body)};"
    if isinstance(item, S.PredDef):
        return f"pred {item.name} = {show_assertion(item.body)};"
    if isinstance(item, S.Module):
        lines = [f"module {item.name} {{"] + _decls(item.globals, 1)
        lines += [_proc(p) for p in item.procs]
        lines.append("}")
        return "\n".join(lines)
    if isinstance(item, S.GoalDef):
        return show_goal(item.name, item.vars, item.left, item.right, item.pre, item.post)
    if isinstance(item, S.ProofDef):
        lines = [f"proof {item.goal} {{"] + [INDENT + show_tactic(t) for t in item.tactics] + ["}"]
        return "\n".join(lines)
    if isinstance(item, S.ClaimDef):
        return f"claim {item.name} = {', '.join(item.goals)};"
    raise TypeError(f"not a declaration: {item!r}")


def show_file(src: S.SourceFile) -> str:
    return "\n\n".join(show_item(i) for i in src.items) + "\n"


def show_dist_value(d: Dist) -> str:
    return d.text()
