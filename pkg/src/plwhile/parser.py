"""Recursive-descent parser for ``.plw`` source files."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import syntax as S
from .values import UNIT, Conf, Elem

__all__ = ["ParseError", "parse", "parse_assertion", "parse_block", "parse_expr", "parse_tactics"]


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Tok:
    kind: str  # id | num | sym | side | eof
    text: str
    line: int
    col: int
    end_col: int


_SYMBOLS = [
    "<~$", "<~", "<$", "<-", "<@", "<>", "->", "=>", "/\\", "\\/", "&&", "||", ":=",
    "=", "!", "~", "{", "}", "(", ")", "[", "]", ";", ",", ":", ".", "/",
]
_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)|(?P<side>\{[12]\})"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_#']*)|(?P<num>[0-9]+)|(?P<sym>"
    + "|".join(re.escape(s) for s in _SYMBOLS)
    + ")"
)

KEYWORDS = {
    "type", "dist", "op", "pred", "module", "var", "proc", "return", "goal", "left", "right",
    "pre", "post", "proof", "claim", "if", "then", "else", "while", "skip", "true", "false",
    "bot", "empty", "dom", "pi1", "pi2", "pi3", "uniform", "point", "leakable", "SECRET",
    "LEAKED", "forall", "in", "let", "inv", "is_leaked", "sampled_from", "label_eq",
    "samedist", "lossless",
}


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, col, col + len(m.group()) - 1))
        i = m.end()
    # point EOF at the last character of the input
    last_line = text.count("\n") + 1
    tail = text.rsplit("\n", 1)[-1]
    if toks:
        t = toks[-1]
        toks.append(Tok("eof", "", t.line, t.end_col, t.end_col))
    else:
        toks.append(Tok("eof", "", last_line, max(len(tail), 1), max(len(tail), 1)))
    return toks


_EXPR_OPS = {"=", "<>", "&&", "||"}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.types: dict[str, tuple] = {}
        self.consts: dict[str, Elem] = {}
        self.dists: set = set()
        self.ops: set = set()
        self.preds: set = set()
        self.module: Optional[str] = None
        self.bound: list[str] = []

    # -- token helpers --

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "id") and t.text == text

    def error(self, msg: str, tok: Optional[Tok] = None):
        t = tok or self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg} (found {found})", t.line, t.col)

    def next(self) -> Tok:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.next()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "id" or t.text in KEYWORDS:
            self.error(f"expected {what}")
        self.next()
        return t.text

    def number(self) -> int:
        if self.tok.kind != "num":
            self.error("expected a number")
        return int(self.next().text)

    def side(self) -> Optional[int]:
        if self.tok.kind == "side":
            return int(self.next().text[1])
        return None

    def pos(self) -> tuple:
        return (self.tok.line, self.tok.col)

    # -- file --

    def parse_file(self) -> S.SourceFile:
        items = []
        while self.tok.kind != "eof":
            items.append(self.item())
        return S.SourceFile(tuple(items))

    def item(self):
        p = self.pos()
        if self.accept("type"):
            name = self.ident("type name")
            self.expect("=")
            self.expect("{")
            elems = [self.ident("constant")]
            while self.accept(","):
                elems.append(self.ident("constant"))
            self.expect("}")
            self.expect(";")
            for n in elems:
                if n in self.consts:
                    self.error(f"constant {n} already declared")
            self.types[name] = tuple(elems)
            for k, n in enumerate(elems):
                self.consts[n] = Elem(name, k, n)
            return S.TypeDecl(name, tuple(elems), pos=p)
        if self.accept("dist"):
            name = self.ident("distribution name")
            self.expect(":")
            ty = self.type_name()
            self.expect("=")
            weights = None
            if not self.accept("uniform"):
                self.expect("{")
                weights = []
                while True:
                    c = self.ident("constant")
                    if c not in self.consts or self.consts[c].type != ty:
                        self.error(f"{c} is not a constant of {ty}", self.toks[self.i - 1])
                    self.expect(":")
                    num = self.number()
                    den = 1
                    if self.accept("/"):
                        den = self.number()
                    weights.append((c, Fraction(num, den)))
                    if not self.accept(","):
                        break
                self.expect("}")
                weights = tuple(weights)
            self.expect(";")
            self.dists.add(name)
            return S.DistDef(name, ty, weights, pos=p)
        if self.accept("op"):
            name = self.ident("operator name")
            params = self.params()
            self.expect(":")
            ret = self.type_expr()
            self.expect("=")
            self.ops.add(name)
            body = self.expr()
            self.expect(";")
            return S.OpDef(name, params, ret, body, pos=p)
        if self.accept("pred"):
            name = self.ident("predicate name")
            self.expect("=")
            body = self.assertion()
            self.expect(";")
            self.preds.add(name)
            return S.PredDef(name, body, pos=p)
        if self.accept("module"):
            return self.module_def(p)
        if self.accept("goal"):
            return self.goal_def(p)
        if self.accept("proof"):
            name = self.ident("goal name")
            self.expect("{")
            tactics = []
            while not self.at("}"):
                tactics.append(self.tactic())
            self.expect("}")
            return S.ProofDef(name, tuple(tactics), pos=p)
        if self.accept("claim"):
            name = self.ident("claim name")
            self.expect("=")
            goals = [self.ident("goal name")]
            while self.accept(","):
                goals.append(self.ident("goal name"))
            self.expect(";")
            return S.ClaimDef(name, tuple(goals), pos=p)
        self.error("expected a declaration (type, dist, op, pred, module, goal, proof or claim)")

    def type_name(self) -> str:
        t = self.tok
        name = self.ident("type name")
        if name not in self.types and name not in ("bool", "unit"):
            self.error(f"unknown type {name}", t)
        return name

    def type_expr(self):
        base = self.type_name()
        if self.accept("->"):
            val = self.type_name()
            v = S.Labeled(val) if self.accept("leakable") else S.TName(val)
            return S.MapType(base, v)
        if self.accept("leakable"):
            return S.Labeled(base)
        return S.TName(base)

    def params(self) -> tuple:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                p = self.pos()
                n = self.ident("parameter name")
                self.expect(":")
                out.append(S.VarDecl(n, self.type_expr(), pos=p))
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(out)

    def var_decls(self) -> tuple:
        out = []
        while self.at("var"):
            p = self.pos()
            self.next()
            n = self.ident("variable name")
            self.expect(":")
            out.append(S.VarDecl(n, self.type_expr(), pos=p))
            self.expect(";")
        return tuple(out)

    def module_def(self, p) -> S.Module:
        name = self.ident("module name")
        self.module = name
        self.expect("{")
        globs = self.var_decls()
        procs = []
        while self.at("proc"):
            procs.append(self.proc())
        self.expect("}")
        self.module = None
        return S.Module(name, globs, tuple(procs), pos=p)

    def proc(self) -> S.Proc:
        p = self.pos()
        self.expect("proc")
        name = self.ident("procedure name")
        params = self.params()
        ret_type = None
        if self.accept(":"):
            ret_type = self.type_expr()
        self.expect("{")
        locs = self.var_decls()
        body = []
        ret = None
        while not self.at("}"):
            if self.accept("return"):
                ret = self.expr()
                self.expect(";")
                if not self.at("}"):
                    self.error("return must be the last statement")
                break
            body.append(self.stmt())
        self.expect("}")
        return S.Proc(name, params, ret_type, locs, tuple(body), ret, pos=p)

    def goal_def(self, p) -> S.GoalDef:
        name = self.ident("goal name")
        self.expect("{")
        vs = self.var_decls()
        self.expect("left")
        left = self.block()
        self.expect("right")
        right = self.block()
        self.expect("pre")
        pre = self.assertion()
        self.expect(";")
        self.expect("post")
        post = self.assertion()
        self.expect(";")
        self.expect("}")
        return S.GoalDef(name, vs, left, right, pre, post, pos=p)

    def tactic(self) -> S.Tactic:
        p = self.pos()
        name = self.ident("tactic name") if self.tok.text not in ("skip",) else self.next().text
        side = self.side()
        args: list = []
        if name == "inline":
            if self.tok.kind == "id":
                q = self.ident("procedure")
                if self.accept("."):
                    q += "." + self.ident("procedure")
                args.append(q)
        elif name == "case":
            if self.accept("("):
                args.append(self.expr())
                self.expect(")")
        elif name == "swap":
            args = [self.number(), self.number()]
        elif name == "seq":
            args.append(self.number())
            if self.tok.kind == "num":
                args.append(self.number())
            self.expect("{")
            args.append(self.assertion())
            self.expect("}")
        elif name == "secrndasgn":
            m = self.ident("map name")
            k = self.primary()
            v = self.ident("fresh variable name")
            args = [m, k, v]
        elif name not in ("assign", "rnd", "skip", "auto", "done", "declassify", "secrnd"):
            self.error(f"unknown tactic {name}", self.toks[self.i - 1 - (side is not None)])
        self.expect(";")
        return S.Tactic(name, side, tuple(args), pos=p)

    # -- commands --

    def block(self) -> tuple:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            out.append(self.stmt())
        self.expect("}")
        return tuple(out)

    def stmt(self):
        p = self.pos()
        if self.accept("skip"):
            self.expect(";")
            return S.Skip(pos=p)
        if self.accept("if"):
            self.expect("(")
            c = self.expr()
            self.expect(")")
            then = self.block()
            other: tuple = ()
            if self.accept("else"):
                other = (self.stmt(),) if self.at("if") else self.block()
            return S.If(c, then, other, pos=p)
        if self.accept("while"):
            self.expect("(")
            c = self.expr()
            self.expect(")")
            return S.While(c, self.block(), pos=p)
        if self.tok.kind == "id" and (self.peek().text == "." or self.peek().text == "("):
            call = self.call(None, p)
            self.expect(";")
            return call
        target = self.lvalue()
        t = self.tok
        if self.accept("<-"):
            e = self.expr()
            self.expect(";")
            return S.Assign(target, e, pos=p)
        if self.accept("<$"):
            d = self.dexpr()
            self.expect(";")
            return S.Sample(target, d, pos=p)
        if self.accept("<~$"):
            d = self.dexpr()
            self.expect(";")
            return S.SecSample(target, d, pos=p)
        if self.accept("<~"):
            src = self.lvalue()
            self.expect(";")
            return S.SecRead(target, src, pos=p)
        if self.accept("<@"):
            call = self.call(target, p)
            self.expect(";")
            return call
        self.error("expected one of <-, <$, <~, <~$, <@", t)

    def call(self, target, p) -> S.Call:
        first = self.tok
        name = self.ident("procedure name")
        if self.accept("."):
            module, proc = name, self.ident("procedure name")
        else:
            if self.module is None:
                self.error("procedure calls outside a module must name the module", first)
            module, proc = self.module, name
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        return S.Call(target, module, proc, tuple(args), pos=p)

    def lvalue(self):
        name = self.ident("variable")
        if self.accept("["):
            k = self.expr()
            self.expect("]")
            return S.Lookup(name, k)
        return S.Var(name)

    def dexpr(self, tagged: bool = False):
        if self.accept("uniform"):
            return S.Uniform(self.type_name())
        if self.accept("point"):
            self.expect("(")
            e = self.expr(tagged)
            self.expect(")")
            return S.Point(e)
        t = self.tok
        name = self.ident("distribution")
        if name not in self.dists:
            self.error(f"unknown distribution {name}", t)
        return S.Named(name)

    # -- expressions --

    def expr(self, tagged: bool = False):
        if self.accept("if"):
            c = self.expr(tagged)
            self.expect("then")
            a = self.expr(tagged)
            self.expect("else")
            b = self.expr(tagged)
            return S.Cond(c, a, b)
        e = self.e_and(tagged)
        while self.accept("||"):
            e = S.Or(e, self.e_and(tagged))
        return e

    def e_and(self, tagged):
        e = self.e_eq(tagged)
        while self.accept("&&"):
            e = S.And(e, self.e_eq(tagged))
        return e

    def e_eq(self, tagged):
        e = self.unary(tagged)
        if self.accept("="):
            return S.Eq(e, self.unary(tagged))
        if self.accept("<>"):
            return S.Not(S.Eq(e, self.unary(tagged)))
        return e

    def unary(self, tagged=False):
        if self.accept("!"):
            return S.Not(self.unary(tagged))
        for k in (1, 2, 3):
            if self.accept(f"pi{k}"):
                return S.Proj(k, self.unary(tagged))
        if self.accept("dom"):
            m, side = self.ident("map"), self.side()
            self.check_side(side, tagged)
            return S.InDom(m, self.primary(tagged), side)
        return self.primary(tagged)

    def check_side(self, side, tagged, tok=None):
        if tagged and side is None:
            self.error("missing side tag {1} or {2}", tok or self.toks[self.i - 1])
        if not tagged and side is not None:
            self.error("side tags are only allowed in assertions", self.toks[self.i - 1])

    def primary(self, tagged=False):
        t = self.tok
        if self.accept("("):
            if self.accept(")"):
                return S.Const(UNIT)
            e = self.expr(tagged)
            if self.accept(","):
                b = self.expr(tagged)
                self.expect(",")
                c = self.expr(tagged)
                self.expect(")")
                return S.Triple(e, b, c)
            self.expect(")")
            return e
        for word, node in (("true", S.Const(True)), ("false", S.Const(False)), ("bot", S.Bot()),
                           ("empty", S.EmptyMap()), ("SECRET", S.Const(Conf.SECRET)),
                           ("LEAKED", S.Const(Conf.LEAKED))):
            if self.accept(word):
                return node
        if self.at("uniform") or self.at("point"):
            return S.DistVal(self.dexpr(tagged))
        if t.kind != "id" or t.text in KEYWORDS:
            self.error("expected an expression")
        name = self.next().text
        if name in self.consts:
            return S.Const(self.consts[name])
        if name in self.dists:
            return S.DistVal(S.Named(name))
        if self.at("(") and name in self.ops:
            self.next()
            args = []
            if not self.at(")"):
                args.append(self.expr(tagged))
                while self.accept(","):
                    args.append(self.expr(tagged))
            self.expect(")")
            return S.OpCall(name, tuple(args))
        if tagged and name in self.bound:
            return S.Var(name, 0)
        side = self.side()
        self.check_side(side, tagged, t)
        if self.accept("["):
            k = self.expr(tagged)
            self.expect("]")
            return S.Lookup(name, k, side)
        return S.Var(name, side)

    # -- assertions --

    def assertion(self):
        if self.at("forall"):
            return self.a_forall()
        if self.at("let"):
            return self.a_let()
        a = self.a_or()
        if self.accept("=>"):
            return S.AImp(a, self.assertion())
        return a

    def a_forall(self):
        self.expect("forall")
        var = self.ident("bound variable")
        if self.accept(":"):
            ty = self.type_name()
            dist = None
        else:
            self.expect("in")
            dist = self.dexpr(True)
        self.expect(",")
        self.bound.append(var)
        body = self.assertion()
        self.bound.pop()
        return S.Forall(var, ty, body) if dist is None else S.ForallIn(var, dist, body)

    def a_let(self):
        self.expect("let")
        side = self.side()
        if side is None:
            self.error("let needs a side tag {1} or {2}")
        name = self.ident("variable")
        target = S.Var(name, side)
        if self.accept("["):
            k = self.expr(True)
            self.expect("]")
            target = S.Lookup(name, k, side)
        self.expect(":=")
        e = self.expr(True)
        self.expect("in")
        return S.Updated(side, target, e, self.assertion())

    def a_or(self):
        parts = [self.a_and()]
        while self.accept("\\/"):
            parts.append(self.a_and())
        return parts[0] if len(parts) == 1 else S.AOr(tuple(parts))

    def a_and(self):
        parts = [self.a_not()]
        while self.accept("/\\"):
            parts.append(self.a_not())
        return parts[0] if len(parts) == 1 else S.AAnd(tuple(parts))

    def a_not(self):
        if self.accept("~"):
            return S.ANot(self.a_not())
        return self.a_atom()

    def a_atom(self):
        t = self.tok
        if self.at("forall") or self.at("let"):
            return self.assertion()
        if self.at("true") or self.at("false"):
            if self.peek().text not in _EXPR_OPS:
                return S.Truth(self.next().text == "true")
        if self.at("=") and self.peek().text == "{":
            self.next()
            self.next()
            names = [self.ident("variable")]
            while self.accept(","):
                names.append(self.ident("variable"))
            self.expect("}")
            return S.VarEq(tuple(names))
        if self.accept("is_leaked"):
            self.expect("(")
            e = self.expr(True)
            self.expect(")")
            return S.IsLeaked(e)
        if self.accept("sampled_from"):
            self.expect("(")
            e = self.expr(True)
            self.expect(",")
            d = self.dexpr(True)
            self.expect(")")
            return S.SampledFrom(e, d)
        if self.accept("label_eq"):
            self.expect("(")
            a = self.expr(True)
            self.expect(",")
            b = self.expr(True)
            self.expect(")")
            return S.LabelEq(a, b)
        if self.accept("inv"):
            self.expect("(")
            left = self.ident("map")
            if self.side() != 1:
                self.error("the first map of inv must be tagged {1}", self.toks[self.i - 1])
            self.expect(",")
            right = self.ident("map")
            if self.side() != 2:
                self.error("the second map of inv must be tagged {2}", self.toks[self.i - 1])
            self.expect(",")
            d = self.dexpr(True)
            self.expect(")")
            return S.SecInv(left, right, d)
        if self.accept("samedist"):
            self.expect("(")
            a = self.dexpr(True)
            self.expect(",")
            b = self.dexpr(True)
            self.expect(")")
            return S.SameDist(a, b)
        if self.accept("lossless"):
            self.expect("(")
            d = self.dexpr(True)
            self.expect(")")
            return S.Lossless(d)
        if t.kind == "id" and t.text in self.preds and self.peek().kind != "side":
            self.next()
            return S.PredRef(t.text)
        if self.at("("):
            save = self.i
            try:
                self.next()
                a = self.assertion()
                self.expect(")")
                if self.tok.text not in _EXPR_OPS:
                    return a
            except ParseError:
                pass
            self.i = save
        return S.Atom(self.expr(True))


def parse(text: str) -> S.SourceFile:
    """Parse a whole ``.plw`` file."""
    return Parser(text).parse_file()


def _with_decls(source: Optional[S.SourceFile], text: str) -> Parser:
    p = Parser(text)
    if source is not None:
        for item in source.items:
            if isinstance(item, S.TypeDecl):
                p.types[item.name] = item.elements
                for k, n in enumerate(item.elements):
                    p.consts[n] = Elem(item.name, k, n)
            elif isinstance(item, S.DistDef):
                p.dists.add(item.name)
            elif isinstance(item, S.OpDef):
                p.ops.add(item.name)
            elif isinstance(item, S.PredDef):
                p.preds.add(item.name)
    return p


def _finish(p: Parser, value):
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    return value


def parse_expr(text: str, source: Optional[S.SourceFile] = None, tagged: bool = False):
    p = _with_decls(source, text)
    return _finish(p, p.expr(tagged))


def parse_assertion(text: str, source: Optional[S.SourceFile] = None):
    p = _with_decls(source, text)
    return _finish(p, p.assertion())


def parse_block(text: str, source: Optional[S.SourceFile] = None, module: Optional[str] = None) -> tuple:
    p = _with_decls(source, text)
    p.module = module
    out = []
    while p.tok.kind != "eof":
        out.append(p.stmt())
    return tuple(out)


def parse_tactics(text: str, source: Optional[S.SourceFile] = None) -> tuple:
    """A sequence of ``;``-terminated tactics, as inside a ``proof`` block."""
    p = _with_decls(source, text)
    out = []
    while p.tok.kind != "eof":
        out.append(p.tactic())
    return tuple(out)
