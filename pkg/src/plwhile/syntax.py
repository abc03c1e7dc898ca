"""Abstract syntax for plWhile programs, modules, assertions and proof files.

Every node is a frozen dataclass, so syntax trees are immutable, hashable and
compare structurally.  Source positions are carried for error reporting but
are excluded from equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .dist import Dist
from .values import UNIT, Conf, Elem

Pos = Optional[tuple]  # (line, col)


def _pos():
    return field(default=None, compare=False, repr=False)


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class TName:
    """A declared finite type, or one of the builtins ``bool``/``unit``/``conf``."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Labeled:
    base: str

    def __str__(self) -> str:
        return f"{self.base} leakable"


@dataclass(frozen=True)
class MapType:
    key: str
    val: Union[TName, Labeled]

    def __str__(self) -> str:
        return f"{self.key} -> {self.val}"


@dataclass(frozen=True)
class DistOf:
    base: str

    def __str__(self) -> str:
        return f"distr {self.base}"


BOOL = TName("bool")
UNIT_T = TName("unit")
CONF = TName("conf")
Type = Union[TName, Labeled, MapType, DistOf]


def is_labeled(ty: Type) -> bool:
    """True for labeled scalars and for maps whose codomain is labeled."""
    return isinstance(ty, Labeled) or (isinstance(ty, MapType) and isinstance(ty.val, Labeled))


# -- distribution expressions -----------------------------------------------


@dataclass(frozen=True)
class Uniform:
    type: str


@dataclass(frozen=True)
class Point:
    expr: "Expr"


@dataclass(frozen=True)
class Named:
    name: str


DistExpr = Union[Uniform, Point, Named]


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    """A literal: an :class:`Elem`, a boolean, ``UNIT`` or a :class:`Conf`."""

    value: Any


@dataclass(frozen=True)
class Var:
    name: str
    side: Optional[int] = None


@dataclass(frozen=True)
class Lookup:
    map: str
    key: "Expr"
    side: Optional[int] = None


@dataclass(frozen=True)
class InDom:
    map: str
    key: "Expr"
    side: Optional[int] = None


@dataclass(frozen=True)
class Eq:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    test: "Expr"
    then: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class OpCall:
    name: str
    args: tuple


@dataclass(frozen=True)
class Proj:
    index: int
    arg: "Expr"


@dataclass(frozen=True)
class Triple:
    value: "Expr"
    origin: "Expr"
    conf: "Expr"


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class DistVal:
    """A distribution used as a first-class value (the origin slot of a triple)."""

    dist: DistExpr


@dataclass(frozen=True)
class EmptyMap:
    pass


Expr = Union[Const, Var, Lookup, InDom, Eq, Not, And, Or, Cond, OpCall, Proj, Triple, Bot, DistVal, EmptyMap]

TRUE = Const(True)
FALSE = Const(False)


# -- commands ----------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    target: Union[Var, Lookup]
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Sample:
    target: Union[Var, Lookup]
    dist: DistExpr
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    other: tuple = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class SecRead:
    target: Union[Var, Lookup]
    source: Union[Var, Lookup]
    pos: Pos = _pos()


@dataclass(frozen=True)
class SecSample:
    target: Union[Var, Lookup]
    dist: DistExpr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call:
    target: Optional[Union[Var, Lookup]]
    module: str
    proc: str
    args: tuple
    pos: Pos = _pos()


Command = Union[Skip, Assign, Sample, If, While, SecRead, SecSample, Call]
Block = tuple  # tuple of Command


# -- assertions --------------------------------------------------------------


@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class VarEq:
    """``={x, y}``: each named variable agrees across the two memories."""

    names: tuple


@dataclass(frozen=True)
class Atom:
    expr: Expr


@dataclass(frozen=True)
class IsLeaked:
    arg: Expr


@dataclass(frozen=True)
class SampledFrom:
    arg: Expr
    dist: DistExpr


@dataclass(frozen=True)
class LabelEq:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class SecInv:
    """Secure-assignment invariant between map ``left`` (side 1) and ``right`` (side 2)."""

    left: str
    right: str
    dist: DistExpr


@dataclass(frozen=True)
class SecInvAt:
    """One key's worth of :class:`SecInv`; produced by flattening, never parsed."""

    left: str
    right: str
    dist: DistExpr
    key: Any


@dataclass(frozen=True)
class AAnd:
    parts: tuple


@dataclass(frozen=True)
class AOr:
    parts: tuple


@dataclass(frozen=True)
class ANot:
    arg: "Assertion"


@dataclass(frozen=True)
class AImp:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Forall:
    var: str
    type: str
    body: "Assertion"


@dataclass(frozen=True)
class ForallIn:
    """Quantification over the support of a distribution expression."""

    var: str
    dist: DistExpr
    body: "Assertion"


@dataclass(frozen=True)
class PredRef:
    name: str


@dataclass(frozen=True)
class Updated:
    """``let{s} target := expr in body``: body read after a one-sided update."""

    side: int
    target: Union[Var, Lookup]
    expr: Expr
    body: "Assertion"


@dataclass(frozen=True)
class SameDist:
    left: DistExpr
    right: DistExpr


@dataclass(frozen=True)
class Lossless:
    dist: DistExpr


Assertion = Union[
    Truth, VarEq, Atom, IsLeaked, SampledFrom, LabelEq, SecInv, SecInvAt, AAnd, AOr, ANot, AImp,
    Forall, ForallIn, PredRef, Updated, SameDist, Lossless,
]

A_TRUE = Truth(True)
A_FALSE = Truth(False)


def conj(*parts) -> "Assertion":
    """Flattening conjunction that drops ``true``."""
    out: list = []
    for p in parts:
        if isinstance(p, AAnd):
            out.extend(p.parts)
        elif p != A_TRUE:
            out.append(p)
    if not out:
        return A_TRUE
    if len(out) == 1:
        return out[0]
    return AAnd(tuple(out))


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: Type
    pos: Pos = _pos()


@dataclass(frozen=True)
class TypeDecl:
    name: str
    elements: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class DistDef:
    """``weights`` is ``None`` for a uniform binding, else a tuple of (element, Fraction)."""

    name: str
    type: str
    weights: Optional[tuple]
    pos: Pos = _pos()


@dataclass(frozen=True)
class OpDef:
    name: str
    params: tuple  # of VarDecl
    ret: Type
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class PredDef:
    name: str
    body: Assertion
    pos: Pos = _pos()


@dataclass(frozen=True)
class Proc:
    name: str
    params: tuple  # of VarDecl
    ret_type: Optional[Type]
    locals: tuple  # of VarDecl
    body: Block
    ret: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Module:
    name: str
    globals: tuple  # of VarDecl
    procs: tuple  # of Proc
    pos: Pos = _pos()

    def proc(self, name: str) -> Proc:
        for p in self.procs:
            if p.name == name:
                return p
        raise KeyError(f"module {self.name} has no procedure {name}")

    def has_proc(self, name: str) -> bool:
        return any(p.name == name for p in self.procs)


@dataclass(frozen=True)
class GoalDef:
    name: str
    vars: tuple  # of VarDecl
    left: Block
    right: Block
    pre: Assertion
    post: Assertion
    pos: Pos = _pos()


@dataclass(frozen=True)
class Tactic:
    name: str
    side: Optional[int] = None
    args: tuple = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class ProofDef:
    goal: str
    tactics: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class ClaimDef:
    name: str
    goals: tuple
    pos: Pos = _pos()


Item = Union[TypeDecl, DistDef, OpDef, PredDef, Module, GoalDef, ProofDef, ClaimDef]


@dataclass(frozen=True)
class SourceFile:
    items: tuple

    def of(self, kind) -> list:
        return [i for i in self.items if isinstance(i, kind)]

    def find(self, kind, name: str):
        key = "goal" if kind is ProofDef else "name"
        for i in self.items:
            if isinstance(i, kind) and getattr(i, key) == name:
                return i
        return None


# -- typing context ----------------------------------------------------------


class Context:
    """Resolved declarations of a source file: types, constants, dists, ops, preds, modules."""

    def __init__(self, source: SourceFile | None = None):
        self.types: dict[str, tuple] = {}
        self.consts: dict[str, Elem] = {}
        self.dists: dict[str, Dist] = {}
        self.dist_types: dict[str, str] = {}
        self.ops: dict[str, OpDef] = {}
        self.preds: dict[str, PredDef] = {}
        self.modules: dict[str, Module] = {}
        self.goals: dict[str, GoalDef] = {}
        self.proofs: dict[str, ProofDef] = {}
        self.claims: dict[str, ClaimDef] = {}
        self.source = source
        self.memo: dict = {}  # caches keyed by their users
        if source is not None:
            for item in source.items:
                self.add(item)

    def add(self, item) -> None:
        if isinstance(item, TypeDecl):
            if not item.elements:
                raise ValueError(f"type {item.name} has no elements")
            if len(set(item.elements)) != len(item.elements):
                raise ValueError(f"type {item.name} repeats an element")
            elems = tuple(Elem(item.name, i, n) for i, n in enumerate(item.elements))
            self.types[item.name] = elems
            for e in elems:
                if e.name in self.consts:
                    raise ValueError(f"constant {e.name} declared twice")
                self.consts[e.name] = e
        elif isinstance(item, DistDef):
            elems = self.types[item.type]
            if item.weights is None:
                d = Dist.uniform(elems, name=item.name)
            else:
                d = Dist(((self.consts[n], w) for n, w in item.weights), name=item.name)
            self.dists[item.name] = d
            self.dist_types[item.name] = item.type
        elif isinstance(item, OpDef):
            self.ops[item.name] = item
        elif isinstance(item, PredDef):
            self.preds[item.name] = item
        elif isinstance(item, Module):
            self.modules[item.name] = item
        elif isinstance(item, GoalDef):
            self.goals[item.name] = item
        elif isinstance(item, ProofDef):
            self.proofs[item.goal] = item
        elif isinstance(item, ClaimDef):
            self.claims[item.name] = item

    # -- value domains --

    def values(self, ty: Type) -> tuple:
        """All values of a scalar type in canonical order."""
        if isinstance(ty, TName):
            if ty.name == "bool":
                return (False, True)
            if ty.name == "unit":
                return (UNIT,)
            if ty.name == "conf":
                return (Conf.SECRET, Conf.LEAKED)
            return self.types[ty.name]
        if isinstance(ty, Labeled):
            from .values import LabeledValue

            return tuple(
                LabeledValue(v, o, c)
                for v in self.types[ty.base]
                for o in self.origins(ty.base)
                for c in (Conf.SECRET, Conf.LEAKED)
            )
        raise TypeError(f"no finite scalar domain for {ty}")

    def origins(self, base: str) -> tuple:
        """Possible origin labels over ``base``: ⊥, then declared dists (or uniform), deduplicated."""
        found: list = [None]
        for name, d in self.dists.items():
            if self.dist_types[name] == base and d not in found:
                found.append(d)
        if len(found) == 1:
            found.append(Dist.uniform(self.types[base], name=f"uniform {base}"))
        return tuple(found)

    def default(self, ty: Type):
        from .values import FMap, LabeledValue

        if isinstance(ty, MapType):
            return FMap()
        if isinstance(ty, Labeled):
            return LabeledValue(self.types[ty.base][0], None, Conf.LEAKED)
        return self.values(ty)[0]

    def eval_dist(self, d: DistExpr, value_of=None) -> Dist:
        if isinstance(d, Named):
            return self.dists[d.name]
        if isinstance(d, Uniform):
            return Dist.uniform(self.values(TName(d.type)), name=f"uniform {d.type}")
        if isinstance(d, Point):
            if value_of is None:
                raise ValueError("point distribution needs a memory")
            return Dist.dirac(value_of(d.expr))
        raise TypeError(f"not a distribution expression: {d!r}")

    def module_of_proc(self, module: str, proc: str) -> Proc:
        if module not in self.modules:
            raise KeyError(f"unknown module {module}")
        return self.modules[module].proc(proc)
