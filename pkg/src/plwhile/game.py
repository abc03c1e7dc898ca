"""Exact indistinguishability games between two oracle modules.

An oracle system is a module after ``init``. The adversary adaptively queries
the exposed procedures and sees only return values. ``optimal_advantage``
computes the best distinguishing advantage over all deterministic adaptive
strategies of bounded depth by dynamic programming over belief states.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .dist import Dist, fmt
from .interp import ExecStats, init_memory, run_proc
from .syntax import Context
from .values import UNIT

__all__ = [
    "BeliefState",
    "GameError",
    "OracleSystem",
    "Query",
    "Strategy",
    "accept_probability",
    "advantage_with_witness",
    "enumerate_strategies",
    "experiment_value",
    "init_system",
    "optimal_advantage",
    "query_alphabet",
    "show_strategy",
    "step",
    "transcript_dist",
]


class GameError(Exception):
    pass


@dataclass(frozen=True)
class Query:
    proc: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.proc}({', '.join(fmt(a) for a in self.args)})"


@dataclass(frozen=True)
class OracleSystem:
    module: str
    exposed: tuple
    state: Dist  # over memories of the module's globals

    def signature(self, ctx: Context) -> tuple:
        mod = ctx.modules[self.module]
        return tuple(
            (p.name, tuple(v.type for v in p.params), p.ret_type)
            for p in mod.procs if p.name in self.exposed
        )


def init_system(ctx: Context, module: str, fuel: int = 64) -> OracleSystem:
    """Run ``init`` (if present) from the type defaults; it must be lossless."""
    if module not in ctx.modules:
        raise GameError(f"unknown module {module}")
    mod = ctx.modules[module]
    m0 = init_memory(ctx, module)
    if mod.has_proc("init"):
        stats = ExecStats()
        state = run_proc(ctx, module, "init", (), m0, fuel, stats).map(lambda r: r[0])
        if state.mass() != 1:
            why = "ran out of fuel" if stats.exhausted else f"has mass {fmt(state.mass())}"
            raise GameError(f"{module}.init is not lossless: it {why}")
    else:
        state = Dist.dirac(m0)
    exposed = tuple(p.name for p in mod.procs if p.name != "init")
    return OracleSystem(module, exposed, state)


def query_alphabet(ctx: Context, sys: OracleSystem) -> tuple:
    """Every exposed procedure applied to every argument tuple, in declaration order."""
    mod = ctx.modules[sys.module]
    out = []
    for name in sys.exposed:
        p = mod.proc(name)
        for args in itertools.product(*(ctx.values(v.type) for v in p.params)):
            out.append(Query(name, args))
    return tuple(out)


@dataclass(frozen=True)
class BeliefState:
    """Unnormalized memory distributions of both systems given the transcript so far."""

    left: Dist
    right: Dist
    depth: int


class _Game:
    def __init__(self, ctx: Context, left: OracleSystem, right: OracleSystem, fuel: int):
        if left.exposed != right.exposed or left.signature(ctx) != right.signature(ctx):
            raise GameError(f"{left.module} and {right.module} expose different procedures")
        self.ctx, self.fuel = ctx, fuel
        self.systems = (left, right)
        self.alphabet = query_alphabet(ctx, left)
        # run results depend only on (module, state, query, fuel): share them across games
        self.answers_cache: dict = ctx.memo.setdefault(("game-answers", fuel), {})
        self.memo: dict = {}
        # equal beliefs only imply a zero value when both sides run the same code
        self.same_code = ctx.modules[left.module] == ctx.modules[right.module]

    def answer(self, side: int, state: Dist, q: Query) -> dict:
        """Partition the run of ``q`` over ``state`` by return value."""
        sys = self.systems[side]
        key = (sys.module, state, q)
        hit = self.answers_cache.get(key)
        if hit is not None:
            return hit
        stats = ExecStats()
        out = state.bind(lambda m: run_proc(self.ctx, sys.module, q.proc, q.args, m, self.fuel, stats))
        if out.mass() != state.mass():
            why = "ran out of fuel" if stats.exhausted else "lost probability mass"
            raise GameError(f"{sys.module}.{q.proc} is not lossless: it {why}")
        parts: dict = {}
        for (m, ret), w in out.items():
            parts.setdefault(ret, {})
            parts[ret][m] = parts[ret].get(m, 0) + w
        hit = {ret: Dist(ws) for ret, ws in parts.items()}
        self.answers_cache[key] = hit
        return hit

    def step(self, b: BeliefState, q: Query, orient: tuple = (0, 1)) -> dict:
        if b.depth <= 0:
            raise GameError("no queries left")
        a = self.answer(orient[0], b.left, q)
        c = self.answer(orient[1], b.right, q)
        out = {}
        for ret in sorted(set(a) | set(c), key=_answer_key):
            out[ret] = BeliefState(a.get(ret, Dist()), c.get(ret, Dist()), b.depth - 1)
        return out

    def best(self, b: BeliefState, orient: tuple) -> tuple:
        """(value, strategy) maximizing Pr[accept | left] - Pr[accept | right]."""
        key = (b, orient)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        diff = b.left.mass() - b.right.mass()
        value = max(Fraction(0), diff)
        tree = Strategy.leaf(diff > 0)
        if b.depth > 0 and not (self.same_code and b.left == b.right):
            for q in self.alphabet:
                total = Fraction(0)
                kids = {}
                for ret, nb in self.step(b, q, orient).items():
                    v, t = self.best(nb, orient)
                    total += v
                    kids[ret] = t
                if total > value:
                    value, tree = total, Strategy(q, kids)
        self.memo[key] = (value, tree)
        return value, tree


def _answer_key(v):
    from .dist import canon_key

    return canon_key(v)


def step(ctx: Context, left: OracleSystem, right: OracleSystem, b: BeliefState, q: Query,
         fuel: int = 64) -> dict:
    """One interaction: answer -> belief state with both sides conditioned on that answer."""
    return _Game(ctx, left, right, fuel).step(b, q)


@dataclass(frozen=True)
class Strategy:
    """A deterministic adaptive distinguisher.

    A leaf (``query is None``) outputs ``accept``. An inner node asks ``query``
    and continues with ``children[answer]``, falling back to ``rest`` and then
    to a rejecting leaf.
    """

    query: Optional[Query] = None
    children: dict = field(default_factory=dict, hash=False)
    accept: bool = False
    rest: Optional["Strategy"] = None

    @staticmethod
    def leaf(accept: bool) -> "Strategy":
        return Strategy(None, {}, accept)

    @staticmethod
    def from_list(queries, accept: bool = False) -> "Strategy":
        """Ask ``queries`` in order whatever the answers; the leaves all output ``accept``."""
        queries = list(queries)
        if not queries:
            return Strategy.leaf(accept)
        return Strategy(queries[0], {}, False, Strategy.from_list(queries[1:], accept))

    def next(self, answer) -> "Strategy":
        hit = self.children.get(answer)
        if hit is not None:
            return hit
        return self.rest if self.rest is not None else Strategy.leaf(False)

    def depth(self) -> int:
        if self.query is None:
            return 0
        subs = list(self.children.values()) + ([self.rest] if self.rest is not None else [])
        return 1 + max((c.depth() for c in subs), default=0)

    def flipped(self) -> "Strategy":
        if self.query is None:
            return Strategy.leaf(not self.accept)
        rest = self.rest.flipped() if self.rest is not None else Strategy.leaf(True)
        return Strategy(self.query, {a: c.flipped() for a, c in self.children.items()}, False, rest)


def show_strategy(s: Strategy, indent: int = 0) -> str:
    pad = "  " * indent
    if s.query is None:
        return pad + ("accept" if s.accept else "reject")
    lines = [f"{pad}query {s.query}"]
    for ans, child in s.children.items():
        lines.append(f"{pad}  answer {fmt(ans)}:")
        lines.append(show_strategy(child, indent + 2))
    return "\n".join(lines)


def _belief(left: OracleSystem, right: OracleSystem, depth: int) -> BeliefState:
    return BeliefState(left.state, right.state, depth)


def advantage_with_witness(ctx: Context, left: OracleSystem, right: OracleSystem, depth: int,
                           fuel: int = 64) -> tuple:
    """The optimal advantage and a strategy achieving Pr[accept|left] - Pr[accept|right] = it."""
    if depth < 0:
        raise GameError("depth must be non-negative")
    game = _Game(ctx, left, right, fuel)
    fwd = game.best(_belief(left, right, depth), (0, 1))
    back = game.best(_belief(right, left, depth), (1, 0))
    if back[0] > fwd[0]:
        return back[0], back[1].flipped()
    return fwd


def optimal_advantage(ctx: Context, left: OracleSystem, right: OracleSystem, depth: int,
                      fuel: int = 64) -> Fraction:
    return advantage_with_witness(ctx, left, right, depth, fuel)[0]


def experiment_value(ctx: Context, left: OracleSystem, right: OracleSystem, depth: int,
                     fuel: int = 64) -> Fraction:
    """Best success probability in the guessing experiment with a fair secret bit.

    The adversary wins when it accepts against ``left`` or rejects against ``right``.
    """
    return Fraction(1, 2) + optimal_advantage(ctx, left, right, depth, fuel) / 2


def _run_strategy(game: _Game, side: int, state: Dist, s: Strategy, prefix: tuple, acc: dict,
                  outcome: bool) -> None:
    if state.mass() == 0:
        return
    if s.query is None:
        key = s.accept if outcome else prefix
        acc[key] = acc.get(key, 0) + state.mass()
        return
    for ret, sub in sorted(game.answer(side, state, s.query).items(), key=lambda kv: _answer_key(kv[0])):
        _run_strategy(game, side, sub, s.next(ret), prefix + (ret,), acc, outcome)


def transcript_dist(ctx: Context, sys: OracleSystem, strategy, fuel: int = 64) -> Dist:
    """Distribution of the answer sequence produced by running ``strategy`` against ``sys``.

    ``strategy`` is a :class:`Strategy` or a plain list of queries.
    """
    if not isinstance(strategy, Strategy):
        strategy = Strategy.from_list(strategy)
    game = _Game(ctx, sys, sys, fuel)
    acc: dict = {}
    _run_strategy(game, 0, sys.state, strategy, (), acc, False)
    return Dist(acc)


def accept_probability(ctx: Context, sys: OracleSystem, strategy: Strategy, fuel: int = 64) -> Fraction:
    game = _Game(ctx, sys, sys, fuel)
    acc: dict = {}
    _run_strategy(game, 0, sys.state, strategy, (), acc, True)
    return acc.get(True, Fraction(0))


def enumerate_strategies(ctx: Context, sys: OracleSystem, depth: int):
    """Every query tree of depth at most ``depth`` (leaves reject), branching on every possible answer."""
    alphabet = query_alphabet(ctx, sys)
    mod = ctx.modules[sys.module]

    def answers(q: Query) -> tuple:
        p = mod.proc(q.proc)
        return ctx.values(p.ret_type) if p.ret_type is not None else (UNIT,)

    def trees(k: int):
        yield Strategy.leaf(False)
        if k == 0:
            return
        subs = list(trees(k - 1))
        for q in alphabet:
            ans = answers(q)
            for combo in itertools.product(subs, repeat=len(ans)):
                yield Strategy(q, dict(zip(ans, combo)))

    return trees(depth)
