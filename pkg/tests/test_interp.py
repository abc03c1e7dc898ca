from fractions import Fraction as F

import pytest

from plwhile import syntax as S
from plwhile.dist import Dist, bind
from plwhile.interp import (
    EvalFault,
    ExecStats,
    enumerate_memories,
    eval_expr,
    exec_block,
    init_memory,
    lossless_check,
    proc_vars,
    run_proc,
)
from plwhile.parser import parse_block, parse_expr
from plwhile.relational import RelGoal
from plwhile.lazy import tactic_declassify, tactic_secrnd
from plwhile.values import UNIT, Conf, FMap, LabeledValue, Memory

from conftest import corpus
from plwhile import load


def blk(ctx, text, module=None):
    return parse_block(text, ctx.source, module)


def test_eval_basic(rom, coin):
    x0, y1 = rom.consts["x0"], coin.consts["y1"]
    assert eval_expr(S.Var("x"), rom, (Memory({"x": x0}),)) == x0
    assert eval_expr(parse_expr("dom t x", rom.source), rom, (Memory({"t": FMap(), "x": x0}),)) is False
    assert eval_expr(parse_expr("flip(y0)", coin.source), coin, (Memory(),)) == y1


def test_unset_lookup_faults(rom):
    m = Memory({"t": FMap(), "x": rom.consts["x0"], "r": rom.consts["y0"]})
    with pytest.raises(EvalFault):
        exec_block(blk(rom, "r <~ t[x];"), rom, m)


def test_skip_and_uniform_sample(rom):
    m = Memory({"r": rom.consts["y0"]})
    assert exec_block(blk(rom, "skip;"), rom, m) == Dist.dirac(m)
    out = exec_block(blk(rom, "r <$ dY;"), rom, m)
    assert out == Dist({m.set("r", y): F(1, 2) for y in rom.types["Y"]})


def test_sec_sample_labels_secret(rom):
    x0 = rom.consts["x0"]
    m = Memory({"t": FMap(), "x": x0})
    out = exec_block(blk(rom, "t[x] <~$ dY;"), rom, m)
    dY = rom.dists["dY"]
    want = {m.set_entry("t", x0, LabeledValue(y, dY, Conf.SECRET)): F(1, 2) for y in rom.types["Y"]}
    assert out == Dist(want)


def test_sec_read_leaks_the_source(rom):
    x0, y1 = rom.consts["x0"], rom.consts["y1"]
    dY = rom.dists["dY"]
    m = Memory({"t": FMap({x0: LabeledValue(y1, dY, Conf.SECRET)}), "x": x0, "r": rom.consts["y0"]})
    (m2,) = exec_block(blk(rom, "r <~ t[x];"), rom, m).support()
    assert m2.read("r") == y1
    assert m2.lookup("t", x0) == LabeledValue(y1, dY, Conf.LEAKED)


def test_divergence_is_lost_mass(coin):
    stats = ExecStats()
    assert exec_block(blk(coin, "while (true) { skip; }"), coin, Memory(), 10, stats).mass() == 0
    assert stats.exhausted
    assert not lossless_check(blk(coin, "while (true) { skip; }"), coin, {}, 10)
    assert lossless_check(blk(coin, "skip;"), coin, {})


def test_loop_fuel_truncation(coin):
    body = coin.modules["Coin"].proc("until_y1")
    out = run_proc(coin, "Coin", "until_y1", (), Memory({"n": False}), fuel=3)
    # the first sample plus three retries all came up y0
    assert out.mass() == 1 - F(1, 3) ** 4
    assert body.body  # loop present


def test_run_proc_examples(rom):
    x0 = rom.consts["x0"]
    dY = rom.dists["dY"]
    m = init_memory(rom, "P1")
    assert run_proc(rom, "P1", "init", (), m) == Dist.dirac((m.set("t", FMap()), UNIT))
    assert run_proc(rom, "P1", "g", (x0,), m) == Dist.dirac((m, UNIT))
    want = {
        (m.set_entry("t", x0, LabeledValue(y, dY, Conf.LEAKED)), y): F(1, 2)
        for y in rom.types["Y"]
    }
    assert run_proc(rom, "P1", "f", (x0,), m) == Dist(want)


def test_call_restores_caller_names(rom):
    x0, x1 = rom.consts["x0"], rom.consts["x1"]
    m = Memory({"t": FMap(), "x": x1, "r": rom.consts["y0"], "s": rom.consts["y0"]})
    out = exec_block(blk(rom, "s <@ P1.f(x0);"), rom, m)
    for m2 in out.support():
        assert m2.read("x") == x1 and set(m2) == set(m)
        assert m2.lookup("t", x0).value == m2.read("s")


def test_lossless_p2_g(rom):
    body = rom.modules["P2"].proc("g").body
    assert lossless_check(body, rom, proc_vars(rom, "P2", "g"))


def _loop_free(block):
    for c in block:
        if isinstance(c, S.While):
            return False
        if isinstance(c, S.If) and not (_loop_free(c.then) and _loop_free(c.other)):
            return False
    return True


def _corpus_programs():
    out = []
    for name in ("lazy_rom.plw", "leaky.plw", "sampling_order.plw", "coin.plw", "forged.plw"):
        ctx = load(str(corpus(name)))
        for mod in ctx.modules.values():
            for p in mod.procs:
                if _loop_free(p.body):
                    out.append(pytest.param(ctx, p.body, proc_vars(ctx, mod.name, p.name), id=f"{name}:{mod.name}.{p.name}"))
        for g in ctx.goals.values():
            for side in (1, 2):
                rg = RelGoal.from_def(g, ctx)
                out.append(pytest.param(ctx, rg.prog(side), rg.decls(side), id=f"{name}:{g.name}:{side}"))
    return out


@pytest.mark.parametrize("ctx,block,decls", _corpus_programs())
def test_loop_free_corpus_is_lossless(ctx, block, decls):
    for m in enumerate_memories(ctx, decls):
        try:
            d = exec_block(block, ctx, m)
        except EvalFault:
            continue  # a read of an unset entry: no output at all, reported as a fault
        assert d.mass() == 1


def test_sequencing_law(rom):
    c1 = blk(rom, "if (!dom t x) { t[x] <~$ dY; }")
    c2 = blk(rom, "r <~ t[x];")
    decls = proc_vars(rom, "P1", "f")
    for m in enumerate_memories(rom, decls):
        direct = exec_block(c1 + c2, rom, m)
        assert direct == bind(exec_block(c1, rom, m), lambda m1: exec_block(c2, rom, m1))


def _goal(ctx, left):
    return RelGoal(left, (), S.A_TRUE, S.A_TRUE, tuple(proc_vars(ctx, "P1", "f").items()), ())


def test_desugaring_preserves_semantics(rom):
    prog = blk(rom, "t[x] <~$ dY; r <~ t[x];")
    g = _goal(rom, prog)
    g1 = tactic_secrnd(g, rom, 1)
    g2 = tactic_declassify(g1, rom, 1)
    assert [type(c).__name__ for c in g2.left] == ["Sample", "Assign", "Assign", "Assign"]
    fresh = g1.left[0].target.name
    assert fresh == "v#0"
    for m in enumerate_memories(rom, g.decls(1)):
        before = exec_block(prog, rom, m)
        after = exec_block(g2.left, rom, m.set(fresh, rom.types["Y"][0])).map(lambda mm: mm.without([fresh]))
        assert before == after


def test_exec_is_deterministic(rom):
    prog = rom.modules["P2"].proc("f").body
    m = Memory({"t": FMap(), "x": rom.consts["x1"], "r": rom.consts["y0"]})
    assert exec_block(prog, rom, m).text() == exec_block(prog, rom, m).text()
