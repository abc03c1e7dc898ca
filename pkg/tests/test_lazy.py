import itertools

import pytest

from plwhile import Context, RelGoal, apply_tactic, discharge, parse
from plwhile import syntax as S
from plwhile.checks import lint
from plwhile.dist import Dist
from plwhile.game import init_system, query_alphabet
from plwhile.interp import exec_block, run_proc
from plwhile.lazy import tactic_declassify, tactic_secrnd, tactic_secrndasgn
from plwhile.parser import parse_block, parse_tactics
from plwhile.printer import show_block
from plwhile.relational import TacticError
from plwhile.script import check_script, run_tactics
from plwhile.values import Conf


def goal(ctx, name):
    return RelGoal.from_def(ctx.goals[name], ctx)


def test_declassify_rewrites_a_read(order):
    g = tactic_declassify(goal(order, "direct"), order, 2)
    assert show_block(g.right) == "t[x] <- (pi1 t[x], pi2 t[x], LEAKED);\nr <- pi1 t[x];"
    assert g.left == goal(order, "direct").left
    with pytest.raises(TacticError, match="no secure read"):
        tactic_declassify(g, order, 2)


def test_secrnd_uses_fresh_names(order):
    g = goal(order, "two_sided")
    g1 = tactic_secrnd(g, order, 1)
    assert show_block(g1.left).splitlines()[:2] == ["v#0 <$ dY;", "t[x] <- (v#0, dY, SECRET);"]
    assert g1.decls(1)["v#0"] == S.TName("Y")
    g2 = tactic_secrnd(g1, order, 2)
    assert "v#0 <$ dY;" in show_block(g2.right)
    with pytest.raises(TacticError, match="no secure sampling"):
        tactic_secrnd(g1, order, 1)
    # a name already used by the goal is never reused
    clash = g.add_var(1, "v#0", S.TName("Y"))
    assert "v#1 <$ dY;" in show_block(tactic_secrnd(clash, order, 1).left)


def test_desugared_programs_run_identically(order, rom):
    """Rewriting secure reads and samplings does not change what a program computes."""
    g = goal(order, "two_sided")
    for side in (1, 2):
        h = g
        for rewrite in (tactic_secrnd, tactic_declassify):
            h = rewrite(h, order, side)
        names = list(g.decls(side))
        from plwhile.interp import enumerate_memories
        for m in enumerate_memories(order, g.decls(side)):
            before = exec_block(g.prog(side), order, m)
            after = exec_block(h.prog(side), order, m).map(lambda mm: mm.restrict(names))
            assert before == after


def test_secrndasgn_produces_two_obligations(order):
    g = goal(order, "direct")
    g1, g2 = tactic_secrndasgn(g, order, "t", "x", "lv")
    assert g1.left == g1.right == ()
    assert "~is_leaked(lv{1})" in show(g1.post)
    assert show_block(g2.left) == "t[x] <- lv;\nr <~ t[x];"
    assert g2.right == g.right  # the right program is untouched
    assert g1.pre == g2.pre and "lv{1} = t{2}[x{2}]" in show(g2.pre)
    assert g2.aug_left == ("lv",) and "lv" in g2.decls(1)
    assert discharge(g1, order).proven
    assert discharge(g2, order).proven


def show(a):
    from plwhile.printer import show_assertion

    return show_assertion(a)


def test_secrndasgn_errors(order):
    g = goal(order, "direct")
    with pytest.raises(TacticError, match="expected"):
        tactic_secrndasgn(g.replace(right=()), order, "t", "x", "lv")
    with pytest.raises(TacticError, match="key"):
        tactic_secrndasgn(g, order, "t", S.Const(order.consts["x0"]), "lv")
    with pytest.raises(TacticError, match="not fresh"):
        tactic_secrndasgn(g, order, "t", "x", "r")
    with pytest.raises(TacticError, match="map u"):
        tactic_secrndasgn(g, order, "u", "x", "lv")


def test_secrndasgn_keeps_the_right_memory_unchanged(order):
    """After the rewrite the right program only reads: the value it returns is what it had stored."""
    g = goal(order, "direct")
    _, g2 = tactic_secrndasgn(g, order, "t", "x", "lv")
    from plwhile.relational import pre_pairs

    for _, m2 in itertools.islice(pre_pairs(g2, order), 500):
        (out,) = exec_block(g2.right, order, m2).support()
        assert out.restrict(["x"]) == m2.restrict(["x"])
        assert out.lookup("t", m2["x"]).value == m2.lookup("t", m2["x"]).value


def test_leaky_variant_trips_the_secrecy_check(leaky):
    res = check_script(leaky, "f_eq")
    assert res.status == "counterexample"
    assert "secrndasgn" not in res.reason and "~is_leaked(lv{1})" in res.reason
    assert res.steps[-1][0].startswith("secrndasgn")
    # the first auto after secrndasgn is the one that fails
    assert res.reason.startswith("auto;")


def test_leaky_g_breaks_the_invariant(leaky):
    res = check_script(leaky, "g_eq")
    assert res.status == "counterexample" and "inv(" in res.reason


def test_script_without_secrndasgn_gets_stuck(rom):
    tactics = [t for t in rom.proofs["f_eq"].tactics if t.name != "secrndasgn"]
    res = run_tactics(goal(rom, "f_eq"), tactics, rom)
    assert res.status == "stuck" and "secrndasgn" in res.reason
    assert isinstance(res.open_goal.left[0], S.SecSample) and isinstance(res.open_goal.right[0], S.SecRead)


def direct_text(xs: int, ys: int, weights=None) -> str:
    xnames = ", ".join(f"a{i}" for i in range(xs))
    ynames = ", ".join(f"b{i}" for i in range(ys))
    if weights is None:
        dist = "uniform"
    else:
        dist = "{" + ", ".join(f"b{i}: {w}" for i, w in enumerate(weights)) + "}"
    return f"""
type X = {{{xnames}}};
type Y = {{{ynames}}};
dist d: Y = {dist};
goal direct {{
  var x: X;
  var r: Y;
  var t: X -> Y leakable;
  left {{ t[x] <~$ d; r <~ t[x]; }}
  right {{ r <~ t[x]; }}
  pre ={{x}} /\\ inv(t{{1}}, t{{2}}, d) /\\ !dom t{{1}} x{{1}} /\\ dom t{{2}} x{{2}};
  post ={{r}} /\\ sampled_from(t{{1}}[x{{1}}], d) /\\ inv(t{{1}}, t{{2}}, d);
}}
"""


@pytest.mark.parametrize("xs,ys,weights", [
    (1, 2, None), (2, 2, None), (1, 3, None), (2, 3, None), (3, 2, None), (3, 3, None),
    (2, 2, ("1/3", "2/3")), (1, 3, ("1/2", "1/4", "1/4")),
])
def test_direct_lazy_sampling_rule(xs, ys, weights):
    ctx = Context(parse(direct_text(xs, ys, weights)))
    g = goal(ctx, "direct")
    assert discharge(g, ctx, lazy=True).proven
    # read pointwise, the stored value is fixed and the fresh sample is not: the judgment fails
    assert discharge(g, ctx).kind == "counterexample"
    # the rule's steps close it as well
    res = run_tactics(g, parse_tactics("secrndasgn t x lv; auto; auto;", ctx.source), ctx)
    assert res.proven
    # once the value is borrowed, both obligations hold pointwise
    g1, g2 = tactic_secrndasgn(g, ctx, "t", "x", "lv")
    assert discharge(g1, ctx).proven and discharge(g2, ctx).proven


def reachable(ctx, sys, depth):
    states = set(sys.state.support())
    frontier = set(states)
    for _ in range(depth):
        nxt = set()
        for m in frontier:
            for q in query_alphabet(ctx, sys):
                for m2, _ in run_proc(ctx, sys.module, q.proc, q.args, m).support():
                    if m2 not in states:
                        nxt.add(m2)
        states |= nxt
        frontier = nxt
    return states


@pytest.mark.parametrize("module", ["P1", "P2"])
def test_secret_entries_carry_their_true_origin(rom, module):
    d = rom.eval_dist(S.Named("dY"))
    states = reachable(rom, init_system(rom, module), 4)
    assert len(states) > 1
    for m in states:
        t = m.read("t")
        for k in t.domain():
            if t[k].conf is Conf.SECRET:
                assert t[k].origin == d


def test_hand_written_labels_are_rejected():
    from pathlib import Path

    ctx = Context(parse((Path(__file__).parent.parent / "corpus" / "forged.plw").read_text()))
    issues = lint(ctx)
    assert issues and any("Forger.f" in str(i) for i in issues)
