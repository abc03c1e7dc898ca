from fractions import Fraction as F
from itertools import chain, combinations

import pytest

from plwhile import Context, parse
from plwhile.dist import Dist
from plwhile.game import (
    BeliefState,
    GameError,
    Query,
    Strategy,
    accept_probability,
    advantage_with_witness,
    enumerate_strategies,
    experiment_value,
    init_system,
    optimal_advantage,
    show_strategy,
    step,
    transcript_dist,
)
from plwhile.values import UNIT, Conf, FMap, LabeledValue, Memory


@pytest.fixture(scope="module")
def systems(rom, leaky):
    return {
        "P1": init_system(rom, "P1"),
        "P2": init_system(rom, "P2"),
        "L1": init_system(leaky, "P1"),
        "L2": init_system(leaky, "P2leaky"),
    }


def q(ctx, name, *args):
    return Query(name, tuple(ctx.consts[a] for a in args))


def test_init_gives_empty_table(rom, systems):
    for name in ("P1", "P2"):
        assert systems[name].state == Dist.dirac(Memory({"t": FMap()}))
        assert systems[name].exposed == ("f", "g")


def test_non_lossless_init_rejected():
    ctx = Context(parse("module D { var b: bool; proc init() { while (true) { b <- true; } } proc f(): bool { return b; } }"))
    with pytest.raises(GameError, match="not lossless"):
        init_system(ctx, "D", fuel=10)


def test_mismatched_interfaces_rejected(rom, leaky, systems):
    with pytest.raises(GameError):
        optimal_advantage(rom, systems["P1"], init_system(rom, "P1").__class__("P1", ("f",), systems["P1"].state), 1)


def test_step_examples(rom, systems):
    p1, p2 = systems["P1"], systems["P2"]
    b = BeliefState(p1.state, p2.state, 2)
    out = step(rom, p1, p2, b, q(rom, "f", "x0"))
    assert list(out) == list(rom.types["Y"])
    for nb in out.values():
        assert nb.left.mass() == nb.right.mass() == F(1, 2) and nb.depth == 1
    (ans, nb), = step(rom, p1, p2, b, q(rom, "g", "x0")).items()
    assert ans is UNIT and nb.left == p1.state
    assert len(nb.right) == 2
    assert all(m.lookup("t", rom.consts["x0"]).conf is Conf.SECRET for m in nb.right.support())
    same = step(rom, p1, p1, BeliefState(p1.state, p1.state, 1), q(rom, "f", "x1"))
    assert all(s.left == s.right for s in same.values())


def test_identical_systems_have_zero_advantage(rom, leaky, systems):
    for k in range(4):
        assert optimal_advantage(rom, systems["P1"], systems["P1"], k) == 0
        assert optimal_advantage(leaky, systems["L2"], systems["L2"], k) == 0


def test_lazy_sampling_is_perfectly_indistinguishable(rom, systems):
    assert optimal_advantage(rom, systems["P1"], systems["P2"], 4) == 0
    assert experiment_value(rom, systems["P1"], systems["P2"], 4) == F(1, 2)


def test_leaky_variant_is_distinguishable(leaky, systems):
    l1, l2 = systems["L1"], systems["L2"]
    vals = [optimal_advantage(leaky, l1, l2, k) for k in range(4)]
    assert vals == [0, F(1, 2), F(3, 4), F(3, 4)]
    assert vals == sorted(vals)  # monotone in depth
    assert [optimal_advantage(leaky, l2, l1, k) for k in range(4)] == vals  # symmetric


def test_witness_achieves_the_value(leaky, systems):
    l1, l2 = systems["L1"], systems["L2"]
    for k in (1, 2, 3):
        for a, b in ((l1, l2), (l2, l1)):
            value, tree = advantage_with_witness(leaky, a, b, k)
            assert tree.depth() <= k
            assert accept_probability(leaky, a, tree) - accept_probability(leaky, b, tree) == value


def test_witness_printing(leaky, systems):
    _, tree = advantage_with_witness(leaky, systems["L1"], systems["L2"], 1)
    assert show_strategy(tree) == "query g(x0)\n  answer y0:\n    accept\n  answer y1:\n    reject"


def _subsets(xs):
    xs = list(xs)
    return chain.from_iterable(combinations(xs, k) for k in range(len(xs) + 1))


def brute_force_advantage(ctx, a, b, depth):
    """Best |Pr[accept | a] - Pr[accept | b]| over every query tree and every accepting set of transcripts."""
    best = F(0)
    for tree in enumerate_strategies(ctx, a, depth):
        ta, tb = transcript_dist(ctx, a, tree), transcript_dist(ctx, b, tree)
        transcripts = sorted(set(ta.support()) | set(tb.support()), key=repr)
        for acc in _subsets(transcripts):
            diff = sum(ta.weight(t) for t in acc) - sum(tb.weight(t) for t in acc)
            best = max(best, abs(diff))
    return best


def test_depth_two_value_matches_tree_enumeration(leaky, systems):
    l1, l2 = systems["L1"], systems["L2"]
    assert brute_force_advantage(leaky, l1, l2, 2) == optimal_advantage(leaky, l1, l2, 2) > 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zero_advantage_iff_equal_transcripts(rom, leaky, systems, k):
    p1, p2 = systems["P1"], systems["P2"]
    assert optimal_advantage(rom, p1, p2, k) == 0
    assert all(transcript_dist(rom, p1, t) == transcript_dist(rom, p2, t) for t in enumerate_strategies(rom, p1, k))
    l1, l2 = systems["L1"], systems["L2"]
    assert optimal_advantage(leaky, l1, l2, k) > 0
    assert any(transcript_dist(leaky, l1, t) != transcript_dist(leaky, l2, t) for t in enumerate_strategies(leaky, l1, k))


def test_experiment_value_unfolds_the_guessing_game(leaky, systems):
    l1, l2 = systems["L1"], systems["L2"]
    value, tree = advantage_with_witness(leaky, l1, l2, 2)
    explicit = F(1, 2) * accept_probability(leaky, l1, tree) + F(1, 2) * (1 - accept_probability(leaky, l2, tree))
    assert experiment_value(leaky, l1, l2, 2) == explicit == F(1, 2) + value / 2


def test_transcript_examples(rom, systems):
    p1, p2 = systems["P1"], systems["P2"]
    assert transcript_dist(rom, p1, []) == Dist.dirac(())
    twice = transcript_dist(rom, p1, [q(rom, "f", "x0"), q(rom, "f", "x0")])
    assert all(a == b for a, b in twice.support()) and len(twice) == 2
    probe = [q(rom, "g", "x0"), q(rom, "f", "x0")]
    assert transcript_dist(rom, p1, probe) == transcript_dist(rom, p2, probe)


def test_transcripts_are_lossless(rom, systems):
    for t in enumerate_strategies(rom, systems["P2"], 2):
        assert transcript_dist(rom, systems["P2"], t).mass() == 1


def test_strategy_helpers(rom):
    s = Strategy.from_list([q(rom, "f", "x0")], accept=True)
    assert s.depth() == 1 and s.next("anything").accept
    assert s.flipped().next("anything").accept is False
