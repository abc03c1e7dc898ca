import pytest

from plwhile import syntax as S
from plwhile.assertions import check_assertion, holds, sec_inv, sec_inv_clauses, subst
from plwhile.dist import Dist
from plwhile.lazy import SecInvariantSpec, sec_invariant_clauses, sec_invariant_eval
from plwhile.parser import parse_assertion
from plwhile.values import Conf, FMap, LabeledValue, Memory


@pytest.fixture(scope="module")
def names(rom):
    c = rom.consts
    return c["x0"], c["x1"], c["y0"], c["y1"], rom.dists["dY"]


def lv(v, d, conf):
    return LabeledValue(v, d, Conf.SECRET if conf == "S" else Conf.LEAKED)


def A(rom, text):
    return parse_assertion(text, rom.source)


def test_var_eq_and_atoms(rom, names):
    x0, x1, *_ = names
    assert holds(A(rom, "={x}"), rom, Memory({"x": x0}), Memory({"x": x0}))
    assert not holds(A(rom, "={x}"), rom, Memory({"x": x0}), Memory({"x": x1}))
    assert holds(A(rom, "x{1} <> x{2} => false"), rom, Memory({"x": x0}), Memory({"x": x0}))


def test_invariant_on_empty_maps(rom, names):
    m = Memory({"t": FMap()})
    assert holds(A(rom, "inv(t{1}, t{2}, dY)"), rom, m, m)
    spec = SecInvariantSpec("t", "t", S.Named("dY"))
    assert sec_invariant_eval(spec, rom, m, m)


def test_invariant_examples(rom, names):
    x0, _, y0, y1, dY = names
    spec = SecInvariantSpec("t", "t", S.Named("dY"))
    empty = Memory({"t": FMap()})
    right = Memory({"t": FMap({x0: lv(y1, dY, "S")})})
    assert sec_invariant_eval(spec, rom, empty, right)
    both = (Memory({"t": FMap({x0: lv(y1, dY, "L")})}), Memory({"t": FMap({x0: lv(y0, dY, "L")})}))
    assert not sec_invariant_eval(spec, rom, *both)
    assert sec_invariant_clauses(spec, rom, *both)[2] is False
    # left leaked, right unset: the domain clause fails
    assert not holds(A(rom, "inv(t{1}, t{2}, dY)"), rom, Memory({"t": FMap({x0: lv(y0, dY, "L")})}), empty)


def _clause_cases(names):
    x0, _, y0, y1, dY = names
    other = Dist({y0: 1})
    # (clause index, left entry, right entry, expected truth of that clause)
    return [
        (0, None, lv(y0, dY, "S"), True),
        (0, None, lv(y0, other, "S"), False),
        (1, lv(y0, dY, "S"), lv(y0, dY, "S"), True),
        (1, lv(y0, dY, "S"), lv(y1, dY, "S"), False),
        (2, lv(y0, dY, "L"), lv(y0, dY, "L"), True),
        (2, lv(y0, dY, "L"), lv(y0, dY, "S"), False),
        (3, None, lv(y1, dY, "S"), True),
        (3, None, lv(y1, dY, "L"), False),
    ]


def test_each_clause_has_a_witness_and_a_violation(rom, names):
    x0, _, _, _, dY = names
    spec = SecInvariantSpec("t", "t", S.Named("dY"))
    seen = set()
    for idx, a, b, expect in _clause_cases(names):
        t = FMap({x0: a}) if a is not None else FMap()
        tp = FMap({x0: b}) if b is not None else FMap()
        got = sec_invariant_clauses(spec, rom, Memory({"t": t}), Memory({"t": tp}))
        assert got[idx] is expect, (idx, a, b)
        assert sec_inv_clauses(t, tp, dY, x0)[idx] is expect
        assert sec_inv(t, tp, dY) == all(got)
        seen.add((idx, expect))
    assert seen == {(i, e) for i in range(4) for e in (True, False)}


def test_label_predicates_in_assertions(rom, names):
    x0, _, y0, _, dY = names
    m = Memory({"t": FMap({x0: lv(y0, dY, "S")}), "x": x0})
    assert holds(A(rom, "~is_leaked(t{1}[x{1}]) /\\ sampled_from(t{1}[x{1}], dY)"), rom, m, m)
    assert holds(A(rom, "label_eq(t{1}[x{1}], t{2}[x{2}])"), rom, m, m)
    # an unset entry reads as bot: no label predicate holds of it
    e = Memory({"t": FMap(), "x": x0})
    assert not holds(A(rom, "is_leaked(t{1}[x{1}]) \\/ sampled_from(t{1}[x{1}], dY)"), rom, e, e)


def test_quantifiers_and_let(rom, names):
    x0, x1, y0, y1, dY = names
    m = Memory({"t": FMap({x0: lv(y0, dY, "S"), x1: lv(y1, dY, "S")}), "r": y0})
    assert holds(A(rom, "forall k: X, dom t{1} k"), rom, m, m)
    assert holds(A(rom, "forall u in dY, let{1} r := u in r{1} = u"), rom, m, m)
    assert not holds(A(rom, "let{2} r := y1 in ={r}"), rom, m, m)


def test_substitution_recollapses_var_eq(rom):
    a = A(rom, "={r}")
    b = subst(subst(a, rom, 1, "r", S.Var("v", 1)), rom, 2, "r", S.Var("v", 2))
    assert b == S.VarEq(("v",))


def test_check_assertion_reports_type_errors(rom):
    d = {"t": S.MapType("X", S.Labeled("Y")), "x": S.TName("X")}
    assert check_assertion(A(rom, "inv(t{1}, t{2}, dY) /\\ ={x}"), rom, d, d) == []
    assert check_assertion(A(rom, "is_leaked(x{1})"), rom, d, d)
    assert check_assertion(A(rom, "={z}"), rom, d, d)
