from itertools import product

import pytest

from plwhile.dist import Dist
from plwhile.values import Conf, Elem, FMap, LabeledValue, Memory, in_R, is_leaked, label_eq, proj

Y = tuple(Elem("Y", i, f"y{i}") for i in range(2))
UY = Dist.uniform(Y, name="uniform Y")
OTHER = Dist({Y[0]: 1})
LABELED = [LabeledValue(v, o, c) for v in Y for o in (None, UY, OTHER) for c in Conf]


def test_projections():
    lv = LabeledValue(Y[0], UY, Conf.SECRET)
    assert (proj(1, lv), proj(2, lv), proj(3, lv)) == (Y[0], UY, Conf.SECRET)
    with pytest.raises(ValueError):
        proj(4, lv)


def test_label_predicates():
    s = LabeledValue(Y[0], UY, Conf.SECRET)
    assert not is_leaked(s)
    assert in_R(s, Dist.uniform(Y))
    assert label_eq(s, LabeledValue(Y[0], UY, Conf.LEAKED))
    assert not label_eq(s, LabeledValue(Y[1], UY, Conf.SECRET))
    assert not in_R(LabeledValue(Y[0], None, Conf.LEAKED), UY)


@pytest.mark.parametrize("lv", LABELED)
def test_exactly_one_of_leaked_or_secret(lv):
    assert is_leaked(lv) != (proj(3, lv) is Conf.SECRET)


def test_label_eq_is_an_equivalence():
    for a, b, c in product(LABELED, repeat=3):
        assert label_eq(a, a)
        assert label_eq(a, b) == label_eq(b, a)
        if label_eq(a, b) and label_eq(b, c):
            assert label_eq(a, c)


def test_fmap_is_immutable_and_partial():
    t = FMap()
    t2 = t.set(Y[0], LabeledValue(Y[1], UY, Conf.SECRET))
    assert Y[0] not in t and Y[0] in t2
    assert t2.get(Y[1]) is None
    assert t2.set(Y[0], None) == t
    assert str(t2) == "{y0: (y1, uniform Y, S)}"


def test_memory_printing_and_update():
    m = Memory({"x": Y[0], "t": FMap()})
    assert str(m) == "[t={}, x=y0]"
    m2 = m.set_entry("t", Y[1], LabeledValue(Y[0], None, Conf.LEAKED))
    assert str(m2) == "[t={y1: (y0, ⊥, L)}, x=y0]"
    assert m.read("x") == Y[0]
    with pytest.raises(KeyError):
        m.read("nope")
