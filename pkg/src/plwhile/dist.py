"""Exact finite-support sub-probability distributions.

Weights are :class:`fractions.Fraction` values, so every operation is exact.
Outcomes may be any hashable value; iteration and printing follow the
canonical outcome order given by :func:`canon_key`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator

__all__ = [
    "Dist",
    "bind",
    "canon_key",
    "dirac",
    "dist_eq",
    "fmt",
    "fmt_weight",
    "mass",
    "support",
    "uniform",
]

ONE = Fraction(1)
ZERO = Fraction(0)


def canon_key(v: Any) -> tuple:
    """Total order key used for deterministic enumeration and printing."""
    if v is None:
        return (0,)
    if isinstance(v, bool):
        return (1, int(v))
    canon = getattr(v, "canon", None)
    if canon is not None:
        return canon()
    if isinstance(v, tuple):
        return (90, tuple(canon_key(x) for x in v))
    if isinstance(v, (int, Fraction)):
        return (91, v)
    if isinstance(v, str):
        return (92, v)
    raise TypeError(f"no canonical order for {v!r}")


def fmt_weight(w: Fraction) -> str:
    return f"{w.numerator}/{w.denominator}"


def fmt(v: Any) -> str:
    """Canonical text form of a value."""
    if v is None:
        return "⊥"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, tuple):
        return "(" + ", ".join(fmt(x) for x in v) + ")"
    if isinstance(v, Fraction):
        return fmt_weight(v)
    return str(v)


class Dist:
    """A finite map from outcomes to positive rational weights, total mass <= 1.

    ``name`` is a display label only; equality and hashing are extensional.
    """

    __slots__ = ("_w", "_key", "_hash", "name")

    def __init__(self, weights: dict | Iterable[tuple[Hashable, Any]] = (), name: str | None = None):
        items = weights.items() if isinstance(weights, dict) else weights
        w: dict = {}
        for outcome, weight in items:
            weight = Fraction(weight)
            if weight < 0:
                raise ValueError(f"negative weight {weight} for {outcome!r}")
            if weight:
                w[outcome] = w.get(outcome, ZERO) + weight
        if sum(w.values(), ZERO) > 1:
            raise ValueError("total mass exceeds 1")
        self._w = w
        self._key = None
        self._hash = None
        self.name = name

    # -- constructors -----------------------------------------------------

    @classmethod
    def dirac(cls, v: Hashable) -> "Dist":
        return cls({v: ONE})

    @classmethod
    def uniform(cls, elements: Iterable[Hashable], name: str | None = None) -> "Dist":
        elements = list(elements)
        if not elements:
            raise ValueError("uniform over an empty set")
        if len(set(elements)) != len(elements):
            raise ValueError("uniform over repeated elements")
        p = Fraction(1, len(elements))
        return cls({e: p for e in elements}, name=name)

    @classmethod
    def empty(cls) -> "Dist":
        return cls()

    @classmethod
    def mixture(cls, parts: Iterable[tuple[Fraction, "Dist"]]) -> "Dist":
        """Weighted sum of sub-distributions; the caller keeps the mass <= 1."""
        w: dict = {}
        for p, d in parts:
            if not p:
                continue
            for o, q in d._w.items():
                w[o] = w.get(o, ZERO) + p * q
        return cls(w)

    # -- monad ------------------------------------------------------------

    def bind(self, f: Callable[[Any], "Dist"]) -> "Dist":
        return Dist.mixture((p, f(v)) for v, p in self._w.items())

    def map(self, f: Callable[[Any], Hashable]) -> "Dist":
        w: dict = {}
        for v, p in self._w.items():
            o = f(v)
            w[o] = w.get(o, ZERO) + p
        return Dist(w)

    def filter(self, pred: Callable[[Any], bool]) -> "Dist":
        return Dist({v: p for v, p in self._w.items() if pred(v)})

    def scale(self, c: Fraction) -> "Dist":
        return Dist({v: p * c for v, p in self._w.items()})

    # -- queries ----------------------------------------------------------

    def mass(self) -> Fraction:
        return sum(self._w.values(), ZERO)

    def weight(self, v: Hashable) -> Fraction:
        return self._w.get(v, ZERO)

    def support(self) -> tuple:
        return tuple(sorted(self._w, key=canon_key))

    def items(self) -> list[tuple[Any, Fraction]]:
        return [(v, self._w[v]) for v in self.support()]

    def is_lossless(self) -> bool:
        return self.mass() == ONE

    def __iter__(self) -> Iterator:
        return iter(self.support())

    def __len__(self) -> int:
        return len(self._w)

    def __contains__(self, v: object) -> bool:
        return v in self._w

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self._w == other._w

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._w.items()))
        return self._hash

    def canon(self) -> tuple:
        if self._key is None:
            self._key = (60, tuple((canon_key(v), p) for v, p in self.items()))
        return self._key

    def text(self) -> str:
        """Canonical ``{outcome: num/den, ...}`` form, ignoring any name."""
        return "{" + ", ".join(f"{fmt(v)}: {fmt_weight(p)}" for v, p in self.items()) + "}"

    def __str__(self) -> str:
        return self.name if self.name else self.text()

    def __repr__(self) -> str:
        return f"Dist({self.text()})"


def dirac(v: Hashable) -> Dist:
    return Dist.dirac(v)


def bind(d: Dist, f: Callable[[Any], Dist]) -> Dist:
    return d.bind(f)


def uniform(elements: Iterable[Hashable], name: str | None = None) -> Dist:
    return Dist.uniform(elements, name=name)


def mass(d: Dist) -> Fraction:
    return d.mass()


def support(d: Dist) -> tuple:
    return d.support()


def dist_eq(d1: Dist, d2: Dist) -> bool:
    return d1 == d2
