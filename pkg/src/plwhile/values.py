"""Runtime values: enumerated constants, labeled values, finite maps, memories."""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from .dist import Dist, canon_key, fmt

__all__ = [
    "Conf",
    "Elem",
    "FMap",
    "LabeledValue",
    "Memory",
    "UNIT",
    "in_R",
    "is_leaked",
    "label_eq",
    "proj",
]


@dataclass(frozen=True)
class Elem:
    """A constant of a declared finite type; ``index`` is its declaration rank."""

    type: str
    index: int
    name: str

    def canon(self) -> tuple:
        return (20, self.type, self.index)

    def __str__(self) -> str:
        return self.name


class _Unit:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def canon(self) -> tuple:
        return (10,)

    def __repr__(self) -> str:
        return "UNIT"

    def __str__(self) -> str:
        return "()"


UNIT = _Unit()


class Conf(enum.Enum):
    SECRET = "S"
    LEAKED = "L"

    def canon(self) -> tuple:
        return (30, 0 if self is Conf.SECRET else 1)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LabeledValue:
    """A value tagged with its origin distribution (or ``None`` for ⊥) and a flag."""

    value: Any
    origin: Dist | None
    conf: Conf

    def canon(self) -> tuple:
        return (40, canon_key(self.value), canon_key(self.origin), self.conf.canon())

    def __str__(self) -> str:
        return f"({fmt(self.value)}, {fmt(self.origin)}, {self.conf})"


def proj(i: int, lv: LabeledValue) -> Any:
    if i == 1:
        return lv.value
    if i == 2:
        return lv.origin
    if i == 3:
        return lv.conf
    raise ValueError(f"projection index must be 1, 2 or 3, not {i}")


def is_leaked(lv: LabeledValue | None) -> bool:
    if lv is None:
        return False
    return lv.conf is not Conf.SECRET


def in_R(lv: LabeledValue | None, d: Dist) -> bool:
    if lv is None or lv.origin is None:
        return False
    return lv.origin == d


def label_eq(lv: LabeledValue | None, lw: LabeledValue | None) -> bool:
    """Equality of value and origin, ignoring confidentiality."""
    if lv is None or lw is None:
        return lv is lw
    return lv.value == lw.value and lv.origin == lw.origin


class FMap(Mapping):
    """Immutable finite map; keys that are absent are unset (⊥)."""

    __slots__ = ("_d", "_hash", "_key")

    def __init__(self, items: Mapping | Iterable[tuple[Any, Any]] = ()):
        d = dict(items)
        for k, v in d.items():
            if v is None:
                raise ValueError(f"use absence, not None, for unset key {k!r}")
        self._d = d
        self._hash = None
        self._key = None

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self) -> Iterator:
        return iter(sorted(self._d, key=canon_key))

    def __len__(self) -> int:
        return len(self._d)

    def get(self, k, default=None):
        return self._d.get(k, default)

    def set(self, k, v) -> "FMap":
        d = dict(self._d)
        if v is None:
            d.pop(k, None)
        else:
            d[k] = v
        return FMap(d)

    def domain(self) -> frozenset:
        return frozenset(self._d)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FMap):
            return self._d == other._d
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def canon(self) -> tuple:
        if self._key is None:
            self._key = (50, tuple((canon_key(k), canon_key(self._d[k])) for k in self))
        return self._key

    def __str__(self) -> str:
        return "{" + ", ".join(f"{fmt(k)}: {fmt(self._d[k])}" for k in self) + "}"

    def __repr__(self) -> str:
        return f"FMap({self})"


class Memory(Mapping):
    """Immutable binding of identifiers to values."""

    __slots__ = ("_d", "_hash", "_key")

    def __init__(self, items: Mapping | Iterable[tuple[str, Any]] = ()):
        self._d = dict(items)
        self._hash = None
        self._key = None

    def __getitem__(self, name: str):
        return self._d[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._d))

    def __len__(self) -> int:
        return len(self._d)

    def set(self, name: str, value) -> "Memory":
        d = dict(self._d)
        d[name] = value
        return Memory(d)

    def update(self, values: Mapping) -> "Memory":
        d = dict(self._d)
        d.update(values)
        return Memory(d)

    def without(self, names: Iterable[str]) -> "Memory":
        drop = set(names)
        return Memory((k, v) for k, v in self._d.items() if k not in drop)

    def restrict(self, names: Iterable[str]) -> "Memory":
        keep = set(names)
        return Memory((k, v) for k, v in self._d.items() if k in keep)

    # store protocol shared with partial stores used during enumeration
    def read(self, name: str):
        try:
            return self._d[name]
        except KeyError:
            raise KeyError(f"unbound variable {name}") from None

    def lookup(self, name: str, key):
        return self.read(name).get(key)

    def set_entry(self, name: str, key, value) -> "Memory":
        return self.set(name, self.read(name).set(key, value))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Memory):
            return self._d == other._d
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def canon(self) -> tuple:
        if self._key is None:
            self._key = (70, tuple((k, canon_key(self._d[k])) for k in self))
        return self._key

    def __str__(self) -> str:
        return "[" + ", ".join(f"{k}={fmt(self._d[k])}" for k in self) + "]"

    def __repr__(self) -> str:
        return f"Memory({self})"
