"""Core domain types: sentences, segments, entities, tag alphabets and tag tables.

Token indices are 0-based and segment ends are inclusive everywhere, including
the on-disk formats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, EncodingError

ROLES = ("B", "I", "S")
EDGE_KINDS = ("H2H", "T2T")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")
        if any(not t for t in self.tokens):
            raise ValueError(f"sentence {self.id!r} contains an empty token")

    def __len__(self) -> int:
        return len(self.tokens)


class Segment(NamedTuple):
    """Inclusive token span. Tuple ordering is (start, end), i.e. segment order."""

    start: int
    end: int

    def __len__(self) -> int:  # type: ignore[override]
        return self.end - self.start + 1

    def overlaps(self, other: "Segment") -> bool:
        return self.start <= other.end and other.start <= self.end


def segment_order(a: Segment, b: Segment) -> int:
    """Three-way comparison by (start, end): -1 if a first, 0 if equal, 1 otherwise."""
    ka, kb = (a[0], a[1]), (b[0], b[1])
    return (ka > kb) - (ka < kb)


@dataclass(frozen=True, order=True)
class Entity:
    segments: tuple[Segment, ...]
    etype: str

    def __post_init__(self):
        segs = tuple(Segment(int(s[0]), int(s[1])) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("an entity needs at least one segment")
        if not self.etype:
            raise ValueError("entity type must be a non-empty string")
        for s in segs:
            if s.start < 0 or s.end < s.start:
                raise ValueError(f"malformed segment {tuple(s)}")
        for a, b in zip(segs, segs[1:]):
            if not a.end < b.start:
                raise ValueError(f"segments {tuple(a)} and {tuple(b)} are not ordered and disjoint")

    @classmethod
    def of(cls, etype: str, *spans: tuple[int, int]) -> "Entity":
        return cls(tuple(Segment(*s) for s in spans), etype)

    @property
    def is_discontinuous(self) -> bool:
        return len(self.segments) > 1

    @property
    def first(self) -> int:
        return self.segments[0].start

    @property
    def last(self) -> int:
        return self.segments[-1].end

    def tokens(self) -> set[int]:
        return {t for s in self.segments for t in range(s.start, s.end + 1)}

    def check_bounds(self, n: int) -> None:
        if self.last >= n:
            raise EncodingError(f"entity {self} exceeds sentence length {n}")

    def text(self, sentence: Sentence) -> str:
        return " ".join(" ".join(sentence.tokens[s.start:s.end + 1]) for s in self.segments)


def entity_key(e: Entity):
    return (e.segments, e.etype)


def sort_entities(entities: Iterable[Entity]) -> list[Entity]:
    return sorted(set(entities), key=entity_key)


class SegmentTag(NamedTuple):
    etype: str
    role: str

    def __str__(self) -> str:
        return f"{self.etype}-{self.role}"


class EdgeTag(NamedTuple):
    etype: str
    kind: str

    def __str__(self) -> str:
        return f"{self.etype}-{self.kind}"


def parse_tag(text: str) -> SegmentTag | EdgeTag:
    etype, _, suffix = text.rpartition("-")
    if not etype:
        raise ValueError(f"malformed tag {text!r}")
    if suffix in ROLES:
        return SegmentTag(etype, suffix)
    if suffix in EDGE_KINDS:
        return EdgeTag(etype, suffix)
    raise ValueError(f"unknown tag suffix in {text!r}")


@dataclass(frozen=True)
class TagAlphabet:
    """Fixed-order tag inventories: type order x [B, I, S] and type order x [H2H, T2T]."""

    types: tuple[str, ...]
    segment_tags: tuple[SegmentTag, ...] = field(init=False)
    edge_tags: tuple[EdgeTag, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "segment_tags", tuple(SegmentTag(t, r) for t in self.types for r in ROLES))
        object.__setattr__(self, "edge_tags", tuple(EdgeTag(t, k) for t in self.types for k in EDGE_KINDS))

    @property
    def n_segment(self) -> int:
        return len(self.segment_tags)

    @property
    def n_edge(self) -> int:
        return len(self.edge_tags)

    def segment_index(self, tag: SegmentTag) -> int:
        return self.types.index(tag.etype) * len(ROLES) + ROLES.index(tag.role)

    def edge_index(self, tag: EdgeTag) -> int:
        return self.types.index(tag.etype) * len(EDGE_KINDS) + EDGE_KINDS.index(tag.kind)


def tag_alphabet(types: Sequence[str]) -> TagAlphabet:
    types = list(types)
    if not types:
        raise ConfigError("entity type inventory is empty")
    if any(not t for t in types):
        raise ConfigError("entity type names must be non-empty")
    if len(set(types)) != len(types):
        raise ConfigError(f"duplicate entity type in {types}")
    for t in types:
        if "-" in t or " " in t or "|" in t or "," in t:
            raise ConfigError(f"entity type {t!r} contains a reserved character")
    return TagAlphabet(tuple(types))


Cell = tuple[int, int]


def _freeze_cells(cells: Mapping[Cell, Iterable]) -> Mapping[Cell, frozenset]:
    frozen = {}
    for (i, j), tags in sorted(cells.items()):
        tags = frozenset(tags)
        if tags:
            frozen[(int(i), int(j))] = tags
    return MappingProxyType(frozen)


@dataclass(frozen=True)
class SegmentTagTable:
    n: int
    cells: Mapping[Cell, frozenset[SegmentTag]]

    def __post_init__(self):
        object.__setattr__(self, "cells", _freeze_cells(self.cells))
        for i, j in self.cells:
            if not 0 <= i <= j < self.n:
                raise ValueError(f"segment cell {(i, j)} outside upper triangle of n={self.n}")

    def get(self, i: int, j: int) -> frozenset[SegmentTag]:
        return self.cells.get((i, j), frozenset())

    def __eq__(self, other):
        return isinstance(other, SegmentTagTable) and self.n == other.n and dict(self.cells) == dict(other.cells)

    def __hash__(self):
        return hash((self.n, tuple(self.cells.items())))


@dataclass(frozen=True)
class EdgeTagTable:
    """Edge tags stored at canonical coordinates (min(i, j), max(i, j))."""

    n: int
    cells: Mapping[Cell, frozenset[EdgeTag]]

    def __post_init__(self):
        object.__setattr__(self, "cells", _freeze_cells(self.cells))
        for i, j in self.cells:
            if not 0 <= i <= j < self.n:
                raise ValueError(f"edge cell {(i, j)} is not canonical for n={self.n}")

    def get(self, i: int, j: int) -> frozenset[EdgeTag]:
        if i > j:
            i, j = j, i
        return self.cells.get((i, j), frozenset())

    def __eq__(self, other):
        return isinstance(other, EdgeTagTable) and self.n == other.n and dict(self.cells) == dict(other.cells)

    def __hash__(self):
        return hash((self.n, tuple(self.cells.items())))


@dataclass(frozen=True, eq=False)
class ProbGrid:
    """Dense n x n x K probabilities; kind is "segment" or "edge"."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ("segment", "edge"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[0] != v.shape[1]:
            raise ValueError(f"grid must be n x n x K, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[2]
