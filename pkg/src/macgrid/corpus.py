"""Inline corpus format, corpus statistics.

Format (UTF-8)::

    #types ADE POB                      optional header; other '#' lines are comments
    Sever joint , shoulder and upper body pain .
    0,1,7,7 ADE|0,0,3,3,7,7 ADE|5,6 POB
    <blank line>
    next sentence tokens
    <annotation line, possibly empty>

Index pairs are 0-based token offsets with inclusive ends.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .errors import ParseError
from .types import Entity, Segment, Sentence, sort_entities


@dataclass(frozen=True)
class Example:
    sentence: Sentence
    entities: tuple[Entity, ...]

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(sort_entities(self.entities)))
        n = len(self.sentence)
        for e in self.entities:
            if e.last >= n:
                raise ValueError(f"entity {e} out of range for sentence {self.sentence.id!r}")


@dataclass
class Corpus:
    examples: list[Example] = field(default_factory=list)
    types: tuple[str, ...] = ()
    split: str = "train"

    def __post_init__(self):
        if not self.types:
            self.types = tuple(sorted({e.etype for ex in self.examples for e in ex.entities}))
        unknown = {e.etype for ex in self.examples for e in ex.entities} - set(self.types)
        if unknown:
            raise ValueError(f"entity types {sorted(unknown)} not in inventory {self.types}")

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def sentences(self) -> list[Sentence]:
        return [ex.sentence for ex in self.examples]

    @property
    def golds(self) -> list[list[Entity]]:
        return [list(ex.entities) for ex in self.examples]

    def with_entities(self, entities: Iterable[Iterable[Entity]]) -> "Corpus":
        examples = [Example(ex.sentence, tuple(es)) for ex, es in zip(self.examples, entities)]
        return Corpus(examples, self.types, self.split)

    def __eq__(self, other):
        return (isinstance(other, Corpus) and self.types == other.types
                and [(ex.sentence.tokens, ex.entities) for ex in self.examples]
                == [(ex.sentence.tokens, ex.entities) for ex in other.examples])


def _parse_annotation(text: str, n: int, types: set[str] | None, lineno: int, source) -> Entity:
    body, sep, etype = text.rpartition(" ")
    if not sep or not body or not etype:
        raise ParseError(f"annotation {text!r} must be 'indices TYPE'", lineno, source)
    if types is not None and etype not in types:
        raise ParseError(f"unknown entity type {etype!r}", lineno, source)
    try:
        idx = [int(x) for x in body.split(",")]
    except ValueError:
        raise ParseError(f"non-integer index in {body!r}", lineno, source) from None
    if len(idx) % 2:
        raise ParseError(f"odd number of indices in {body!r}", lineno, source)
    pairs = [(idx[k], idx[k + 1]) for k in range(0, len(idx), 2)]
    for start, end in pairs:
        if start < 0 or end >= n:
            raise ParseError(f"index pair {(start, end)} out of range for {n} tokens", lineno, source)
        if end < start:
            raise ParseError(f"index pair {(start, end)} has end < start", lineno, source)
    segs = [Segment(*p) for p in pairs]
    for a, b in zip(segs, segs[1:]):
        if not a.end < b.start:
            raise ParseError(f"segments {tuple(a)} and {tuple(b)} overlap or are out of order", lineno, source)
    return Entity(tuple(segs), etype)


def parse_inline(stream: TextIO | str, split: str = "train", source: str | None = None) -> Corpus:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = stream.read().split("\n")
    declared: tuple[str, ...] | None = None
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        if lines[k].startswith("#types"):
            declared = tuple(lines[k].split()[1:])
        k += 1
    types = set(declared) if declared is not None else None
    examples = []
    while k < len(lines):
        if lines[k].strip() == "":
            k += 1
            continue
        token_line = lines[k]
        tokens = token_line.split(" ")
        if any(t == "" for t in tokens):
            raise ParseError("token line has empty tokens (double or edge spaces)", k + 1, source)
        ann_line = lines[k + 1] if k + 1 < len(lines) else ""
        entities = []
        if ann_line.strip():
            for part in ann_line.split("|"):
                entities.append(_parse_annotation(part, len(tokens), types, k + 2, source))
        if k + 2 < len(lines) and lines[k + 2].strip():
            raise ParseError("expected a blank line between sentences", k + 3, source)
        examples.append(Example(Sentence(tokens, str(len(examples))), tuple(entities)))
        k += 3
    return Corpus(examples, declared or (), split)


def format_entity(e: Entity) -> str:
    return ",".join(f"{s.start},{s.end}" for s in e.segments) + " " + e.etype


def write_inline(corpus: Corpus, header: Iterable[str] = ()) -> str:
    if not corpus.examples:
        return ""
    out = [f"#{h}" for h in header]
    if corpus.types:
        out.append("#types " + " ".join(corpus.types))
    blocks = []
    for ex in corpus.examples:
        ann = "|".join(format_entity(e) for e in sort_entities(ex.entities))
        blocks.append(" ".join(ex.sentence.tokens) + "\n" + ann)
    return "\n".join(out + ["\n\n".join(blocks)]) + "\n"


@dataclass(frozen=True)
class CorpusStats:
    S: int
    M: int
    D: int

    @property
    def P(self) -> float:
        return 100.0 * self.D / self.M if self.M else 0.0

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(self.S + other.S, self.M + other.M, self.D + other.D)

    def as_dict(self) -> dict:
        return {"S": self.S, "M": self.M, "D": self.D, "P": round(self.P, 1)}


def corpus_stats(corpus: Corpus) -> CorpusStats:
    m = sum(len(ex.entities) for ex in corpus.examples)
    d = sum(e.is_discontinuous for ex in corpus.examples for e in ex.entities)
    return CorpusStats(len(corpus.examples), m, d)
