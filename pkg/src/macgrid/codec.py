"""Conversion between entity annotations and the segment/edge tag tables."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ConfigError, EncodingError
from .types import (
    EdgeTag,
    EdgeTagTable,
    Entity,
    ProbGrid,
    Segment,
    SegmentTag,
    SegmentTagTable,
    Sentence,
    TagAlphabet,
)

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TypedSegment:
    segment: Segment
    tags: frozenset[SegmentTag]

    def roles(self, etype: str) -> set[str]:
        return {t.role for t in self.tags if t.etype == etype}


def check_threshold(threshold: float) -> float:
    threshold = float(threshold)
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    return threshold


def _checked(sentence: Sentence, entities: Sequence[Entity]) -> None:
    n = len(sentence)
    for e in entities:
        if e.last >= n:
            raise EncodingError(f"entity {e.etype} {[tuple(s) for s in e.segments]} "
                                f"is out of bounds for sentence {sentence.id!r} (n={n})")


def encode_segment_table(sentence: Sentence, entities: Sequence[Entity]) -> SegmentTagTable:
    _checked(sentence, entities)
    cells: dict = defaultdict(set)
    for e in entities:
        if not e.is_discontinuous:
            s = e.segments[0]
            cells[(s.start, s.end)].add(SegmentTag(e.etype, "S"))
            continue
        for k, s in enumerate(e.segments):
            cells[(s.start, s.end)].add(SegmentTag(e.etype, "B" if k == 0 else "I"))
    return SegmentTagTable(len(sentence), cells)


def encode_edge_table(sentence: Sentence, entities: Sequence[Entity]) -> EdgeTagTable:
    _checked(sentence, entities)
    cells: dict = defaultdict(set)
    for e in entities:
        if not e.is_discontinuous:
            continue
        for a, b in combinations(sorted(e.segments), 2):
            cells[(a.start, b.start)].add(EdgeTag(e.etype, "H2H"))
            cells[(a.end, b.end)].add(EdgeTag(e.etype, "T2T"))
    return EdgeTagTable(len(sentence), cells)


def encode(sentence: Sentence, entities: Sequence[Entity]) -> tuple[SegmentTagTable, EdgeTagTable]:
    return encode_segment_table(sentence, entities), encode_edge_table(sentence, entities)


def apply_threshold(grid: ProbGrid, alphabet: TagAlphabet, threshold: float = DEFAULT_THRESHOLD):
    """Binarize a probability grid: tag k fires at (i, j) iff p >= threshold.

    Segment grids only look at the upper triangle. Edge activations at (j, i)
    are folded into the canonical cell (i, j) by union.
    """
    threshold = check_threshold(threshold)
    v = grid.values
    if grid.kind == "segment":
        if grid.K != alphabet.n_segment:
            raise ConfigError(f"segment grid has K={grid.K}, alphabet expects {alphabet.n_segment}")
        tags = alphabet.segment_tags
        hits = np.argwhere(np.triu(np.ones((grid.n, grid.n), dtype=bool))[:, :, None] & (v >= threshold))
    else:
        if grid.K != alphabet.n_edge:
            raise ConfigError(f"edge grid has K={grid.K}, alphabet expects {alphabet.n_edge}")
        tags = alphabet.edge_tags
        hits = np.argwhere(v >= threshold)
    cells: dict = defaultdict(set)
    for i, j, k in hits.tolist():
        if i > j:
            i, j = j, i
        cells[(i, j)].add(tags[k])
    if grid.kind == "segment":
        return SegmentTagTable(grid.n, cells)
    return EdgeTagTable(grid.n, cells)


def decode_segments(table: SegmentTagTable) -> list[TypedSegment]:
    return [TypedSegment(Segment(i, j), tags) for (i, j), tags in sorted(table.cells.items())]


def segment_targets(table: SegmentTagTable, alphabet: TagAlphabet) -> np.ndarray:
    """Dense 0/1 target for the segment head; lower triangle stays zero."""
    y = np.zeros((table.n, table.n, alphabet.n_segment))
    for (i, j), tags in table.cells.items():
        for t in tags:
            y[i, j, alphabet.segment_index(t)] = 1.0
    return y


def edge_targets(table: EdgeTagTable, alphabet: TagAlphabet) -> np.ndarray:
    """Dense 0/1 target for the edge head; gold sits at i <= j, below-diagonal is zero."""
    y = np.zeros((table.n, table.n, alphabet.n_edge))
    for (i, j), tags in table.cells.items():
        for t in tags:
            y[i, j, alphabet.edge_index(t)] = 1.0
    return y


def table_to_grid(table: SegmentTagTable | EdgeTagTable, alphabet: TagAlphabet) -> ProbGrid:
    if isinstance(table, SegmentTagTable):
        return ProbGrid(segment_targets(table, alphabet), "segment")
    return ProbGrid(edge_targets(table, alphabet), "edge")
