"""Newline-delimited JSON records for tag tables and probability grids.

Tag-table record::

    {"id": "0", "n": 9,
     "segment": [[0, 1, ["ADE-B"]], [5, 6, ["POB-S"]], ...],
     "edge":    [[0, 7, ["ADE-H2H"]], ...]}

Probability-grid record (dense, row-major n x n x K)::

    {"id": "0", "n": 9, "types": ["ADE", "POB"],
     "segment_probs": [[[...K_s...], ...], ...], "edge_probs": [...]}

A record carrying a "config" key is a run header and holds no sentence.
"""
from __future__ import annotations

import json

import numpy as np

from .codec import DEFAULT_THRESHOLD, apply_threshold
from .errors import DecodingError
from .types import (EdgeTagTable, ProbGrid, SegmentTagTable, Sentence, TagAlphabet, parse_tag,
                    tag_alphabet)


def _cells(table) -> list:
    return [[i, j, sorted(str(t) for t in tags)] for (i, j), tags in sorted(table.cells.items())]


def table_record(sentence: Sentence, seg: SegmentTagTable, edge: EdgeTagTable) -> dict:
    return {"id": sentence.id, "n": seg.n, "segment": _cells(seg), "edge": _cells(edge)}


def grid_record(sentence: Sentence, seg: ProbGrid, edge: ProbGrid, alphabet: TagAlphabet) -> dict:
    return {"id": sentence.id, "n": seg.n, "types": list(alphabet.types),
            "segment_probs": seg.values.tolist(), "edge_probs": edge.values.tolist()}


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def is_header(record: dict) -> bool:
    return "config" in record


def record_tables(record: dict, threshold: float = DEFAULT_THRESHOLD,
                  alphabet: TagAlphabet | None = None) -> tuple[SegmentTagTable, EdgeTagTable]:
    """Tag tables from either record kind (grids are thresholded)."""
    n = int(record["n"])
    try:
        if "segment_probs" in record:
            alphabet = alphabet or tag_alphabet(record["types"])
            seg = ProbGrid(np.array(record["segment_probs"], dtype=np.float64).reshape(n, n, -1), "segment")
            edge = ProbGrid(np.array(record["edge_probs"], dtype=np.float64).reshape(n, n, -1), "edge")
            return apply_threshold(seg, alphabet, threshold), apply_threshold(edge, alphabet, threshold)
        seg_cells = {(i, j): {parse_tag(t) for t in tags} for i, j, tags in record["segment"]}
        edge_cells = {(i, j): {parse_tag(t) for t in tags} for i, j, tags in record["edge"]}
        return SegmentTagTable(n, seg_cells), EdgeTagTable(n, edge_cells)
    except (KeyError, ValueError, TypeError) as exc:
        raise DecodingError(f"record {record.get('id')!r}: {exc}") from None
