"""Entity recovery from tag tables via maximal cliques of per-type segment graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .codec import TypedSegment, decode_segments, encode
from .errors import DecodingError
from .types import EdgeTagTable, Entity, Segment, SegmentTagTable, Sentence, sort_entities


@dataclass(frozen=True)
class SegmentGraph:
    etype: str
    nodes: tuple[Segment, ...]
    adjacency: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def adjacent(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    @classmethod
    def from_edges(cls, m: int, edges, etype: str = "X") -> "SegmentGraph":
        """Abstract graph on m nodes; node k gets the dummy segment (k, k)."""
        adj = [set() for _ in range(m)]
        for u, v in edges:
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return cls(etype, tuple(Segment(k, k) for k in range(m)), tuple(frozenset(a) for a in adj))


Clique = tuple[int, ...]


@dataclass
class Diagnostics:
    dropped_fragments: int = 0
    rejected_cliques: int = 0
    rejected_unheaded: int = 0
    messages: list[str] = field(default_factory=list)

    def merge(self, other: "Diagnostics") -> None:
        self.dropped_fragments += other.dropped_fragments
        self.rejected_cliques += other.rejected_cliques
        self.rejected_unheaded += other.rejected_unheaded
        self.messages.extend(other.messages)


def build_segment_graph(segs: Sequence[TypedSegment], edges: EdgeTagTable, etype: str) -> SegmentGraph:
    nodes = sorted(ts.segment for ts in segs if ts.roles(etype) & {"B", "I"})
    h2h = (etype, "H2H")
    t2t = (etype, "T2T")
    adj = [set() for _ in nodes]
    for u in range(len(nodes)):
        a = nodes[u]
        for v in range(u + 1, len(nodes)):
            b = nodes[v]
            if h2h in edges.get(a.start, b.start) and t2t in edges.get(a.end, b.end):
                adj[u].add(v)
                adj[v].add(u)
    return SegmentGraph(etype, tuple(nodes), tuple(frozenset(x) for x in adj))


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def maximal_cliques(graph: SegmentGraph) -> list[Clique]:
    """All maximal cliques by Bron-Kerbosch backtracking with Tomita pivoting.

    The pivot only prunes branches that cannot yield new maximal cliques, so the
    output set equals the unpivoted search; without it a dense noisy graph costs
    2^m calls. Vertex sets are bitmasks; output cliques are sorted tuples in
    lexicographic order.
    """
    m = len(graph)
    if m == 0:
        return []
    nbr = [sum(1 << v for v in graph.adjacency[u]) for u in range(m)]
    found: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p and not x:
            found.append(r)
            return
        pivot = max(_bits(p | x), key=lambda u: (p & nbr[u]).bit_count())
        todo = p & ~nbr[pivot]
        while todo:
            low = todo & -todo
            v = low.bit_length() - 1
            expand(r | low, p & nbr[v], x & nbr[v])
            todo ^= low
            p ^= low
            x |= low

    expand(0, (1 << m) - 1, 0)
    cliques = [tuple(v for v in range(m) if r >> v & 1) for r in found]
    return sorted(cliques)


def recover_entities(
    segs: Sequence[TypedSegment],
    graphs: Mapping[str, tuple[SegmentGraph, Sequence[Clique]]],
    strict: bool = False,
    diagnostics: Diagnostics | None = None,
) -> list[Entity]:
    diag = diagnostics if diagnostics is not None else Diagnostics()
    out: set[Entity] = set()
    for ts in segs:
        for tag in ts.tags:
            if tag.role == "S":
                out.add(Entity((ts.segment,), tag.etype))
    by_segment = {ts.segment: ts for ts in segs}
    for etype, (graph, cliques) in graphs.items():
        for clique in cliques:
            members = sorted(graph.nodes[v] for v in clique)
            if len(members) == 1:
                ts = by_segment.get(members[0])
                if ts is None or "S" not in ts.roles(etype):
                    diag.dropped_fragments += 1
                continue
            if any(not a.end < b.start for a, b in zip(members, members[1:])):
                diag.rejected_cliques += 1
                diag.messages.append(f"{etype}: overlapping segments {[tuple(s) for s in members]}")
                continue
            if strict:
                head = by_segment.get(members[0])
                if head is None or "B" not in head.roles(etype):
                    diag.rejected_unheaded += 1
                    continue
            out.add(Entity(tuple(members), etype))
    return sort_entities(out)


def decode_tables(
    seg_table: SegmentTagTable,
    edge_table: EdgeTagTable,
    strict: bool = False,
    diagnostics: Diagnostics | None = None,
) -> list[Entity]:
    segs = decode_segments(seg_table)
    types = sorted({t.etype for ts in segs for t in ts.tags if t.role != "S"})
    graphs = {}
    for etype in types:
        g = build_segment_graph(segs, edge_table, etype)
        graphs[etype] = (g, maximal_cliques(g))
    return recover_entities(segs, graphs, strict=strict, diagnostics=diagnostics)


def decode_sentence(
    sentence: Sentence,
    seg_table: SegmentTagTable,
    edge_table: EdgeTagTable,
    strict: bool = False,
    diagnostics: Diagnostics | None = None,
) -> list[Entity]:
    n = len(sentence)
    if seg_table.n != n or edge_table.n != n:
        raise DecodingError(
            f"sentence {sentence.id!r} has {n} tokens but tables have n={seg_table.n}/{edge_table.n}")
    return decode_tables(seg_table, edge_table, strict=strict, diagnostics=diagnostics)


def roundtrip_check(sentence: Sentence, entities: Sequence[Entity]) -> bool:
    """True iff encoding the entities and decoding the gold tables gives them back."""
    seg_table, edge_table = encode(sentence, entities)
    return decode_sentence(sentence, seg_table, edge_table) == sort_entities(entities)
