"""Discontinuous named-entity recognition as maximal-clique discovery over a segment graph."""
from .codec import (DEFAULT_THRESHOLD, TypedSegment, apply_threshold, decode_segments, encode,
                    encode_edge_table, encode_segment_table)
from .corpus import Corpus, CorpusStats, Example, corpus_stats, parse_inline, write_inline
from .decoder import (Diagnostics, SegmentGraph, build_segment_graph, decode_sentence, maximal_cliques,
                      recover_entities, roundtrip_check)
from .metrics import (EvalCounts, EvalReport, entity_match, filtered_score, full_report, interval_length,
                      overlap_pattern, score, span_length)
from .model import MacModel, TrainConfig, Vocab
from .synth import SynthSpec, SynthTruth, generate_synthetic
from .training import predict, train, tune_threshold
from .types import (EdgeTag, EdgeTagTable, Entity, ProbGrid, Segment, SegmentTag, SegmentTagTable, Sentence,
                    TagAlphabet, segment_order, tag_alphabet)

__version__ = "0.1.0"
