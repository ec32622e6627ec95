import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macgrid.corpus import corpus_stats, write_inline
from macgrid.decoder import roundtrip_check
from macgrid.errors import GenerationError
from macgrid.metrics import full_report
from macgrid.synth import TEMPLATES, SynthSpec, build_lexicon, generate_synthetic, render


def test_same_seed_same_corpus():
    a, ta = generate_synthetic(SynthSpec(sentences=50, seed=7))
    b, tb = generate_synthetic(SynthSpec(sentences=50, seed=7))
    c, _ = generate_synthetic(SynthSpec(sentences=50, seed=8))
    assert write_inline(a) == write_inline(b)
    assert ta.patterns == tb.patterns
    assert write_inline(a) != write_inline(c)


def test_continuous_only_has_no_discontinuous_mentions():
    spec = SynthSpec(sentences=60, weights={"continuous": 0.5, "pob": 0.5}, seed=3)
    corpus, truth = generate_synthetic(spec)
    assert corpus_stats(corpus).D == 0
    assert truth.discontinuous == 0
    assert corpus_stats(corpus).M > 0


@pytest.mark.parametrize("name", sorted(TEMPLATES))
def test_each_template_roundtrips(name):
    rng = random.Random(0)
    lex = build_lexicon(50)
    for _ in range(20):
        tokens, ents = render(name, rng, lex, max_gap=3)
        for _etype, spans in ents:
            assert all(0 <= s <= e < len(tokens) for s, e in spans)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(8, 30), st.integers(1, 6), st.integers(1, 4))
def test_limits_and_representability(seed, max_length, max_entities, max_gap):
    spec = SynthSpec(sentences=15, seed=seed, max_length=max_length, max_entities=max_entities,
                     max_gap=max_gap, weights={"continuous": 0.3, "pob": 0.3, "disc2": 0.4})
    corpus, _ = generate_synthetic(spec)
    for ex in corpus:
        assert len(ex.sentence) <= max_length
        assert len(ex.entities) <= max_entities
        assert roundtrip_check(ex.sentence, ex.entities)


def test_truth_matches_report():
    corpus, truth = generate_synthetic(SynthSpec(sentences=300, seed=11))
    rep = full_report(corpus.golds, corpus.golds).as_dict()
    for p in ("left", "right", "multiple", "none"):
        assert rep["patterns"][p]["gold"] == truth.patterns.get(p, 0)
    assert truth.discontinuous == corpus_stats(corpus).D
    assert truth.mentions == corpus_stats(corpus).M
    assert sum(truth.interval.values()) == truth.discontinuous


def test_default_mix_covers_patterns():
    corpus, truth = generate_synthetic(SynthSpec(sentences=200, seed=42))
    assert corpus_stats(corpus).P >= 30
    assert all(truth.patterns[p] > 0 for p in ("left", "right", "multiple"))


@pytest.mark.parametrize("kwargs", [
    {"vocab_size": 5},
    {"weights": {"continuous": 0.7}},
    {"weights": {"nonsense": 1.0}},
    {"max_gap": 0},
])
def test_bad_specs(kwargs):
    with pytest.raises(GenerationError):
        generate_synthetic(SynthSpec(sentences=3, **kwargs))


def test_template_too_long_for_max_length():
    with pytest.raises(GenerationError, match="cannot fit"):
        generate_synthetic(SynthSpec(sentences=3, max_length=5, weights={"multiple3": 1.0}))
