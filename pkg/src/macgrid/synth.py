"""Seeded synthetic corpora with discontinuous and overlapping mentions.

Sentences are built from templates over a small closed lexicon: filler words,
severity heads, body parts, tails ("pain"-like), gap words and two
connectives. Every template has one deterministic reading, so gold labels
are a function of the text, and every draw is checked to be
clique-representable before it is accepted.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus, Example
from .decoder import roundtrip_check
from .errors import GenerationError
from .metrics import interval_bucket, overlap_pattern, span_bucket
from .types import Entity, Sentence

TYPES = ("ADE", "POB")

# name -> (token classes, entities as (type, spans)); "G" expands to 1..max_gap gap words.
TEMPLATES: dict[str, tuple[tuple[str, ...], tuple[tuple[str, tuple[tuple[int, int], ...]], ...]]] = {
    "continuous": (("B", "T"), (("ADE", ((0, 1),)),)),
    "pob": (("B",), (("POB", ((0, 0),)),)),
    "disc2": (("B", "G", "T"), (("ADE", ((0, 0), (2, 2))),)),
    "disc3": (("S", "G", "B", "G", "T"), (("ADE", ((0, 0), (2, 2), (4, 4))),)),
    "left": (("S", "B", "and", "B"), (("ADE", ((0, 1),)), ("ADE", ((0, 0), (3, 3))))),
    "right": (("B", "and", "B", "T"), (("ADE", ((0, 0), (3, 3))), ("ADE", ((2, 3),)))),
    "multiple2": (("S", "B", "and", "B", "T"),
                  (("ADE", ((0, 1), (4, 4))), ("ADE", ((0, 0), (3, 3), (4, 4))))),
    "multiple3": (("S", "B", ",", "B", "and", "B", "T"),
                  (("ADE", ((0, 1), (6, 6))), ("ADE", ((0, 0), (3, 3), (6, 6))),
                   ("ADE", ((0, 0), (5, 5), (6, 6))))),
}

DEFAULT_WEIGHTS = {
    "continuous": 0.15, "pob": 0.15, "disc2": 0.15, "disc3": 0.1,
    "left": 0.15, "right": 0.15, "multiple2": 0.05, "multiple3": 0.1,
}

# share of the open vocabulary given to each word class
_CLASS_SHARES = (("F", 0.42), ("S", 0.125), ("B", 0.25), ("T", 0.125), ("G", 0.08))


def build_lexicon(vocab_size: int) -> dict[str, list[str]]:
    """Split ``vocab_size`` words into classes; ``and`` and ``,`` are always present."""
    open_size = vocab_size - 2
    if open_size < len(_CLASS_SHARES):
        raise GenerationError(f"vocabulary of {vocab_size} is too small (need >= {len(_CLASS_SHARES) + 2})")
    sizes = {c: max(1, int(share * open_size)) for c, share in _CLASS_SHARES}
    sizes["F"] += open_size - sum(sizes.values())
    if sizes["F"] < 1:
        raise GenerationError(f"vocabulary of {vocab_size} is too small")
    lex = {c: [f"{c.lower()}{k}" for k in range(sizes[c])] for c, _ in _CLASS_SHARES}
    lex["and"] = ["and"]
    lex[","] = [","]
    return lex


@dataclass
class SynthSpec:
    vocab_size: int = 50
    sentences: int = 100
    max_length: int = 20
    max_entities: int = 4
    max_gap: int = 3
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    seed: int = 42
    max_templates: int = 3

    def __post_init__(self):
        unknown = set(self.weights) - set(TEMPLATES)
        if unknown:
            raise GenerationError(f"unknown templates {sorted(unknown)}")
        if any(w < 0 for w in self.weights.values()) or abs(sum(self.weights.values()) - 1.0) > 1e-9:
            raise GenerationError("template frequencies must be non-negative and sum to 1")
        if self.max_gap < 1 or self.max_entities < 1 or self.max_templates < 1:
            raise GenerationError("max_gap, max_entities and max_templates must be positive")


@dataclass
class SynthTruth:
    """Ground-truth tallies recorded while generating (discontinuous mentions only for breakdowns)."""

    patterns: Counter = field(default_factory=Counter)
    interval: Counter = field(default_factory=Counter)
    span: Counter = field(default_factory=Counter)
    templates: Counter = field(default_factory=Counter)
    mentions: int = 0
    discontinuous: int = 0


def _min_length(name: str) -> int:
    return len(TEMPLATES[name][0])


def render(name: str, rng: random.Random, lexicon: dict[str, list[str]], max_gap: int = 1):
    """Instantiate one template; returns (tokens, [(etype, spans)])."""
    classes, ents = TEMPLATES[name]
    tokens: list[str] = []
    where: list[int] = []
    for c in classes:
        where.append(len(tokens))
        if c == "G":
            for _ in range(rng.randint(1, max_gap)):
                tokens.append(rng.choice(lexicon["G"]))
        else:
            tokens.append(rng.choice(lexicon[c]))
    # template offsets refer to class slots; re-map them onto rendered token positions
    ends = where[1:] + [len(tokens)]
    out = []
    for etype, spans in ents:
        out.append((etype, tuple((where[s], ends[e] - 1) for s, e in spans)))
    return tokens, out


def compose(names, rng: random.Random, lexicon, max_gap: int = 1, filler=(0, 2), sid: str = "0") -> Example:
    """Lay templates out left to right, separated by 1-2 filler words."""
    tokens: list[str] = [rng.choice(lexicon["F"]) for _ in range(rng.randint(*filler))]
    entities = []
    for k, name in enumerate(names):
        if k:
            tokens += [rng.choice(lexicon["F"]) for _ in range(rng.randint(1, 2))]
        offset = len(tokens)
        toks, ents = render(name, rng, lexicon, max_gap)
        tokens += toks
        entities += [Entity.of(etype, *((s + offset, e + offset) for s, e in spans)) for etype, spans in ents]
    tokens += [rng.choice(lexicon["F"]) for _ in range(rng.randint(*filler))]
    if not tokens:
        tokens = [rng.choice(lexicon["F"])]
    return Example(Sentence(tokens, sid), tuple(entities))


def _record(truth: SynthTruth, ex: Example, names) -> None:
    truth.templates.update(names)
    truth.mentions += len(ex.entities)
    for e in ex.entities:
        if e.is_discontinuous:
            truth.discontinuous += 1
            truth.patterns[overlap_pattern(e, ex.entities)] += 1
            truth.interval[interval_bucket(e)] += 1
            truth.span[span_bucket(e)] += 1


def generate_synthetic(spec: SynthSpec, split: str = "train") -> tuple[Corpus, SynthTruth]:
    rng = random.Random(spec.seed)
    lexicon = build_lexicon(spec.vocab_size)
    names = sorted(n for n, w in spec.weights.items() if w > 0)
    weights = [spec.weights[n] for n in names]
    for n in names:
        if _min_length(n) > spec.max_length or len(TEMPLATES[n][1]) > spec.max_entities:
            raise GenerationError(f"template {n!r} cannot fit max_length={spec.max_length}, "
                                  f"max_entities={spec.max_entities}")
    truth = SynthTruth()
    examples = []
    for k in range(spec.sentences):
        for _ in range(100):
            chosen: list[str] = []
            length, count = 0, 0
            target = rng.randint(1, spec.max_templates)
            for _ in range(target):
                name = rng.choices(names, weights)[0]
                extra = len(TEMPLATES[name][0]) + (spec.max_gap - 1) * TEMPLATES[name][0].count("G")
                if length + extra + 2 * bool(chosen) + 4 > spec.max_length and chosen:
                    break
                if count + len(TEMPLATES[name][1]) > spec.max_entities:
                    break
                chosen.append(name)
                length += extra + 2 * (len(chosen) > 1)
                count += len(TEMPLATES[name][1])
            ex = compose(chosen, rng, lexicon, spec.max_gap, sid=str(k))
            if len(ex.sentence) <= spec.max_length and roundtrip_check(ex.sentence, ex.entities):
                break
        else:
            raise GenerationError(f"could not draw a valid sentence {k} within max_length={spec.max_length}")
        _record(truth, ex, chosen)
        examples.append(ex)
    return Corpus(examples, TYPES, split), truth
