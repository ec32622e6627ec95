import numpy as np
import pytest

from macgrid.checkpoint import from_dict, load_checkpoint, save_checkpoint, to_dict
from macgrid.codec import edge_targets, encode, segment_targets
from macgrid.corpus import Corpus, parse_inline
from macgrid.errors import ConfigError, InputError, TrainingError
from macgrid.model import MacModel, TrainConfig
from macgrid.synth import SynthSpec, generate_synthetic
from macgrid.training import Adam, predict, train, tune_threshold
from macgrid.types import ProbGrid, tag_alphabet

ONE = parse_inline("#types ADE POB\nsevere joint , shoulder and upper body pain\n0,0,3,3,7,7 ADE|5,6 POB\n")


def small(n=20, seed=1):
    return generate_synthetic(SynthSpec(sentences=n, seed=seed))[0]


def test_overfit_one_sentence():
    res = train(ONE, TrainConfig(d=16, l_max=16, epochs=500, batch_size=1, lr=1e-2))
    assert res.log[-1].loss < 0.01 * res.log[0].loss
    assert predict(res.model, ONE)[0] == list(ONE.golds[0])


def test_same_seed_identical_logs():
    cfg = TrainConfig(d=8, l_max=32, epochs=3, seed=5)
    a = train(small(), cfg, dev=small(5, 9))
    b = train(small(), cfg, dev=small(5, 9))
    assert [e.line() for e in a.log] == [e.line() for e in b.log]
    assert all(np.array_equal(a.model.params[k], b.model.params[k]) for k in a.model.params)
    c = train(small(), TrainConfig(d=8, l_max=32, epochs=3, seed=6), dev=small(5, 9))
    assert [e.loss for e in c.log] != [e.loss for e in a.log]


def test_best_epoch_parameters_are_kept():
    cfg = TrainConfig(d=8, l_max=32, epochs=4, lr=5e-3)
    res = train(small(), cfg, dev=small(5, 9))
    best = max(range(4), key=lambda k: (res.log[k].dev_f1, -k))
    assert res.best_epoch == best + 1
    assert res.best_dev_f1 == res.log[best].dev_f1


def test_empty_training_corpus():
    with pytest.raises(ConfigError):
        train(Corpus([], ("ADE",)), TrainConfig())


def test_divergence_raises_with_epoch(monkeypatch):
    real = MacModel.loss_and_grads
    calls = {"n": 0}

    def poisoned(self, *args):
        calls["n"] += 1
        loss, g = real(self, *args)
        return (float("nan") if calls["n"] > 25 else loss), g

    monkeypatch.setattr(MacModel, "loss_and_grads", poisoned)
    with pytest.raises(TrainingError) as info:
        train(small(), TrainConfig(d=8, l_max=32, epochs=3))
    assert info.value.epoch == 2


class GridStub:
    """Model stand-in that emits fixed grids."""

    def __init__(self, alphabet, grids, config=None):
        self.alphabet = alphabet
        self.config = config or TrainConfig()
        self.grids = grids
        self.threshold = 0.5

    def predict_grids(self, sentence):
        return self.grids[sentence.id]


def disc_dev():
    corpus, _ = generate_synthetic(SynthSpec(sentences=15, seed=4, weights={"disc2": 0.5, "disc3": 0.5}))
    return corpus


def test_tune_degenerate_model_returns_smallest():
    dev = disc_dev()
    al = tag_alphabet(dev.types)
    grids = {}
    for s in dev.sentences:
        n = len(s)
        upper = np.triu(np.ones((n, n)))[:, :, None]
        grids[s.id] = (ProbGrid(np.full((n, n, al.n_segment), 0.5) * upper, "segment"),
                       ProbGrid(np.full((n, n, al.n_edge), 0.5), "edge"))
    assert tune_threshold(GridStub(al, grids), dev) == 0.1


def test_tune_oracle_grids_tie_to_smallest():
    dev = small(15, 3)
    al = tag_alphabet(dev.types)
    grids = {}
    for ex in dev:
        seg, edge = encode(ex.sentence, ex.entities)
        grids[ex.sentence.id] = (ProbGrid(segment_targets(seg, al), "segment"),
                                 ProbGrid(edge_targets(edge, al), "edge"))
    stub = GridStub(al, grids)
    assert tune_threshold(stub, dev) == 0.1
    assert tune_threshold(stub, dev, [0.5]) == 0.5
    with pytest.raises(ConfigError):
        tune_threshold(stub, Corpus([], dev.types))
    with pytest.raises(ConfigError):
        tune_threshold(stub, dev, [0.0, 0.5])


def test_adam_first_step_moves_by_lr():
    p = {"w": np.array([1.0, -1.0])}
    Adam(p, 0.1, 0.9, 0.999, 1e-8).step(p, {"w": np.array([3.0, -0.2])})
    assert np.allclose(p["w"], [0.9, -0.9], atol=1e-6)


def test_checkpoint_roundtrip_exact(tmp_path):
    res = train(small(), TrainConfig(d=8, l_max=32, epochs=1))
    res.model.threshold = 0.3
    path = tmp_path / "m.json"
    save_checkpoint(res.model, path, meta={"note": "x"})
    back = load_checkpoint(path)
    assert back.threshold == 0.3
    assert back.vocab == res.model.vocab
    assert back.config == res.model.config
    for k, v in res.model.params.items():
        assert np.array_equal(back.params[k], v)
    s = small().sentences[0]
    assert np.array_equal(back.predict_grids(s)[0].values, res.model.predict_grids(s)[0].values)
    assert to_dict(from_dict(to_dict(back))) == to_dict(back)


def test_bad_checkpoint(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputError):
        load_checkpoint(bad)
    bad.write_text('{"format": "other"}')
    with pytest.raises(InputError):
        load_checkpoint(bad)


def test_on_epoch_can_stop_early():
    seen = []

    def hook(entry, model):
        seen.append((entry.epoch, isinstance(model, MacModel)))
        return entry.epoch == 2

    res = train(small(), TrainConfig(d=8, l_max=32, epochs=10), on_epoch=hook)
    assert seen == [(1, True), (2, True)] and len(res.log) == 2 and res.best_epoch == 2
