#!/usr/bin/env python3
"""Switch off one model component at a time and compare dev scores.

    python scripts/ablation.py --epochs 100

Rows: full model, concatenation + linear instead of CLN, no inner LSTM, no
length embedding. All rows share the corpus, seed and epoch budget.
"""
from __future__ import annotations

import argparse
import time

from macgrid.metrics import full_report
from macgrid.model import TrainConfig
from macgrid.synth import SynthSpec, generate_synthetic
from macgrid.training import predict, train

ROWS = {
    "full": {},
    "-cln": {"use_cln": False},
    "-inner_lstm": {"use_inner_lstm": False},
    "-length_emb": {"use_length_embedding": False},
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--train-size", type=int, default=200)
    ap.add_argument("--dev-size", type=int, default=50)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    train_c, _ = generate_synthetic(SynthSpec(sentences=args.train_size, seed=1))
    dev_c, _ = generate_synthetic(SynthSpec(sentences=args.dev_size, seed=2), "dev")
    print(f"{'row':<13} {'best':>4} {'F1':>6} {'disc':>6} {'sec':>6}")
    for name, flags in ROWS.items():
        t0 = time.perf_counter()
        res = train(train_c, TrainConfig(epochs=args.epochs, seed=args.seed, **flags), dev_c)
        rep = full_report(predict(res.model, dev_c), dev_c.golds)
        print(f"{name:<13} {res.best_epoch:>4} {rep.overall.counts.f1:>6.3f} "
              f"{rep.disc_only.counts.f1:>6.3f} {time.perf_counter() - t0:>6.0f}")


if __name__ == "__main__":
    main()
