#!/usr/bin/env python3
"""Train the grid scorer on a seeded synthetic corpus and print a full report.

    python scripts/toy_experiment.py --epochs 200 --out runs/toy

Writes the epoch log, the checkpoint and the dev report (text and JSON)
under --out. Ablation flags mirror the model switches.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import time
from pathlib import Path

from macgrid.checkpoint import save_checkpoint
from macgrid.corpus import corpus_stats
from macgrid.metrics import full_report
from macgrid.model import TrainConfig
from macgrid.synth import SynthSpec, generate_synthetic
from macgrid.training import overall_f1, predict, train, tune_threshold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train-size", type=int, default=200)
    ap.add_argument("--dev-size", type=int, default=50)
    ap.add_argument("--vocab-size", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--d", type=int, default=32)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--no-cln", action="store_true")
    ap.add_argument("--no-inner-lstm", action="store_true")
    ap.add_argument("--no-length-embedding", action="store_true")
    ap.add_argument("--tune", action="store_true", help="tune the threshold on dev after training")
    ap.add_argument("--out", type=Path, default=Path("runs/toy"))
    args = ap.parse_args()

    train_c, _ = generate_synthetic(SynthSpec(vocab_size=args.vocab_size, sentences=args.train_size, seed=1))
    dev_c, _ = generate_synthetic(SynthSpec(vocab_size=args.vocab_size, sentences=args.dev_size, seed=2), "dev")
    print("train", corpus_stats(train_c).as_dict(), "dev", corpus_stats(dev_c).as_dict())

    cfg = TrainConfig(d=args.d, lr=args.lr, epochs=args.epochs, seed=args.seed, use_cln=not args.no_cln,
                      use_inner_lstm=not args.no_inner_lstm,
                      use_length_embedding=not args.no_length_embedding)
    args.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with open(args.out / "train.log", "w", encoding="utf-8") as log:
        def on_epoch(entry, _model):
            line = f"{entry.line()} elapsed {time.perf_counter() - t0:.1f}"
            print(line, flush=True)
            log.write(line + "\n")

        res = train(train_c, cfg, dev_c, on_epoch=on_epoch)
    model = res.model
    if args.tune:
        model.threshold = tune_threshold(model, dev_c)

    report = full_report(predict(model, dev_c), dev_c.golds,
                         meta={"config": cfg.as_dict(), "best_epoch": res.best_epoch,
                               "threshold": model.threshold})
    summary = {"best_epoch": res.best_epoch, "train_f1": overall_f1(model, train_c),
               "dev_f1": report.overall.counts.f1, "seconds": round(time.perf_counter() - t0, 1)}
    print(json.dumps(summary))
    print(report.to_text())
    save_checkpoint(model, args.out / "model.json", meta={"summary": summary,
                                                          "flags": dataclasses.asdict(cfg)})
    (args.out / "report.json").write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    (args.out / "report.txt").write_text(report.to_text())


if __name__ == "__main__":
    main()
