"""JSON checkpoints.

Layout (version 1)::

    {
      "format": "macgrid-checkpoint",
      "version": 1,
      "config": {...TrainConfig fields...},
      "types": ["ADE", ...],          # tag alphabet order
      "vocab": ["<unk>", ...],        # token id order
      "threshold": 0.5,
      "meta": {...},                  # free-form run info (training log etc.)
      "tensors": {"tok_emb": {"shape": [V, d], "values": [row-major floats]}, ...}
    }

Floats are written with ``repr`` precision so a save/load cycle is exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .model import MacModel, TrainConfig, Vocab
from .types import tag_alphabet

FORMAT = "macgrid-checkpoint"
VERSION = 1


def to_dict(model: MacModel, meta: dict | None = None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": model.config.as_dict(),
        "types": list(model.alphabet.types),
        "vocab": list(model.vocab.tokens),
        "threshold": model.threshold,
        "meta": meta or {},
        "tensors": {name: {"shape": list(arr.shape), "values": arr.ravel().tolist()}
                    for name, arr in sorted(model.params.items())},
    }


def from_dict(data: dict) -> MacModel:
    if data.get("format") != FORMAT:
        raise InputError("not a macgrid checkpoint")
    if data.get("version") != VERSION:
        raise InputError(f"unsupported checkpoint version {data.get('version')}")
    cfg = dict(data["config"])
    cfg["threshold_grid"] = tuple(cfg.get("threshold_grid", ()))
    config = TrainConfig(**cfg)
    params = {name: np.array(t["values"], dtype=np.float64).reshape(t["shape"])
              for name, t in data["tensors"].items()}
    return MacModel(config, Vocab(tuple(data["vocab"])), tag_alphabet(data["types"]), params,
                    threshold=float(data["threshold"]))


def save_checkpoint(model: MacModel, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(to_dict(model, meta), sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> MacModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: unreadable checkpoint ({exc})") from None
    return from_dict(data)
