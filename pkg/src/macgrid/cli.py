"""Command-line entry point: ``macgrid <subcommand> [flags]``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Settings resolve as defaults < config file (``--config`` or $MACGRID_CONFIG,
``key = value`` lines) < command-line flags; the resolved settings are echoed
into every output header.
"""
from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import records
from .checkpoint import load_checkpoint, save_checkpoint
from .codec import DEFAULT_THRESHOLD, apply_threshold, check_threshold, encode, table_to_grid
from .corpus import Corpus, corpus_stats, parse_inline, write_inline
from .decoder import Diagnostics, decode_sentence
from .errors import ConfigError, DecodingError, MacGridError, ParseError
from .metrics import full_report
from .model import TrainConfig
from .synth import SynthSpec, generate_synthetic
from .training import decode_grids, predict_grids, train, tune_threshold
from .types import tag_alphabet

ENV_CONFIG = "MACGRID_CONFIG"


class UsageError(MacGridError):
    pass


_TRAIN_DEFAULTS = TrainConfig()

DEFAULTS: dict[str, dict] = {
    "common": {"threshold": None, "seed": 42, "jobs": 1, "strict": False, "report": "text"},
    "encode": {},
    "decode": {},
    "train": {"epochs": _TRAIN_DEFAULTS.epochs, "lr": _TRAIN_DEFAULTS.lr, "batch_size": _TRAIN_DEFAULTS.batch_size,
              "d": _TRAIN_DEFAULTS.d, "l_max": _TRAIN_DEFAULTS.l_max, "use_cln": True,
              "use_inner_lstm": True, "use_length_embedding": True, "tune": False},
    "eval": {},
    "stats": {},
    "tune": {"grid": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"},
    "synth": {"sentences": 100, "vocab_size": 50, "max_length": 20, "max_entities": 4, "max_gap": 3,
              "split": "train"},
    "bench": {"repeats": 3},
}

# echoed as basenames; output locations are not part of the echo
_PATH_KEYS = {"input", "gold", "dev", "tokens", "model"}
_OUTPUT_KEYS = {"output", "log", "truth", "diagnostics", "config"}


def read_config_file(path: str) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(value, like):
    if not isinstance(value, str) or isinstance(like, str) or like is None:
        return value
    if isinstance(like, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"not a boolean: {value!r}")
    try:
        return type(like)(value)
    except ValueError:
        raise UsageError(f"cannot interpret {value!r} as {type(like).__name__}") from None


def resolve(args: argparse.Namespace) -> dict:
    cmd = args.command
    base = {**DEFAULTS["common"], **DEFAULTS[cmd], "command": cmd}
    cfg_path = args.config or os.environ.get(ENV_CONFIG)
    if cfg_path:
        for k, v in read_config_file(cfg_path).items():
            base[k] = _coerce(v, base.get(k))
    for k, v in vars(args).items():
        if k in ("command", "func") or v is None:
            continue
        base[k] = v
    if base.get("threshold") is not None:
        try:
            base["threshold"] = check_threshold(base["threshold"])
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
    if int(base.get("jobs", 1)) < 1:
        raise UsageError("--jobs must be >= 1")
    return base


def echo(cfg: dict) -> dict:
    out = {}
    for k, v in sorted(cfg.items()):
        if k in _OUTPUT_KEYS:
            continue
        if k in _PATH_KEYS and v is not None:
            v = Path(v).name
        out[k] = v
    return out


def _need(cfg: dict, *keys: str) -> None:
    for k in keys:
        if not cfg.get(k):
            raise UsageError(f"--{k.replace('_', '-')} is required for '{cfg['command']}'")


def _read_corpus(path: str, split: str = "train") -> Corpus:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_inline(fh, split=split, source=path)
    except FileNotFoundError:
        raise UsageError(f"corpus not found: {path}") from None


def _load_model(path: str):
    try:
        return load_checkpoint(path)
    except FileNotFoundError:
        raise UsageError(f"checkpoint not found: {path}") from None


def _write(cfg: dict, text: str) -> None:
    out = cfg.get("output")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parallel(fn, items, jobs: int, initializer=None, initargs=()):
    if jobs <= 1 or len(items) < 2:
        if initializer is not None:
            initializer(*initargs)
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=initializer, initargs=initargs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# ---------------------------------------------------------------- per-sentence workers

_worker_model = None


def _init_model_worker(path: str) -> None:
    global _worker_model
    _worker_model = load_checkpoint(path)


def _predict_one(args):
    sentence, threshold, strict = args
    m = _worker_model
    gs, ge = m.predict_grids(sentence)
    diag = Diagnostics()
    ents = decode_sentence(sentence, apply_threshold(gs, m.alphabet, threshold),
                           apply_threshold(ge, m.alphabet, threshold), strict, diag)
    return ents, diag, None


def _decode_one(args):
    sentence, record, threshold, strict = args
    diag = Diagnostics()
    try:
        seg, edge = records.record_tables(record, threshold)
        return decode_sentence(sentence, seg, edge, strict, diag), diag, None
    except DecodingError as exc:
        return [], diag, str(exc)


# ---------------------------------------------------------------- subcommands

def cmd_encode(cfg: dict) -> int:
    _need(cfg, "input")
    corpus = _read_corpus(cfg["input"])
    lines = [records.dumps({"config": echo(cfg)})]
    for ex in corpus:
        seg, edge = encode(ex.sentence, ex.entities)
        lines.append(records.dumps(records.table_record(ex.sentence, seg, edge)))
    _write(cfg, "\n".join(lines) + "\n")
    return 0


def _read_records(path: str) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"record file not found: {path}") from None
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON record ({exc.msg})", lineno, path) from None
        if not records.is_header(rec):
            out.append(rec)
    return out


def _model_predictions(cfg: dict, corpus: Corpus):
    model = _load_model(cfg["model"])
    if cfg.get("threshold") is None:
        cfg["threshold"] = model.threshold
    threshold = cfg["threshold"]
    items = [(s, threshold, cfg["strict"]) for s in corpus.sentences]
    return _parallel(_predict_one, items, int(cfg["jobs"]), _init_model_worker, (cfg["model"],))


def _report_diagnostics(cfg: dict, diag: Diagnostics, errors: list[str]) -> None:
    lines = [f"dropped_fragments {diag.dropped_fragments}", f"rejected_cliques {diag.rejected_cliques}",
             f"rejected_unheaded {diag.rejected_unheaded}"]
    lines += [f"note {m}" for m in diag.messages] + [f"error {e}" for e in errors]
    text = "\n".join(lines) + "\n"
    if cfg.get("diagnostics"):
        Path(cfg["diagnostics"]).write_text(text, encoding="utf-8")
    else:
        sys.stderr.write(text)


def cmd_decode(cfg: dict) -> int:
    _need(cfg, "input")
    if cfg.get("model"):
        corpus = _read_corpus(cfg["input"])
        results = _model_predictions(cfg, corpus)
    else:
        _need(cfg, "tokens")
        cfg["threshold"] = DEFAULT_THRESHOLD if cfg["threshold"] is None else cfg["threshold"]
        corpus = _read_corpus(cfg["tokens"])
        recs = _read_records(cfg["input"])
        if len(recs) != len(corpus):
            raise DecodingError(f"{len(recs)} records for {len(corpus)} sentences")
        items = [(s, r, cfg["threshold"], cfg["strict"]) for s, r in zip(corpus.sentences, recs)]
        results = _parallel(_decode_one, items, int(cfg["jobs"]))
    diag = Diagnostics()
    errors = []
    for k, (_, d, err) in enumerate(results):
        diag.merge(d)
        if err:
            if cfg["strict"]:
                raise DecodingError(f"sentence {k}: {err}")
            errors.append(f"sentence {k}: {err}")
    pred = corpus.with_entities(r[0] for r in results)
    text = write_inline(pred, header=[f"config {json.dumps(echo(cfg), sort_keys=True)}"])
    _write(cfg, text or "")
    _report_diagnostics(cfg, diag, errors)
    return 1 if errors else 0


def _train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(d=int(cfg["d"]), l_max=int(cfg["l_max"]), lr=float(cfg["lr"]),
                           epochs=int(cfg["epochs"]), batch_size=int(cfg["batch_size"]),
                           seed=int(cfg["seed"]), threshold=float(cfg["threshold"]),
                           use_cln=bool(cfg["use_cln"]), use_inner_lstm=bool(cfg["use_inner_lstm"]),
                           use_length_embedding=bool(cfg["use_length_embedding"]))
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def cmd_train(cfg: dict) -> int:
    _need(cfg, "input", "output")
    corpus = _read_corpus(cfg["input"])
    dev = _read_corpus(cfg["dev"], split="dev") if cfg.get("dev") else None
    if cfg["threshold"] is None:
        cfg["threshold"] = DEFAULT_THRESHOLD
    tc = _train_config(cfg)
    out = open(cfg["log"], "w", encoding="utf-8") if cfg.get("log") else sys.stdout
    try:
        out.write(f"# config {json.dumps(echo(cfg), sort_keys=True)}\n")
        out.write(f"# train_config {json.dumps(tc.as_dict(), sort_keys=True)}\n")

        def report(entry, _model) -> None:
            out.write(entry.line() + "\n")
            out.flush()

        result = train(corpus, tc, dev, on_epoch=report)
        model = result.model
        if cfg.get("tune") and dev is not None:
            model.threshold = tune_threshold(model, dev)
        dev_f1 = result.best_dev_f1
        out.write(f"best_epoch {result.best_epoch} dev_f1 "
                  f"{'n/a' if dev_f1 is None else f'{dev_f1:.6f}'} threshold {model.threshold}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    save_checkpoint(model, cfg["output"], meta={"config": echo(cfg),
                                                "log": [e.line() for e in result.log],
                                                "best_epoch": result.best_epoch})
    return 0


def _render_report(cfg: dict, report) -> str:
    if cfg["report"] == "json":
        return json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n"
    return f"# config {json.dumps(echo(cfg), sort_keys=True)}\n" + report.to_text()


def cmd_eval(cfg: dict) -> int:
    _need(cfg, "input")
    if cfg.get("model"):
        gold = _read_corpus(cfg.get("gold") or cfg["input"], split="test")
        preds = [r[0] for r in _model_predictions(cfg, gold)]
    else:
        _need(cfg, "gold")
        gold = _read_corpus(cfg["gold"], split="test")
        preds = _read_corpus(cfg["input"]).golds
    report = full_report(preds, gold.golds, meta={"config": echo(cfg)})
    _write(cfg, _render_report(cfg, report))
    return 0


def cmd_stats(cfg: dict) -> int:
    _need(cfg, "input")
    stats = corpus_stats(_read_corpus(cfg["input"]))
    if cfg["report"] == "json":
        text = json.dumps({"config": echo(cfg), **stats.as_dict()}, sort_keys=True) + "\n"
    else:
        text = (f"# config {json.dumps(echo(cfg), sort_keys=True)}\n"
                f"S {stats.S}\nM {stats.M}\nD {stats.D}\nP {stats.P:.1f}\n")
    _write(cfg, text)
    return 0


def cmd_tune(cfg: dict) -> int:
    _need(cfg, "model", "input")
    model = _load_model(cfg["model"])
    dev = _read_corpus(cfg["input"], split="dev")
    try:
        grid = [float(x) for x in str(cfg["grid"]).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --grid {cfg['grid']!r}") from None
    try:
        best = tune_threshold(model, dev, grid)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    model.threshold = best
    if cfg.get("output"):
        save_checkpoint(model, cfg["output"], meta={"config": echo(cfg)})
    sys.stdout.write(f"# config {json.dumps(echo(cfg), sort_keys=True)}\nthreshold {best}\n")
    return 0


def cmd_synth(cfg: dict) -> int:
    spec = SynthSpec(vocab_size=int(cfg["vocab_size"]), sentences=int(cfg["sentences"]),
                     max_length=int(cfg["max_length"]), max_entities=int(cfg["max_entities"]),
                     max_gap=int(cfg["max_gap"]), seed=int(cfg["seed"]))
    corpus, truth = generate_synthetic(spec, split=cfg["split"])
    _write(cfg, write_inline(corpus, header=[f"config {json.dumps(echo(cfg), sort_keys=True)}"]))
    if cfg.get("truth"):
        Path(cfg["truth"]).write_text(json.dumps({
            "S": len(corpus), "M": truth.mentions, "D": truth.discontinuous,
            "patterns": dict(sorted(truth.patterns.items())),
            "interval": dict(sorted(truth.interval.items())),
            "span": dict(sorted(truth.span.items())),
        }, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _timed(fn, repeats: int) -> float:
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench(corpus: Corpus, model=None, threshold: float = 0.5, repeats: int = 3) -> dict:
    """Median-of-``repeats`` wall-clock throughput after one warm-up run.

    decode_only thresholds precomputed grids and decodes them (gold one-hot
    grids when no model is given); full also runs the scorer.
    """
    n = len(corpus)
    out: dict = {"sentences": n, "repeats": repeats}
    if n == 0:
        out["decode_only"] = {"median_s": 0.0, "sentences_per_s": 0.0}
        if model is not None:
            out["full"] = {"median_s": 0.0, "sentences_per_s": 0.0}
        return out
    if model is not None:
        alphabet = model.alphabet
        grids = predict_grids(model, corpus)
    else:
        alphabet = tag_alphabet(corpus.types)
        grids = [tuple(table_to_grid(t, alphabet) for t in encode(ex.sentence, ex.entities)) for ex in corpus]
    t = _timed(lambda: decode_grids(corpus, grids, alphabet, threshold), repeats)
    out["decode_only"] = {"median_s": t, "sentences_per_s": n / t if t > 0 else float("inf")}
    if model is not None:
        t = _timed(lambda: decode_grids(corpus, predict_grids(model, corpus), alphabet, threshold), repeats)
        out["full"] = {"median_s": t, "sentences_per_s": n / t if t > 0 else float("inf")}
    return out


def cmd_bench(cfg: dict) -> int:
    _need(cfg, "input")
    corpus = _read_corpus(cfg["input"])
    model = _load_model(cfg["model"]) if cfg.get("model") else None
    if int(cfg["repeats"]) < 3:
        raise UsageError("--repeats must be >= 3")
    if cfg["threshold"] is None:
        cfg["threshold"] = model.threshold if model is not None else DEFAULT_THRESHOLD
    result = bench(corpus, model, cfg["threshold"], int(cfg["repeats"]))
    _write(cfg, json.dumps({"config": echo(cfg), **result}, sort_keys=True) + "\n")
    return 0


COMMANDS = {
    "encode": cmd_encode, "decode": cmd_decode, "train": cmd_train, "eval": cmd_eval,
    "stats": cmd_stats, "tune": cmd_tune, "synth": cmd_synth, "bench": cmd_bench,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input")
    common.add_argument("--output")
    common.add_argument("--model")
    common.add_argument("--threshold", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--strict", action="store_true", default=None)
    common.add_argument("--report", choices=("text", "json"))
    common.add_argument("--config", help=f"key = value settings file (default: ${ENV_CONFIG})")

    parser = _Parser(prog="macgrid", description="Discontinuous NER by maximal-clique decoding of grid tags.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("encode", parents=[common], help="gold corpus -> tag-table records")

    p = sub.add_parser("decode", parents=[common], help="tag tables / prob grids / model -> predicted corpus")
    p.add_argument("--tokens", help="inline corpus supplying the tokens for --input records")
    p.add_argument("--diagnostics", help="write decode diagnostics here instead of stderr")

    p = sub.add_parser("train", parents=[common], help="train the grid scorer")
    p.add_argument("--dev")
    p.add_argument("--log")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--d", "--dim", dest="d", type=int)
    p.add_argument("--l-max", type=int)
    p.add_argument("--no-cln", dest="use_cln", action="store_false", default=None)
    p.add_argument("--no-inner-lstm", dest="use_inner_lstm", action="store_false", default=None)
    p.add_argument("--no-length-embedding", dest="use_length_embedding", action="store_false", default=None)
    p.add_argument("--tune", action="store_true", default=None, help="tune the threshold on --dev afterwards")

    p = sub.add_parser("eval", parents=[common], help="score predictions (or a model) against gold")
    p.add_argument("--gold")

    sub.add_parser("stats", parents=[common], help="S / M / D / P corpus statistics")

    p = sub.add_parser("tune", parents=[common], help="pick the dev-optimal threshold")
    p.add_argument("--grid")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--sentences", type=int)
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--max-length", type=int)
    p.add_argument("--max-entities", type=int)
    p.add_argument("--max-gap", type=int)
    p.add_argument("--split")
    p.add_argument("--truth", help="write generator ground-truth tallies (JSON) here")

    p = sub.add_parser("bench", parents=[common], help="decode throughput (sentences per second)")
    p.add_argument("--repeats", type=int)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        code = COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"macgrid: usage error: {exc}", file=sys.stderr)
        return 2
    except (MacGridError, ValueError, OSError) as exc:
        print(f"macgrid: error: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
