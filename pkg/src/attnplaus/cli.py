"""Command-line pipeline.

Stages exchange data only through files (CSV corpus, word-vector text,
model binary, attention-map JSONL, report JSON), so any stage can be run
or replaced independently.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import corpus as cp
from . import metrics, report
from .embeddings import ZERO, load_table
from .errors import AttnPlausError, DataError, NumericError
from .heuristic import heuristic_maps
from .maps import align, human_maps, read_jsonl, write_jsonl
from .stopwords import DEFAULT_STOPWORDS, load_stopwords

log = logging.getLogger("attnplaus")

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _env_seed():
    raw = os.environ.get("ATTNPLAUS_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ATTNPLAUS_SEED must be an integer, got {raw!r}") from None


def _common(p, corpus=True, required=True):
    if corpus:
        p.add_argument("--corpus", required=required, help="annotated CSV corpus")
        p.add_argument("--columns", help="column overrides key=name,... (see README)")
        p.add_argument("--stopwords", help="stop-word file, one token per line")
        p.add_argument("--class", dest="label", choices=cp.LABELS, help="keep only this label")
        p.add_argument("--pos-sidecar", help="TSV of premise/hypothesis POS tags per row")
        p.add_argument("--limit", type=int, help="use at most N pairs")
    p.add_argument("--seed", type=int, help="random seed (default: $ATTNPLAUS_SEED or 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="attnplaus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="corpus statistics (highlight rate, POS shares, OOV rate)")
    _common(p)
    p.add_argument("--vocab-corpus", help="corpus whose vocabulary defines OOV (e.g. train)")
    p.add_argument("--out", help="JSON output (default stdout)")

    p = sub.add_parser("heuristic", help="similarity-based attention maps")
    _common(p)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lenient-embeddings", action="store_true",
                   help="skip malformed embedding lines instead of failing")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the BiLSTM cross-attention model")
    _common(p)
    p.add_argument("--dev-corpus")
    p.add_argument("--embeddings")
    p.add_argument("--dim", type=int)
    p.add_argument("--lenient-embeddings", action="store_true")
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    p.add_argument("--hidden", type=int)
    p.add_argument("--attention", choices=("dot", "cosine"), default="dot")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--log", help="write the per-epoch log as JSON here")
    p.add_argument("--out", required=True)

    p = sub.add_parser("extract-attention", help="model attention maps as JSONL")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="plausibility report of candidate maps")
    _common(p)
    p.add_argument("--candidate", required=True, help="candidate attention maps (JSONL)")
    p.add_argument("--truth", default="human",
                   help="'human' (highlight masks) or a JSONL map file to binarize")
    p.add_argument("--truth-epsilon", type=float, default=0.5)
    p.add_argument("--heuristic", help="heuristic maps, enables the AUC-vs-threshold table")
    p.add_argument("--model-maps", help="model maps, enables the AUC-vs-threshold table")
    p.add_argument("--grid-size", type=int, default=512)
    p.add_argument("--roc-csv", help="also write the ROC points as CSV")
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot", help="render SVG figures from a report and maps")
    _common(p, corpus=True, required=False)
    p.add_argument("--report", required=True)
    p.add_argument("--maps", action="append", default=[], metavar="[SOURCE=]PATH",
                   help="attention maps for heatmaps; repeatable")
    p.add_argument("--pairs", default="", help="comma-separated pair ids to draw")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("stopwords", help="print the stop-word list")
    p.add_argument("--stopwords", help="print this file's list instead")
    return parser


# -- helpers -----------------------------------------------------------------

def _require_files(*paths):
    for path in paths:
        if path and not Path(path).is_file():
            raise DataError(f"no such file: {path}")


def _require_out(path):
    parent = Path(path).parent
    if not parent.is_dir():
        raise DataError(f"output directory does not exist: {parent}")


def _stopwords(args):
    return load_stopwords(args.stopwords) if args.stopwords else DEFAULT_STOPWORDS


def _load(args, path=None):
    d = cp.parse_corpus(path or args.corpus, cp.ColumnMap.parse(args.columns),
                        stopwords=_stopwords(args), pos_sidecar=args.pos_sidecar)
    if args.label:
        d = cp.filter_by_label(d, args.label)
    return d.limit(args.limit)


def _write_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(args, datasets):
    vocab = set().union(*(cp.vocabulary(d) for d in datasets))
    return load_table(args.embeddings, args.dim, vocab=vocab,
                      strict=not args.lenient_embeddings, oov_policy=ZERO)


# -- subcommands -------------------------------------------------------------

def cmd_stats(args):
    _require_files(args.corpus, args.vocab_corpus, args.pos_sidecar)
    d = _load(args)
    out = {"split": d.split_name, "pairs": len(d), "skipped_rows": d.skipped_rows,
           "highlight_rate": cp.highlight_rate(d),
           "labels": {lab: sum(p.label == lab for p in d) for lab in cp.LABELS}}
    if all(t.pos is not None for p in d for side, _ in p.sides for t in side):
        out["pos"] = cp.pos_stats(d)
    if args.vocab_corpus:
        ref = cp.parse_corpus(args.vocab_corpus, cp.ColumnMap.parse(args.columns),
                              stopwords=_stopwords(args))
        out["oov_rate"] = cp.oov_rate(d, cp.vocabulary(ref))
    _write_json(out, args.out)


def cmd_heuristic(args):
    _require_files(args.corpus, args.embeddings, args.pos_sidecar)
    _require_out(args.out)
    d = _load(args)
    table = _table(args, [d])
    maps = heuristic_maps(d, table, threads=args.threads)
    degenerate = sum(not m.premise.any() or not m.hypothesis.any() for m in maps)
    if degenerate:
        log.warning("%d pairs have an all-zero side (stop words only or no contrast)", degenerate)
    write_jsonl(maps, args.out)
    log.info("wrote %d heuristic maps to %s", len(maps), args.out)


def cmd_train(args):
    from .neuralmodel import (PRESETS, ModelConfig, TrainConfig, Vocab, init_params,
                              save_model, train)

    _require_files(args.corpus, args.dev_corpus, args.embeddings)
    _require_out(args.out)
    if args.embeddings and not args.dim:
        raise UsageError("--embeddings requires --dim")
    seed = args.seed
    train_set = _load(args)
    dev_set = _load(args, args.dev_corpus) if args.dev_corpus else None
    preset = PRESETS[args.preset]
    hidden = args.hidden or preset.hidden
    table = _table(args, [train_set]) if args.embeddings else None
    config = ModelConfig(embed_dim=table.dim if table is not None else preset.embed_dim,
                         hidden=hidden, attention=args.attention, seed=seed)
    vocab = Vocab.build([train_set])
    params = init_params(config, vocab, table)
    tc = TrainConfig(lr=args.lr, momentum=args.momentum, batch_size=args.batch_size,
                     epochs=args.epochs, seed=seed, clip_norm=args.clip_norm)
    params, history = train(params, train_set, dev_set, tc)
    save_model(params, args.out)
    if args.log:
        _write_json([asdict(h) for h in history], args.log)
    for h in history:
        print(f"epoch {h.epoch} loss {h.train_loss:.6f} dev_acc {h.dev_accuracy} "
              f"dev_f1 {h.dev_macro_f1}", file=sys.stderr)


def cmd_extract(args):
    from .neuralmodel import extract_attention, load_model

    _require_files(args.corpus, args.model)
    _require_out(args.out)
    params = load_model(args.model)
    d = _load(args)
    n = write_jsonl(extract_attention(params, d), args.out)
    log.info("wrote %d attention maps to %s", n, args.out)


def cmd_evaluate(args):
    _require_files(args.corpus, args.candidate, args.heuristic, args.model_maps,
                   None if args.truth == "human" else args.truth)
    _require_out(args.out)
    if bool(args.heuristic) != bool(args.model_maps):
        raise UsageError("--heuristic and --model-maps must be given together")
    if args.grid_size < 2:
        raise UsageError("--grid-size must be at least 2")
    d = _load(args)
    human = human_maps(d)
    if args.truth == "human":
        truth = human
    else:
        from .maps import AttentionMap
        eps = args.truth_epsilon
        truth = [AttentionMap(m.pair_id,
                              metrics.binarize(metrics.scale_to_unit(m.premise), eps).astype(float),
                              metrics.binarize(metrics.scale_to_unit(m.hypothesis), eps).astype(float))
                 for m in align(read_jsonl(args.truth), d)]
    candidate = align(read_jsonl(args.candidate), d)
    heuristic = align(read_jsonl(args.heuristic), d) if args.heuristic else None
    model = align(read_jsonl(args.model_maps), d) if args.model_maps else None
    grid = metrics.default_grid(args.grid_size)
    meta = {"corpus": Path(args.corpus).name, "candidate": Path(args.candidate).name,
            "truth": args.truth if args.truth == "human" else Path(args.truth).name,
            "class": args.label, "pairs": len(d)}
    rep = metrics.evaluate(candidate, truth, grid, heuristic=heuristic,
                           human=human if heuristic else None, model=model, meta=meta)
    _write_json(rep.to_dict(), args.out)
    if args.roc_csv:
        Path(args.roc_csv).write_text(rep.roc.to_csv(), encoding="utf-8")
    print(f"auc {rep.auc:.6f}", file=sys.stderr)


def _source_spec(spec):
    name, sep, path = spec.partition("=")
    return (name, path) if sep else ("model", spec)


def cmd_plot(args):
    _require_files(args.report, args.corpus, *[_source_spec(s)[1] for s in args.maps])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))

    roc = doc["roc"]
    curve = metrics.RocCurve(np.array([r["epsilon"] for r in roc]),
                             np.array([r["tpr"] for r in roc]),
                             np.array([r["fpr"] for r in roc]))
    (out / "roc.svg").write_text(report.render_roc({doc["meta"].get("candidate", "candidate"): curve}))
    if doc.get("auc_vs_epsilon"):
        rows = doc["auc_vs_epsilon"]
        svg = report.render_auc_lines([r["epsilon"] for r in rows],
                                      {"human": [r["auc_human"] for r in rows],
                                       "model": [r["auc_model"] for r in rows]})
        (out / "auc_vs_eps.svg").write_text(svg)
    records = doc["per_instance"]["records"]
    ranges = {"js": (0.0, float(np.log(2.0))), "spearman": (-1.0, 1.0), "pearson": (-1.0, 1.0)}
    for metric, rng in ranges.items():
        series = {side: [r[metric] for r in records if r["side"] == side]
                  for side in ("premise", "hypothesis")}
        svg = report.render_histograms(series, bins=40, value_range=rng, title=metric)
        (out / f"hist_{metric}.svg").write_text(svg)

    wanted = [p for p in args.pairs.split(",") if p]
    if not wanted:
        return
    pairs = _load(args).by_id() if args.corpus else {}
    sources = {name: {m.pair_id: m for m in read_jsonl(path)}
               for name, path in map(_source_spec, args.maps)}
    if pairs:
        sources.setdefault("human", {m.pair_id: m for m in human_maps(pairs.values())})
    for pid in wanted:
        for name, maps in sources.items():
            m = maps.get(pid)
            if m is None:
                raise DataError(f"no {name} map for pair {pid}")
            pair = pairs.get(pid)
            tokens = ([t.surface for t in pair.premise + pair.hypothesis] if pair
                      else [str(i) for i in range(m.premise.size + m.hypothesis.size)])
            values = np.concatenate([metrics.scale_to_unit(m.premise),
                                     metrics.scale_to_unit(m.hypothesis)])
            spec = report.HeatmapSpec.vector(tokens, values, title=f"{pid} ({name})",
                                             hue=report.HUES.get(name, report.PALETTE[0]))
            safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in pid)
            (out / f"heatmap_{safe}_{name}.svg").write_text(report.render_heatmap(spec))


def cmd_stopwords(args):
    words = load_stopwords(args.stopwords) if args.stopwords else DEFAULT_STOPWORDS
    sys.stdout.write("\n".join(sorted(words)) + "\n")


COMMANDS = {
    "stats": cmd_stats,
    "heuristic": cmd_heuristic,
    "train": cmd_train,
    "extract-attention": cmd_extract,
    "evaluate": cmd_evaluate,
    "plot": cmd_plot,
    "stopwords": cmd_stopwords,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _env_seed()
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False)
                            else logging.WARNING, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / argparse exit paths
        return 0 if exc.code in (0, None) else 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (DataError, AttnPlausError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
