"""Subcommand front end wiring the pipeline.

    preprocess -> vocab -> (mock-teacher | external stream) -> train/ase -> eval-sim

plus nearest-neighbor inspection (nn) and the corpus-size sweep. Exit codes:
0 success, 1 usage error, 2 data/format error. Every artifact-producing
subcommand writes a JSON run manifest next to its primary output; replaying a
manifest single-threaded reproduces the artifact bytes.

Configuration precedence: command-line flags > --config JSON file > built-in
defaults (one fixed hyperparameter set for every teacher).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ase import AseAccumulator, ase_finalize
from .corpus import (
    PreprocessConfig,
    Vocabulary,
    build_vocabulary,
    encode_corpus,
    load_corpus,
    preprocess_corpus,
    save_corpus,
)
from .embeddings import WordEmbeddings
from .errors import X2StaticError
from .evaluation import (
    evaluate_dataset,
    load_similarity_dataset,
    nearest_neighbors,
    report_tsv,
)
from .planted import PlantedSpace
from .stream import StreamHeader, mock_teacher_encode, read_stream, write_stream
from .trainer import TrainerConfig, TrainResult, distill

DEFAULTS = {
    "min-count": 10,
    "max-size": 750_000,
    "seed": 1,
    "epochs": 1,
    "negatives": 10,
    "subsample-t": 5e-6,
    "lr": 0.001,
    "batch": 128,
    "threads": 1,
    "k": 10,
    "mode": None,  # per-subcommand
    "scope": "sentence",
    "dtype": "f32",
    "noise": 0.0,
    "dim": None,
    "cap": None,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors instead of argparse's 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="x2static", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"x2static {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config file (flags override it)")
        return p

    p = add("preprocess", "filter, lowercase and tokenize raw text")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = add("vocab", "build the frequency-filtered vocabulary")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--min-count", type=int)
    p.add_argument("--max-size", type=int)

    p = add("mock-teacher", "emit a deterministic mock teacher stream")
    p.add_argument("--input", required=True, help="canonical corpus file")
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=["hash", "planted"])
    p.add_argument("--planted", help="embedding text file with the planted rows")
    p.add_argument("--scope", choices=["sentence", "paragraph"])
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--dtype", choices=["f32", "f16"])

    p = add("train", "distill target embeddings")
    p.add_argument("--stream", help="teacher stream (teacher mode)")
    p.add_argument("--input", help="canonical corpus file (static_baseline mode)")
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--checkpoint", help="also write a binary f32 checkpoint here")
    p.add_argument("--mode", choices=["teacher", "static_baseline"])
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--subsample-t", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)

    p = add("ase", "average-pool teacher vectors per word")
    p.add_argument("--stream", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--cap", type=int)
    p.add_argument("--report", help="coverage TSV path (default: OUTPUT.coverage.tsv)")

    p = add("eval-sim", "word-similarity evaluation against gold ratings")
    p.add_argument("--input", required=True, help="embedding text file")
    p.add_argument("--dataset", required=True, action="append")
    p.add_argument("--output", help="write the report TSV here as well")

    p = add("nn", "nearest neighbors of a query word")
    p.add_argument("--input", required=True, help="embedding text file")
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int)

    p = add("sweep", "train/evaluate on growing stream prefixes")
    p.add_argument("--stream", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--fractions", required=True, help="comma-separated, ascending, in (0,1]")
    p.add_argument("--dataset", required=True, action="append")
    p.add_argument("--epochs", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--subsample-t", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)

    return parser


def _resolve(args: argparse.Namespace, keys: dict[str, object]) -> dict:
    """flags > config file > defaults."""
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            file_cfg = json.load(f)
    resolved = {}
    for key, default in keys.items():
        value = getattr(args, key.replace("-", "_"), None)
        if value is None:
            value = file_cfg.get(key, default)
        resolved[key] = value
    return resolved


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _replay_argv(subcommand: str, flags: dict) -> list[str]:
    argv = [subcommand]
    for key, value in flags.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            for item in value:
                argv.extend([f"--{key}", _fmt(item)])
        else:
            argv.extend([f"--{key}", _fmt(value)])
    return argv


def _write_manifest(
    subcommand: str,
    config: dict,
    inputs: dict,
    outputs: dict,
    started: float,
    primary_output: str,
    extra: dict | None = None,
) -> None:
    manifest = {
        "tool": "x2static",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "seed": config.get("seed"),
        "duration_s": round(time.perf_counter() - started, 6),
        "replay_argv": _replay_argv(subcommand, {**inputs, **outputs, **config}),
    }
    if extra:
        manifest.update(extra)
    path = Path(str(primary_output) + ".manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def replay_manifest(manifest_path: str | Path, overrides: dict[str, str] | None = None) -> int:
    """Re-run the subcommand recorded in a manifest; ``overrides`` may remap
    flags (typically the output path) before dispatch."""
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    argv = list(manifest["replay_argv"])
    if overrides:
        for key, value in overrides.items():
            flag = f"--{key}"
            if flag in argv:
                argv[argv.index(flag) + 1] = value
            else:
                argv.extend([flag, value])
    return run(argv)


def _cmd_preprocess(args) -> int:
    started = time.perf_counter()
    config = _resolve(args, {})
    with open(args.input, "rb") as f:
        corpus = preprocess_corpus(f.read(), PreprocessConfig())
    save_corpus(corpus, args.output)
    print(
        f"preprocess: {len(corpus.paragraphs)} paragraphs, "
        f"{corpus.num_sentences()} sentences, {corpus.num_tokens()} tokens"
    )
    _write_manifest(
        "preprocess", config, {"input": args.input}, {"output": args.output}, started, args.output
    )
    return 0


def _cmd_vocab(args) -> int:
    started = time.perf_counter()
    config = _resolve(args, {"min-count": DEFAULTS["min-count"], "max-size": DEFAULTS["max-size"]})
    corpus = load_corpus(args.input)
    vocab = build_vocabulary(corpus, min_count=config["min-count"], max_size=config["max-size"])
    vocab.save(args.output)
    print(f"vocab: {len(vocab)} words, {vocab.total_tokens} corpus tokens")
    _write_manifest(
        "vocab", config, {"input": args.input}, {"output": args.output}, started, args.output
    )
    return 0


def _load_planted(path: str, vocab: Vocabulary) -> PlantedSpace:
    emb = WordEmbeddings.load_text(path)
    rows = np.empty((len(vocab), emb.dim), dtype=np.float32)
    for i, word in enumerate(vocab.words):
        j = emb.id_of(word)
        if j is None:
            from .errors import PlantedCoverageError

            raise PlantedCoverageError(f"vocabulary word {word!r} missing from planted file")
        rows[i] = emb.vectors[j]
    return PlantedSpace(vectors=rows, seed=0)


def _cmd_mock_teacher(args) -> int:
    started = time.perf_counter()
    config = _resolve(
        args,
        {
            "mode": "hash",
            "scope": DEFAULTS["scope"],
            "dim": None,
            "seed": DEFAULTS["seed"],
            "noise": DEFAULTS["noise"],
            "dtype": DEFAULTS["dtype"],
            "planted": None,
        },
    )
    if config["mode"] == "planted" and not config["planted"]:
        raise _UsageError("planted mode requires --planted")
    if config["mode"] == "hash" and not config["dim"]:
        raise _UsageError("hash mode requires --dim")
    vocab = Vocabulary.load(args.vocab)
    corpus = load_corpus(args.input)
    encoded = encode_corpus(corpus, vocab)
    planted = _load_planted(config["planted"], vocab) if config["planted"] else None
    dim = planted.dim if planted is not None else config["dim"]
    records = mock_teacher_encode(
        encoded,
        mode=config["mode"],
        planted=planted,
        scope=config["scope"],
        dim=dim,
        seed=config["seed"],
        noise_scale=config["noise"],
    )
    header = StreamHeader(dim=dim, scope=config["scope"], dtype=config["dtype"])
    n_bytes = write_stream(header, records, args.output)
    print(f"mock-teacher: wrote {n_bytes} bytes (dim={dim}, scope={config['scope']})")
    _write_manifest(
        "mock-teacher",
        config,
        {"input": args.input, "vocab": args.vocab},
        {"output": args.output},
        started,
        args.output,
    )
    return 0


def _trainer_config(config: dict, mode: str, threads: int = 1) -> TrainerConfig:
    return TrainerConfig(
        epochs=config["epochs"],
        negatives=config["negatives"],
        subsample_t=config["subsample-t"],
        learning_rate=config["lr"],
        batch_size=config["batch"],
        seed=config["seed"],
        mode=mode,
        dim=config.get("dim"),
        threads=threads,
    )


def _cmd_train(args) -> int:
    started = time.perf_counter()
    config = _resolve(
        args,
        {
            "mode": "teacher",
            "epochs": DEFAULTS["epochs"],
            "negatives": DEFAULTS["negatives"],
            "subsample-t": DEFAULTS["subsample-t"],
            "lr": DEFAULTS["lr"],
            "batch": DEFAULTS["batch"],
            "seed": DEFAULTS["seed"],
            "dim": None,
            "threads": DEFAULTS["threads"],
        },
    )
    mode = config["mode"]
    print(
        "train: mode={} epochs={} negatives={} subsample-t={} lr={} batch={} seed={} threads={}".format(
            mode,
            config["epochs"],
            config["negatives"],
            _fmt(config["subsample-t"]),
            _fmt(config["lr"]),
            config["batch"],
            config["seed"],
            config["threads"],
        )
    )
    vocab = Vocabulary.load(args.vocab)
    trainer_config = _trainer_config(config, mode, threads=config["threads"])
    if mode == "teacher":
        if not args.stream:
            raise _UsageError("teacher mode requires --stream")
        result: TrainResult = distill(args.stream, vocab, trainer_config)
        inputs = {"stream": args.stream, "vocab": args.vocab}
    else:
        if not args.input:
            raise _UsageError("static_baseline mode requires --input")
        if not config["dim"]:
            raise _UsageError("static_baseline mode requires --dim")
        corpus = load_corpus(args.input)
        encoded = encode_corpus(corpus, vocab)
        result = distill(encoded, vocab, trainer_config)
        inputs = {"input": args.input, "vocab": args.vocab}
    embeddings = WordEmbeddings(vocab.words, result.U)
    embeddings.save_text(args.output)
    outputs = {"output": args.output}
    if args.checkpoint:
        embeddings.save_binary(args.checkpoint)
        outputs["checkpoint"] = args.checkpoint
    losses = " ".join(f"{x:.6f}" for x in result.epoch_losses)
    print(
        f"train: {result.examples_trained} examples, {result.examples_skipped} skipped, "
        f"epoch mean loss [{losses}]"
    )
    _write_manifest("train", config, inputs, outputs, started, args.output)
    return 0


def _cmd_ase(args) -> int:
    started = time.perf_counter()
    config = _resolve(args, {"cap": None, "report": None})
    vocab = Vocabulary.load(args.vocab)
    header, records = read_stream(args.stream)
    acc = AseAccumulator(vocab, header.dim, cap=config["cap"])
    acc.add_stream(records)
    embeddings, report = ase_finalize(acc)
    embeddings.save_text(args.output)
    report_path = config["report"] or str(args.output) + ".coverage.tsv"
    report.save_tsv(report_path)
    print(f"ase: {report.seen} words seen, {report.unseen} unseen (dim={header.dim})")
    _write_manifest(
        "ase",
        {"cap": config["cap"]},
        {"stream": args.stream, "vocab": args.vocab},
        {"output": args.output, "report": report_path},
        started,
        args.output,
    )
    return 0


def _cmd_eval_sim(args) -> int:
    started = time.perf_counter()
    embeddings = WordEmbeddings.load_text(args.input)
    reports = []
    for path in args.dataset:
        dataset = load_similarity_dataset(path)
        reports.append(evaluate_dataset(embeddings, dataset))
    text = report_tsv(reports)
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        _write_manifest(
            "eval-sim",
            {},
            {"input": args.input, "dataset": list(args.dataset)},
            {"output": args.output},
            started,
            args.output,
        )
    return 0


def _cmd_nn(args) -> int:
    config = _resolve(args, {"k": DEFAULTS["k"]})
    embeddings = WordEmbeddings.load_text(args.input)
    for word, cosine in nearest_neighbors(embeddings, args.query, config["k"]):
        print(f"{word}\t{cosine:.6f}")
    return 0


def run_sweep(
    stream_path: str | Path,
    vocab: Vocabulary,
    fractions: list[float],
    datasets: list,
    config: TrainerConfig,
    ase_cap: int | None = None,
) -> list[tuple[str, float, str, float]]:
    """Train distilled embeddings and ASE on record-aligned stream prefixes;
    evaluate each on every dataset. Returns (method, fraction, dataset, rho)
    rows."""
    if sorted(fractions) != list(fractions):
        raise ValueError("fractions must be sorted ascending")
    if any(not (0.0 < f <= 1.0) for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    header, records = read_stream(stream_path)
    all_records = list(records)
    total = len(all_records)
    rows: list[tuple[str, float, str, float]] = []
    for fraction in fractions:
        n = int(fraction * total)
        if n < 1:
            raise X2StaticError(
                f"fraction {fraction:g} of {total} records yields no record"
            )
        prefix = all_records[:n]
        result = distill(prefix, vocab, config)
        distilled = WordEmbeddings(vocab.words, result.U)
        acc = AseAccumulator(vocab, header.dim, cap=ase_cap)
        acc.add_stream(prefix)
        ase_embeddings, _ = ase_finalize(acc)
        for dataset in datasets:
            rows.append(
                ("distilled", fraction, dataset.name, evaluate_dataset(distilled, dataset).spearman_rho)
            )
        for dataset in datasets:
            rows.append(
                ("ase", fraction, dataset.name, evaluate_dataset(ase_embeddings, dataset).spearman_rho)
            )
    return rows


def _cmd_sweep(args) -> int:
    started = time.perf_counter()
    config = _resolve(
        args,
        {
            "fractions": None,
            "epochs": DEFAULTS["epochs"],
            "negatives": DEFAULTS["negatives"],
            "subsample-t": DEFAULTS["subsample-t"],
            "lr": DEFAULTS["lr"],
            "batch": DEFAULTS["batch"],
            "seed": DEFAULTS["seed"],
        },
    )
    raw = config["fractions"]
    try:
        fractions = [float(x) for x in (raw.split(",") if isinstance(raw, str) else raw)]
    except ValueError:
        raise _UsageError(f"bad --fractions value: {raw!r}")
    if sorted(fractions) != fractions or any(not (0.0 < f <= 1.0) for f in fractions):
        raise _UsageError("--fractions must be ascending and in (0, 1]")
    vocab = Vocabulary.load(args.vocab)
    datasets = [load_similarity_dataset(p) for p in args.dataset]
    trainer_config = _trainer_config(config, "teacher")
    rows = run_sweep(args.stream, vocab, fractions, datasets, trainer_config)
    with open(args.output, "w", encoding="utf-8", newline="\n") as f:
        for method, fraction, dataset, rho in rows:
            f.write(f"{method}\t{fraction:g}\t{dataset}\t{rho:.6f}\n")
    print(f"sweep: {len(rows)} rows -> {args.output}")
    _write_manifest(
        "sweep",
        {**config, "fractions": ",".join(f"{f:g}" for f in fractions)},
        {"stream": args.stream, "vocab": args.vocab, "dataset": list(args.dataset)},
        {"output": args.output},
        started,
        args.output,
    )
    return 0


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "vocab": _cmd_vocab,
    "mock-teacher": _cmd_mock_teacher,
    "train": _cmd_train,
    "ase": _cmd_ase,
    "eval-sim": _cmd_eval_sim,
    "nn": _cmd_nn,
    "sweep": _cmd_sweep,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.subcommand:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.subcommand](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except X2StaticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --version/--help
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run(sys.argv[1:]))
