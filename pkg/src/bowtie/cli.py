"""Command-line surface: four named scenarios plus utility commands.

Commands: prepare, scenario, train, eval, transfer, stats, replay.  Every
flag can be set through an environment variable BOWTIE_<FLAG> (uppercase,
dashes become underscores); explicit flags win.  Exit codes: 0 success,
1 usage, 2 data error, 3 numerical divergence, 4 verdict failure.

Heavy imports happen inside the handlers so --threads can pin the BLAS
thread-count environment variables before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import DataError, DivergenceError, NonConvergenceError

ENV_PREFIX = "BOWTIE_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3
EXIT_VERDICT = 4

OPTIMIZER_CHOICES = ("sgd", "rmsprop", "adam", "nadam")
ENCODING_CHOICES = ("multi-hot", "polarity-weighted")

# early-stop training targets per scenario
SCENARIO_TARGET = {1: 0.88, 2: 0.8795, 3: 0.89, 4: 0.89}
# verdict threshold = weakest reported accuracy minus a 0.5-point allowance
SCENARIO_VERDICT = {
    1: (0.8758, "88.08"),
    2: (0.8745, "87.95"),
    3: (0.8852, "89.02"),
    4: (0.9106, "91.56"),
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this surface reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f'error=usage detail="{message}"', file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _env(flag: str, fallback=None):
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"), fallback)


def _apply_threads(count: int) -> None:
    """Pin BLAS pools before numpy initializes; 0 leaves the environment alone."""
    if count and count > 0:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
            "VECLIB_MAXIMUM_THREADS",
        ):
            os.environ[var] = str(count)


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"--hidden expects comma-separated integers, got {text!r}")
    if not widths:
        raise ValueError("--hidden needs at least the final width-1 layer")
    return widths


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hidden", default=_env("hidden", "16,8,1"),
                   help="comma-separated layer widths ending in 1 (default 16,8,1)")
    p.add_argument("--activation", choices=("none", "relu"),
                   default=_env("activation", "none"))
    p.add_argument("--l2", type=float, default=_env("l2", "0.019"),
                   help="L2 regularization weight")
    p.add_argument("--dropout", type=float, default=_env("dropout", "0.2"))
    p.add_argument("--delta", type=float, default=_env("delta", "0.5"),
                   help="decision threshold on the output probability")
    p.add_argument("--optimizer", choices=OPTIMIZER_CHOICES,
                   default=_env("optimizer", "nadam"))
    p.add_argument("--lr", type=float, default=_env("lr", "0.001"))
    p.add_argument("--beta1", type=float, default=_env("beta1", "0.9"))
    p.add_argument("--beta2", type=float, default=_env("beta2", "0.999"))
    p.add_argument("--rms-decay", type=float, default=_env("rms-decay", "0.9"))
    p.add_argument("--epsilon", type=float, default=_env("epsilon", "1e-7"))
    p.add_argument("--batch-size", type=int, default=_env("batch-size", "512"))
    p.add_argument("--epochs", type=int, default=_env("epochs", "20"))
    p.add_argument("--target-acc", type=float, default=_env("target-acc"),
                   help="stop at the first epoch whose validation accuracy reaches this")
    p.add_argument("--seed", type=int, default=_env("seed", "0"),
                   help="master seed; init/shuffle/dropout streams derive from it")
    _add_exec_flags(p)


def _add_exec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=_env("threads", "1"),
                   help="BLAS thread count; 1 is fully deterministic, 0 leaves it unset")


def _resolve_run_config(args) -> dict:
    from .rngseed import mix_seed

    hidden = _parse_hidden(args.hidden)
    return {
        "hidden": list(hidden),
        "activation": args.activation,
        "l2": args.l2,
        "dropout": args.dropout,
        "delta": args.delta,
        "optimizer": args.optimizer,
        "lr": args.lr,
        "beta1": args.beta1,
        "beta2": args.beta2,
        "rms_decay": args.rms_decay,
        "epsilon": args.epsilon,
        "batch_size": args.batch_size,
        "epochs": args.epochs,
        "target_acc": args.target_acc,
        "seed": args.seed,
        "init_seed": mix_seed(args.seed, 1),
        "data_seed": mix_seed(args.seed, 2),
        "dropout_seed": mix_seed(args.seed, 3),
        "threads": args.threads,
    }


def _build_model_and_train(cfg: dict, width: int, train_set, val_set):
    from .net import ModelConfig, init_model
    from .optim import OptimizerSpec
    from .train import TrainConfig, train

    model_cfg = ModelConfig(
        input_width=width,
        hidden_widths=tuple(cfg["hidden"]),
        activation=cfg["activation"],
        dropout_rate=cfg["dropout"],
        l2_weight=cfg["l2"],
        discriminator=cfg["delta"],
        init_seed=cfg["init_seed"],
    )
    spec = OptimizerSpec(
        kind=cfg["optimizer"],
        learning_rate=cfg["lr"],
        beta1=cfg["beta1"],
        beta2=cfg["beta2"],
        rms_decay=cfg["rms_decay"],
        epsilon=cfg["epsilon"],
    )
    train_cfg = TrainConfig(
        optimizer=spec,
        batch_size=cfg["batch_size"],
        max_epochs=cfg["epochs"],
        target_accuracy=cfg["target_acc"],
        data_seed=cfg["data_seed"],
        dropout_seed=cfg["dropout_seed"],
    )
    model = init_model(model_cfg)
    return train(model, train_set, val_set, train_cfg)


def _need(path: Path, hint: str) -> Path:
    if not path.exists():
        raise DataError(f"{path}: not found; {hint}")
    return path


def _write_manifest(path: Path, command: str, cfg: dict, artifacts: dict) -> None:
    body = {"command": command, "config": cfg, "artifacts": artifacts}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_slmrd_dir(data_dir: Path):
    from .corpus import load_corpus_file, load_polarity, load_vocab_file

    base = data_dir / "slmrd"
    hint = "run `bowtie prepare slmrd` first"
    vocab = load_vocab_file(_need(base / "vocab.txt", hint))
    polarity = load_polarity(_need(base / "polarity.txt", hint), vocab)
    train_c = load_corpus_file(
        _need(base / "train.corpus", hint),
        vocab_id=vocab.fingerprint(), split="train", width=vocab.size,
    )
    test_c = load_corpus_file(
        _need(base / "test.corpus", hint),
        vocab_id=vocab.fingerprint(), split="test", width=vocab.size,
    )
    return vocab, polarity, train_c, test_c


def _load_kid_dir(data_dir: Path):
    from .corpus import load_corpus_file, load_vocab_file

    base = data_dir / "kid"
    hint = "run `bowtie prepare kid` first"
    vocab = load_vocab_file(_need(base / "vocab.txt", hint))
    corpus = load_corpus_file(
        _need(base / "full.corpus", hint),
        vocab_id=vocab.fingerprint(), split="full", width=vocab.size,
    )
    return vocab, corpus


def _split_halves(corpus, seed: int):
    from .corpus import Corpus, shuffle

    mixed = shuffle(corpus, seed)
    half = len(mixed.bags) // 2
    train_c = Corpus(mixed.bags[:half], vocab_id=mixed.vocab_id, split="train")
    val_c = Corpus(mixed.bags[half:], vocab_id=mixed.vocab_id, split="test")
    return train_c, val_c


def _run_scenario(cfg: dict, out: Path) -> int:
    from .encode import MULTI_HOT, POLARITY_WEIGHTED, encode_corpus
    from .train import emit_metrics_csv, load_checkpoint, save_checkpoint
    from .transfer import transfer_evaluate, write_transfer_report

    n = cfg["scenario"]
    data_dir = Path(cfg["data_dir"])
    out.mkdir(parents=True, exist_ok=True)

    kid_vocab = kid_corpus = None
    if n == 1:
        kid_vocab, kid_corpus = _load_kid_dir(data_dir)
        vocab, polarity = kid_vocab, None
        train_c, val_c = _split_halves(kid_corpus, cfg["data_seed"])
        encoding = MULTI_HOT
    else:
        vocab, polarity, train_c, val_c = _load_slmrd_dir(data_dir)
        encoding = MULTI_HOT if n == 2 else POLARITY_WEIGHTED
        if n == 4:
            kid_vocab, kid_corpus = _load_kid_dir(data_dir)

    train_set = encode_corpus(train_c, encoding, polarity=polarity, width=vocab.size)
    val_set = encode_corpus(val_c, encoding, polarity=polarity, width=vocab.size)
    model, metrics = _build_model_and_train(cfg, vocab.size, train_set, val_set)

    csv_path = out / "metrics.csv"
    ckpt_path = out / "model.ckpt"
    manifest_path = out / "manifest.json"
    report_path = out / "report.txt" if n == 4 else None
    emit_metrics_csv(metrics, str(csv_path))
    save_checkpoint(
        str(ckpt_path), model, vocab.size, vocab.fingerprint(), encoding,
        provenance={
            "command": "scenario",
            "scenario": n,
            "optimizer": cfg["optimizer"],
            "seed": cfg["seed"],
            "init_seed": cfg["init_seed"],
            "data_seed": cfg["data_seed"],
            "dropout_seed": cfg["dropout_seed"],
            "epochs_run": len(metrics),
        },
    )
    _write_manifest(
        manifest_path, "scenario", cfg,
        {
            "checkpoint": str(ckpt_path),
            "metrics_csv": str(csv_path),
            "report": str(report_path) if report_path else None,
            "manifest": str(manifest_path),
        },
    )

    if n == 4:
        report = transfer_evaluate(
            load_checkpoint(str(ckpt_path)),
            kid_corpus, kid_vocab, vocab, polarity=polarity,
            batch_size=cfg["batch_size"],
        )
        write_transfer_report(report, str(report_path))
        value = report.result.accuracy
        metric = "transfer_accuracy"
    else:
        value = metrics[-1].val_accuracy if metrics else float("nan")
        metric = "val_accuracy"

    threshold, weakest = SCENARIO_VERDICT[n]
    passed = value >= threshold
    print(f"metrics_csv={csv_path}")
    print(f"checkpoint={ckpt_path}")
    if report_path:
        print(f"report={report_path}")
    print(f"manifest={manifest_path}")
    print(
        f"scenario={n} verdict={'PASS' if passed else 'FAIL'} metric={metric}"
        f" value={value:.6f} threshold={threshold:.4f}"
        f' basis="weakest reported {weakest}% minus 0.5pt allowance"'
    )
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_scenario(args) -> int:
    cfg = _resolve_run_config(args)
    cfg["scenario"] = args.number
    cfg["data_dir"] = str(Path(args.data_dir).resolve())
    if cfg["target_acc"] is None:
        cfg["target_acc"] = SCENARIO_TARGET[args.number]
    out = Path(args.out) if args.out else Path(f"runs/scenario-{args.number}")
    return _run_scenario(cfg, out)


def _run_train(cfg: dict, out: Path) -> int:
    from .corpus import load_corpus_file, load_polarity, load_vocab_file
    from .encode import POLARITY_WEIGHTED, encode_corpus
    from .train import emit_metrics_csv, save_checkpoint

    out.mkdir(parents=True, exist_ok=True)
    vocab = load_vocab_file(cfg["vocab"])
    polarity = None
    if cfg["encoding"] == POLARITY_WEIGHTED:
        if not cfg["polarity"]:
            raise DataError("--polarity is required for the polarity-weighted encoding")
        polarity = load_polarity(cfg["polarity"], vocab)
    train_c = load_corpus_file(
        cfg["train_corpus"], vocab_id=vocab.fingerprint(),
        split="train", width=vocab.size,
    )
    val_set = None
    if cfg["val_corpus"]:
        val_c = load_corpus_file(
            cfg["val_corpus"], vocab_id=vocab.fingerprint(),
            split="test", width=vocab.size,
        )
        val_set = encode_corpus(val_c, cfg["encoding"], polarity=polarity, width=vocab.size)
    train_set = encode_corpus(train_c, cfg["encoding"], polarity=polarity, width=vocab.size)
    model, metrics = _build_model_and_train(cfg, vocab.size, train_set, val_set)

    csv_path = out / "metrics.csv"
    ckpt_path = out / "model.ckpt"
    manifest_path = out / "manifest.json"
    emit_metrics_csv(metrics, str(csv_path))
    save_checkpoint(
        str(ckpt_path), model, vocab.size, vocab.fingerprint(), cfg["encoding"],
        provenance={
            "command": "train",
            "optimizer": cfg["optimizer"],
            "seed": cfg["seed"],
            "init_seed": cfg["init_seed"],
            "data_seed": cfg["data_seed"],
            "dropout_seed": cfg["dropout_seed"],
            "epochs_run": len(metrics),
        },
    )
    _write_manifest(
        manifest_path, "train", cfg,
        {
            "checkpoint": str(ckpt_path),
            "metrics_csv": str(csv_path),
            "report": None,
            "manifest": str(manifest_path),
        },
    )
    last = metrics[-1] if metrics else None
    print(f"metrics_csv={csv_path}")
    print(f"checkpoint={ckpt_path}")
    print(f"manifest={manifest_path}")
    print(
        f"epochs_run={len(metrics)}"
        f" val_accuracy={last.val_accuracy if last else float('nan'):.6f}"
        f" val_bce={last.val_bce if last else float('nan'):.6f}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    if not args.train_corpus or not args.vocab:
        raise ValueError("train requires --train-corpus and --vocab")
    cfg = _resolve_run_config(args)
    cfg["train_corpus"] = str(Path(args.train_corpus).resolve())
    cfg["val_corpus"] = str(Path(args.val_corpus).resolve()) if args.val_corpus else None
    cfg["vocab"] = str(Path(args.vocab).resolve())
    cfg["polarity"] = str(Path(args.polarity).resolve()) if args.polarity else None
    cfg["encoding"] = args.encoding
    out = Path(args.out) if args.out else Path("runs/train")
    return _run_train(cfg, out)


def cmd_eval(args) -> int:
    from .corpus import load_corpus_file, load_polarity, load_vocab_file
    from .encode import POLARITY_WEIGHTED, encode_corpus
    from .train import check_fingerprint, evaluate, load_checkpoint

    if not args.checkpoint or not args.corpus or not args.vocab:
        raise ValueError("eval requires --checkpoint, --corpus, and --vocab")
    ckpt = load_checkpoint(args.checkpoint)
    vocab = load_vocab_file(args.vocab)
    check_fingerprint(ckpt, vocab.size, vocab.fingerprint())
    polarity = None
    if ckpt.encoding == POLARITY_WEIGHTED:
        if not args.polarity:
            raise DataError(
                "checkpoint uses the polarity-weighted encoding; --polarity is required"
            )
        polarity = load_polarity(args.polarity, vocab)
    corpus = load_corpus_file(args.corpus, vocab_id=vocab.fingerprint(), width=vocab.size)
    dataset = encode_corpus(corpus, ckpt.encoding, polarity=polarity, width=vocab.size)
    result = evaluate(ckpt.model, dataset, batch_size=args.batch_size)
    print(
        f"examples={result.count} accuracy={result.accuracy:.6f} bce={result.bce:.6f}"
    )
    return EXIT_OK


def cmd_transfer(args) -> int:
    from .corpus import load_corpus_file, load_polarity, load_vocab_file
    from .encode import POLARITY_WEIGHTED
    from .train import load_checkpoint
    from .transfer import transfer_evaluate, write_transfer_report

    needed = (args.checkpoint, args.source_corpus, args.source_vocab, args.target_vocab)
    if not all(needed):
        raise ValueError(
            "transfer requires --checkpoint, --source-corpus, "
            "--source-vocab, and --target-vocab"
        )
    ckpt = load_checkpoint(args.checkpoint)
    source_vocab = load_vocab_file(args.source_vocab)
    target_vocab = load_vocab_file(args.target_vocab)
    polarity = None
    if ckpt.encoding == POLARITY_WEIGHTED:
        if not args.polarity:
            raise DataError(
                "checkpoint uses the polarity-weighted encoding; --polarity is required"
            )
        polarity = load_polarity(args.polarity, target_vocab)
    corpus = load_corpus_file(
        args.source_corpus, vocab_id=source_vocab.fingerprint(),
        split="full", width=source_vocab.size,
    )
    report = transfer_evaluate(
        ckpt, corpus, source_vocab, target_vocab,
        polarity=polarity, batch_size=args.batch_size,
    )
    if args.report:
        write_transfer_report(report, args.report)
        print(f"report={args.report}")
    print(
        f"mapped={report.mapped_count} dropped={len(report.dropped)}"
        f" examples={report.result.count}"
        f" accuracy={report.result.accuracy:.6f} bce={report.result.bce:.6f}"
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    from .corpus import load_corpus_file, load_polarity, load_vocab_file
    from .encode import POLARITY_WEIGHTED, encode_corpus, polarity_stats

    if not args.corpus or not args.vocab:
        raise ValueError("stats requires --corpus and --vocab")
    vocab = load_vocab_file(args.vocab)
    polarity = None
    if args.encoding == POLARITY_WEIGHTED:
        if not args.polarity:
            raise DataError("stats on the polarity-weighted encoding needs --polarity")
        polarity = load_polarity(args.polarity, vocab)
    corpus = load_corpus_file(args.corpus, vocab_id=vocab.fingerprint(), width=vocab.size)
    dataset = encode_corpus(corpus, args.encoding, polarity=polarity, width=vocab.size)
    s = polarity_stats(dataset)
    print(
        f"encoding={args.encoding} examples={len(dataset)}"
        f" element_min={s.element_min:.9g} element_max={s.element_max:.9g}"
        f" rowsum_min={s.rowsum_min:.9g} rowsum_max={s.rowsum_max:.9g}"
    )
    return EXIT_OK


def cmd_prepare(args) -> int:
    from .corpus import (
        load_kid,
        load_polarity,
        load_slmrd_bow,
        load_slmrd_vocab,
        save_corpus_file,
    )

    if not args.out:
        raise ValueError("prepare requires --out")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.dataset == "slmrd":
        if not args.input:
            raise ValueError("prepare slmrd requires --input (the distribution directory)")
        base = Path(args.input)
        hint = (
            "expected the SLMRD layout: imdb.vocab, imdbEr.txt, "
            "train/labeledBow.feat, test/labeledBow.feat"
        )
        vocab = load_slmrd_vocab(_need(base / "imdb.vocab", hint))
        polarity = load_polarity(_need(base / "imdbEr.txt", hint), vocab)
        (out / "vocab.txt").write_text(
            "\n".join(vocab.tokens) + "\n", encoding="utf-8"
        )
        with open(out / "polarity.txt", "w", encoding="utf-8", newline="\n") as fh:
            for rating in polarity.ratings:
                fh.write(f"{float(rating)!r}\n")
        print(f"dataset=slmrd vocab={vocab.size}")
        for split in ("train", "test"):
            corpus = load_slmrd_bow(
                _need(base / split / "labeledBow.feat", hint), vocab, split=split
            )
            save_corpus_file(corpus, out / f"{split}.corpus")
            neg, pos = corpus.label_counts()
            print(f"split={split} reviews={len(corpus)} negative={neg} positive={pos}")
        return EXIT_OK

    if not args.word_index or not args.sequences:
        raise ValueError("prepare kid requires --word-index and --sequences")
    vocab, corpus = load_kid(args.word_index, args.sequences, args.index_offset)
    (out / "vocab.txt").write_text("\n".join(vocab.tokens) + "\n", encoding="utf-8")
    save_corpus_file(corpus, out / "full.corpus")
    neg, pos = corpus.label_counts()
    print(
        f"dataset=kid vocab={vocab.size} reviews={len(corpus)}"
        f" negative={neg} positive={pos}"
    )
    return EXIT_OK


def _metrics_rows(path: Path) -> list[list[str]]:
    """CSV rows with the wall-time column removed (timings never replay)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        try:
            drop = header.index("seconds")
        except ValueError:
            drop = -1
        for line in fh:
            cells = line.rstrip("\n").split(",")
            if drop >= 0:
                del cells[drop]
            rows.append(cells)
    return rows


def cmd_replay(args) -> int:
    if not args.manifest:
        raise ValueError("replay requires --manifest")
    manifest_path = Path(args.manifest)
    try:
        body = json.loads(manifest_path.read_text(encoding="utf-8"))
        command = body["command"]
        cfg = body["config"]
        artifacts = body["artifacts"]
    except OSError as exc:
        raise DataError(f"cannot read {manifest_path}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{manifest_path}: malformed manifest: {exc}") from exc

    _apply_threads(int(cfg.get("threads", 1)))
    out = Path(args.out) if args.out else manifest_path.parent / "replay"
    if command == "scenario":
        code = _run_scenario(cfg, out)
    elif command == "train":
        code = _run_train(cfg, out)
    else:
        raise DataError(f"{manifest_path}: cannot replay command {command!r}")

    original = Path(artifacts["metrics_csv"])
    if not original.exists():
        print("replay_match=unknown (original metrics file is gone)")
        return code
    match = _metrics_rows(original) == _metrics_rows(out / "metrics.csv")
    print(f"replay_match={1 if match else 0}")
    if not match:
        return EXIT_VERDICT
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bowtie",
        description="Train and evaluate the BowTie sentiment classifier.",
        epilog=(
            "Any flag may be supplied via the environment as BOWTIE_<FLAG> "
            "(uppercase, dashes to underscores); explicit flags win."
        ),
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("prepare", help="convert a raw distribution to canonical files")
    p.add_argument("dataset", choices=("slmrd", "kid"))
    p.add_argument("--input", default=_env("input"),
                   help="SLMRD distribution directory")
    p.add_argument("--word-index", default=_env("word-index"),
                   help="KID token-to-rank JSON file")
    p.add_argument("--sequences", default=_env("sequences"),
                   help="KID labeled integer-sequence file")
    p.add_argument("--index-offset", type=int, default=_env("index-offset", "3"),
                   help="reserved control codes below this sequence value")
    p.add_argument("--out", default=_env("out"))
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("scenario", help="run one of the four benchmark scenarios")
    p.add_argument("number", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--data-dir", default=_env("data-dir", "data"),
                   help="directory holding prepared slmrd/ and kid/ subdirectories")
    p.add_argument("--out", default=_env("out"),
                   help="artifact directory (default runs/scenario-N)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("train", help="train on explicit corpus files")
    p.add_argument("--train-corpus", default=_env("train-corpus"))
    p.add_argument("--val-corpus", default=_env("val-corpus"))
    p.add_argument("--vocab", default=_env("vocab"))
    p.add_argument("--polarity", default=_env("polarity"))
    p.add_argument("--encoding", choices=ENCODING_CHOICES,
                   default=_env("encoding", "multi-hot"))
    p.add_argument("--out", default=_env("out"))
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--checkpoint", default=_env("checkpoint"))
    p.add_argument("--corpus", default=_env("corpus"))
    p.add_argument("--vocab", default=_env("vocab"))
    p.add_argument("--polarity", default=_env("polarity"))
    p.add_argument("--batch-size", type=int, default=_env("batch-size", "512"))
    _add_exec_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transfer", help="score a checkpoint on a foreign-vocabulary corpus")
    p.add_argument("--checkpoint", default=_env("checkpoint"))
    p.add_argument("--source-corpus", default=_env("source-corpus"))
    p.add_argument("--source-vocab", default=_env("source-vocab"))
    p.add_argument("--target-vocab", default=_env("target-vocab"))
    p.add_argument("--polarity", default=_env("polarity"),
                   help="polarity table over the target vocabulary")
    p.add_argument("--report", default=_env("report"), help="report file to write")
    p.add_argument("--batch-size", type=int, default=_env("batch-size", "512"))
    _add_exec_flags(p)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("stats", help="print encoding value ranges for a corpus")
    p.add_argument("--corpus", default=_env("corpus"))
    p.add_argument("--vocab", default=_env("vocab"))
    p.add_argument("--polarity", default=_env("polarity"))
    p.add_argument("--encoding", choices=ENCODING_CHOICES,
                   default=_env("encoding", "polarity-weighted"))
    _add_exec_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("replay", help="re-run a recorded manifest and compare metrics")
    p.add_argument("--manifest", default=_env("manifest"))
    p.add_argument("--out", default=_env("out"),
                   help="artifact directory (default: replay/ beside the manifest)")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.error("a command is required")
    _apply_threads(getattr(args, "threads", 0))
    try:
        return args.func(args)
    except (DivergenceError, NonConvergenceError) as exc:
        print(f'error=divergence detail="{exc}"', file=sys.stderr)
        return EXIT_DIVERGED
    except DataError as exc:
        print(f'error=data detail="{exc}"', file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f'error=data detail="{exc}"', file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f'error=usage detail="{exc}"', file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
