"""Command-line pipeline: synth | train | eval | report | selftest."""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fixtures
from .config import SYNTH_TASKS, RunConfig, load_config
from .corpus import build_vocab, context_windows, load_word_vectors, parse_corpus, parse_threads
from .errors import ConfigError, DiscoprobeError
from .evaluation import (
    CONSTRUCTION_WIDTH,
    TASK_CONSTRUCTION,
    EncoderSource,
    EvalResult,
    default_probe_spec,
    evaluate_task,
    load_embedding_cache,
    write_report,
)
from .nn import EncoderConfig, EncoderParams, load_checkpoint
from .tasks import (
    adapt_pdtb,
    adapt_rst,
    bso_label_space,
    dc_label_space,
    deserialize_dataset,
    parse_pdtb_records,
    parse_rst_records,
    serialize_dataset,
    sp_label_space,
    ssp_label_space,
    synth_bso,
    synth_dc_docs,
    synth_dc_threads,
    synth_sp,
    synth_ssp,
)
from .training import LossConfig, train_epoch
from .util import write_atomic

RESULT_FIELDS = ("task", "domain", "dev_accuracy", "test_accuracy", "l2", "seed", "feature_dim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discoprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="TOML config file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--profile", choices=("desk", "paper"), default=None)

    p = sub.add_parser("synth", help="generate probing datasets")
    common(p)
    p.add_argument("--corpus", type=Path, default=None, help="document corpus (JSONL)")
    p.add_argument("--task", default=None, help="comma-separated tasks or 'all'")
    p.add_argument("--counts", default=None, help="train,dev,test instance counts")
    p.add_argument("--sp-any-window", action="store_true", help="admit every 5-sentence window")
    p.add_argument("--threads", type=Path, default=None, help="thread corpus for dc-threads")
    p.add_argument("--pdtb", type=Path, default=None, help="PDTB-style fixture (JSONL)")
    p.add_argument("--rst", type=Path, default=None, help="discourse-tree fixture (JSONL)")
    p.add_argument("--rst-dev-docs", default="", help="comma-separated dev document ids")
    p.add_argument("--rst-label-mode", choices=("relation", "nuclearity_relation"), default=None)

    p = sub.add_parser("train", help="train the multitask sentence encoder")
    common(p)
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument("--vectors", type=Path, default=None, help="pretrained word vectors")
    p.add_argument("--losses", default=None, help="comma-separated subset of nsp,nl,spp,sdt")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--min-count", type=int, default=1, help="vocabulary frequency threshold")

    p = sub.add_parser("eval", help="probe a frozen encoder on datasets")
    common(p)
    p.add_argument("--data", type=Path, default=None, help="directory with dataset TSVs")
    p.add_argument("--task", default="all", help="comma-separated tasks or 'all'")
    p.add_argument("--embeddings", type=Path, default=None, help="precomputed embedding cache")
    p.add_argument("--checkpoint", type=Path, default=None, help="trained encoder checkpoint")
    p.add_argument("--sp-construction", choices=("sp5", "sp1"), default="sp5")

    p = sub.add_parser("report", help="aggregate evaluation results into a report")
    common(p)
    p.add_argument("--results", type=Path, required=True, help="eval_results.csv")

    p = sub.add_parser("selftest", help="gradient and determinism checks")
    common(p)
    return parser


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "out", None) is not None:
        out["out_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    if getattr(args, "profile", None) is not None:
        out["profile"] = args.profile
    if getattr(args, "corpus", None) is not None:
        out["corpus_path"] = args.corpus
    if getattr(args, "vectors", None) is not None:
        out["vectors_path"] = args.vectors
    if getattr(args, "counts", None):
        out["counts"] = [int(c) for c in args.counts.split(",")]
    if getattr(args, "task", None) and args.task != "all":
        out["tasks"] = args.task.split(",")
    if getattr(args, "losses", None):
        out["losses"] = args.losses.split(",")
    if getattr(args, "batch_size", None) is not None:
        out["batch_size"] = args.batch_size
    if getattr(args, "rst_label_mode", None) is not None:
        out["rst_label_mode"] = args.rst_label_mode
    return out


def _load_docs(cfg: RunConfig):
    if cfg.corpus_path is None:
        raise ConfigError("a corpus path is required (--corpus or corpus_path)")
    with open(cfg.corpus_path, "r", encoding="utf-8") as handle:
        return parse_corpus(handle)


def cmd_synth(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    print(cfg.echo())
    tasks = list(cfg.tasks) if args.task != "all" else list(SYNTH_TASKS)
    docs = None
    wrote = []
    for task in tasks:
        if task in ("sp", "bso", "dc", "ssp"):
            if docs is None:
                docs = _load_docs(cfg)
        if task == "sp":
            split = synth_sp(docs, cfg.seed, cfg.counts, any_window=args.sp_any_window)
            labels = sp_label_space()
        elif task == "bso":
            split = synth_bso(docs, cfg.seed, cfg.counts)
            labels = bso_label_space()
        elif task == "dc":
            split = synth_dc_docs(docs, cfg.seed, cfg.counts, cfg.dc_candidate_pool)
            labels = dc_label_space()
        elif task == "ssp":
            split = synth_ssp(docs, cfg.seed, cfg.counts)
            labels = ssp_label_space()
        elif task == "dc-threads":
            if args.threads is None:
                raise ConfigError("dc-threads requires --threads")
            with open(args.threads, "r", encoding="utf-8") as handle:
                threads = parse_threads(handle)
            split = synth_dc_threads(threads, cfg.seed, cfg.counts)
            labels = dc_label_space("dc-threads")
        elif task in ("pdtb-e", "pdtb-i"):
            if args.pdtb is None:
                raise ConfigError(f"{task} requires --pdtb")
            with open(args.pdtb, "r", encoding="utf-8") as handle:
                result = adapt_pdtb(parse_pdtb_records(handle))
            split, labels = (
                (result.explicit, result.explicit_labels)
                if task == "pdtb-e"
                else (result.implicit, result.implicit_labels)
            )
        elif task == "rst":
            if args.rst is None:
                raise ConfigError("rst requires --rst")
            with open(args.rst, "r", encoding="utf-8") as handle:
                records = parse_rst_records(handle)
            dev_docs = [d for d in args.rst_dev_docs.split(",") if d]
            split, labels = adapt_rst(records, dev_docs, cfg.rst_label_mode)
        else:
            raise ConfigError(f"unknown task {task!r}")
        paths = serialize_dataset(split, labels, cfg.out_dir)
        wrote.extend(paths.values())
        print(f"synth {task}: sizes {split.sizes()}, {len(labels.names)} labels")
    for path in wrote:
        print(f"wrote {path}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    print(cfg.echo())
    docs = _load_docs(cfg)
    vocab = build_vocab(docs, min_count=args.min_count)
    contexts = [ctx for doc in docs for ctx in context_windows(doc)]
    encoder_config = EncoderConfig(
        vocab_size=len(vocab),
        word_dim=cfg.word_dim,
        hidden_dim=cfg.hidden_dim,
        spp_caps=cfg.spp_caps,
    )
    params = EncoderParams.init(encoder_config, seed=cfg.seed, vocab=vocab)
    if cfg.vectors_path is not None:
        table, coverage = load_word_vectors(cfg.vectors_path, vocab, cfg.word_dim, seed=cfg.seed)
        params.embedding = table
        print(f"word vectors: {coverage}/{len(vocab)} tokens covered")
    loss_config = LossConfig(
        losses=tuple(cfg.losses),
        weights=dict(cfg.loss_weights),
        spp_caps=cfg.spp_caps,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        lr=args.lr,
    )
    checkpoint = Path(cfg.out_dir) / "encoder.ckpt"
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    params, log = train_epoch(contexts, loss_config, params, checkpoint_path=checkpoint)
    write_atomic(Path(cfg.out_dir) / "trainlog.jsonl", log.to_jsonl())
    print(
        f"trained on {log.summaries['examples']} contexts in {log.summaries['steps']} steps; "
        f"final losses {log.summaries['final_losses']}"
    )
    print(f"wrote {checkpoint}")
    return 0


def _discover_tasks(data_dir: Path) -> list[str]:
    return [t for t in SYNTH_TASKS if (data_dir / f"{t}.train.tsv").exists()]


def cmd_eval(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    print(cfg.echo())
    data_dir = args.data if args.data is not None else cfg.out_dir
    if (args.embeddings is None) == (args.checkpoint is None):
        raise ConfigError("eval needs exactly one of --embeddings or --checkpoint")
    if args.embeddings is not None:
        source = load_embedding_cache(args.embeddings)
    else:
        source = EncoderSource(load_checkpoint(args.checkpoint))

    tasks = _discover_tasks(Path(data_dir)) if args.task == "all" else args.task.split(",")
    if not tasks:
        raise ConfigError(f"no dataset TSVs found under {data_dir}")
    results = []
    for task in tasks:
        split, labels = deserialize_dataset(data_dir, task)
        spec = default_probe_spec(task, labels.k, _feature_dim(task, source.dim), seed=cfg.seed)
        spec = replace(spec, l2_grid=cfg.probe_l2_grid)
        if task == "sp" and args.sp_construction != "sp5":
            spec = replace(spec, construction=args.sp_construction)
        result = evaluate_task(split, labels, source, seed=cfg.seed, spec=spec)
        results.append(result)
        print(
            f"eval {task}: dev {result.dev_accuracy:.3f} test {result.test_accuracy:.3f} "
            f"(l2 {result.l2}, dim {result.feature_dim})"
        )
    out_dir = Path(cfg.out_dir)
    write_atomic(out_dir / "eval_results.csv", _results_csv(results))
    csv_path, txt_path = write_report(results, out_dir)
    print(f"wrote {out_dir / 'eval_results.csv'}")
    print(f"wrote {csv_path}")
    print(f"wrote {txt_path}")
    return 0


def _feature_dim(task: str, dim: int) -> int:
    return CONSTRUCTION_WIDTH[TASK_CONSTRUCTION[task]] * dim


def _results_csv(results: list[EvalResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_FIELDS)
    for r in results:
        writer.writerow([r.task, r.domain, repr(r.dev_accuracy), repr(r.test_accuracy), repr(r.l2), r.seed, r.feature_dim])
    return buf.getvalue()


def _parse_results_csv(path: Path) -> list[EvalResult]:
    results = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            results.append(
                EvalResult(
                    task=row["task"],
                    domain=row["domain"],
                    dev_accuracy=float(row["dev_accuracy"]),
                    test_accuracy=float(row["test_accuracy"]),
                    l2=float(row["l2"]),
                    seed=int(row["seed"]),
                    feature_dim=int(row["feature_dim"]),
                )
            )
    return results


def cmd_report(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    results = _parse_results_csv(args.results)
    csv_path, txt_path = write_report(results, cfg.out_dir)
    print(f"wrote {csv_path}")
    print(f"wrote {txt_path}")
    return 0


def cmd_selftest(args) -> int:
    from .nn import grad_check
    from .training import nl_loss, nsp_loss, sdt_loss, spp_loss

    started = time.monotonic()
    docs = fixtures.fixture_corpus(12, seed=5)
    vocab = build_vocab(docs)
    ctx = context_windows(docs[0])[0]
    config = EncoderConfig(vocab_size=len(vocab), word_dim=6, hidden_dim=4, spp_caps=(8, 8))
    params = EncoderParams.init(config, seed=1, vocab=vocab).astype(np.float64)

    for name, fn in (("nsp", nsp_loss), ("nl", nl_loss), ("spp", spp_loss), ("sdt", sdt_loss)):
        if name == "spp":
            fn_ = lambda p: spp_loss(ctx, params.with_values(p), spp_caps=(8, 8))
        else:
            fn_ = lambda p, f=fn: f(ctx, params.with_values(p))
        err = grad_check(fn_, params.flatten(), max_coords_per_array=6)
        status = "ok" if err < 1e-3 else f"FAIL ({err:.2e})"
        print(f"selftest: grad check {name} loss: {status}")
        if err >= 1e-3:
            return 2

    # determinism: same corpus + seed twice must serialize identically
    split_a = synth_sp(docs, 7, (20, 8, 8), any_window=True)
    split_b = synth_sp(docs, 7, (20, 8, 8), any_window=True)
    same = all(a == b for a, b in zip(split_a.train, split_b.train))
    print(f"selftest: synthesis determinism: {'ok' if same else 'FAIL'}")
    if not same:
        return 2

    elapsed = time.monotonic() - started
    print(f"selftest: all checks passed in {elapsed:.1f}s")
    return 0


def run_cli(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    handlers = {
        "synth": cmd_synth,
        "train": cmd_train,
        "eval": cmd_eval,
        "report": cmd_report,
        "selftest": cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DiscoprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
