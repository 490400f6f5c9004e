"""Command-line entry point: ingest, train, tune, search, eval, gen-synthetic.

Machine output is line-delimited JSON on stdout; summary tables are
human-readable; errors go to stderr and produce a nonzero exit code.  Every
command is idempotent given identical inputs and seed.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

from . import classifier, evaluation, fusion, pipeline, synth
from .config import RunConfig, apply_overrides, load_config, write_config
from .corpus import (
    ApiMethod,
    Thread,
    candidate_set,
    find_potential_threads,
    load_api_db,
    load_corpus,
    load_labels,
    thread_to_normalized_record,
)
from .embedding import (
    EmbeddingProvider,
    ExternalProvider,
    HashProvider,
    MemoizedProvider,
    relevance_embeddings,
)
from .errors import IngestError, ModelFormatError, ProviderError, TrainingError
from .typescope import (
    candidate_scores,
    extract_mentions,
    extract_ptypes,
    scope_breakdown,
    thread_syntactic_score,
)

MODEL_FILENAME = "model.bin"
TUNED_CONFIG_FILENAME = "run.config"


class CliError(RuntimeError):
    pass


@contextlib.contextmanager
def _output_lock(out_dir: Path):
    """One process owns an output directory at a time, via a lock file."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise CliError(
            f"output directory {out_dir} is locked; remove {lock} if no other run is active"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _make_provider(cfg: RunConfig) -> EmbeddingProvider:
    if cfg.provider == "hash":
        return MemoizedProvider(HashProvider(seed=cfg.hash_seed))
    if cfg.provider.startswith("external:"):
        _, _, address = cfg.provider.partition(":")
        host, _, port = address.rpartition(":")
        if not host or not port.isdigit():
            raise CliError(f"provider address must be external:HOST:PORT, got {cfg.provider!r}")
        try:
            return MemoizedProvider(ExternalProvider(host, int(port)))
        except OSError as exc:
            raise CliError(f"cannot reach external encoder at {address}: {exc}") from None
    raise CliError(f"unknown provider {cfg.provider!r} (expected 'hash' or 'external:HOST:PORT')")


def _load_inputs(cfg: RunConfig) -> tuple[list[Thread], list[ApiMethod]]:
    for path in (cfg.corpus_path, cfg.api_db_path):
        if not path.exists():
            raise CliError(f"input file does not exist: {path}")
    try:
        threads = load_corpus(cfg.corpus_path)
    except IngestError as exc:
        raise CliError(f"{cfg.corpus_path}: {exc}") from None
    try:
        api_db = load_api_db(cfg.api_db_path)
    except IngestError as exc:
        raise CliError(f"{cfg.api_db_path}: {exc}") from None
    return threads, api_db


def _load_labels(cfg: RunConfig, threads: list[Thread], api_db: list[ApiMethod]):
    if cfg.labels_path is None:
        raise CliError("this command needs a labels file (config key 'labels')")
    if not cfg.labels_path.exists():
        raise CliError(f"labels file does not exist: {cfg.labels_path}")
    try:
        labels = load_labels(cfg.labels_path)
    except IngestError as exc:
        raise CliError(f"{cfg.labels_path}: {exc}") from None
    known_ids = {t.id for t in threads}
    known_fqns = {m.fqn for m in api_db}
    for tid, fqn in labels:
        if tid not in known_ids:
            raise CliError(f"label references unknown thread id {tid}")
        if fqn not in known_fqns:
            raise CliError(f"label references unknown API {fqn}")
    return labels


def _query_apis(labels, api_db: list[ApiMethod]) -> list[ApiMethod]:
    by_fqn = {m.fqn: m for m in api_db}
    return [by_fqn[f] for f in sorted({fqn for _, fqn in labels})]


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def _load_model(cfg: RunConfig):
    model_path = cfg.output_dir / MODEL_FILENAME
    if not model_path.exists():
        raise CliError(f"no trained model at {model_path}; run 'train' first")
    try:
        return classifier.load_model(model_path)
    except ModelFormatError as exc:
        raise CliError(f"{model_path}: {exc}") from None


def cmd_ingest(cfg: RunConfig) -> int:
    threads, api_db = _load_inputs(cfg)
    with _output_lock(cfg.output_dir):
        _write_jsonl(
            cfg.output_dir / "threads.norm.jsonl",
            (thread_to_normalized_record(t) for t in threads),
        )
        _write_jsonl(
            cfg.output_dir / "apis.norm.jsonl",
            ({"fqn": m.fqn, "comment": m.comment, "impl_code": m.impl_code} for m in api_db),
        )
    print(f"{len(threads)} threads ingested")
    print(f"{len(api_db)} api methods ingested")
    return 0


def _train_and_tune(cfg: RunConfig):
    threads, api_db = _load_inputs(cfg)
    labels = _load_labels(cfg, threads, api_db)
    apis = _query_apis(labels, api_db)
    train_threads, _ = evaluation.split_dataset(threads, cfg.seed)
    provider = _make_provider(cfg)

    x_data, y_data = pipeline.training_arrays(apis, train_threads, api_db, labels, provider)
    train_cfg = classifier.TrainConfig(
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        hidden_width=cfg.hidden_width,
        optimizer=cfg.optimizer,
    )
    result = classifier.train_arrays(x_data, y_data, train_cfg)

    scores = pipeline.pair_scores(apis, train_threads, api_db, provider, result.model)
    records = pipeline.tuning_records(scores, labels)
    tuned_x = fusion.tune_weighting_factor(records, cfg.grid, cfg.t)
    return result, tuned_x, len(y_data)


def cmd_train(cfg: RunConfig) -> int:
    result, tuned_x, n_examples = _train_and_tune(cfg)
    with _output_lock(cfg.output_dir):
        classifier.save_model(result.model, cfg.output_dir / MODEL_FILENAME)
        write_config(
            apply_overrides(cfg, x=tuned_x), cfg.output_dir / TUNED_CONFIG_FILENAME
        )
    losses = ", ".join(f"{l:.4f}" for l in result.epoch_losses)
    print(f"trained on {n_examples} embeddings; per-epoch loss: {losses}")
    print(f"tuned weighting factor x = {tuned_x}")
    return 0


def cmd_tune(cfg: RunConfig) -> int:
    threads, api_db = _load_inputs(cfg)
    labels = _load_labels(cfg, threads, api_db)
    apis = _query_apis(labels, api_db)
    train_threads, _ = evaluation.split_dataset(threads, cfg.seed)
    provider = _make_provider(cfg)
    model = _load_model(cfg)

    scores = pipeline.pair_scores(apis, train_threads, api_db, provider, model)
    records = pipeline.tuning_records(scores, labels)
    tuned_x = fusion.tune_weighting_factor(records, cfg.grid, cfg.t)
    with _output_lock(cfg.output_dir):
        write_config(apply_overrides(cfg, x=tuned_x), cfg.output_dir / TUNED_CONFIG_FILENAME)
    print(f"tuned weighting factor x = {tuned_x}")
    return 0


def _emit_debug_records(thread, api, candidates) -> None:
    """Per-scope score breakdowns plus per-candidate totals, as JSON lines."""
    mentions = extract_mentions(thread, api.simple_name)
    ptypes = extract_ptypes(thread.code_snippets)
    thread_text = "\n".join((*thread.paragraphs, *thread.tags))
    for idx, mention in enumerate(mentions):
        for cand in candidates:
            scopes = scope_breakdown(mention, ptypes, cand, thread_text, thread.code_snippets)
            record = {"thread_id": thread.id, "mention": idx, "candidate": cand.fqn, **scopes}
            print(json.dumps(record, sort_keys=True), file=sys.stderr)
    for cs in candidate_scores(thread, api.simple_name, candidates):
        record = {
            "thread_id": thread.id,
            "candidate": cs.candidate.fqn,
            "raw": cs.raw,
            "normalized": cs.normalized,
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _require_x(cfg: RunConfig) -> float:
    if cfg.x is not None:
        return cfg.x
    tuned = cfg.output_dir / TUNED_CONFIG_FILENAME
    if tuned.exists():
        tuned_x = load_config(tuned).x
        if tuned_x is not None:
            return tuned_x
    raise CliError("no weighting factor available; run 'train'/'tune' or pass --x")


def cmd_search(cfg: RunConfig, fqn: str, debug: bool = False) -> int:
    threads, api_db = _load_inputs(cfg)
    by_fqn = {m.fqn: m for m in api_db}
    if fqn not in by_fqn:
        raise CliError(f"unknown API {fqn!r}: not in the API database")
    api = by_fqn[fqn]
    model = _load_model(cfg)
    x = _require_x(cfg)
    provider = _make_provider(cfg)

    candidates = candidate_set(api, api_db)
    results = []
    for thread in find_potential_threads(api, threads):
        if debug:
            _emit_debug_records(thread, api, candidates)
        a = thread_syntactic_score(thread, api, candidates)
        b = classifier.thread_semantic_score(
            model, relevance_embeddings(thread, api, provider)
        )
        c = fusion.joint_score(a, b, x)
        results.append(
            {
                "thread_id": thread.id,
                "syntactic_score": a,
                "semantic_score": b,
                "joint_score": c,
                "relevant": fusion.classify_thread(c, cfg.t),
            }
        )
    results.sort(key=lambda r: (-r["joint_score"], r["thread_id"]))
    for record in results:
        print(json.dumps(record, sort_keys=True))
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    threads, api_db = _load_inputs(cfg)
    labels = _load_labels(cfg, threads, api_db)
    apis = _query_apis(labels, api_db)
    _, test_threads = evaluation.split_dataset(threads, cfg.seed)
    provider = _make_provider(cfg)
    model = _load_model(cfg)
    x = _require_x(cfg)

    scores = pipeline.pair_scores(apis, test_threads, api_db, provider, model)
    scores = {fqn: per_thread for fqn, per_thread in scores.items() if per_thread}
    truths = pipeline.truth_map(scores, labels)
    variants = [
        ("fused", x, "eval_fused.jsonl"),
        ("syntactic-only", 1.0, "eval_syntactic_only.jsonl"),
        ("semantic-only", 0.0, "eval_semantic_only.jsonl"),
    ]
    reports = {}
    with _output_lock(cfg.output_dir):
        for name, weight, filename in variants:
            report = evaluation.evaluate(pipeline.fused_predictions(scores, weight, cfg.t), truths)
            reports[name] = report
            _write_jsonl(cfg.output_dir / filename, evaluation.report_records(report))
    print(evaluation.format_report_table(reports["fused"], title=f"fused (x = {x})"))
    for name, _, _ in variants:
        print(f"avg F1 [{name}]: {reports[name].avg_f1:.4f}")
    return 0


def cmd_gen_synthetic(args) -> int:
    spec = synth.SynthSpec(
        n_apis=args.apis,
        n_threads_per_api=args.threads_per_api,
        ambiguity=args.ambiguity,
        syntactic_signal=args.syntactic_signal,
        semantic_signal=args.semantic_signal,
        seed=args.seed,
    )
    corpus_out = synth.generate(spec)
    out_dir = Path(args.out)
    with _output_lock(out_dir):
        _write_jsonl(out_dir / "threads.jsonl", corpus_out.thread_records)
        _write_jsonl(out_dir / "apis.jsonl", corpus_out.api_records)
        _write_jsonl(out_dir / "labels.jsonl", corpus_out.label_records)
        # paths are relative to the config file, which sits next to the data
        starter = RunConfig(
            corpus_path=Path("threads.jsonl"),
            api_db_path=Path("apis.jsonl"),
            labels_path=Path("labels.jsonl"),
            output_dir=Path("run"),
            seed=args.seed,
        )
        write_config(starter, out_dir / "run.config")
    print(f"{len(corpus_out.thread_records)} threads generated")
    print(f"{len(corpus_out.api_records)} api methods generated")
    print(f"{len(corpus_out.label_records)} labels generated")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apiscope",
        description="Find discussion threads that refer to a given Java API method.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--provider", default=None, help="hash or external:HOST:PORT")
        p.add_argument("--x", type=float, default=None, help="weighting factor override")
        p.add_argument("--t", type=float, default=None, help="relevance threshold override")
        p.add_argument("--out", default=None, help="output directory override")

    for name in ("ingest", "train", "tune", "eval"):
        add_config_args(sub.add_parser(name))
    search = sub.add_parser("search")
    add_config_args(search)
    search.add_argument("fqn", help="fully qualified API method name")
    search.add_argument("--debug", action="store_true", help="emit per-candidate score records")

    gen = sub.add_parser("gen-synthetic")
    gen.add_argument("--out", required=True)
    gen.add_argument("--apis", type=int, default=4)
    gen.add_argument("--threads-per-api", type=int, default=8)
    gen.add_argument("--ambiguity", type=int, default=1)
    gen.add_argument("--syntactic-signal", type=float, default=0.7)
    gen.add_argument("--semantic-signal", type=float, default=0.7)
    gen.add_argument("--seed", type=int, default=0)
    return parser


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config)
    return apply_overrides(
        cfg,
        seed=args.seed,
        provider=args.provider,
        x=args.x,
        t=args.t,
        output_dir=Path(args.out) if args.out else None,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen-synthetic":
            return cmd_gen_synthetic(args)
        cfg = _config_from_args(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "tune":
            return cmd_tune(cfg)
        if args.command == "search":
            return cmd_search(cfg, args.fqn, debug=args.debug)
        if args.command == "eval":
            return cmd_eval(cfg)
        raise CliError(f"unknown command {args.command!r}")
    except (CliError, IngestError, TrainingError, ProviderError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
