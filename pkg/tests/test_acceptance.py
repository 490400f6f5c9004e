"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v` (add -s to see the PASS lines).
Oracles here are written independently of the library code they check.
"""

import json
import random
import time
from fractions import Fraction

import numpy as np

from apiscope.classifier import TrainConfig, predict_batch, train_arrays, loss_and_gradients, MlpModel
from apiscope.corpus import ApiMethod, parse_thread_record, Thread
from apiscope.embedding import (
    CLS_TOKEN,
    EOS_TOKEN,
    SEP_TOKEN,
    HashProvider,
    MemoizedProvider,
    build_pair,
)
from apiscope.evaluation import ConfusionCounts, evaluate, prf1, split_dataset
from apiscope.fusion import DEFAULT_GRID, tune_weighting_factor
from apiscope.pipeline import (
    fused_predictions,
    pair_scores,
    training_arrays,
    truth_map,
    tuning_records,
)
from apiscope.synth import SynthSpec, generate
from apiscope.typescope import extract_mentions, extract_ptypes, score_candidate
from apiscope.cli import main as cli_main


def passed(name):
    print(f"[acceptance] {name}: PASS")


def materialize(corpus):
    threads = [parse_thread_record(json.dumps(r)) for r in corpus.thread_records]
    api_db = [ApiMethod(**r) for r in corpus.api_records]
    labels = {(r["thread_id"], r["api_fqn"]): r["relevant"] for r in corpus.label_records}
    return threads, api_db, labels


# --- criterion: Algorithm-1 oracle equivalence -------------------------------

def brute_force_tokens(text):
    tokens, current = [], []
    for ch in text:
        if ("a" <= ch <= "z") or ("A" <= ch <= "Z") or ("0" <= ch <= "9") or ch in "_$":
            current.append(ch)
        else:
            if current:
                tokens.append("".join(current))
                current = []
    if current:
        tokens.append("".join(current))
    return tokens


def brute_force_score(mention_prefix, ptype_names, candidate_fqn, thread_text, snippets):
    """Independent re-derivation of the four-scope candidate score."""
    candidate_type = candidate_fqn.split(".")[-2]
    score = 0
    if mention_prefix is not None and mention_prefix.split(".")[-1] == candidate_type:
        score += 1
    if candidate_type in brute_force_tokens(thread_text):
        score += 1
    if candidate_type in brute_force_tokens("\n".join(snippets)):
        score += 1
    for name in ptype_names:
        if name == candidate_type:
            score += 1
    return score


def random_mini_thread(rng, types, simple):
    fragments = [
        lambda t: f"{t}.{simple} ",
        lambda t: f"{t} value ",
        lambda t: f"call {simple} now ",
        lambda t: "plain words here ",
        lambda t: f"see {t.lower()}.{simple} too ",
    ]
    paragraphs = []
    for _ in range(rng.randint(1, 4)):
        parts = [rng.choice(fragments)(rng.choice(types)) for _ in range(rng.randint(1, 4))]
        paragraphs.append("".join(parts).strip())
    snippet_forms = [
        lambda t: f"import com.pool.{t};",
        lambda t: f"{t} v = make();\nv.{simple}(1);",
        lambda t: f"new {t}();",
        lambda t: f"{t}.{simple}(arg);",
        lambda t: f"helper({t});",
        lambda t: "int x = 0;",
    ]
    snippets = [
        "\n".join(rng.choice(snippet_forms)(rng.choice(types)) for _ in range(rng.randint(1, 3)))
        for _ in range(rng.randint(0, 3))
    ]
    title = paragraphs[0] if rng.random() < 0.5 else f"{simple} question"
    return Thread(
        id=rng.randint(1, 10_000),
        title=title,
        tags=tuple(rng.sample(["java", "testing", rng.choice(types)], k=rng.randint(0, 2))),
        paragraphs=(title, *paragraphs),
        code_snippets=tuple(snippets),
    )


def test_algorithm1_oracle_equivalence():
    started = time.monotonic()
    rng = random.Random(1234)
    types = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon"]
    simple = "runStep"
    threads_checked = comparisons = 0
    while threads_checked < 220:
        thread = random_mini_thread(rng, types, simple)
        k = rng.randint(1, 4)
        candidates = [
            ApiMethod(fqn=f"p{i}.q{i}.{t}.{simple}")
            for i, t in enumerate(rng.sample(types, k=k))
        ]
        mentions = extract_mentions(thread, simple)
        ptypes = extract_ptypes(thread.code_snippets)
        thread_text = "\n".join((*thread.paragraphs, *thread.tags))
        for mention in mentions:
            for candidate in candidates:
                got = score_candidate(mention, ptypes, candidate, thread_text, thread.code_snippets)
                want = brute_force_score(
                    mention.prefix,
                    [p.name for p in ptypes],
                    candidate.fqn,
                    thread_text,
                    thread.code_snippets,
                )
                assert got == want, (thread, mention, candidate.fqn, got, want)
                comparisons += 1
        threads_checked += 1
    elapsed = time.monotonic() - started
    assert threads_checked >= 200 and comparisons >= 200
    assert elapsed < 10.0, f"oracle equivalence took {elapsed:.1f}s"
    passed(f"Algorithm-1 oracle equivalence ({threads_checked} threads, {comparisons} comparisons)")


# --- criterion: metric correctness --------------------------------------------

def test_metric_correctness():
    rng = random.Random(77)
    tables = [(0, 0, 0), (0, 5, 0), (0, 0, 5), (4, 0, 0)]
    while len(tables) < 50:
        tables.append((rng.randint(0, 20), rng.randint(0, 20), rng.randint(0, 20)))
    for tp, fp, fn in tables:
        p, r, f1 = prf1(ConfusionCounts(tp=tp, fp=fp, fn=fn))
        want_p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        want_r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        want_f1 = (
            2 * want_p * want_r / (want_p + want_r) if want_p + want_r else Fraction(0)
        )
        assert abs(p - float(want_p)) <= 1e-9
        assert abs(r - float(want_r)) <= 1e-9
        assert abs(f1 - float(want_f1)) <= 1e-9

    # evaluate() against the same oracle on assembled prediction maps
    predictions, truths, per_api_f1 = {}, {}, []
    for i, (tp, fp, fn) in enumerate(tables[:10]):
        fqn = f"m{i}.pkg.T{i}.run"
        pred, truth, tid = {}, {}, 1
        for _ in range(tp):
            pred[tid], truth[tid] = True, True
            tid += 1
        for _ in range(fp):
            pred[tid], truth[tid] = True, False
            tid += 1
        for _ in range(fn):
            pred[tid], truth[tid] = False, True
            tid += 1
        pred[tid], truth[tid] = False, False  # one true negative each
        predictions[fqn], truths[fqn] = pred, truth
        want_p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        want_r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        per_api_f1.append(
            2 * want_p * want_r / (want_p + want_r) if want_p + want_r else Fraction(0)
        )
    report = evaluate(predictions, truths)
    assert abs(report.avg_f1 - float(sum(per_api_f1) / len(per_api_f1))) <= 1e-9
    passed("metric correctness (50 confusion tables, 1e-9)")


# --- shared synthetic pipeline helper ----------------------------------------

def quick_pipeline(spec, batch_size=8, hidden_width=128, epochs=6):
    threads, api_db, labels = materialize(generate(spec))
    apis = list(api_db)
    train_threads, test_threads = split_dataset(threads, spec.seed)
    provider = MemoizedProvider(HashProvider())
    x_data, y_data = training_arrays(apis, train_threads, api_db, labels, provider)
    model = train_arrays(
        x_data,
        y_data,
        TrainConfig(seed=spec.seed, batch_size=batch_size, hidden_width=hidden_width, epochs=epochs),
    ).model
    train_scores = pair_scores(apis, train_threads, api_db, provider, model)
    test_scores = pair_scores(apis, test_threads, api_db, provider, model)
    return labels, train_scores, test_scores


# --- criterion: fusion endpoints ----------------------------------------------

def test_fusion_endpoints():
    for seed in (0, 1, 2):
        spec = SynthSpec(n_apis=2, n_threads_per_api=6, ambiguity=1, seed=seed)
        _, train_scores, test_scores = quick_pipeline(spec, epochs=1, hidden_width=16)
        for scores in (train_scores, test_scores):
            relevant_x1 = {
                (fqn, tid)
                for fqn, per in fused_predictions(scores, 1.0, 0.5).items()
                for tid, rel in per.items()
                if rel
            }
            a_only = {
                (fqn, tid)
                for fqn, per in scores.items()
                for tid, (a, _) in per.items()
                if a > 0.5
            }
            assert relevant_x1 == a_only
            relevant_x0 = {
                (fqn, tid)
                for fqn, per in fused_predictions(scores, 0.0, 0.5).items()
                for tid, rel in per.items()
                if rel
            }
            b_only = {
                (fqn, tid)
                for fqn, per in scores.items()
                for tid, (_, b) in per.items()
                if b > 0.5
            }
            assert relevant_x0 == b_only
    passed("fusion endpoints (x=1 == A-only, x=0 == B-only, exact sets)")


# --- criterion: grid-search oracle ---------------------------------------------

def exact_macro_f1(records, x, t):
    """Fraction-exact macro-F1 recomputation, independent of the fusion module."""
    f1_total = Fraction(0)
    for rows in records.values():
        tp = fp = fn = 0
        for a, b, truth in rows:
            predicted = (x * a + (1 - x) * b) > t
            if predicted and truth:
                tp += 1
            elif predicted and not truth:
                fp += 1
            elif not predicted and truth:
                fn += 1
        p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        f1_total += 2 * p * r / (p + r) if p + r else Fraction(0)
    return f1_total / len(records)


def test_grid_search_oracle():
    corpora_checked = 0
    for seed in range(20):
        spec = SynthSpec(
            n_apis=2,
            n_threads_per_api=4,
            ambiguity=1,
            syntactic_signal=0.5 + 0.025 * seed,
            semantic_signal=0.7,
            seed=seed,
        )
        labels, train_scores, _ = quick_pipeline(spec, epochs=1, hidden_width=16, batch_size=64)
        records = tuning_records(train_scores, labels)
        chosen = tune_weighting_factor(records, DEFAULT_GRID, 0.5)
        oracle = {x: exact_macro_f1(records, x, 0.5) for x in DEFAULT_GRID}
        assert oracle[chosen] == max(oracle.values()), (seed, chosen, oracle)
        corpora_checked += 1
    assert corpora_checked >= 20
    passed(f"grid-search oracle ({corpora_checked} corpora, exact agreement)")


# --- criterion: classifier sanity ----------------------------------------------

def test_classifier_sanity():
    started = time.monotonic()
    rng = np.random.default_rng(21)
    dim, n = 1536, 4000
    offset = 4.0 / np.sqrt(dim)
    y = (rng.random(n) < 0.5).astype(float)
    x = rng.normal(0.0, 1.0, (n, dim)) + np.where(y[:, None] == 1.0, offset, -offset)
    cut = int(n * 0.7)

    result = train_arrays(x[:cut], y[:cut], TrainConfig(seed=3))  # 6 epochs, lr 1e-3
    losses = result.epoch_losses
    assert len(losses) == 6
    increases = sum(1 for i in range(1, 6) if losses[i] > losses[i - 1])
    assert 6 - increases >= 5, f"loss trace not mostly non-increasing: {losses}"

    probs = predict_batch(result.model, x[cut:])
    pred = probs > 0.5
    held = y[cut:]
    tp = int(np.sum(pred & (held == 1.0)))
    fp = int(np.sum(pred & (held == 0.0)))
    fn = int(np.sum(~pred & (held == 1.0)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    elapsed = time.monotonic() - started
    assert f1 >= 0.95, f"held-out F1 {f1:.4f}"
    assert elapsed < 60.0, f"classifier sanity took {elapsed:.1f}s"
    passed(f"classifier sanity (held-out F1 {f1:.4f}, losses {['%.4f' % l for l in losses]})")


# --- criterion: gradient check ---------------------------------------------------

def test_gradient_check():
    rng = np.random.default_rng(15)
    model = MlpModel(
        w1=rng.normal(0.0, 0.4, (24, 2)),
        b1=rng.normal(0.0, 0.4, 2),
        w2=rng.normal(0.0, 0.4, (2, 1)),
        b2=rng.normal(0.0, 0.4, 1),
        seed=0,
    )
    x = rng.normal(0.0, 1.0, (4, 24))
    y = np.array([1.0, 0.0, 1.0, 0.0])
    _, analytic = loss_and_gradients(model, x, y)
    eps = 1e-6
    worst = 0.0
    for name in ("w1", "b1", "w2", "b2"):
        param = getattr(model, name)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            keep = param[idx]
            param[idx] = keep + eps
            up, _ = loss_and_gradients(model, x, y)
            param[idx] = keep - eps
            down, _ = loss_and_gradients(model, x, y)
            param[idx] = keep
            numeric = (up - down) / (2 * eps)
            denom = max(abs(analytic[name][idx]), abs(numeric), 1e-8)
            rel = abs(analytic[name][idx] - numeric) / denom
            worst = max(worst, rel)
            assert rel <= 1e-4, f"{name}{idx}: rel err {rel:.2e}"
            it.iternext()
    passed(f"gradient check (worst relative error {worst:.2e})")


# --- criterion: qualitative-claim reproduction -----------------------------------

def test_qualitative_claim_reproduction():
    started = time.monotonic()
    spec = SynthSpec(
        n_apis=6,
        n_threads_per_api=20,
        ambiguity=1,
        syntactic_signal=0.7,
        semantic_signal=0.7,
        seed=20,
    )
    labels, train_scores, test_scores = quick_pipeline(spec, batch_size=8)
    tuned_x = tune_weighting_factor(tuning_records(train_scores, labels), DEFAULT_GRID, 0.5)
    truths = truth_map(test_scores, labels)
    f1 = {}
    for name, weight in (("fused", tuned_x), ("syntactic", 1.0), ("semantic", 0.0)):
        f1[name] = evaluate(fused_predictions(test_scores, weight, 0.5), truths).avg_f1
    elapsed = time.monotonic() - started
    assert f1["fused"] >= max(f1["syntactic"], f1["semantic"]) - 0.01, f1
    assert f1["fused"] >= 0.90, f1
    assert elapsed < 120.0, f"qualitative run took {elapsed:.1f}s"
    passed(
        "qualitative-claim reproduction "
        f"(fused {f1['fused']:.3f} vs syntactic {f1['syntactic']:.3f} / semantic {f1['semantic']:.3f}, "
        f"x={tuned_x}, {elapsed:.0f}s)"
    )


# --- criterion: determinism -------------------------------------------------------

def test_determinism_byte_identical_runs(tmp_path, capsys):
    def one_run(root):
        assert cli_main([
            "gen-synthetic", "--out", str(root), "--apis", "2", "--threads-per-api", "6",
            "--ambiguity", "1", "--seed", "13",
        ]) == 0
        assert cli_main(["train", "--config", str(root / "run.config")]) == 0
        assert cli_main(["eval", "--config", str(root / "run" / "run.config")]) == 0

    one_run(tmp_path / "a")
    one_run(tmp_path / "b")
    capsys.readouterr()
    compared = []
    for name in (
        "threads.jsonl",
        "apis.jsonl",
        "labels.jsonl",
        "run/model.bin",
        "run/eval_fused.jsonl",
        "run/eval_syntactic_only.jsonl",
        "run/eval_semantic_only.jsonl",
    ):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
        compared.append(name)
    passed(f"determinism ({len(compared)} artifacts byte-identical)")


# --- criterion: pair-format conformance --------------------------------------------

def test_pair_format_conformance():
    rng = random.Random(99)
    vocabulary = ["alpha", "beta", "x1", "_tmp", "Value", "go", "$ref"]
    for _ in range(1000):
        first = " ".join(rng.choices(vocabulary, k=rng.randint(0, 400)))
        second = "; ".join(rng.choices(vocabulary, k=rng.randint(0, 400)))
        pair = build_pair(first, second)
        assert len(pair.rendered) == 512
        assert pair.rendered[0] == CLS_TOKEN
        assert pair.rendered[255] == SEP_TOKEN
        assert pair.rendered[511] == EOS_TOKEN
    passed("pair-format conformance (1000 pairs, specials at 0/255/511)")
