import json

import pytest

from apiscope.classifier import TrainConfig, train_arrays
from apiscope.corpus import ApiMethod, find_potential_threads, parse_thread_record
from apiscope.embedding import HashProvider, MemoizedProvider
from apiscope.evaluation import evaluate, split_dataset
from apiscope.fusion import tune_weighting_factor
from apiscope.pipeline import (
    fused_predictions,
    pair_scores,
    training_arrays,
    truth_map,
    tuning_records,
)
from apiscope.synth import SynthCorpus, SynthSpec, generate


def materialize(corpus: SynthCorpus):
    threads = [parse_thread_record(json.dumps(r)) for r in corpus.thread_records]
    api_db = [ApiMethod(**r) for r in corpus.api_records]
    labels = {(r["thread_id"], r["api_fqn"]): r["relevant"] for r in corpus.label_records}
    return threads, api_db, labels


def run_pipeline(spec: SynthSpec, batch_size=8):
    """Train, tune, and evaluate the fused/A-only/B-only variants on a spec."""
    threads, api_db, labels = materialize(generate(spec))
    apis = [m for m in api_db]
    train_threads, test_threads = split_dataset(threads, spec.seed)
    provider = MemoizedProvider(HashProvider())
    x_data, y_data = training_arrays(apis, train_threads, api_db, labels, provider)
    model = train_arrays(
        x_data, y_data, TrainConfig(seed=spec.seed, batch_size=batch_size)
    ).model
    tuned_x = tune_weighting_factor(tuning_records(pair_scores(apis, train_threads, api_db, provider, model), labels))
    scores = pair_scores(apis, test_threads, api_db, provider, model)
    truths = truth_map(scores, labels)
    f1 = {
        name: evaluate(fused_predictions(scores, weight, 0.5), truths).avg_f1
        for name, weight in (("fused", tuned_x), ("syntactic", 1.0), ("semantic", 0.0))
    }
    return f1, tuned_x


class TestGenerate:
    def test_counts_for_two_apis(self):
        corpus = generate(SynthSpec(n_apis=2, n_threads_per_api=4, ambiguity=1, seed=0))
        assert len(corpus.api_records) == 4  # 2 true + 1 decoy each
        assert len(corpus.thread_records) >= 8
        # labels are complete: every family API times every family thread
        pairs = {(r["thread_id"], r["api_fqn"]) for r in corpus.label_records}
        assert len(pairs) == len(corpus.label_records)
        per_family_threads = 4 + max(1, 4 // 2)
        assert len(corpus.label_records) == 2 * 2 * per_family_threads

    def test_byte_identical_for_same_seed(self):
        spec = SynthSpec(n_apis=3, n_threads_per_api=5, seed=42)
        a, b = generate(spec), generate(spec)
        assert json.dumps(a.thread_records) == json.dumps(b.thread_records)
        assert json.dumps(a.api_records) == json.dumps(b.api_records)
        assert json.dumps(a.label_records) == json.dumps(b.label_records)

    def test_seed_changes_output(self):
        a = generate(SynthSpec(n_apis=2, n_threads_per_api=4, seed=1))
        b = generate(SynthSpec(n_apis=2, n_threads_per_api=4, seed=2))
        assert json.dumps(a.thread_records) != json.dumps(b.thread_records)

    def test_every_thread_is_potential_for_its_target(self):
        corpus = generate(SynthSpec(n_apis=3, n_threads_per_api=6, ambiguity=2, seed=3))
        threads, api_db, labels = materialize(corpus)
        by_fqn = {m.fqn: m for m in api_db}
        by_id = {t.id: t for t in threads}
        for (tid, fqn), relevant in labels.items():
            if relevant:
                assert by_id[tid] in find_potential_threads(by_fqn[fqn], threads)

    def test_records_round_trip_through_ingestion(self):
        corpus = generate(SynthSpec(n_apis=2, n_threads_per_api=3, seed=9))
        threads, api_db, labels = materialize(corpus)
        assert len(threads) == len(corpus.thread_records)
        assert all(t.paragraphs[0] == t.title for t in threads)
        assert all(t.code_snippets for t in threads)

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(n_apis=0)
        with pytest.raises(ValueError):
            SynthSpec(syntactic_signal=1.5)


class TestPipelineOnSynthetic:
    def test_pure_syntactic_signal_gives_perfect_syntactic_f1(self):
        spec = SynthSpec(
            n_apis=4, n_threads_per_api=10, ambiguity=1,
            syntactic_signal=1.0, semantic_signal=0.0, seed=11,
        )
        f1, _ = run_pipeline(spec)
        assert f1["syntactic"] == 1.0

    def test_semantic_beats_syntactic_when_types_are_scarce(self):
        spec = SynthSpec(
            n_apis=4, n_threads_per_api=16, ambiguity=1,
            syntactic_signal=0.5, semantic_signal=1.0, seed=12,
        )
        f1, _ = run_pipeline(spec)
        assert f1["semantic"] > f1["syntactic"]
