"""Glue between the corpus, scorers, classifier, and fusion layers.

Everything here is deterministic given the same inputs: APIs are processed in
lexicographic fqn order and threads in corpus order.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .classifier import MlpModel, thread_semantic_score
from .corpus import ApiMethod, Thread, candidate_set, find_potential_threads
from .embedding import EmbeddingProvider, relevance_embeddings
from .fusion import classify_thread, joint_score
from .typescope import thread_syntactic_score

Labels = Mapping[tuple[int, str], bool]
PairScores = dict[str, dict[int, tuple[float, float]]]


def training_arrays(
    apis: Sequence[ApiMethod],
    threads: Sequence[Thread],
    api_db: Sequence[ApiMethod],
    labels: Labels,
    provider: EmbeddingProvider,
) -> tuple[np.ndarray, np.ndarray]:
    """Labeled relevance embeddings for every (API, potential thread) pair.

    A pair labeled relevant contributes positive rows for all its m x n
    embeddings; pairs without a positive label (same simple name, not
    referred to) contribute negative rows.
    """
    rows: list[np.ndarray] = []
    targets: list[float] = []
    for api in sorted(apis, key=lambda a: a.fqn):
        for thread in find_potential_threads(api, threads):
            label = labels.get((thread.id, api.fqn), False)
            for emb in relevance_embeddings(thread, api, provider):
                rows.append(emb.vector)
                targets.append(1.0 if label else 0.0)
    if not rows:
        return np.zeros((0, 0)), np.zeros(0)
    return np.stack(rows), np.array(targets)


def pair_scores(
    apis: Sequence[ApiMethod],
    threads: Sequence[Thread],
    api_db: Sequence[ApiMethod],
    provider: EmbeddingProvider,
    model: MlpModel,
) -> PairScores:
    """Syntactic score A and semantic score B per (API, potential thread)."""
    scores: PairScores = {}
    for api in sorted(apis, key=lambda a: a.fqn):
        candidates = candidate_set(api, api_db)
        per_thread: dict[int, tuple[float, float]] = {}
        for thread in find_potential_threads(api, threads):
            a = thread_syntactic_score(thread, api, candidates)
            b = thread_semantic_score(model, relevance_embeddings(thread, api, provider))
            per_thread[thread.id] = (a, b)
        scores[api.fqn] = per_thread
    return scores


def tuning_records(
    scores: PairScores, labels: Labels
) -> dict[str, list[tuple[float, float, bool]]]:
    """Reshape pair scores into per-API (A, B, truth) rows for grid search."""
    records: dict[str, list[tuple[float, float, bool]]] = {}
    for fqn, per_thread in scores.items():
        rows = [
            (a, b, labels.get((tid, fqn), False)) for tid, (a, b) in sorted(per_thread.items())
        ]
        if rows:
            records[fqn] = rows
    return records


def fused_predictions(scores: PairScores, x: float, t: float) -> dict[str, dict[int, bool]]:
    return {
        fqn: {
            tid: classify_thread(joint_score(a, b, x), t) for tid, (a, b) in per_thread.items()
        }
        for fqn, per_thread in scores.items()
    }


def truth_map(scores: PairScores, labels: Labels) -> dict[str, dict[int, bool]]:
    """Ground truth shaped like the predictions; unlabeled pairs are irrelevant."""
    return {
        fqn: {tid: labels.get((tid, fqn), False) for tid in per_thread}
        for fqn, per_thread in scores.items()
    }
