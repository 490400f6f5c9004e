"""Paragraph/code pair construction and 768-dim embedding providers.

A thread with m paragraphs and n code snippets yields m x n content pairs
(paragraph-major order; a thread without snippets gets one empty placeholder
snippet).  Each pair is rendered as a fixed 512-token sequence:

    <cls> first[254] <sep> second[255] <eos>

with truncation to, or padding up to, the per-side budgets.  Providers turn a
pair into a 768-dim vector; a thread-pair vector concatenated with the method
(comment, implementation) pair vector forms a 1536-dim relevance embedding.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .corpus import ApiMethod, Thread
from .errors import ProviderError
from .typescope import tokenize_identifiers

CLS_TOKEN = "<cls>"
SEP_TOKEN = "<sep>"
EOS_TOKEN = "<eos>"
PAD_TOKEN = "<pad>"

FIRST_BUDGET = 254
SECOND_BUDGET = 255
RENDERED_LENGTH = FIRST_BUDGET + SECOND_BUDGET + 3  # 512

EMBED_DIM = 768
DEFAULT_HASH_SEED = 0x5C0FE_D17


@dataclass(frozen=True)
class PairText:
    first: str
    second: str
    rendered: tuple[str, ...]


@dataclass(frozen=True)
class RelevanceEmbedding:
    """Thread-pair vector concatenated with the method-pair vector (1536 dims)."""

    vector: np.ndarray
    thread_id: int
    api_fqn: str
    label: bool | None = None


def build_pair(
    first: str,
    second: str,
    tokenizer: Callable[[str], list[str]] = tokenize_identifiers,
) -> PairText:
    """Render (first, second) under the 254/255 token budget; total length 512."""
    head = tokenizer(first)[:FIRST_BUDGET]
    head += [PAD_TOKEN] * (FIRST_BUDGET - len(head))
    tail = tokenizer(second)[:SECOND_BUDGET]
    tail += [PAD_TOKEN] * (SECOND_BUDGET - len(tail))
    rendered = (CLS_TOKEN, *head, SEP_TOKEN, *tail, EOS_TOKEN)
    return PairText(first=first, second=second, rendered=rendered)


def thread_pairs(thread: Thread) -> list[PairText]:
    """Cartesian product of paragraphs x code snippets, paragraph-major.

    A thread without snippets pairs every paragraph with one empty snippet,
    so the semantic score stays defined for text-only threads.
    """
    snippets = thread.code_snippets if thread.code_snippets else ("",)
    return [build_pair(p, s) for p in thread.paragraphs for s in snippets]


def method_pair(api: ApiMethod) -> PairText:
    """Pair of the API's doc comment and implementation code."""
    return build_pair(api.comment, api.impl_code)


def _fnv1a64(data: str, seed: int) -> int:
    h = seed & 0xFFFFFFFFFFFFFFFF
    for byte in data.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def hash_embed(pair: PairText, seed: int = DEFAULT_HASH_SEED, dim: int = EMBED_DIM) -> np.ndarray:
    """Deterministic feature-hashing embedding of a rendered pair.

    Unigrams and bigrams of the content tokens on each side are hashed into
    signed buckets; the side tag keeps the vector sensitive to which text is
    first.  Reserved tokens are never hashed, so an all-padding pair maps to
    the zero vector; any other pair is L2-normalized.
    """
    vec = np.zeros(dim, dtype=np.float64)
    sides = (
        ("p", pair.rendered[1 : 1 + FIRST_BUDGET]),
        ("c", pair.rendered[2 + FIRST_BUDGET : 2 + FIRST_BUDGET + SECOND_BUDGET]),
    )
    for tag, tokens in sides:
        content = [t for t in tokens if t != PAD_TOKEN]
        features = [f"{tag}\x1f{t}" for t in content]
        features += [f"{tag}\x1f{a}\x1f{b}" for a, b in zip(content, content[1:])]
        for feat in features:
            h = _fnv1a64(feat, seed)
            vec[(h >> 1) % dim] += 1.0 if h & 1 == 0 else -1.0
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else vec


class EmbeddingProvider:
    """Maps a PairText to a finite 768-dim vector, deterministically."""

    concurrent_safe = False

    def embed(self, pair: PairText) -> np.ndarray:
        raise NotImplementedError

    def embed_batch(self, pairs: Sequence[PairText]) -> list[np.ndarray]:
        return [self.embed(p) for p in pairs]


class HashProvider(EmbeddingProvider):
    """In-process provider backed by hash_embed.  Safe for concurrent use."""

    concurrent_safe = True

    def __init__(self, seed: int = DEFAULT_HASH_SEED):
        self.seed = seed

    def embed(self, pair: PairText) -> np.ndarray:
        return hash_embed(pair, seed=self.seed)


def _check_vector(raw, context: str) -> np.ndarray:
    vec = np.asarray(raw, dtype=np.float64)
    if vec.shape != (EMBED_DIM,):
        raise ProviderError(f"{context}: expected {EMBED_DIM}-dim vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ProviderError(f"{context}: vector contains non-finite entries")
    return vec


class ExternalProvider(EmbeddingProvider):
    """Client for an external encoder speaking line-delimited JSON over TCP.

    Request: {"first": str, "second": str, "max_first": 254, "max_second": 255}
    Response: {"vector": [768 numbers]}.  The batch variant carries arrays in
    "first"/"second" and returns {"vectors": [...]}.  The raw pair texts are
    sent; the encoder applies the budgets with its own tokenizer.
    """

    concurrent_safe = False  # single socket, requests are serialized

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("rb")

    def close(self) -> None:
        self._reader.close()
        self._sock.close()

    def _roundtrip(self, request: dict) -> dict:
        try:
            self._sock.sendall(json.dumps(request).encode("utf-8") + b"\n")
            line = self._reader.readline()
        except OSError as exc:
            raise ProviderError(f"encoder connection failed: {exc}") from exc
        if not line:
            raise ProviderError("encoder closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"bad encoder response: {exc}") from None
        if "error" in response:
            raise ProviderError(f"encoder error: {response['error']}")
        return response

    def embed(self, pair: PairText) -> np.ndarray:
        response = self._roundtrip(
            {
                "first": pair.first,
                "second": pair.second,
                "max_first": FIRST_BUDGET,
                "max_second": SECOND_BUDGET,
            }
        )
        return _check_vector(response.get("vector"), "encoder response")

    def embed_batch(self, pairs: Sequence[PairText]) -> list[np.ndarray]:
        if not pairs:
            return []
        response = self._roundtrip(
            {
                "first": [p.first for p in pairs],
                "second": [p.second for p in pairs],
                "max_first": FIRST_BUDGET,
                "max_second": SECOND_BUDGET,
            }
        )
        vectors = response.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(pairs):
            raise ProviderError(
                f"encoder batch response has {len(vectors or [])} vectors for {len(pairs)} pairs"
            )
        return [_check_vector(v, f"encoder batch item {i}") for i, v in enumerate(vectors)]


class MemoizedProvider(EmbeddingProvider):
    """Per-run in-memory memo keyed on the raw pair texts."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self.concurrent_safe = False
        self._memo: dict[tuple[str, str], np.ndarray] = {}

    def embed(self, pair: PairText) -> np.ndarray:
        key = (pair.first, pair.second)
        if key not in self._memo:
            self._memo[key] = self.inner.embed(pair)
        return self._memo[key]

    def embed_batch(self, pairs: Sequence[PairText]) -> list[np.ndarray]:
        missing = [p for p in pairs if (p.first, p.second) not in self._memo]
        # dedupe while preserving order so each unique pair is requested once
        unique: dict[tuple[str, str], PairText] = {}
        for p in missing:
            unique.setdefault((p.first, p.second), p)
        if unique:
            vectors = self.inner.embed_batch(list(unique.values()))
            for key, vec in zip(unique.keys(), vectors):
                self._memo[key] = vec
        return [self._memo[(p.first, p.second)] for p in pairs]


def relevance_embeddings(
    thread: Thread, api: ApiMethod, provider: EmbeddingProvider
) -> list[RelevanceEmbedding]:
    """One 1536-dim embedding per thread content pair, method vector reused.

    Provider failures are re-raised with the thread id (and pair index when
    known) attached.
    """
    try:
        method_vec = _check_vector(provider.embed(method_pair(api)), "method pair")
    except ProviderError as exc:
        raise ProviderError(f"thread {thread.id}, method pair for {api.fqn}: {exc}") from exc
    pairs = thread_pairs(thread)
    try:
        vectors = provider.embed_batch(pairs)
    except ProviderError as exc:
        raise ProviderError(f"thread {thread.id}: {exc}") from exc
    embeddings = []
    for idx, vec in enumerate(vectors):
        try:
            checked = _check_vector(vec, "thread pair")
        except ProviderError as exc:
            raise ProviderError(f"thread {thread.id}, pair {idx}: {exc}") from exc
        embeddings.append(
            RelevanceEmbedding(
                vector=np.concatenate([checked, method_vec]),
                thread_id=thread.id,
                api_fqn=api.fqn,
            )
        )
    return embeddings


def with_label(embedding: RelevanceEmbedding, label: bool) -> RelevanceEmbedding:
    return replace(embedding, label=label)
