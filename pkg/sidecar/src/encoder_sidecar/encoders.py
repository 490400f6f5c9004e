"""Encoder backends for the sidecar.

Every backend maps a (first, second) text pair, rendered as

    <cls> first-tokens <sep> second-tokens <eos>

under the per-side token budgets from the request, to one finite 768-dim
vector via first-token pooling.  Inference is deterministic: the same request
always yields the same vector within one process lifetime.
"""

from __future__ import annotations

import re

import numpy as np

VECTOR_DIM = 768

_TOKEN_RE = re.compile(r"[A-Za-z0-9_$]+")


def _budget_tokens(text: str, limit: int) -> list[str]:
    return _TOKEN_RE.findall(text)[: max(limit, 0)]


class SeededProjectionEncoder:
    """Deterministic offline stand-in for a pretrained pair encoder.

    Each token is assigned a seeded pseudo-random unit direction; the pooled
    first-token state is modeled as a position-discounted mixture over the
    rendered sequence, so side, order, and content all shape the vector.
    No network access or model weights are required.
    """

    name = "seeded-projection"

    def __init__(self, seed: int = 768):
        self.seed = seed
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = 1469598103934665603 ^ self.seed
            for byte in token.encode("utf-8"):
                digest = ((digest ^ byte) * 1099511628211) & 0xFFFFFFFFFFFFFFFF
            rng = np.random.default_rng(digest)
            vec = rng.standard_normal(VECTOR_DIM)
            vec /= np.linalg.norm(vec)
            self._token_cache[token] = vec
        return vec

    def encode_pair(self, first: str, second: str, max_first: int, max_second: int) -> np.ndarray:
        rendered = (
            ["<cls>"]
            + _budget_tokens(first, max_first)
            + ["<sep>"]
            + _budget_tokens(second, max_second)
            + ["<eos>"]
        )
        pooled = np.zeros(VECTOR_DIM)
        for position, token in enumerate(rendered):
            pooled += self._token_vector(token) / (1.0 + 0.05 * position)
        norm = float(np.linalg.norm(pooled))
        return pooled / norm if norm > 0.0 else pooled

    def encode_batch(self, firsts, seconds, max_first, max_second):
        return [
            self.encode_pair(f, s, max_first, max_second) for f, s in zip(firsts, seconds)
        ]


class TransformerEncoder:
    """Pretrained encoder loaded through the transformers library.

    The pair is tokenized as a two-segment input under the request budgets and
    the hidden state of the first token is returned.  Loading failures
    propagate so the service refuses to start.
    """

    def __init__(self, model_name: str):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self.name = model_name
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModel.from_pretrained(model_name)
        self._model.eval()

    def encode_pair(self, first: str, second: str, max_first: int, max_second: int) -> np.ndarray:
        return self.encode_batch([first], [second], max_first, max_second)[0]

    def encode_batch(self, firsts, seconds, max_first, max_second):
        torch = self._torch
        first_ids = self._tokenizer(
            list(firsts), add_special_tokens=False, truncation=True, max_length=max_first
        )["input_ids"]
        second_ids = self._tokenizer(
            list(seconds), add_special_tokens=False, truncation=True, max_length=max_second
        )["input_ids"]
        sequences = [
            [self._tokenizer.cls_token_id]
            + f
            + [self._tokenizer.sep_token_id]
            + s
            + [self._tokenizer.eos_token_id or self._tokenizer.sep_token_id]
            for f, s in zip(first_ids, second_ids)
        ]
        width = max(len(s) for s in sequences)
        pad = self._tokenizer.pad_token_id or 0
        batch = torch.tensor([s + [pad] * (width - len(s)) for s in sequences])
        mask = torch.tensor(
            [[1] * len(s) + [0] * (width - len(s)) for s in sequences]
        )
        with torch.no_grad():
            hidden = self._model(input_ids=batch, attention_mask=mask).last_hidden_state
        pooled = hidden[:, 0, :].cpu().numpy().astype(np.float64)
        if pooled.shape[1] != VECTOR_DIM:
            raise RuntimeError(
                f"model {self.name} produces {pooled.shape[1]}-dim states, expected {VECTOR_DIM}"
            )
        return [row for row in pooled]


def load_encoder(model_name: str):
    """Builtin name or a transformers model identifier/path."""
    if model_name == SeededProjectionEncoder.name:
        return SeededProjectionEncoder()
    return TransformerEncoder(model_name)
