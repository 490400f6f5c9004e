"""Seeded synthetic corpora with controlled ground truth.

Each query API gets a family: the API itself, `ambiguity` decoy APIs sharing
its simple name, relevant threads written in the API's own vocabulary, and
decoy threads written in a decoy's vocabulary with the decoy's type token
present.  Vocabulary pools are disjoint word lists per API, which makes
semantic separability controllable; syntactic_signal is the probability that
a relevant thread contains the true type token at all.

The generator emits the exact record formats the ingestion layer reads, so a
generated corpus round-trips through the normal pipeline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

_TYPE_STEMS = ("Matcher", "Builder", "Handler", "Codec", "Router", "Planner", "Merger", "Scanner")
_NAME_STEMS = (
    "applyMatch",
    "buildChunk",
    "handleCase",
    "encodeFrame",
    "routeBatch",
    "planQuery",
    "mergeSlice",
    "scanBlock",
)
_POOL_STEMS = (
    "stream",
    "filter",
    "buffer",
    "token",
    "parser",
    "cache",
    "query",
    "batch",
    "frame",
    "chunk",
    "slice",
    "graph",
    "index",
    "probe",
    "route",
    "shard",
)
_BACKGROUND = (
    "the",
    "this",
    "when",
    "using",
    "code",
    "value",
    "error",
    "test",
    "result",
    "call",
    "with",
    "from",
    "into",
    "works",
    "fails",
    "output",
)


@dataclass(frozen=True)
class SynthSpec:
    n_apis: int = 4
    n_threads_per_api: int = 8
    ambiguity: int = 1
    syntactic_signal: float = 0.7
    semantic_signal: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.n_apis < 1 or self.n_threads_per_api < 1 or self.ambiguity < 0:
            raise ValueError("counts must be positive (ambiguity may be 0)")
        for name in ("syntactic_signal", "semantic_signal"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass
class SynthCorpus:
    thread_records: list[dict]
    api_records: list[dict]
    label_records: list[dict]


@dataclass(frozen=True)
class _Api:
    fqn: str
    type_name: str
    simple_name: str
    pool: tuple[str, ...]
    comment: str
    impl_code: str


def _make_api(fqn: str, type_name: str, simple_name: str, pool_id: int, rng: random.Random) -> _Api:
    pool = tuple(f"{stem}{pool_id}" for stem in _POOL_STEMS)
    comment = " ".join(rng.sample(pool, k=8))
    lines = [f"return {rng.choice(pool)}({rng.choice(pool)}, {rng.choice(pool)});"]
    lines.insert(0, f"int {rng.choice(pool)} = {rng.choice(pool)}.size();")
    return _Api(
        fqn=fqn,
        type_name=type_name,
        simple_name=simple_name,
        pool=pool,
        comment=comment,
        impl_code="\n".join(lines),
    )


def _words(api: _Api, k: int, semantic_signal: float, rng: random.Random) -> list[str]:
    out = []
    for _ in range(k):
        pool = api.pool if rng.random() < semantic_signal else _BACKGROUND
        out.append(rng.choice(pool))
    return out


def _thread_record(
    thread_id: int,
    api: _Api,
    inject_type: bool,
    semantic_signal: float,
    rng: random.Random,
) -> dict:
    def words(k):
        return " ".join(_words(api, k, semantic_signal, rng))

    title = f"{words(4)} {api.simple_name} {words(3)}"
    body_paras = [f"why does {api.simple_name} give {words(5)}", words(6)]
    snippets = [f"obj.{api.simple_name}({rng.choice(api.pool)});\nint {rng.choice(api.pool)} = 0;"]

    if inject_type:
        form = rng.choice(("mention-prefix", "text-token", "static-call", "import", "declaration"))
        if form == "mention-prefix":
            body_paras.append(f"try {api.type_name}.{api.simple_name} with {words(3)}")
        elif form == "text-token":
            body_paras.append(f"the {api.type_name} {words(4)}")
        elif form == "static-call":
            snippets.append(f"{api.type_name}.{api.simple_name}({rng.choice(api.pool)});")
        elif form == "import":
            package = ".".join(api.fqn.split(".")[:-2])
            snippets.append(f"import {package}.{api.type_name};\n{words(2)};")
        else:
            snippets.append(
                f"{api.type_name} v = build();\nv.{api.simple_name}({rng.choice(api.pool)});"
            )

    body_parts = body_paras + [f"<pre><code>{s}</code></pre>" for s in snippets]
    return {
        "id": thread_id,
        "title": title,
        "tags": sorted(rng.sample(_BACKGROUND, k=2)),
        "body_html": "\n\n".join(body_parts),
    }


def generate(spec: SynthSpec) -> SynthCorpus:
    """Generate (corpus, api_db, labels) records; same spec + seed is byte-identical."""
    rng = random.Random(spec.seed)
    thread_records: list[dict] = []
    api_records: list[dict] = []
    label_records: list[dict] = []
    next_thread_id = 1001
    pool_id = 0

    for i in range(spec.n_apis):
        type_stem = _TYPE_STEMS[i % len(_TYPE_STEMS)]
        simple = f"{_NAME_STEMS[i % len(_NAME_STEMS)]}{i}"
        true_api = _make_api(
            fqn=f"com.lib{i}.core.{type_stem}{i}.{simple}",
            type_name=f"{type_stem}{i}",
            simple_name=simple,
            pool_id=pool_id,
            rng=rng,
        )
        pool_id += 1
        decoys = []
        for j in range(spec.ambiguity):
            decoys.append(
                _make_api(
                    fqn=f"org.alt{j}.pkg{i}.{type_stem}{i}Alt{j}.{simple}",
                    type_name=f"{type_stem}{i}Alt{j}",
                    simple_name=simple,
                    pool_id=pool_id,
                    rng=rng,
                )
            )
            pool_id += 1

        family = [true_api] + decoys
        family_threads: list[tuple[int, _Api]] = []
        for _ in range(spec.n_threads_per_api):
            inject = rng.random() < spec.syntactic_signal
            record = _thread_record(next_thread_id, true_api, inject, spec.semantic_signal, rng)
            thread_records.append(record)
            family_threads.append((next_thread_id, true_api))
            next_thread_id += 1
        for decoy in decoys:
            for _ in range(max(1, spec.n_threads_per_api // 2)):
                # decoy threads always carry the decoy's type token
                record = _thread_record(next_thread_id, decoy, True, spec.semantic_signal, rng)
                thread_records.append(record)
                family_threads.append((next_thread_id, decoy))
                next_thread_id += 1

        for api in family:
            api_records.append(
                {"fqn": api.fqn, "comment": api.comment, "impl_code": api.impl_code}
            )
            for thread_id, target in family_threads:
                label_records.append(
                    {
                        "thread_id": thread_id,
                        "api_fqn": api.fqn,
                        "relevant": target.fqn == api.fqn,
                    }
                )

    return SynthCorpus(
        thread_records=thread_records,
        api_records=api_records,
        label_records=label_records,
    )
