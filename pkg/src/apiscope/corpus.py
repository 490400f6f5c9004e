"""Thread and API-method corpus: ingestion, potential threads, candidate sets.

Threads are stored one JSON object per line with fields ``id``, ``title``,
``tags`` and ``body_html``; code blocks inside the body are delimited by the
literal tags ``<pre><code>`` / ``</code></pre>``.  The API database uses one
object per line with ``fqn``, ``comment`` and ``impl_code``.  Unknown fields
are ignored in both files.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IngestError, MalformedFqnError

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")
_CODE_BLOCK_RE = re.compile(r"<pre><code>(.*?)</code></pre>", re.DOTALL)
_TAG_RE = re.compile(r"<[^>]+>")
_BLANK_LINE_RE = re.compile(r"\n\s*\n")


def split_fqn(fqn: str) -> tuple[str, str]:
    """Split a fully qualified method name into (simple_name, type_name).

    The simple name is the last dot-separated segment, the type name the
    second-to-last.  Raises MalformedFqnError for names with fewer than
    three segments or segments that are not valid Java identifiers.
    """
    segments = fqn.split(".")
    if len(segments) < 3:
        raise MalformedFqnError(
            f"expected at least 3 dot-separated segments, got {len(segments)}: {fqn!r}"
        )
    for seg in segments:
        if not _IDENT_RE.match(seg):
            raise MalformedFqnError(f"segment {seg!r} is not a valid identifier in {fqn!r}")
    return segments[-1], segments[-2]


@dataclass(frozen=True)
class Thread:
    """One discussion thread.  paragraphs[0] is always the title."""

    id: int
    title: str
    tags: tuple[str, ...] = ()
    paragraphs: tuple[str, ...] = ()
    code_snippets: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "paragraphs", tuple(self.paragraphs))
        object.__setattr__(self, "code_snippets", tuple(self.code_snippets))
        if self.id <= 0:
            raise ValueError(f"thread id must be positive, got {self.id}")
        if not self.paragraphs or self.paragraphs[0] != self.title:
            raise ValueError("paragraphs[0] must be the thread title")


@dataclass(frozen=True)
class ApiMethod:
    """A fully qualified Java method with its doc comment and implementation."""

    fqn: str
    comment: str = ""
    impl_code: str = ""

    def __post_init__(self):
        split_fqn(self.fqn)  # validates

    @property
    def simple_name(self) -> str:
        return split_fqn(self.fqn)[0]

    @property
    def type_name(self) -> str:
        return split_fqn(self.fqn)[1]


@dataclass(frozen=True)
class ApiMention:
    """An occurrence of an API simple name inside a thread paragraph."""

    thread_id: int
    paragraph_index: int
    token_offset: int
    surface: str
    prefix: str | None = None


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def parse_thread_record(record: str, line_no: int | None = None) -> Thread:
    """Parse one storage line into a Thread.

    Code snippets are the contents of pre/code blocks in document order.
    The remaining body text, with residual markup stripped, is split into
    paragraphs on blank-line boundaries; the title is prepended as
    paragraphs[0].
    """
    where = f"line {line_no}: " if line_no is not None else ""
    try:
        obj = json.loads(record)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{where}invalid record: {exc}") from None
    if not isinstance(obj, dict):
        raise IngestError(f"{where}record is not an object")
    if "id" not in obj or "title" not in obj:
        raise IngestError(f"{where}record is missing id or title")
    thread_id = obj["id"]
    title = obj["title"]
    if not isinstance(thread_id, int) or isinstance(thread_id, bool) or thread_id <= 0:
        raise IngestError(f"{where}id must be a positive integer, got {thread_id!r}")
    if not isinstance(title, str):
        raise IngestError(f"{where}title must be a string")
    tags = obj.get("tags", [])
    if not isinstance(tags, list) or any(not isinstance(t, str) for t in tags):
        raise IngestError(f"{where}tags must be an array of strings")
    body = obj.get("body_html", "")
    if not isinstance(body, str):
        raise IngestError(f"{where}body_html must be a string")

    snippets = [s.strip() for s in _CODE_BLOCK_RE.findall(body)]
    if body.count("<pre><code>") != len(snippets) or body.count("</code></pre>") != len(snippets):
        raise IngestError(f"{where}unbalanced <pre><code> markup")

    text = _CODE_BLOCK_RE.sub("\n\n", body)
    text = _TAG_RE.sub(" ", text)
    paragraphs = [_normalize_ws(title)]
    paragraphs += [p for p in (_normalize_ws(c) for c in _BLANK_LINE_RE.split(text)) if p]

    return Thread(
        id=thread_id,
        title=paragraphs[0],
        tags=tuple(tags),
        paragraphs=tuple(paragraphs),
        code_snippets=tuple(snippets),
    )


def _iter_records(path: str | Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                yield line_no, line


def load_corpus(path: str | Path) -> list[Thread]:
    """Read a line-delimited thread file.  Raises IngestError with line numbers."""
    threads: list[Thread] = []
    seen: set[int] = set()
    for line_no, line in _iter_records(path):
        thread = parse_thread_record(line, line_no)
        if thread.id in seen:
            raise IngestError(f"line {line_no}: duplicate thread id {thread.id}")
        seen.add(thread.id)
        threads.append(thread)
    return threads


def load_api_db(path: str | Path) -> list[ApiMethod]:
    """Read a line-delimited API database file."""
    methods: list[ApiMethod] = []
    seen: set[str] = set()
    for line_no, line in _iter_records(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {line_no}: invalid record: {exc}") from None
        if not isinstance(obj, dict) or "fqn" not in obj:
            raise IngestError(f"line {line_no}: record is missing fqn")
        try:
            method = ApiMethod(
                fqn=obj["fqn"],
                comment=obj.get("comment", ""),
                impl_code=obj.get("impl_code", ""),
            )
        except MalformedFqnError as exc:
            raise IngestError(f"line {line_no}: {exc}") from None
        if method.fqn in seen:
            raise IngestError(f"line {line_no}: duplicate fqn {method.fqn}")
        seen.add(method.fqn)
        methods.append(method)
    return methods


def load_labels(path: str | Path) -> dict[tuple[int, str], bool]:
    """Read ground-truth (thread_id, api_fqn, relevant) triples."""
    labels: dict[tuple[int, str], bool] = {}
    for line_no, line in _iter_records(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {line_no}: invalid record: {exc}") from None
        try:
            key = (int(obj["thread_id"]), str(obj["api_fqn"]))
            relevant = bool(obj["relevant"])
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"line {line_no}: bad label record: {exc}") from None
        if key in labels:
            raise IngestError(f"line {line_no}: duplicate label for {key}")
        labels[key] = relevant
    return labels


def _whole_token_pattern(name: str) -> re.Pattern[str]:
    return re.compile(rf"(?<![A-Za-z0-9_$]){re.escape(name)}(?![A-Za-z0-9_$])")


def searchable_text(thread: Thread) -> str:
    """All textual content used for word matching: paragraphs, tags, code."""
    return "\n".join((*thread.paragraphs, *thread.tags, *thread.code_snippets))


def find_potential_threads(api: ApiMethod, corpus: Sequence[Thread]) -> list[Thread]:
    """Threads containing the API's simple name as a whole identifier token.

    Matching is case-sensitive and order is preserved.
    """
    pattern = _whole_token_pattern(api.simple_name)
    return [t for t in corpus if pattern.search(searchable_text(t))]


def candidate_set(api: ApiMethod, api_db: Sequence[ApiMethod]) -> list[ApiMethod]:
    """All database methods sharing the query's simple name, plus the query itself.

    Deterministic lexicographic order by fqn.
    """
    by_fqn = {m.fqn: m for m in api_db if m.simple_name == api.simple_name}
    by_fqn.setdefault(api.fqn, api)
    return [by_fqn[f] for f in sorted(by_fqn)]


def thread_to_normalized_record(thread: Thread) -> dict:
    return {
        "id": thread.id,
        "title": thread.title,
        "tags": list(thread.tags),
        "paragraphs": list(thread.paragraphs),
        "code_snippets": list(thread.code_snippets),
    }
