"""Syntactic relevance via type scoping.

Each API candidate is scored by where its declaring type shows up in a
thread: in the mention's dotted prefix, among the textual tokens, among the
raw code-snippet tokens, and among the types parsed out of the snippets
(imports, object creations, variable declarations, static receivers).  The
query API's score is min-max normalized over the whole candidate set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .corpus import ApiMention, ApiMethod, Thread

_TOKEN_RE = re.compile(r"[A-Za-z0-9_$]+")
_PREFIX_CHAIN_RE = re.compile(r"(?:[A-Za-z0-9_$]+\.)+\Z")

# Loose, regex-level Java type extraction.  No symbol tables, no generics
# resolution; unparseable constructs are simply skipped.
_IMPORT_RE = re.compile(r"^\s*import\s+(?:static\s+)?([\w$.*]+)\s*;", re.MULTILINE)
_NEW_RE = re.compile(r"\bnew\s+(?:[\w$]+\s*\.\s*)*([A-Z_][\w$]*)\s*[<(]")
_DECL_RE = re.compile(
    r"(?:[\w$]+\.)*([A-Z_][\w$]*)\s*(?:<[^<>;=]*>)?\s*(?:\[\s*\])*\s+([A-Za-z_$][\w$]*)\s*[=;,)]"
)
_CALL_RE = re.compile(r"\b([A-Za-z_$][\w$]*)\s*\.\s*[A-Za-z_$][\w$]*\s*\(")

PTYPE_ORIGINS = ("import", "object-creation", "variable-declaration", "static-receiver")


@dataclass(frozen=True)
class PType:
    """A possible type seen in a code snippet, tagged with how it was found."""

    name: str
    origin: str


@dataclass(frozen=True)
class CandidateScore:
    candidate: ApiMethod
    raw: int
    normalized: float


def tokenize_identifiers(text: str) -> list[str]:
    """Split text into maximal runs of [A-Za-z0-9_$]; everything else separates.

    Order is preserved and duplicates are kept.
    """
    return _TOKEN_RE.findall(text)


def extract_mentions(thread: Thread, simple_name: str) -> list[ApiMention]:
    """Every whole-token occurrence of simple_name in the thread's paragraphs.

    When the occurrence is immediately preceded by a dot and a dotted
    identifier chain, the chain is recorded as the mention's prefix.
    """
    pattern = re.compile(rf"(?<![A-Za-z0-9_$]){re.escape(simple_name)}(?![A-Za-z0-9_$])")
    mentions: list[ApiMention] = []
    for para_idx, paragraph in enumerate(thread.paragraphs):
        for match in pattern.finditer(paragraph):
            before = paragraph[: match.start()]
            chain = _PREFIX_CHAIN_RE.search(before)
            prefix = chain.group(0)[:-1] if chain else None
            surface = f"{prefix}.{simple_name}" if prefix else simple_name
            mentions.append(
                ApiMention(
                    thread_id=thread.id,
                    paragraph_index=para_idx,
                    token_offset=len(_TOKEN_RE.findall(before)),
                    surface=surface,
                    prefix=prefix,
                )
            )
    return mentions


def extract_ptypes(code_snippets: Sequence[str]) -> list[PType]:
    """Possible types from code snippets, one entry per distinct (name, origin).

    Rules: (a) uppercase segments of import statements; (b) the constructed
    type of ``new T(...)``; (c) declared types ``T v = ...`` and the resolved
    declared type of receivers ``v.m(...)``; (d) capitalized static receivers
    ``T.m(...)``.  Receiver resolution is per-snippet and single-pass.
    """
    seen: set[tuple[str, str]] = set()
    ptypes: list[PType] = []

    def add(name: str, origin: str) -> None:
        if (name, origin) not in seen:
            seen.add((name, origin))
            ptypes.append(PType(name, origin))

    for snippet in code_snippets:
        for match in _IMPORT_RE.finditer(snippet):
            for seg in match.group(1).split("."):
                if seg and (seg[0].isupper() or seg[0] == "_"):
                    add(seg, "import")
        for match in _NEW_RE.finditer(snippet):
            add(match.group(1), "object-creation")
        bindings: dict[str, str] = {}
        for match in _DECL_RE.finditer(snippet):
            type_name, var_name = match.group(1), match.group(2)
            add(type_name, "variable-declaration")
            bindings[var_name] = type_name
        for match in _CALL_RE.finditer(snippet):
            receiver = match.group(1)
            if receiver in bindings:
                add(bindings[receiver], "variable-declaration")
            elif receiver[0].isupper() or receiver[0] == "_":
                add(receiver, "static-receiver")
    return ptypes


def _prefix_ends_with(prefix: str, type_name: str) -> bool:
    return prefix.split(".")[-1] == type_name


def scope_breakdown(
    mention: ApiMention | None,
    ptypes: Sequence[PType],
    candidate: ApiMethod,
    thread_text: str,
    code_snippets: Sequence[str],
) -> dict[str, int]:
    """Per-scope score contributions for one mention/candidate pairing."""
    cand_type = candidate.type_name
    mention_hit = int(
        mention is not None
        and mention.prefix is not None
        and _prefix_ends_with(mention.prefix, cand_type)
    )
    text_hit = int(cand_type in tokenize_identifiers(thread_text))
    code_hit = int(cand_type in tokenize_identifiers("\n".join(code_snippets)))
    ptype_hits = sum(1 for p in ptypes if p.name == cand_type)
    return {
        "mention": mention_hit,
        "text": text_hit,
        "code_tokens": code_hit,
        "parsed_types": ptype_hits,
    }


def score_candidate(
    mention: ApiMention,
    ptypes: Sequence[PType],
    candidate: ApiMethod,
    thread_text: str,
    code_snippets: Sequence[str],
) -> int:
    """Type-scoping score of one candidate for one mention (non-negative int)."""
    return sum(scope_breakdown(mention, ptypes, candidate, thread_text, code_snippets).values())


def candidate_scores(
    thread: Thread, simple_name: str, candidates: Sequence[ApiMethod]
) -> list[CandidateScore]:
    """Raw and normalized scores for every candidate on one thread.

    Raw score is the max over the thread's mentions; one strong mention is
    enough.  Normalization is (raw - min) / (max - min) over the candidate
    set; a degenerate range maps to 1.0 when the shared raw score is
    positive and to 0.0 otherwise.
    """
    mentions = extract_mentions(thread, simple_name)
    ptypes = extract_ptypes(thread.code_snippets)
    thread_text = "\n".join((*thread.paragraphs, *thread.tags))
    raws = []
    for cand in candidates:
        if mentions:
            raw = max(
                score_candidate(m, ptypes, cand, thread_text, thread.code_snippets)
                for m in mentions
            )
        else:
            raw = 0
        raws.append(raw)

    lo, hi = (min(raws), max(raws)) if raws else (0, 0)
    if hi == lo:
        norm = [1.0 if r > 0 else 0.0 for r in raws]
    else:
        norm = [(r - lo) / (hi - lo) for r in raws]
    return [CandidateScore(c, r, n) for c, r, n in zip(candidates, raws, norm)]


def thread_syntactic_score(
    thread: Thread, api: ApiMethod, candidates: Sequence[ApiMethod]
) -> float:
    """The query API's normalized type-scoping score on one thread, in [0, 1]."""
    scores = candidate_scores(thread, api.simple_name, candidates)
    for cs in scores:
        if cs.candidate.fqn == api.fqn:
            return cs.normalized
    raise ValueError(f"query API {api.fqn} is not in the candidate set")
