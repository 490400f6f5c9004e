"""Dataset splitting, per-API confusion counting, and macro-averaged reporting."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence, TypeVar

T = TypeVar("T")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class EvalReport:
    per_api: dict[str, tuple[float, float, float]]
    avg_precision: float
    avg_recall: float
    avg_f1: float


def split_dataset(threads: Sequence[T], seed: int) -> tuple[list[T], list[T]]:
    """Seeded shuffle, then a 2:1 train/test split (380 items -> 253/127).

    Disjoint halves whose union is the input; the same seed always produces
    the same split.
    """
    if len(threads) < 3:
        raise ValueError("need at least 3 items for a 2:1 split")
    items = list(threads)
    random.Random(seed).shuffle(items)
    cut = (2 * len(items)) // 3
    return items[:cut], items[cut:]


def prf1(c: ConfusionCounts) -> tuple[float, float, float]:
    """Precision, recall, F1; any zero denominator yields 0 for that metric."""
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(
    predictions: Mapping[str, Mapping[int, bool]],
    truths: Mapping[str, Mapping[int, bool]],
) -> EvalReport:
    """Per-API precision/recall/F1 plus unweighted averages.

    Both maps must be keyed identically, API level and thread level.
    """
    missing = sorted(set(truths) ^ set(predictions))
    if missing:
        raise ValueError(f"prediction/truth key mismatch for APIs: {', '.join(missing)}")
    per_api: dict[str, tuple[float, float, float]] = {}
    for fqn in sorted(predictions):
        pred, truth = predictions[fqn], truths[fqn]
        if set(pred) != set(truth):
            raise ValueError(f"thread key mismatch for API {fqn}")
        tp = sum(1 for tid, p in pred.items() if p and truth[tid])
        fp = sum(1 for tid, p in pred.items() if p and not truth[tid])
        fn = sum(1 for tid, p in pred.items() if not p and truth[tid])
        per_api[fqn] = prf1(ConfusionCounts(tp=tp, fp=fp, fn=fn))
    n = len(per_api)
    if n == 0:
        return EvalReport(per_api={}, avg_precision=0.0, avg_recall=0.0, avg_f1=0.0)
    return EvalReport(
        per_api=per_api,
        avg_precision=sum(v[0] for v in per_api.values()) / n,
        avg_recall=sum(v[1] for v in per_api.values()) / n,
        avg_f1=sum(v[2] for v in per_api.values()) / n,
    )


def report_records(report: EvalReport) -> list[dict]:
    """Machine-readable rows: one per API plus a trailing summary record."""
    rows: list[dict] = [
        {"api_fqn": fqn, "precision": p, "recall": r, "f1": f}
        for fqn, (p, r, f) in sorted(report.per_api.items())
    ]
    rows.append(
        {
            "summary": True,
            "apis": len(report.per_api),
            "avg_precision": report.avg_precision,
            "avg_recall": report.avg_recall,
            "avg_f1": report.avg_f1,
        }
    )
    return rows


def format_report_table(report: EvalReport, title: str = "evaluation") -> str:
    """Human-readable fixed-width table."""
    width = max([len("api")] + [len(fqn) for fqn in report.per_api])
    lines = [f"== {title} ==", f"{'api':<{width}}  {'prec':>7}  {'recall':>7}  {'f1':>7}"]
    for fqn, (p, r, f) in sorted(report.per_api.items()):
        lines.append(f"{fqn:<{width}}  {p:7.4f}  {r:7.4f}  {f:7.4f}")
    lines.append(
        f"{'macro avg':<{width}}  {report.avg_precision:7.4f}  "
        f"{report.avg_recall:7.4f}  {report.avg_f1:7.4f}"
    )
    return "\n".join(lines)
