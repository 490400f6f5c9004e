"""Joint relevance score: convex combination of the syntactic and semantic scores.

C = x * A + (1 - x) * B, with a thread counted as relevant when C is strictly
larger than the threshold t (0.5 by default).  The weighting factor x is picked
by grid search over {0, 0.1, ..., 1.0}, maximizing macro-averaged F1 on
training data; ties go to the larger x so the deterministic syntactic side
wins when the semantic side adds nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .evaluation import ConfusionCounts, prf1

DEFAULT_GRID: tuple[float, ...] = tuple(round(i / 10, 1) for i in range(11))
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class FusionConfig:
    x: float = 0.5
    t: float = DEFAULT_THRESHOLD
    grid: tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0 or not 0.0 <= self.t <= 1.0:
            raise ValueError("x and t must lie in [0, 1]")
        if not self.grid:
            raise ValueError("grid must be non-empty")


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def joint_score(a: float, b: float, x: float) -> float:
    """C = x * A + (1 - x) * B; all inputs and the result lie in [0, 1]."""
    _check_unit("A", a)
    _check_unit("B", b)
    _check_unit("x", x)
    return x * a + (1.0 - x) * b


def classify_thread(c: float, t: float = DEFAULT_THRESHOLD) -> bool:
    """Relevant iff the joint score is strictly larger than the threshold."""
    return c > t


def macro_f1(
    records: Mapping[str, Sequence[tuple[float, float, bool]]], x: float, t: float
) -> float:
    """Macro-averaged F1 of the fused classifier over per-API (A, B, truth) rows."""
    if not records:
        return 0.0
    f1_sum = 0.0
    for rows in records.values():
        tp = fp = fn = 0
        for a, b, truth in rows:
            predicted = classify_thread(joint_score(a, b, x), t)
            if predicted and truth:
                tp += 1
            elif predicted and not truth:
                fp += 1
            elif not predicted and truth:
                fn += 1
        f1_sum += prf1(ConfusionCounts(tp=tp, fp=fp, fn=fn))[2]
    return f1_sum / len(records)


def tune_weighting_factor(
    records: Mapping[str, Sequence[tuple[float, float, bool]]],
    grid: Sequence[float] = DEFAULT_GRID,
    t: float = DEFAULT_THRESHOLD,
) -> float:
    """Grid-search x maximizing macro-F1 on the training records.

    records maps each API fqn to its (A, B, truth) rows.  Ties break toward
    the larger x.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    best_x, best_f1 = None, -1.0
    for x in grid:
        _check_unit("grid value", x)
        score = macro_f1(records, x, t)
        if score > best_f1 or (score == best_f1 and (best_x is None or x > best_x)):
            best_x, best_f1 = x, score
    return best_x
