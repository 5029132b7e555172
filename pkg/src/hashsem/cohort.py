"""Top-decile improvement cohort and hashtag occurrence-rate comparison."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import InteractionSets
from .text import HashtagIndex


class CohortError(ValueError):
    pass


@dataclass(frozen=True)
class ImprovementRecord:
    user_id: str
    baseline_mae: float
    semantic_mae: float
    improvement: float


@dataclass(frozen=True)
class OccurrenceRateRow:
    hashtag: str
    bottom_rate: float
    top_rate: float
    delta: float


def score_improvement(
    user_ids: Sequence[str],
    baseline_predictions: np.ndarray,
    semantic_predictions: np.ndarray,
    targets: np.ndarray,
) -> list[ImprovementRecord]:
    """Per-user mean absolute error over all emotion columns, for both models."""
    b = np.asarray(baseline_predictions, dtype=np.float64)
    s = np.asarray(semantic_predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if not (b.shape == s.shape == y.shape) or b.ndim != 2 or b.shape[0] != len(user_ids):
        raise CohortError("predictions, targets and users are misaligned")
    b_mae = np.abs(b - y).mean(axis=1)
    s_mae = np.abs(s - y).mean(axis=1)
    return [
        ImprovementRecord(u, float(bm), float(sm), float(bm) - float(sm))
        for u, bm, sm in zip(user_ids, b_mae, s_mae)
    ]


@dataclass(frozen=True)
class CohortReport:
    top_users: tuple[str, ...]
    bottom_users: tuple[str, ...]
    rows: list[OccurrenceRateRow]

    def to_dict(self) -> dict:
        return {
            "top_size": len(self.top_users),
            "bottom_size": len(self.bottom_users),
            "rows": [
                {"hashtag": r.hashtag, "bottom_rate": r.bottom_rate, "top_rate": r.top_rate, "delta": r.delta}
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    def table(self) -> str:
        width = max([len("Trendy hashtag")] + [len(r.hashtag) for r in self.rows])
        out = [f"{'Trendy hashtag':<{width}}  {'Bottom 90% rate':>15}  {'Top 10% rate':>12}"]
        for r in self.rows:
            out.append(f"{r.hashtag.capitalize():<{width}}  {r.bottom_rate:>15.3f}  {r.top_rate:>12.3f}")
        return "\n".join(out) + "\n"


def split_top_decile(records: Sequence[ImprovementRecord]) -> tuple[list[str], list[str]]:
    """Most-improved ceil(10%) of users vs the rest; ties ordered by user id."""
    ranked = sorted(records, key=lambda r: (-r.improvement, r.user_id))
    k = (len(ranked) + 9) // 10
    return [r.user_id for r in ranked[:k]], [r.user_id for r in ranked[k:]]


def cohort_analysis(
    records: Sequence[ImprovementRecord],
    inter: InteractionSets,
    index: HashtagIndex | Sequence[str] | None = None,
    top_k: int = 10,
) -> CohortReport:
    if len(records) < 10:
        raise CohortError(f"need at least 10 scored users, got {len(records)}")
    labels = tuple(index.hashtags if isinstance(index, HashtagIndex) else (index or inter.hashtags))
    if len(labels) != inter.n:
        raise CohortError("hashtag index does not match interaction sets")
    missing = [r.user_id for r in records if r.user_id not in inter.sets]
    if missing:
        raise CohortError(f"user {missing[0]!r} has no interaction set")
    top, bottom = split_top_decile(records)

    def counts(users):
        c = np.zeros(inter.n, dtype=np.int64)
        for u in users:
            for t in inter.sets[u]:
                c[t] += 1
        return c

    top_c, bot_c = counts(top), counts(bottom)
    rows = []
    for i, h in enumerate(labels):
        tr = top_c[i] / len(top)
        br = bot_c[i] / len(bottom) if bottom else 0.0
        rows.append((i, OccurrenceRateRow(h, float(br), float(tr), float(tr) - float(br))))
    rows.sort(key=lambda x: (-x[1].delta, x[0]))
    return CohortReport(tuple(top), tuple(bottom), [r for _, r in rows[:top_k]])


def top_decile_rates(
    records: Sequence[ImprovementRecord],
    inter: InteractionSets,
    index: HashtagIndex | Sequence[str] | None = None,
    top_k: int = 10,
) -> list[OccurrenceRateRow]:
    """Hashtags whose direct-interaction rate rises most from the rest to the top decile."""
    return cohort_analysis(records, inter, index, top_k).rows
