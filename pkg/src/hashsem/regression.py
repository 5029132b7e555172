"""Emotion targets, per-emotion OLS fits and the two-model F comparison."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .corpus import EMOTIONS, Corpus
from .enrich import EnrichmentMatrix, enrich_all
from .graph import SemanticNetwork, build_interactions
from .text import HashtagIndex, load_stopwords

DEFAULT_MIN_TWEETS = 10
DEFAULT_ALPHA = 0.05


class RegressionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmotionTargets:
    """Per-user emotion distributions (rows sum to 1) and tweet counts."""

    user_ids: tuple[str, ...]
    values: np.ndarray
    tweet_counts: np.ndarray

    def __len__(self) -> int:
        return len(self.user_ids)

    def filter(self, min_tweets: int) -> "EmotionTargets":
        keep = self.tweet_counts >= min_tweets
        return EmotionTargets(
            tuple(u for u, k in zip(self.user_ids, keep) if k), self.values[keep], self.tweet_counts[keep]
        )


def aggregate_emotions(corpus: Corpus) -> EmotionTargets:
    """Sum each user's annotated emotion arrays and divide by the 1-norm.

    Users with no annotated tweets are left out. ``tweet_counts`` counts all
    of a user's records, annotated or not.
    """
    sums: dict[str, np.ndarray] = {}
    for rec in corpus.records:
        if rec.emotions is None:
            continue
        acc = sums.get(rec.user_id)
        if acc is None:
            acc = sums[rec.user_id] = np.zeros(len(EMOTIONS))
        acc += rec.emotions
    users = sorted(u for u, s in sums.items() if s.sum() > 0)
    values = np.array([sums[u] / np.abs(sums[u]).sum() for u in users]).reshape(len(users), len(EMOTIONS))
    counts = np.array([corpus.tweet_counts[u] for u in users], dtype=np.int64)
    return EmotionTargets(tuple(users), values, counts)


def build_targets(corpus: Corpus, min_tweets: int = DEFAULT_MIN_TWEETS) -> EmotionTargets:
    targets = aggregate_emotions(corpus).filter(min_tweets)
    if len(targets) == 0:
        raise RegressionError(f"no user has >= {min_tweets} tweets with emotion annotations")
    return targets


def write_targets(targets: EmotionTargets, path: str | Path) -> None:
    lines = ["\t".join(("user_id", "tweet_count") + EMOTIONS)]
    for u, k, row in zip(targets.user_ids, targets.tweet_counts, targets.values):
        lines.append("\t".join([u, str(int(k))] + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_targets(path: str | Path) -> EmotionTargets:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0].split("\t")[:2] != ["user_id", "tweet_count"]:
        raise ValueError(f"{path}: not a targets file")
    users, counts, rows = [], [], []
    for ln in lines[1:]:
        parts = ln.split("\t")
        users.append(parts[0])
        counts.append(int(parts[1]))
        rows.append([float(x) for x in parts[2:]])
    return EmotionTargets(
        tuple(users),
        np.array(rows, dtype=np.float64).reshape(len(users), len(EMOTIONS)),
        np.array(counts, dtype=np.int64),
    )


@dataclass(frozen=True, eq=False)
class FitResult:
    emotion: str | None
    variant: str | None
    coefficients: np.ndarray  # intercept first
    r_squared: float
    residual_sum_squares: float
    sample_count: int
    feature_count: int
    degenerate: bool = False  # target had zero variance

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.coefficients[0] + np.asarray(features) @ self.coefficients[1:]


def fit_ols(
    features: np.ndarray, target: np.ndarray, emotion: str | None = None, variant: str | None = None
) -> FitResult:
    """Least squares with an intercept; rank-deficient designs get the minimum-norm solution."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise RegressionError("features and target are not aligned")
    m, p = X.shape
    if m < 2:
        raise RegressionError("need at least two samples")
    design = np.hstack([np.ones((m, 1)), X])
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    resid = y - design @ coef
    rss = float(resid @ resid)
    dev = y - y.mean()
    tss = float(dev @ dev)
    # the mean of a constant vector can be off by an ulp, so test the values
    if np.all(y == y[0]):
        return FitResult(emotion, variant, coef, 0.0, rss, m, p, degenerate=True)
    return FitResult(emotion, variant, coef, 1.0 - rss / tss, rss, m, p)


@dataclass(frozen=True)
class ComparisonResult:
    emotion: str | None
    f_statistic: float  # RSS(first) / RSS(second)
    p_value: float
    winner: str  # variant label or "tie"
    dof: int


def compare_models(fit_a: FitResult, fit_b: FitResult, alpha: float = DEFAULT_ALPHA) -> ComparisonResult:
    """F ratio of residual sums of squares between two same-size models.

    ``f_statistic`` is RSS(a) / RSS(b). Both models have d = samples -
    features - 1 residual degrees of freedom; the p-value is the upper tail
    of F(d, d) at the worse/better ratio, so it does not depend on argument
    order. The better model wins when p < alpha.
    """
    if fit_a.sample_count != fit_b.sample_count or fit_a.feature_count != fit_b.feature_count:
        raise RegressionError("models differ in sample count or feature count")
    if fit_a.emotion != fit_b.emotion:
        raise RegressionError("models predict different emotions")
    d = fit_a.sample_count - fit_a.feature_count - 1
    if d < 1:
        raise RegressionError(f"no residual degrees of freedom (d={d})")
    ra, rb = fit_a.residual_sum_squares, fit_b.residual_sum_squares
    label_a = fit_a.variant or "a"
    label_b = fit_b.variant or "b"

    if ra == rb:
        return ComparisonResult(fit_a.emotion, 1.0, 0.5, "tie", d)
    # worse / better computed once, so swapping operands swaps F and 1/F exactly
    if ra > rb:
        ratio = math.inf if rb == 0.0 else ra / rb
        f_stat = ratio
        better = label_b
    else:
        ratio = math.inf if ra == 0.0 else rb / ra
        f_stat = 0.0 if math.isinf(ratio) else 1.0 / ratio
        better = label_a
    p = 0.0 if math.isinf(ratio) else float(stats.f.sf(ratio, d, d))
    winner = better if p < alpha else "tie"
    return ComparisonResult(fit_a.emotion, f_stat, p, winner, d)


@dataclass(frozen=True)
class ExperimentConfig:
    min_tweets: int = DEFAULT_MIN_TWEETS
    alpha: float = DEFAULT_ALPHA
    workers: int = 1


@dataclass(eq=False)
class RegressionReport:
    user_ids: tuple[str, ...]
    baseline: list[FitResult]
    semantic: list[FitResult]
    comparisons: list[ComparisonResult]
    alpha: float
    predictions: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def sample_count(self) -> int:
        return len(self.user_ids)

    def semantic_wins(self) -> int:
        return sum(c.winner == "semantic" for c in self.comparisons)

    def to_dict(self) -> dict:
        rows = []
        for b, s, c in zip(self.baseline, self.semantic, self.comparisons):
            rows.append(
                {
                    "emotion": b.emotion,
                    "baseline_r2": b.r_squared,
                    "semantic_r2": s.r_squared,
                    "baseline_rss": b.residual_sum_squares,
                    "semantic_rss": s.residual_sum_squares,
                    "f_statistic": c.f_statistic,
                    "p_value": c.p_value,
                    "winner": c.winner,
                    "degenerate": b.degenerate or s.degenerate,
                }
            )
        return {
            "sample_count": self.sample_count,
            "feature_count": self.baseline[0].feature_count if self.baseline else 0,
            "dof": self.comparisons[0].dof if self.comparisons else 0,
            "alpha": self.alpha,
            "semantic_wins": self.semantic_wins(),
            "emotions": rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        out = [f"{'Emotion':<10} {'Baseline R2':>11} {'Semantic R2':>11}  Sig"]
        for b, s, c in zip(self.baseline, self.semantic, self.comparisons):
            mark = "*" if c.winner == "semantic" else ("+" if c.winner == "baseline" else "")
            out.append(f"{b.emotion.capitalize():<10} {b.r_squared:>11.3f} {s.r_squared:>11.3f}  {mark}".rstrip())
        out.append(f"(*: semantic > baseline, +: baseline > semantic; p < {self.alpha:g}; n = {self.sample_count})")
        return "\n".join(out) + "\n"


def run_regressions(
    targets: EmotionTargets,
    semantic: EnrichmentMatrix,
    baseline: EnrichmentMatrix,
    alpha: float = DEFAULT_ALPHA,
    workers: int = 1,
) -> RegressionReport:
    """Fit every emotion on both feature sets and compare the pairs."""
    users = targets.user_ids
    if not users:
        raise RegressionError("no target users")
    Xs = semantic.take(users)
    Xb = baseline.take(users)
    if Xs.shape[1] == 0 or Xb.shape[1] == 0:
        raise RegressionError("empty feature matrix")

    def one(k):
        y = targets.values[:, k]
        fb = fit_ols(Xb, y, EMOTIONS[k], "baseline")
        fs = fit_ols(Xs, y, EMOTIONS[k], "semantic")
        return fb, fs, compare_models(fb, fs, alpha)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(EMOTIONS))))
    else:
        results = [one(k) for k in range(len(EMOTIONS))]
    report = RegressionReport(
        users,
        [r[0] for r in results],
        [r[1] for r in results],
        [r[2] for r in results],
        alpha,
    )
    report.predictions = {
        "baseline": np.column_stack([f.predict(Xb) for f in report.baseline]),
        "semantic": np.column_stack([f.predict(Xs) for f in report.semantic]),
    }
    return report


def run_experiment(
    corpus: Corpus,
    network: SemanticNetwork,
    config: ExperimentConfig = ExperimentConfig(),
    stopwords=None,
) -> RegressionReport:
    """Whole regression stage from a corpus and a (pruned) network."""
    if network.hashtags is None:
        raise RegressionError("network carries no hashtag labels")
    stopwords = load_stopwords() if stopwords is None else stopwords
    targets = build_targets(corpus, config.min_tweets)
    inter = build_interactions(corpus, HashtagIndex(network.hashtags), stopwords)
    sem = enrich_all(inter, network, "semantic", targets.user_ids, config.workers)
    base = enrich_all(inter, network, "baseline", targets.user_ids, config.workers)
    return run_regressions(targets, sem, base, config.alpha, config.workers)


def write_predictions(user_ids: Sequence[str], preds: np.ndarray, path: str | Path) -> None:
    lines = ["\t".join(("user_id",) + EMOTIONS)]
    for u, row in zip(user_ids, preds):
        lines.append("\t".join([u] + [repr(float(v)) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0].split("\t")[0] != "user_id":
        raise ValueError(f"{path}: not a predictions file")
    users, rows = [], []
    for ln in lines[1:]:
        parts = ln.split("\t")
        users.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    return tuple(users), np.array(rows, dtype=np.float64).reshape(len(users), len(EMOTIONS))
