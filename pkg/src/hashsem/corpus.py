"""Tweet records, emotion annotations and line-delimited corpus ingestion."""

from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

EMOTIONS = ("fear", "anger", "enjoyment", "sadness", "disgust", "surprise", "none")
EMOTION_TOLERANCE = 1e-6

_FIELDS = ("tweet_id", "user_id", "text", "interaction_kind", "referenced_tweet_id", "emotions")


class CorpusError(ValueError):
    """Invalid corpus content. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InteractionKind(str, Enum):
    POST = "post"
    RETWEET = "retweet"
    QUOTE = "quote"
    REPLY = "reply"


def validate_emotions(values: Sequence[float]) -> tuple[float, ...]:
    """Check a 7-element emotion array and renormalise it to sum exactly-ish to 1.

    Raises ``CorpusError`` when an entry is outside [0, 1] or the sum is off
    by more than ``EMOTION_TOLERANCE``.
    """
    if isinstance(values, (str, bytes)) or len(values) != len(EMOTIONS):
        raise CorpusError(f"emotions must have {len(EMOTIONS)} entries")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise CorpusError(f"emotion value {v!r} is not a finite number")
        if v < 0.0 or v > 1.0:
            raise CorpusError(f"emotion value {v!r} outside [0, 1]")
        out.append(float(v))
    total = math.fsum(out)
    if abs(total - 1.0) > EMOTION_TOLERANCE:
        raise CorpusError(f"emotions sum to {total!r}, expected 1")
    return normalize_emotions(out)


def normalize_emotions(values: Sequence[float]) -> tuple[float, ...]:
    """Scale non-negative values to sum to 1 exactly (under ``math.fsum``).

    Arrays that already sum to 1 come back unchanged, so the operation is
    idempotent and a written corpus reloads bit-for-bit. Rounding residue
    goes into the largest entry.
    """
    out = [float(v) for v in values]
    total = math.fsum(out)
    if total == 1.0:
        return tuple(out)
    out = [v / total for v in out]
    k = max(range(len(out)), key=out.__getitem__)
    out[k] = 1.0 - math.fsum(out[:k] + out[k + 1 :])
    # the subtraction can itself round; walk the entry by ulps until exact
    for _ in range(8):
        total = math.fsum(out)
        if total == 1.0:
            break
        out[k] = math.nextafter(out[k], -math.inf if total > 1.0 else math.inf)
    return tuple(out)


@dataclass(frozen=True, slots=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    text: str
    interaction_kind: InteractionKind = InteractionKind.POST
    referenced_tweet_id: str | None = None
    emotions: tuple[float, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.tweet_id, str) or not self.tweet_id:
            raise CorpusError("tweet_id must be a non-empty string")
        if not isinstance(self.user_id, str) or not self.user_id:
            raise CorpusError("user_id must be a non-empty string")
        if not isinstance(self.text, str):
            raise CorpusError("text must be a string")
        kind = InteractionKind(self.interaction_kind)
        object.__setattr__(self, "interaction_kind", kind)
        ref = self.referenced_tweet_id
        if kind is InteractionKind.POST:
            if ref is not None:
                raise CorpusError("a post cannot reference another tweet")
        elif not isinstance(ref, str) or not ref:
            raise CorpusError(f"{kind.value} requires referenced_tweet_id")

    def to_json(self) -> str:
        payload = {
            "tweet_id": self.tweet_id,
            "user_id": self.user_id,
            "text": self.text,
            "interaction_kind": self.interaction_kind.value,
            "referenced_tweet_id": self.referenced_tweet_id,
            "emotions": list(self.emotions) if self.emotions is not None else None,
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


@dataclass(frozen=True)
class SkippedLine:
    line: int
    reason: str


@dataclass(frozen=True)
class Corpus:
    """Records in file order. ``skipped`` lists lines dropped by lenient ingestion."""

    records: tuple[TweetRecord, ...]
    skipped: tuple[SkippedLine, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @cached_property
    def tweet_counts(self) -> Mapping[str, int]:
        return Counter(r.user_id for r in self.records)

    @cached_property
    def by_id(self) -> Mapping[str, TweetRecord]:
        return {r.tweet_id: r for r in self.records}

    @property
    def user_count(self) -> int:
        return len(self.tweet_counts)

    def user_ids(self) -> list[str]:
        return sorted(self.tweet_counts)

    def summary(self) -> dict:
        kinds = Counter(r.interaction_kind.value for r in self.records)
        return {
            "records": len(self.records),
            "users": self.user_count,
            "annotated": sum(r.emotions is not None for r in self.records),
            "kinds": {k.value: kinds.get(k.value, 0) for k in InteractionKind},
            "skipped": len(self.skipped),
            "skipped_lines": [{"line": s.line, "reason": s.reason} for s in self.skipped],
        }


def user_tweet_count(corpus: Corpus, user: str) -> int:
    """Number of records authored by ``user``, all interaction kinds."""
    return corpus.tweet_counts.get(user, 0)


def parse_record(line: str, lineno: int | None = None) -> TweetRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON ({exc.msg})", lineno) from None
    if not isinstance(obj, dict):
        raise CorpusError("record must be a JSON object", lineno)
    unknown = set(obj) - set(_FIELDS)
    if unknown:
        raise CorpusError(f"unknown fields {sorted(unknown)}", lineno)
    try:
        kind = obj.get("interaction_kind", "post")
        if kind not in {k.value for k in InteractionKind}:
            raise CorpusError(f"unknown interaction_kind {kind!r}")
        emotions = obj.get("emotions")
        if emotions is not None:
            if not isinstance(emotions, list):
                raise CorpusError("emotions must be a list or null")
            emotions = validate_emotions(emotions)
        return TweetRecord(
            tweet_id=obj.get("tweet_id"),
            user_id=obj.get("user_id"),
            text=obj.get("text"),
            interaction_kind=kind,
            referenced_tweet_id=obj.get("referenced_tweet_id"),
            emotions=emotions,
        )
    except CorpusError as exc:
        if exc.line is None and lineno is not None:
            raise CorpusError(exc.reason, lineno) from None
        raise


def _parse_chunk(chunk: list[tuple[int, str]]) -> list[tuple[int, TweetRecord | None, str | None]]:
    out = []
    for lineno, line in chunk:
        try:
            out.append((lineno, parse_record(line, lineno), None))
        except CorpusError as exc:
            out.append((lineno, None, exc.reason))
    return out


def _chunks(items: list, n: int) -> list[list]:
    size = max(1, math.ceil(len(items) / n))
    return [items[i : i + size] for i in range(0, len(items), size)]


def ingest(path: str | Path, strict: bool = False, workers: int = 1) -> Corpus:
    """Load a line-delimited JSON corpus.

    Blank lines are ignored. With ``strict`` the first invalid line raises
    ``CorpusError``; otherwise invalid lines (including duplicate tweet ids)
    are skipped and listed in ``Corpus.skipped``. Parsing may fan out over
    ``workers`` processes; record order always follows the file.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [(i, ln) for i, ln in enumerate(fh, start=1) if ln.strip()]

    if workers > 1 and len(lines) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parsed = [p for part in pool.map(_parse_chunk, _chunks(lines, workers)) for p in part]
    else:
        parsed = _parse_chunk(lines)

    records: list[TweetRecord] = []
    skipped: list[SkippedLine] = []
    seen: set[str] = set()
    for lineno, rec, err in parsed:
        if rec is not None and rec.tweet_id in seen:
            err = f"duplicate tweet_id {rec.tweet_id!r}"
            rec = None
        if rec is None:
            if strict:
                raise CorpusError(err, lineno)
            skipped.append(SkippedLine(lineno, err))
            continue
        seen.add(rec.tweet_id)
        records.append(rec)
    return Corpus(tuple(records), tuple(skipped))


def write_corpus(records: Iterable[TweetRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")
