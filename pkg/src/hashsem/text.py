"""Tweet tokenisation, hashtag counting and trendy-hashtag selection."""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus

URL_RE = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)
# a word is letters/digits, underscores allowed only between them
TOKEN_RE = re.compile(r"#?[^\W_]+(?:_+[^\W_]+)*")

STOPWORDS_VERSION = "fr-v1"


class NoHashtagsError(ValueError):
    pass


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read one stopword per line ('#' lines are comments); default is the bundled French list."""
    if path is None:
        text = resources.files("hashsem.data").joinpath("stopwords_fr.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(unicodedata.normalize("NFC", line.lower()))
    return frozenset(words)


def _digit_only(body: str) -> bool:
    return body.replace("_", "").isdigit()


def tokenize(text: str, stopwords: Iterable[str] = frozenset()) -> list[str]:
    """Lowercase word tokens; hashtags keep their leading '#'.

    URLs go first, then the text is NFC-normalised and lowercased. Anything
    that is not a letter, digit or inner underscore separates tokens, so
    "l'europe" yields "l" and "europe". Digit-only tokens are dropped, and
    bare words found in ``stopwords`` are dropped (hashtags are kept).
    """
    text = URL_RE.sub(" ", text)
    text = unicodedata.normalize("NFC", text).lower()
    out = []
    for tok in TOKEN_RE.findall(text):
        body = tok[1:] if tok[0] == "#" else tok
        if _digit_only(body):
            continue
        if tok[0] != "#" and tok in stopwords:
            continue
        out.append(tok)
    return out


def is_valid_token(tok: str, stopwords: Iterable[str] = frozenset()) -> bool:
    """True if ``tok`` could have been produced by :func:`tokenize`."""
    if not tok:
        return False
    body = tok[1:] if tok[0] == "#" else tok
    if not body or TOKEN_RE.fullmatch(body) is None or "#" in body:
        return False
    if body != unicodedata.normalize("NFC", body).lower():
        return False
    if URL_RE.search(tok) or _digit_only(body):
        return False
    return tok[0] == "#" or tok not in stopwords


def _tokenize_chunk(args):
    texts, stopwords = args
    return [tuple(tokenize(t, stopwords)) for t in texts]


def tokenize_corpus(
    corpus: Corpus, stopwords: Iterable[str], workers: int = 1
) -> list[tuple[str, ...]]:
    """Token tuples aligned with ``corpus.records``."""
    stopwords = frozenset(stopwords)
    texts = [r.text for r in corpus.records]
    if workers <= 1 or len(texts) < 2:
        return _tokenize_chunk((texts, stopwords))
    size = math.ceil(len(texts) / workers)
    parts = [(texts[i : i + size], stopwords) for i in range(0, len(texts), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [toks for part in pool.map(_tokenize_chunk, parts) for toks in part]


@dataclass(frozen=True)
class HashtagStats:
    """Per-hashtag tweet counts (keys without '#')."""

    counts: Mapping[str, int]
    mean_count: float = field(init=False)

    def __post_init__(self):
        n = len(self.counts)
        object.__setattr__(self, "mean_count", sum(self.counts.values()) / n if n else 0.0)

    def ranked(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


def count_hashtags(
    corpus: Corpus,
    stopwords: Iterable[str] = frozenset(),
    tokens: Sequence[Sequence[str]] | None = None,
    workers: int = 1,
) -> HashtagStats:
    """Count, for each hashtag, the tweets that contain it at least once."""
    if tokens is None:
        tokens = tokenize_corpus(corpus, stopwords, workers)
    counts: Counter[str] = Counter()
    for toks in tokens:
        counts.update({t[1:] for t in toks if t[0] == "#"})
    return HashtagStats(dict(sorted(counts.items())))


@dataclass(frozen=True)
class HashtagIndex:
    hashtags: tuple[str, ...]
    positions: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "positions", {h: i for i, h in enumerate(self.hashtags)})
        if len(self.positions) != len(self.hashtags):
            raise ValueError("duplicate hashtag in index")

    def __len__(self) -> int:
        return len(self.hashtags)

    def __getitem__(self, i: int) -> str:
        return self.hashtags[i]


def select_trendy(stats: HashtagStats) -> HashtagIndex:
    """Keep hashtags whose count is at least the mean count, most frequent first."""
    if not stats.counts:
        raise NoHashtagsError("no hashtags found in corpus")
    n = len(stats.counts)
    total = sum(stats.counts.values())
    # integer comparison: count >= total / n
    kept = [h for h, c in stats.ranked() if c * n >= total]
    return HashtagIndex(tuple(kept))


def write_stats(stats: HashtagStats, path: str | Path) -> None:
    lines = [f"# mean={stats.mean_count!r}\tdistinct={len(stats.counts)}", "hashtag\tcount"]
    lines += [f"{h}\t{c}" for h, c in stats.ranked()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_stats(path: str | Path) -> HashtagStats:
    lines = Path(path).read_text("utf-8").splitlines()
    if len(lines) < 2 or not lines[0].startswith("# mean=") or lines[1] != "hashtag\tcount":
        raise ValueError(f"{path}: not a hashtag stats file")
    counts = {}
    for ln in lines[2:]:
        h, c = ln.split("\t")
        counts[h] = int(c)
    stats = HashtagStats(counts)
    header_mean = float(lines[0].split("\t")[0][len("# mean=") :])
    if counts and header_mean != stats.mean_count:
        raise ValueError(f"{path}: header mean {header_mean} disagrees with counts")
    return stats
