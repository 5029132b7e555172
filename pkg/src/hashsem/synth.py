"""
Synthetic corpora with a planted hashtag hierarchy and emotion signal.

The generator draws a random tree over ``n_hashtags`` hashtags (a hub at node
0, one subtree per community). Every user picks an anchor hashtag in one
community, grows it along about ``interest_growth`` random tree steps, and
lets interest spill over to tree neighbours with probability ``spillover``.
Spillover is what makes co-audience weights concentrate on tree edges.

Each user's emotion propensity is a linear read-out of their tree-diffused
interest: on the true tree, every hashtag t the user touched contributes 1 at
t and w(t, i) / c(t) at each tree neighbour i (co-audience over audience,
measured on the generated sets), the sum is scaled to unit L2 norm, and the
result is dotted with per-hashtag emotion loadings. Loadings combine a tilt
shared by all hashtags (weight ``shared_tilt``), a community component and
per-hashtag jitter. The read-out is scaled so 98% of users stay inside the
simplex; the rest are clipped. Tweets then carry

    signal_strength * propensity + (1 - signal_strength) * Dirichlet(1)

with a log-normal jitter of scale ``noise_level``, renormalised to sum 1.
The pipeline never sees the tree; it has to recover it from co-audience.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import EMOTIONS, Corpus, InteractionKind, TweetRecord, normalize_emotions, write_corpus
from .text import load_stopwords

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"

_FILLER = (
    "vote débat soir candidat élection campagne président programme meeting sondage "
    "réforme gouvernement pays peuple avenir question politique discours premier tour "
    "second résultat électeurs bureau projet idée voix semaine demain enfin vraiment "
    "toujours jamais encore bien très trop plus moins merci bravo honte incroyable "
    "le la les de des du et pour qui que dans sur avec une un est pas ce"
).split()

# zero-sum, every entry well away from 0
_SHARED_TILT = np.array([1.5, 1.2, 0.9, -0.6, -0.9, -1.0, -1.1])


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_hashtags: int = 40
    n_users: int = 2000
    tweets_per_user: tuple[int, int] = (8, 30)
    community_count: int = 4
    signal_strength: float = 0.7
    noise_level: float = 0.2
    spillover: float = 0.35
    interest_growth: float = 1.5
    shared_tilt: float = 3.0
    rare_rate: float = 0.05
    reference_rate: float = 0.25
    annotated_fraction: float = 0.9

    def __post_init__(self):
        lo, hi = self.tweets_per_user
        if self.n_hashtags < 2 or self.n_users < 1 or self.community_count < 1:
            raise SynthConfigError("counts must be positive (n_hashtags >= 2)")
        if self.community_count > self.n_hashtags - 1:
            raise SynthConfigError("more communities than non-hub hashtags")
        if not 1 <= lo <= hi:
            raise SynthConfigError("tweets_per_user must satisfy 1 <= lo <= hi")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise SynthConfigError("signal_strength must be in [0, 1]")
        if self.noise_level < 0 or self.interest_growth < 0 or self.shared_tilt < 0:
            raise SynthConfigError("noise_level, interest_growth and shared_tilt must be >= 0")
        for name in ("spillover", "rare_rate", "reference_rate", "annotated_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SynthConfigError(f"{name} must be in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise SynthConfigError("seed must be a 64-bit unsigned integer")


@dataclass(eq=False)
class SynthLedger:
    """Ground truth for one generated corpus."""

    hashtags: tuple[str, ...]
    parent: np.ndarray  # tree parent per hashtag, -1 at the hub
    community: np.ndarray
    user_sets: dict[str, frozenset[str]]
    user_community: dict[str, int]
    propensities: dict[str, np.ndarray]
    hashtag_counts: dict[str, int]  # every hashtag, rare ones included
    tweet_counts: dict[str, int]
    config: SynthConfig = field(default_factory=SynthConfig)

    def tree_edges(self) -> set[tuple[str, str]]:
        return {
            tuple(sorted((self.hashtags[i], self.hashtags[p])))
            for i, p in enumerate(self.parent)
            if p >= 0
        }

    def to_json(self) -> str:
        payload = {
            "config": asdict(self.config),
            "hashtags": list(self.hashtags),
            "parent": self.parent.tolist(),
            "community": self.community.tolist(),
            "users": {
                u: {
                    "community": self.user_community[u],
                    "hashtags": sorted(self.user_sets[u]),
                    "tweets": self.tweet_counts[u],
                    "propensity": self.propensities[u].tolist(),
                }
                for u in sorted(self.user_sets)
            },
            "hashtag_counts": dict(sorted(self.hashtag_counts.items())),
        }
        return json.dumps(payload, ensure_ascii=False, indent=1) + "\n"


def _make_names(rng: np.random.Generator, count: int, syllables: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < count:
        name = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if name not in taken:
            taken.add(name)
            out.append(name)
    return out


def _build_tree(rng, n, communities):
    community = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    blocks = np.array_split(np.arange(1, n), communities)
    for c, block in enumerate(blocks):
        community[block] = c
        parent[block[0]] = 0
        for k in range(1, len(block)):
            parent[block[k]] = block[rng.integers(k)]
    return parent, community


def _diffused_interest(sets, parent, n):
    """Unit-norm tree-diffused interest per user, from the generated sets."""
    nbrs = [[] for _ in range(n)]
    for i, p in enumerate(parent):
        if p >= 0:
            nbrs[i].append(int(p))
            nbrs[int(p)].append(i)
    audience = np.zeros(n)
    co = {}
    for s in sets:
        for t in s:
            audience[t] += 1
            for i in nbrs[t]:
                if i in s and t < i:
                    co[(t, i)] = co.get((t, i), 0) + 1
    out = np.zeros((len(sets), n))
    for u, s in enumerate(sets):
        for t in sorted(s):
            out[u, t] += 1.0
            for i in nbrs[t]:
                w = co.get((min(t, i), max(t, i)), 0)
                out[u, i] += w / audience[t]
        out[u] /= np.linalg.norm(out[u])
    return out


def generate(config: SynthConfig = SynthConfig()) -> tuple[Corpus, SynthLedger]:
    rng = np.random.default_rng(config.seed)
    n = config.n_hashtags
    stop = load_stopwords()
    taken = set(stop) | set(_FILLER)
    names = _make_names(rng, n, 3, taken)
    parent, community = _build_tree(rng, n, config.community_count)
    nbrs = [[] for _ in range(n)]
    for i, p in enumerate(parent):
        if p >= 0:
            nbrs[i].append(int(p))
            nbrs[int(p)].append(i)
    popularity = rng.gamma(2.0, 1.0, size=n) + 0.3

    members = [np.flatnonzero(community == c) for c in range(config.community_count)]
    users = [f"u{k:05d}" for k in range(config.n_users)]
    user_comm = rng.integers(config.community_count, size=config.n_users)
    sets: list[frozenset[int]] = []
    for u in range(config.n_users):
        pool = members[user_comm[u]]
        p = popularity[pool] / popularity[pool].sum()
        anchor = int(rng.choice(pool, p=p))
        grown = [anchor]
        for _ in range(rng.poisson(config.interest_growth)):
            m = grown[rng.integers(len(grown))]
            nxt = nbrs[m][rng.integers(len(nbrs[m]))]
            if nxt not in grown:
                grown.append(nxt)
        s = set(grown)
        for t in sorted(grown):
            for i in nbrs[t]:
                if rng.random() < config.spillover:
                    s.add(i)
        sets.append(frozenset(s))

    # per-hashtag emotion loadings, zero-sum across emotions: a tilt shared by
    # every hashtag, a community component and per-hashtag jitter
    comm_load = rng.normal(size=(config.community_count, len(EMOTIONS)))
    load = (
        config.shared_tilt * rng.permutation(_SHARED_TILT)
        + comm_load[community]
        + 0.6 * rng.normal(size=(n, len(EMOTIONS)))
    )
    load -= load.mean(axis=1, keepdims=True)
    dev = _diffused_interest(sets, parent, n) @ load
    base = 1.0 / len(EMOTIONS)
    # scale so that 98% of users stay inside the simplex, clip the rest
    spread = float(np.quantile(-dev, 0.98))
    scale = 0.9 * base / spread if spread > 0 else 0.0
    propensity = np.maximum(base + scale * dev, 0.05 * base)
    propensity /= propensity.sum(axis=1, keepdims=True)

    records: list[TweetRecord] = []
    hashtag_counts: dict[str, int] = {h: 0 for h in names}
    single_pool: list[list[int]] = [[] for _ in range(n)]  # record indices mentioning only t
    hash_of: list[frozenset[str]] = []
    rare_taken = set(taken) | set(names)
    lo, hi = config.tweets_per_user
    s_strength = config.signal_strength
    tweet_counts = {}

    def filler(k):
        return [_FILLER[j] for j in rng.integers(len(_FILLER), size=k)]

    def mention(t):
        word = names[t].capitalize() if rng.random() < 0.2 else names[t]
        return ("#" + word, True) if rng.random() < 0.7 else (word, False)

    for u, uid in enumerate(users):
        T = int(rng.integers(lo, hi + 1))
        tweet_counts[uid] = T
        order = [int(t) for t in rng.permutation(sorted(sets[u]))]
        plan: list[list[int]] = []
        for j in range(T):
            if j < len(order):
                plan.append(order[j:] if j == T - 1 else [order[j]])
            else:
                size = int(rng.choice([0, 1, 2], p=[0.1, 0.6, 0.3]))
                size = min(size, len(order))
                plan.append([int(t) for t in rng.choice(order, size=size, replace=False)] if size else [])

        for tags in plan:
            tid = f"t{len(records):07d}"
            kind = InteractionKind.POST
            ref = None
            if len(tags) == 1 and single_pool[tags[0]] and rng.random() < config.reference_rate:
                kind = [InteractionKind.RETWEET, InteractionKind.QUOTE, InteractionKind.REPLY][rng.integers(3)]
                cands = single_pool[tags[0]]
                ref = records[cands[rng.integers(len(cands))]].tweet_id
            hashed: set[str] = set()
            if kind is InteractionKind.RETWEET:
                orig = records[int(ref[1:])]
                text = "RT " + orig.text
                hashed = set(hash_of[int(ref[1:])])
            else:
                words = filler(int(rng.integers(3, 9)))
                if kind is not InteractionKind.REPLY:
                    for t in tags:
                        tok, is_hash = mention(t)
                        words.insert(int(rng.integers(len(words) + 1)), tok)
                        if is_hash:
                            hashed.add(names[t])
                if rng.random() < 0.1:
                    words.append(str(int(rng.integers(1, 3000))))
                if rng.random() < 0.15:
                    words.append("https://t.co/" + "".join(_make_names(rng, 1, 3, set())))
                rare = None
                if kind is InteractionKind.POST and rng.random() < config.rare_rate:
                    rare = _make_names(rng, 1, 4, rare_taken)[0]
                    words.append("#" + rare)
                    hashed.add(rare)
                    hashtag_counts[rare] = 0
                text = " ".join(words)
                if kind is InteractionKind.POST and len(tags) == 1 and rare is None:
                    single_pool[tags[0]].append(len(records))
            for h in hashed:
                hashtag_counts[h] += 1

            emotions = None
            if rng.random() < config.annotated_fraction:
                raw = s_strength * propensity[u] + (1.0 - s_strength) * rng.dirichlet(np.ones(len(EMOTIONS)))
                if config.noise_level > 0:
                    raw = raw * np.exp(config.noise_level * rng.normal(size=len(EMOTIONS)))
                emotions = normalize_emotions(raw)
            records.append(TweetRecord(tid, uid, text, kind, ref, emotions))
            hash_of.append(frozenset(hashed))

    ledger = SynthLedger(
        hashtags=tuple(names),
        parent=parent,
        community=community,
        user_sets={uid: frozenset(names[t] for t in sets[u]) for u, uid in enumerate(users)},
        user_community={uid: int(user_comm[u]) for u, uid in enumerate(users)},
        propensities={uid: propensity[u] for u, uid in enumerate(users)},
        hashtag_counts=hashtag_counts,
        tweet_counts=tweet_counts,
        config=config,
    )
    return Corpus(tuple(records)), ledger


def write_synth(corpus: Corpus, ledger: SynthLedger, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.jsonl"
    ledger_path = out / "ledger.json"
    write_corpus(corpus.records, corpus_path)
    ledger_path.write_text(ledger.to_json(), encoding="utf-8")
    return corpus_path, ledger_path
