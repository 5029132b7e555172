"""User-hashtag interactions, co-audience projection, pruning and export."""

from __future__ import annotations

import hashlib
import json
import math
import xml.etree.ElementTree as ET
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .corpus import Corpus
from .text import HashtagIndex, tokenize_corpus


@dataclass(frozen=True, eq=False)
class InteractionSets:
    """Each user's set of trendy-hashtag indices, plus per-hashtag audience counts."""

    hashtags: tuple[str, ...]
    sets: Mapping[str, frozenset[int]]
    audience: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.hashtags)
        ordered = {u: frozenset(self.sets[u]) for u in sorted(self.sets)}
        aud = np.zeros(n, dtype=np.int64)
        for s in ordered.values():
            for t in s:
                if not 0 <= t < n:
                    raise ValueError(f"hashtag index {t} out of range for n={n}")
                aud[t] += 1
        object.__setattr__(self, "sets", ordered)
        object.__setattr__(self, "audience", aud)

    @property
    def n(self) -> int:
        return len(self.hashtags)

    @property
    def user_ids(self) -> list[str]:
        return list(self.sets)

    def csr(self, users: Sequence[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) with each user's indices ascending; unknown users get empty rows."""
        users = self.user_ids if users is None else users
        rows = [sorted(self.sets.get(u, ())) for u in users]
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum([len(r) for r in rows], out=indptr[1:])
        indices = np.fromiter((t for r in rows for t in r), dtype=np.int64, count=int(indptr[-1]))
        return indptr, indices

    def to_json(self) -> str:
        payload = {
            "format": "hashsem.interactions/1",
            "hashtags": list(self.hashtags),
            "users": {u: sorted(s) for u, s in self.sets.items()},
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "InteractionSets":
        obj = json.loads(text)
        if obj.get("format") != "hashsem.interactions/1":
            raise ValueError("not an interactions file")
        return cls(tuple(obj["hashtags"]), {u: frozenset(s) for u, s in obj["users"].items()})


def build_interactions(
    corpus: Corpus,
    index: HashtagIndex,
    stopwords: Iterable[str] = frozenset(),
    tokens: Sequence[Sequence[str]] | None = None,
    workers: int = 1,
) -> InteractionSets:
    """Which trendy hashtags each user interacted with.

    A record counts for hashtag ``t`` when its tokens contain ``#t`` or the
    bare word ``t``, or when it retweets/quotes/replies to a corpus tweet
    whose own tokens do. References to tweets outside the corpus add nothing.
    Every author in the corpus appears, possibly with an empty set.
    """
    if len(index) == 0:
        raise ValueError("empty hashtag index")
    if tokens is None:
        tokens = tokenize_corpus(corpus, stopwords, workers)
    lookup: dict[str, int] = {}
    for i, h in enumerate(index.hashtags):
        lookup[h] = i
        lookup["#" + h] = i
    direct = [frozenset(lookup[t] for t in toks if t in lookup) for toks in tokens]
    row_of = {r.tweet_id: k for k, r in enumerate(corpus.records)}

    sets: dict[str, set[int]] = {}
    for k, rec in enumerate(corpus.records):
        acc = sets.setdefault(rec.user_id, set())
        acc |= direct[k]
        if rec.referenced_tweet_id is not None:
            ref = row_of.get(rec.referenced_tweet_id)
            if ref is not None:
                acc |= direct[ref]
    return InteractionSets(index.hashtags, {u: frozenset(s) for u, s in sets.items()})


@dataclass(frozen=True, eq=False)
class SemanticNetwork:
    """Undirected weighted hashtag graph; edges stored once with src < dst, sorted."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    audience: np.ndarray
    hashtags: tuple[str, ...] | None = None
    root: int | None = None
    component_roots: tuple[int, ...] = ()

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        w = np.asarray(self.weight, dtype=np.int64)
        if not (src.shape == dst.shape == w.shape):
            raise ValueError("edge arrays differ in length")
        if len(src) and (np.any(src >= dst) or src.min() < 0 or dst.max() >= self.n):
            raise ValueError("edges must satisfy 0 <= src < dst < n")
        if np.any(w < 1):
            raise ValueError("edge weights must be >= 1")
        order = np.lexsort((dst, src))
        object.__setattr__(self, "src", src[order])
        object.__setattr__(self, "dst", dst[order])
        object.__setattr__(self, "weight", w[order])
        object.__setattr__(self, "audience", np.asarray(self.audience, dtype=np.int64))
        if self.hashtags is not None and len(self.hashtags) != self.n:
            raise ValueError("hashtag labels do not match node count")

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def edges(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): int(w) for i, j, w in zip(self.src, self.dst, self.weight)}

    def weighted_degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.src, self.weight)
        np.add.at(deg, self.dst, self.weight)
        return deg

    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR (indptr, neighbour, weight) in both directions, neighbours ascending."""
        a = np.concatenate([self.src, self.dst])
        b = np.concatenate([self.dst, self.src])
        w = np.concatenate([self.weight, self.weight])
        order = np.lexsort((b, a))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(a, minlength=self.n), out=indptr[1:])
        return indptr, b[order], w[order]

    def label(self, i: int) -> str:
        return self.hashtags[i] if self.hashtags is not None else str(i)

    def to_dict(self) -> dict:
        return {
            "format": "hashsem.network/1",
            "n": self.n,
            "hashtags": list(self.hashtags) if self.hashtags is not None else None,
            "audience": self.audience.tolist(),
            "root": self.root,
            "component_roots": list(self.component_roots),
            "edges": [[int(i), int(j), int(w)] for i, j, w in zip(self.src, self.dst, self.weight)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_json(cls, text: str) -> "SemanticNetwork":
        obj = json.loads(text)
        if obj.get("format") != "hashsem.network/1":
            raise ValueError("not a network file")
        e = np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 3)
        tags = obj.get("hashtags")
        return cls(
            n=obj["n"],
            src=e[:, 0],
            dst=e[:, 1],
            weight=e[:, 2],
            audience=np.asarray(obj["audience"], dtype=np.int64),
            hashtags=tuple(tags) if tags is not None else None,
            root=obj.get("root"),
            component_roots=tuple(obj.get("component_roots", ())),
        )


def _shards(indptr: np.ndarray, parts: int) -> list[tuple[int, int]]:
    m = len(indptr) - 1
    step = max(1, math.ceil(m / max(1, parts)))
    return [(a, min(m, a + step)) for a in range(0, m, step)]


def project(inter: InteractionSets, workers: int = 1) -> SemanticNetwork:
    """Weight every hashtag pair by the number of users who interacted with both."""
    n = inter.n
    indptr, indices = inter.csr()

    def keys_for(span):
        a, b = span
        sub_ptr = indptr[a : b + 1] - indptr[a]
        return _kernels.pair_keys(sub_ptr, indices[indptr[a] : indptr[b]], n)

    spans = _shards(indptr, workers)
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(keys_for, spans))
    else:
        parts = [keys_for(s) for s in spans]
    keys = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    uniq, counts = np.unique(keys, return_counts=True)
    return SemanticNetwork(
        n=n,
        src=uniq // max(n, 1),
        dst=uniq % max(n, 1),
        weight=counts,
        audience=inter.audience.copy(),
        hashtags=inter.hashtags,
    )


@dataclass(frozen=True)
class PruningPolicy:
    mode: str = "mst"
    threshold: int | None = None

    def __post_init__(self):
        if self.mode not in ("none", "flat_cutoff", "mst"):
            raise ValueError(f"unknown pruning mode {self.mode!r}")
        if self.mode == "flat_cutoff":
            if not isinstance(self.threshold, int) or self.threshold < 1:
                raise ValueError("flat_cutoff needs an integer threshold >= 1")

    @classmethod
    def parse(cls, text: str) -> "PruningPolicy":
        """'none', 'mst' or 'cutoff:<w>'."""
        if text.startswith("cutoff:"):
            return cls("flat_cutoff", int(text.split(":", 1)[1]))
        return cls(text)

    def __str__(self) -> str:
        return f"cutoff:{self.threshold}" if self.mode == "flat_cutoff" else self.mode


def prune(net: SemanticNetwork, policy: PruningPolicy) -> SemanticNetwork:
    """Apply a pruning policy. ``mst`` keeps a maximum-weight spanning forest.

    MST ties are broken by scanning edges in (weight desc, src asc, dst asc)
    order. Component roots are cleared; call :func:`assign_root` afterwards.
    """
    if policy.mode == "none":
        keep = np.ones(net.num_edges, dtype=bool)
    elif policy.mode == "flat_cutoff":
        keep = net.weight >= policy.threshold
    else:
        order = np.lexsort((net.dst, net.src, -net.weight))
        mask = _kernels.kruskal_forest(net.n, net.src[order], net.dst[order])
        keep = np.zeros(net.num_edges, dtype=bool)
        keep[order[mask]] = True
    return replace(
        net,
        src=net.src[keep],
        dst=net.dst[keep],
        weight=net.weight[keep],
        component_roots=(),
    )


def _components(net: SemanticNetwork) -> np.ndarray:
    g = coo_matrix((np.ones(net.num_edges), (net.src, net.dst)), shape=(net.n, net.n))
    return connected_components(g, directed=False)[1]


def assign_root(net: SemanticNetwork, inter: InteractionSets | None = None) -> SemanticNetwork:
    """Root the network at its most popular hashtag (ties: lower index).

    Each connected component also records a local root chosen the same way;
    ``component_roots`` is ascending and includes the global root.
    """
    if net.n == 0:
        raise ValueError("cannot root an empty network")
    audience = net.audience if inter is None else inter.audience
    # argmax returns the first maximum, i.e. the lower index on ties
    root = int(np.argmax(audience))
    labels = _components(net)
    local = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        local.append(int(members[np.argmax(audience[members])]))
    return replace(net, root=root, component_roots=tuple(sorted(local)))


def tree_parents(net: SemanticNetwork) -> np.ndarray:
    """BFS parent of each node from the component roots; roots get -1."""
    if not net.component_roots:
        raise ValueError("network has no roots; call assign_root first")
    indptr, nbr, _ = net.adjacency()
    parent = np.full(net.n, -2, dtype=np.int64)
    queue = deque()
    for r in net.component_roots:
        parent[r] = -1
        queue.append(r)
    while queue:
        v = queue.popleft()
        for u in nbr[indptr[v] : indptr[v + 1]]:
            if parent[u] == -2:
                parent[u] = v
                queue.append(int(u))
    return parent


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(net: SemanticNetwork, fmt: str, path: str | Path) -> None:
    """Write GraphML or DOT with node attributes label/audience/wdegree and edge weight."""
    path = Path(path)
    deg = net.weighted_degree()
    if fmt == "graphml":
        ns = "http://graphml.graphdrawing.org/xmlns"
        root = ET.Element("graphml", {"xmlns": ns})
        for key, target, typ in (
            ("label", "node", "string"),
            ("audience", "node", "long"),
            ("wdegree", "node", "long"),
            ("weight", "edge", "long"),
            ("root", "graph", "string"),
        ):
            ET.SubElement(root, "key", {"id": key, "for": target, "attr.name": key, "attr.type": typ})
        g = ET.SubElement(root, "graph", {"id": "semantic_network", "edgedefault": "undirected"})
        if net.root is not None:
            ET.SubElement(g, "data", {"key": "root"}).text = f"n{net.root}"
        for i in range(net.n):
            node = ET.SubElement(g, "node", {"id": f"n{i}"})
            ET.SubElement(node, "data", {"key": "label"}).text = net.label(i)
            ET.SubElement(node, "data", {"key": "audience"}).text = str(int(net.audience[i]))
            ET.SubElement(node, "data", {"key": "wdegree"}).text = str(int(deg[i]))
        for k, (i, j, w) in enumerate(zip(net.src, net.dst, net.weight)):
            edge = ET.SubElement(g, "edge", {"id": f"e{k}", "source": f"n{i}", "target": f"n{j}"})
            ET.SubElement(edge, "data", {"key": "weight"}).text = str(int(w))
        ET.indent(root)
        data = ET.tostring(root, encoding="unicode", xml_declaration=False)
        path.write_text('<?xml version="1.0" encoding="UTF-8"?>\n' + data + "\n", encoding="utf-8")
    elif fmt == "dot":
        lines = ["graph semantic_network {"]
        if net.root is not None:
            lines.append(f"  root={_dot_quote(f'n{net.root}')};")
        for i in range(net.n):
            lines.append(
                f"  n{i} [label={_dot_quote(net.label(i))}, audience={int(net.audience[i])},"
                f" wdegree={int(deg[i])}];"
            )
        for i, j, w in zip(net.src, net.dst, net.weight):
            lines.append(f"  n{i} -- n{j} [weight={int(w)}];")
        lines.append("}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
