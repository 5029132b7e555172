"""Per-user feature vectors: semantic (network-spread) and baseline (direct)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .graph import InteractionSets, SemanticNetwork

VARIANTS = ("semantic", "baseline")


@dataclass(frozen=True, eq=False)
class EnrichmentVector:
    values: np.ndarray
    variant: str
    user_id: str = ""
    empty: bool = False


@dataclass(frozen=True, eq=False)
class EnrichmentMatrix:
    """One row per user, rows in ``user_ids`` order. ``empty`` flags all-zero rows."""

    user_ids: tuple[str, ...]
    values: np.ndarray
    variant: str
    empty: np.ndarray
    network_hash: str | None = None

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> EnrichmentVector:
        return EnrichmentVector(self.values[i], self.variant, self.user_ids[i], bool(self.empty[i]))

    def take(self, users: Sequence[str]) -> np.ndarray:
        pos = {u: i for i, u in enumerate(self.user_ids)}
        missing = [u for u in users if u not in pos]
        if missing:
            raise KeyError(f"{len(missing)} users missing from {self.variant} features, e.g. {missing[0]!r}")
        return self.values[[pos[u] for u in users]]


def _neighbour_ratios(net: SemanticNetwork) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR adjacency whose entry for (t, i) holds w(t, i) / c(t)."""
    indptr, nbr, w = net.adjacency()
    owner = np.repeat(np.arange(net.n), np.diff(indptr))
    c = net.audience[owner].astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(c > 0, w / c, 0.0)
    return indptr, nbr, ratio


def semantic_vector(user_set: Iterable[int], net: SemanticNetwork, user_id: str = "") -> EnrichmentVector:
    """Sum of the adjacency vectors of the user's hashtags, scaled to unit L2 norm.

    The vector for hashtag t has 1 at t and w(t, i) / c(t) at each neighbour i.
    """
    idx = np.array(sorted(set(user_set)), dtype=np.int64)
    indptr, nbr, ratio = _neighbour_ratios(net)
    rows, empty = _kernels.semantic_rows(
        np.array([0, len(idx)], dtype=np.int64), idx, indptr, nbr, ratio, net.n
    )
    return EnrichmentVector(rows[0], "semantic", user_id, bool(empty[0]))


def baseline_vector(user_set: Iterable[int], n: int, user_id: str = "") -> EnrichmentVector:
    """Indicator of the user's hashtags divided by its element sum."""
    v = np.zeros(n, dtype=np.float64)
    idx = sorted(set(user_set))
    if idx:
        v[idx] = 1.0 / len(idx)
    return EnrichmentVector(v, "baseline", user_id, not idx)


def _baseline_rows(indptr: np.ndarray, indices: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    m = len(indptr) - 1
    sizes = np.diff(indptr)
    out = np.zeros((m, n), dtype=np.float64)
    rows = np.repeat(np.arange(m), sizes)
    out[rows, indices] = 1.0 / np.repeat(sizes, sizes)
    return out, sizes == 0


def enrich_all(
    inter: InteractionSets,
    net: SemanticNetwork,
    variant: str,
    users: Sequence[str] | None = None,
    workers: int = 1,
) -> EnrichmentMatrix:
    """Feature matrix for ``users`` (default: every user, id order).

    Rows are computed independently, so splitting users across ``workers``
    threads gives bit-identical output.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if inter.n != net.n:
        raise ValueError(f"interaction index has {inter.n} hashtags, network has {net.n}")
    users = tuple(inter.user_ids if users is None else users)
    indptr, indices = inter.csr(users)
    m = len(users)

    if variant == "semantic":
        adj = _neighbour_ratios(net)

        def work(a, b):
            sub = indptr[a : b + 1] - indptr[a]
            return _kernels.semantic_rows(sub, indices[indptr[a] : indptr[b]], *adj, net.n)
    else:

        def work(a, b):
            sub = indptr[a : b + 1] - indptr[a]
            return _baseline_rows(sub, indices[indptr[a] : indptr[b]], net.n)

    step = max(1, math.ceil(m / max(1, workers)))
    spans = [(a, min(m, a + step)) for a in range(0, m, step)]
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: work(*s), spans))
    else:
        parts = [work(*s) for s in spans]
    if parts:
        values = np.concatenate([p[0] for p in parts])
        empty = np.concatenate([p[1] for p in parts])
    else:
        values = np.zeros((0, net.n))
        empty = np.zeros(0, dtype=bool)
    return EnrichmentMatrix(users, values, variant, empty, net.content_hash())


# ----------------------------------------------------------------------------
# feature files
#
#   # variant=<v> n=<n> users=<m> network=<sha256|-> format=<sparse|dense>
#   sparse: "user_id\tcolumn\tvalue" per non-zero; an all-zero row is a
#           single line "user_id\t-\t0"
#   dense:  "user_id\tv0\tv1..." per user
# Values use repr() so they round-trip exactly.
# ----------------------------------------------------------------------------


def write_features(mat: EnrichmentMatrix, path: str | Path, dense: bool = False) -> None:
    fmt = "dense" if dense else "sparse"
    header = (
        f"# variant={mat.variant} n={mat.n} users={len(mat.user_ids)}"
        f" network={mat.network_hash or '-'} format={fmt}"
    )
    lines = [header]
    for u, row in zip(mat.user_ids, mat.values):
        if dense:
            lines.append("\t".join([u] + [repr(float(v)) for v in row]))
            continue
        nz = np.flatnonzero(row)
        if len(nz) == 0:
            lines.append(f"{u}\t-\t0")
        for j in nz:
            lines.append(f"{u}\t{j}\t{float(row[j])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_features(path: str | Path) -> EnrichmentMatrix:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path}: missing feature header")
    meta = dict(kv.split("=", 1) for kv in lines[0][2:].split())
    n = int(meta["n"])
    users: list[str] = []
    pos: dict[str, int] = {}
    if meta["format"] == "dense":
        rows = []
        for ln in lines[1:]:
            parts = ln.split("\t")
            users.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        values = np.array(rows, dtype=np.float64).reshape(len(users), n)
    else:
        entries = []
        for ln in lines[1:]:
            u, col, val = ln.split("\t")
            if u not in pos:
                pos[u] = len(users)
                users.append(u)
            if col != "-":
                entries.append((pos[u], int(col), float(val)))
        values = np.zeros((len(users), n), dtype=np.float64)
        for r, c, v in entries:
            values[r, c] = v
    if len(users) != int(meta["users"]):
        raise ValueError(f"{path}: header says {meta['users']} users, found {len(users)}")
    net_hash = None if meta.get("network", "-") == "-" else meta["network"]
    empty = ~values.any(axis=1)
    return EnrichmentMatrix(tuple(users), values, meta["variant"], empty, net_hash)
