"""Compare the numba kernels with their numpy fallbacks on synthetic inputs.

    python benchmarks/bench_kernels.py [--users 50000] [--hashtags 400] [--repeat 5]

Both paths are called directly (the env flag only picks the default), so one
run times both. The first numba call compiles (or loads the on-disk cache)
and is excluded from the timings.
"""

import argparse
import time

import numpy as np

from hashsem import _kernels as K


def make_sets(rng, users, n, max_k):
    sizes = rng.integers(0, max_k + 1, size=users)
    rows = [np.sort(rng.choice(n, size=k, replace=False)) for k in sizes]
    indptr = np.zeros(users + 1, dtype=np.int64)
    np.cumsum(sizes, out=indptr[1:])
    return indptr, np.concatenate(rows).astype(np.int64)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=50_000)
    ap.add_argument("--hashtags", type=int, default=400)
    ap.add_argument("--max-set", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    n = args.hashtags
    indptr, indices = make_sets(rng, args.users, n, args.max_set)

    # projection input -> edges for kruskal and enrichment
    keys = K.pair_keys_numpy(indptr, indices, n)
    uniq, counts = np.unique(keys, return_counts=True)
    src, dst = uniq // n, uniq % n
    order = np.lexsort((dst, src, -counts))
    s_src, s_dst = src[order], dst[order]
    keep = K.kruskal_forest_numpy(n, s_src, s_dst)
    t_src, t_dst, t_w = s_src[keep], s_dst[keep], counts[order][keep]
    a = np.concatenate([t_src, t_dst])
    b = np.concatenate([t_dst, t_src])
    w = np.concatenate([t_w, t_w]).astype(np.float64)
    o = np.lexsort((b, a))
    adj_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(a, minlength=n), out=adj_ptr[1:])
    audience = np.bincount(indices, minlength=n).astype(np.float64)
    ratio = w[o] / np.maximum(audience[a[o]], 1.0)
    adj_idx = b[o]

    cases = {
        "pair_keys": (
            lambda: K.pair_keys_numba(indptr, indices, n),
            lambda: K.pair_keys_numpy(indptr, indices, n),
        ),
        "kruskal_forest": (
            lambda: K.kruskal_forest_numba(n, s_src, s_dst),
            lambda: K.kruskal_forest_numpy(n, s_src, s_dst),
        ),
        "semantic_rows": (
            lambda: K.semantic_rows_numba(indptr, indices, adj_ptr, adj_idx, ratio, n),
            lambda: K.semantic_rows_numpy(indptr, indices, adj_ptr, adj_idx, ratio, n),
        ),
    }

    print(f"users={args.users} hashtags={n} set entries={len(indices)} "
          f"pairs={len(keys)} edges={len(uniq)} repeat={args.repeat}")
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (fast, slow) in cases.items():
        fast()  # compile / load cache
        ra, rb = fast(), slow()
        if isinstance(ra, tuple):
            same = np.array_equal(ra[1], rb[1]) and np.allclose(ra[0], rb[0], rtol=0, atol=1e-14)
        elif name == "pair_keys":
            same = np.array_equal(np.sort(ra), np.sort(rb))
        else:
            same = np.array_equal(ra, rb)
        tf = best_of(fast, args.repeat)
        ts = best_of(slow, args.repeat)
        print(f"{name:<16}{tf * 1e3:>12.3f}{ts * 1e3:>12.3f}{ts / tf:>9.1f}x{'' if same else '  MISMATCH'}")


if __name__ == "__main__":
    main()
