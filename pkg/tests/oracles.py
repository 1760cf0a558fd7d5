"""Independent reference computations used as test oracles.

Nothing here imports the package under test.
"""

import functools
import itertools

import numpy as np


@functools.lru_cache(maxsize=None)
def warping_paths(n, m):
    """Every monotone path (0,0)->(n-1,m-1) with unit steps right/down/diagonal,
    as an (n_paths, path_len_max) pair of padded index arrays plus a mask."""
    found = []

    def walk(i, j, acc):
        if (i, j) == (n - 1, m - 1):
            found.append(acc)
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                walk(a, b, acc + [(a, b)])

    walk(0, 0, [(0, 0)])
    longest = max(len(p) for p in found)
    ii = np.zeros((len(found), longest), dtype=int)
    jj = np.zeros((len(found), longest), dtype=int)
    mask = np.zeros((len(found), longest), dtype=bool)
    for k, p in enumerate(found):
        ii[k, :len(p)] = [a for a, _ in p]
        jj[k, :len(p)] = [b for _, b in p]
        mask[k, :len(p)] = True
    return ii, jj, mask


def dtw_bruteforce(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ii, jj, mask = warping_paths(len(x), len(y))
    cost = np.abs(x[:, None] - y[None, :])
    return float(np.min(np.where(mask, cost[ii, jj], 0.0).sum(axis=1)))


def dtw_bruteforce_batch(X, Y):
    """Exhaustive DTW between every row of X (N, n) and every row of Y (M, m)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    ii, jj, mask = warping_paths(X.shape[1], Y.shape[1])
    cost = np.abs(X[:, None, :, None] - Y[None, :, None, :])  # N, M, n, m
    per_path = np.where(mask, cost[:, :, ii, jj], 0.0).sum(axis=-1)
    return per_path.min(axis=-1)


def all_sequences(max_len, alphabet):
    for n in range(1, max_len + 1):
        yield n, np.array(list(itertools.product(alphabet, repeat=n)), dtype=float)


def normal_equations(X, y):
    X = np.asarray(X, dtype=float)
    return np.linalg.solve(X.T @ X, X.T @ np.asarray(y, dtype=float))


def naive_pearson(a, b):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((p - ma) * (q - mb) for p, q in zip(a, b))
    va = sum((p - ma) ** 2 for p in a)
    vb = sum((q - mb) ** 2 for q in b)
    return cov / (va * vb) ** 0.5


def naive_agglomerate(d, linkage):
    """Textbook agglomeration recomputing cluster distances from members.
    Returns the merge heights."""
    d = np.asarray(d, dtype=float)
    clusters = [[i] for i in range(len(d))]
    heights = []
    agg = {"single": np.min, "complete": np.max, "average": np.mean}[linkage]
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                h = agg(d[np.ix_(clusters[a], clusters[b])])
                if best is None or h < best[0]:
                    best = (h, a, b)
        h, a, b = best
        heights.append(float(h))
        clusters[a] = clusters[a] + clusters[b]
        del clusters[b]
    return heights
