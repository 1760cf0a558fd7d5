"""DTW distances and clustering of daily joy signals.

DTW here uses the absolute difference as local cost and sums it along the
best monotone path (steps right, down, diagonal), without normalisation or a
warping window.  Hierarchical clustering is a plain agglomerative
Lance-Williams loop so the full merge list is available for export.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import MissingMetadataError
from .model import TeamMetadata

__all__ = [
    "LINKAGES",
    "DistanceMatrix",
    "Merge",
    "Dendrogram",
    "Partition",
    "ClusterProfile",
    "KMeansResult",
    "dtw_distance",
    "dtw_path",
    "pairwise_distances",
    "hierarchical_cluster",
    "cut_dendrogram",
    "cut_heights_for_k",
    "dba_update",
    "kmeans_dtw",
    "profile_clusters",
    "write_distance_matrix",
    "read_distance_matrix",
    "write_dendrogram",
    "write_partition",
    "write_profiles",
]

LINKAGES = ("single", "complete", "average")


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple[str, ...]
    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        n = len(self.labels)
        if d.shape != (n, n):
            raise ValueError(f"matrix shape {d.shape} does not match {n} labels")
        if len(set(self.labels)) != n:
            raise ValueError("labels must be unique")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distances must be finite and non-negative")
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    distance: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in scipy's numbering: leaves are ``0..n-1`` and the
    cluster created at step ``s`` gets id ``n + s``."""

    labels: tuple[str, ...]
    merges: tuple[Merge, ...]
    linkage: str = "average"

    @property
    def n(self) -> int:
        return len(self.labels)

    def heights(self) -> np.ndarray:
        return np.array([m.distance for m in self.merges], dtype=float)

    def as_linkage_matrix(self) -> np.ndarray:
        return np.array(
            [[m.left, m.right, m.distance, m.size] for m in self.merges], dtype=float
        ).reshape(-1, 4)


@dataclass(frozen=True)
class Partition:
    assignment: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "assignment", dict(self.assignment))

    @property
    def k(self) -> int:
        return len(set(self.assignment.values()))

    def clusters(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for team, c in self.assignment.items():
            out.setdefault(c, []).append(team)
        return {c: out[c] for c in sorted(out)}

    def __getitem__(self, team):
        return self.assignment[team]


@dataclass(frozen=True)
class ClusterProfile:
    cluster: int
    size: int
    teams: tuple[str, ...]
    counts: dict
    summaries: dict

    def to_dict(self) -> dict:
        return {"cluster": self.cluster, "size": self.size, "teams": list(self.teams),
                "counts": self.counts, "summaries": self.summaries}


# ---------------------------------------------------------------------------
# DTW
# ---------------------------------------------------------------------------

def _check_seq(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("DTW needs non-empty sequences")
    if not np.all(np.isfinite(arr)):
        raise ValueError("DTW sequences must be finite")
    return arr


def _accumulated_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Row recursion D[i, j] = c[i, j] + min(D[i-1, j-1], D[i-1, j], D[i, j-1]).
    # The left dependency is a min-plus scan; with non-negative costs it
    # equals S[j] + min_{k<=j}(a[k] - S[k]) where S is the row's cost cumsum
    # and a[k] the best value reachable from the previous row.
    cost = np.abs(x[:, None] - y[None, :])
    n, m = cost.shape
    acc = np.empty((n, m))
    acc[0] = np.cumsum(cost[0])
    for i in range(1, n):
        prev = acc[i - 1]
        best_above = prev.copy()
        best_above[1:] = np.minimum(prev[1:], prev[:-1])
        a = cost[i] + best_above
        s = np.cumsum(cost[i])
        acc[i] = s + np.minimum.accumulate(a - s)
        # the scan's first element is exact; keep it bit-identical to a[0]
        acc[i, 0] = a[0]
    return acc


def _canonical(x: np.ndarray, y: np.ndarray) -> bool:
    """True when (x, y) is already in the order used for evaluation."""
    if x.size != y.size:
        return x.size < y.size
    diff = np.nonzero(x != y)[0]
    return diff.size == 0 or x[diff[0]] < y[diff[0]]


def dtw_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """Minimal summed ``|x_i - y_j|`` over monotone warping paths.

    The pair is evaluated in a canonical order, so the result is exactly
    symmetric in its arguments.
    """
    x = _check_seq(x)
    y = _check_seq(y)
    if not _canonical(x, y):
        x, y = y, x
    return float(_accumulated_cost(x, y)[-1, -1])


def dtw_path(x: Sequence[float], y: Sequence[float]) -> tuple[float, list[tuple[int, int]]]:
    """DTW distance and one optimal path as ``(i, j)`` index pairs from (0, 0)."""
    x = _check_seq(x)
    y = _check_seq(y)
    acc = _accumulated_cost(x, y)
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            # prefer the diagonal on ties
            step = int(np.argmin((acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])))
            if step == 0:
                i, j = i - 1, j - 1
            elif step == 1:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return float(acc[-1, -1]), path


def pairwise_distances(dataset: Mapping[str, Sequence[float]] | Sequence[Sequence[float]],
                       labels: Optional[Sequence[str]] = None,
                       workers: Optional[int] = None) -> DistanceMatrix:
    """Full symmetric DTW matrix over a collection of series.

    ``dataset`` is either a mapping ``team_id -> series`` (kept in insertion
    order) or a sequence of series with optional ``labels``.
    """
    if isinstance(dataset, Mapping):
        labels = list(dataset.keys())
        series = [_check_seq(dataset[k]) for k in labels]
    else:
        series = [_check_seq(s) for s in dataset]
        labels = list(labels) if labels is not None else [str(i) for i in range(len(series))]
    n = len(series)
    if n < 2:
        raise ValueError("pairwise distances need at least two series")
    if len(labels) != n:
        raise ValueError("one label per series required")

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    d = np.zeros((n, n))

    def work(pair):
        i, j = pair
        return dtw_distance(series[i], series[j])

    if workers == 1 or len(pairs) < 64:
        values = map(work, pairs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(work, pairs))
    for (i, j), v in zip(pairs, values):
        d[i, j] = d[j, i] = v
    return DistanceMatrix(tuple(labels), d)


# ---------------------------------------------------------------------------
# agglomerative clustering
# ---------------------------------------------------------------------------

def hierarchical_cluster(dm: DistanceMatrix, linkage: str = "average") -> Dendrogram:
    """Agglomerate greedily, merging the closest pair of clusters each step.

    Ties go to the pair with the smallest cluster ids.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    n = dm.n
    d = np.array(dm.d, dtype=float)
    np.fill_diagonal(d, np.inf)
    active = list(range(n))
    ids = list(range(n))  # cluster id currently stored at each row
    sizes = [1] * n
    merges = []
    for step in range(n - 1):
        sub = d[np.ix_(active, active)]
        flat = int(np.argmin(sub))
        a, b = divmod(flat, len(active))
        best = sub[a, b]
        # among equal minima pick the lowest (id_left, id_right)
        ties = np.argwhere(sub == best)
        cand = [(min(ids[active[p]], ids[active[q]]), max(ids[active[p]], ids[active[q]]), p, q)
                for p, q in ties if p < q]
        _, _, a, b = min(cand)
        ra, rb = active[a], active[b]
        left, right = sorted((ids[ra], ids[rb]))
        size = sizes[ra] + sizes[rb]
        merges.append(Merge(left, right, float(best), size))

        # Lance-Williams update into row ra; row rb retires
        active.remove(rb)
        others = [o for o in active if o != ra]
        da, db = d[ra, others], d[rb, others]
        lo, hi = np.minimum(da, db), np.maximum(da, db)
        if linkage == "single":
            new = lo
        elif linkage == "complete":
            new = hi
        else:
            # weighted mean written so equal inputs come back unchanged
            new = np.clip(da + (db - da) * (sizes[rb] / size), lo, hi)
        d[ra, others] = new
        d[others, ra] = new
        sizes[ra] = size
        ids[ra] = n + step
    return Dendrogram(dm.labels, tuple(merges), linkage)


def cut_dendrogram(dg: Dendrogram, height: float) -> Partition:
    """Clusters joined by every merge at distance <= ``height``.

    Labels run 1..k in order of each cluster's first member in ``dg.labels``.
    """
    if height < 0:
        raise ValueError("cut height must be non-negative")
    n = dg.n
    parent = list(range(2 * n - 1 if n else 0))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for step, m in enumerate(dg.merges):
        if m.distance <= height:
            node = n + step
            parent[find(m.left)] = node
            parent[find(m.right)] = node
    labels: dict[int, int] = {}
    assignment = {}
    for i, team in enumerate(dg.labels):
        root = find(i)
        if root not in labels:
            labels[root] = len(labels) + 1
        assignment[team] = labels[root]
    return Partition(assignment)


def cut_heights_for_k(dg: Dendrogram, k: int) -> Optional[tuple[float, float]]:
    """Half-open interval ``[lo, hi)`` of cut heights giving exactly ``k`` clusters.

    ``None`` when no height gives ``k`` clusters (tied merge heights).
    """
    n = dg.n
    if not 1 <= k <= n:
        raise ValueError("k must lie between 1 and the number of leaves")
    h = dg.heights()
    if k == n:
        return (0.0, float(h[0])) if h.size and h[0] > 0 else None
    lo = float(h[n - k - 1])
    hi = float(h[n - k]) if k > 1 else np.inf
    if hi <= lo:
        return None
    if len(cut_dendrogram(dg, lo).clusters()) != k:
        return None
    return lo, hi


# ---------------------------------------------------------------------------
# k-means with DTW barycenters
# ---------------------------------------------------------------------------

@dataclass
class KMeansResult:
    partition: Partition
    centroids: list[np.ndarray]
    cost: float
    cost_history: list[float] = field(default_factory=list)
    restart: int = 0


def dba_update(centroid: np.ndarray, members: Sequence[np.ndarray],
               max_iter: int = 30, tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Refine a barycenter by iterated DTW alignment.

    Each pass aligns every member to the current centroid and moves each
    centroid point to the value minimising the summed local cost of the
    points aligned to it.  With absolute-difference costs that minimiser is
    the median, which keeps the summed DTW distance non-increasing.
    Returns the centroid and its summed DTW distance to ``members``.
    """
    c = np.array(centroid, dtype=float)
    cost = sum(dtw_distance(c, s) for s in members)
    for _ in range(max_iter):
        buckets = [[] for _ in range(c.size)]
        for s in members:
            _, path = dtw_path(c, s)
            for i, j in path:
                buckets[i].append(s[j])
        new = np.array([np.median(b) for b in buckets])
        new_cost = sum(dtw_distance(new, s) for s in members)
        if new_cost > cost:
            break
        improved = cost - new_cost
        c, cost = new, new_cost
        if improved <= tol:
            break
    return c, cost


def _assign(series, centroids):
    dist = np.array([[dtw_distance(s, c) for c in centroids] for s in series])
    labels = np.argmin(dist, axis=1)
    return labels, dist


def _kmeans_once(series, k, rng, max_iter, dba_iter, tol):
    n = len(series)
    init = rng.choice(n, size=k, replace=False)
    centroids = [series[i].copy() for i in init]
    history = []
    labels = None
    for it in range(max_iter):
        new_labels, dist = _assign(series, centroids)
        # empty clusters take the point farthest from its own centroid
        while True:
            sizes = np.bincount(new_labels, minlength=k)
            empty = np.nonzero(sizes == 0)[0]
            if empty.size == 0:
                break
            own = dist[np.arange(n), new_labels].copy()
            own[sizes[new_labels] < 2] = -np.inf
            far = int(np.argmax(own))
            c = int(empty[0])
            centroids[c] = series[far].copy()
            dist[:, c] = [dtw_distance(s, centroids[c]) for s in series]
            new_labels[far] = c
        history.append(float(dist[np.arange(n), new_labels].sum()))
        converged = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels
        if converged or it == max_iter - 1:
            break
        for c in range(k):
            members = [series[i] for i in np.nonzero(labels == c)[0]]
            centroids[c], _ = dba_update(centroids[c], members, dba_iter, tol)
    return labels, centroids, history[-1], history


def kmeans_dtw(dataset: Mapping[str, Sequence[float]], k: int, seed: int = 0,
               restarts: int = 5, max_iter: int = 50, dba_iter: int = 30,
               tol: float = 1e-6, workers: Optional[int] = None) -> KMeansResult:
    """k-means under DTW with barycenter-averaged centroids.

    Restart ``r`` draws its initial centroids from
    ``np.random.SeedSequence(seed).spawn(restarts)[r]``; the restart with the
    lowest total within-cluster DTW cost wins (earliest restart on ties).
    Cluster labels are renumbered 1..k by first appearance in ``dataset``.
    """
    labels_ = list(dataset.keys())
    series = [_check_seq(dataset[t]) for t in labels_]
    n = len(series)
    if not 1 <= k <= n:
        raise ValueError(f"k must be between 1 and {n}, got {k}")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    seeds = np.random.SeedSequence(seed).spawn(restarts)

    def run(r):
        return _kmeans_once(series, k, np.random.default_rng(seeds[r]), max_iter, dba_iter, tol)

    if workers == 1 or restarts == 1:
        results = [run(r) for r in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    best = min(range(restarts), key=lambda r: (results[r][2], r))
    labels, centroids, cost, history = results[best]

    relabel: dict[int, int] = {}
    for c in labels:
        relabel.setdefault(int(c), len(relabel) + 1)
    assignment = {t: relabel[int(c)] for t, c in zip(labels_, labels)}
    ordered = [None] * k
    for old, new in relabel.items():
        ordered[new - 1] = centroids[old]
    return KMeansResult(Partition(assignment), [c for c in ordered if c is not None],
                        cost, history, best)


# ---------------------------------------------------------------------------
# profiling
# ---------------------------------------------------------------------------

def _tertile_edges(values: np.ndarray) -> tuple[float, float]:
    return float(np.quantile(values, 1 / 3)), float(np.quantile(values, 2 / 3))


def _tertile(v: float, edges: tuple[float, float]) -> str:
    if v <= edges[0]:
        return "Q1"
    if v <= edges[1]:
        return "Q2"
    return "Q3"


def _five_numbers(values) -> dict:
    q = np.quantile(np.asarray(values, dtype=float), [0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(("min", "q1", "median", "q3", "max"), (float(v) for v in q)))


def profile_clusters(p: Partition, meta: Mapping[str, TeamMetadata]) -> list[ClusterProfile]:
    """Feature make-up of each cluster.

    PCI and market-value tertiles are fixed on the whole partitioned set
    before splitting, so Q1..Q3 mean the same thing in every cluster.
    """
    for team in p.assignment:
        if team not in meta:
            raise MissingMetadataError(team)
    teams = list(p.assignment)
    pci_edges = _tertile_edges(np.array([meta[t].pci for t in teams]))
    mv_edges = _tertile_edges(np.array([meta[t].market_value for t in teams]))

    profiles = []
    for c, members in p.clusters().items():
        rows = [meta[t] for t in members]
        counts = {
            "geo": {g: sum(r.geo == g for r in rows) for g in ("North", "Center", "South")},
            "league": {lg: sum(r.league == lg for r in rows) for lg in ("A", "B", "C")},
            "pci_tertile": {q: sum(_tertile(r.pci, pci_edges) == q for r in rows)
                            for q in ("Q1", "Q2", "Q3")},
            "mv_tertile": {q: sum(_tertile(r.market_value, mv_edges) == q for r in rows)
                           for q in ("Q1", "Q2", "Q3")},
        }
        summaries = {
            "final_rank": _five_numbers([r.final_rank for r in rows]),
            "delta_pci": _five_numbers([r.delta_pci for r in rows]),
            "delta_mv": _five_numbers([r.delta_mv for r in rows]),
        }
        profiles.append(ClusterProfile(c, len(members), tuple(members), counts, summaries))
    return profiles


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def write_distance_matrix(path, dm: DistanceMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team_id", *dm.labels])
        for lab, row in zip(dm.labels, dm.d):
            w.writerow([lab, *(repr(float(v)) for v in row)])


def read_distance_matrix(path) -> DistanceMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    d = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return DistanceMatrix(tuple(labels), d)


def write_dendrogram(path, dg: Dendrogram) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "left", "right", "distance", "size"])
        for s, m in enumerate(dg.merges):
            w.writerow([s, m.left, m.right, repr(m.distance), m.size])


def write_partition(path, p: Partition) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team_id", "cluster"])
        for team, c in p.assignment.items():
            w.writerow([team, c])


def write_profiles(path, profiles: Sequence[ClusterProfile], extra: Optional[dict] = None) -> None:
    doc = {"clusters": [pr.to_dict() for pr in profiles]}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")

