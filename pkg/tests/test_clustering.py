import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.cluster import hierarchy
from scipy.spatial.distance import squareform

from fandomdyn import clustering as cl
from fandomdyn.errors import MissingMetadataError
from fandomdyn.model import TeamMetadata
from oracles import dtw_bruteforce, naive_agglomerate

seq = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=7)


def test_dtw_identity():
    x = [0.2, 0.5, 0.9, 0.1]
    assert cl.dtw_distance(x, x) == 0.0


def test_dtw_warps_repeated_value():
    assert dtw_bruteforce([1, 2, 3], [1, 2, 2, 3]) == 0.0
    assert cl.dtw_distance([1, 2, 3], [1, 2, 2, 3]) == 0.0


def test_dtw_single_cells():
    assert cl.dtw_distance([0], [1]) == 1.0


def test_dtw_empty_rejected():
    with pytest.raises(ValueError):
        cl.dtw_distance([], [1.0])


@given(seq, seq)
@settings(max_examples=200)
def test_dtw_matches_bruteforce(x, y):
    assert cl.dtw_distance(x, y) == pytest.approx(dtw_bruteforce(x, y), abs=1e-12)


@given(seq, seq)
def test_dtw_symmetric_nonnegative(x, y):
    d = cl.dtw_distance(x, y)
    assert d == cl.dtw_distance(y, x)
    assert d >= 0


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1), min_size=n, max_size=n),
    st.lists(st.floats(0, 1), min_size=n, max_size=n))))
def test_dtw_never_worse_than_diagonal(pair):
    x, y = pair
    assert cl.dtw_distance(x, y) <= sum(abs(a - b) for a, b in zip(x, y)) + 1e-12


def test_dtw_path_is_valid_and_optimal():
    rng = np.random.default_rng(0)
    x, y = rng.random(9), rng.random(6)
    d, path = cl.dtw_path(x, y)
    assert path[0] == (0, 0) and path[-1] == (8, 5)
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        assert (i1 - i0, j1 - j0) in {(1, 0), (0, 1), (1, 1)}
    assert sum(abs(x[i] - y[j]) for i, j in path) == pytest.approx(d)
    assert d == pytest.approx(cl.dtw_distance(x, y))


def test_pairwise_identical_pair():
    dm = cl.pairwise_distances({"a": [0.1, 0.2], "b": [0.1, 0.2]})
    assert dm.d.tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_pairwise_duplicate_series():
    dm = cl.pairwise_distances({"a": [0.1, 0.5, 0.2], "b": [0.9, 0.1], "c": [0.1, 0.5, 0.2]})
    assert dm.d[0, 2] == 0.0
    assert np.array_equal(dm.d, dm.d.T)


def test_pairwise_matches_individual_calls():
    rng = np.random.default_rng(4)
    data = [rng.random(rng.integers(3, 30)) for _ in range(4)]
    dm = cl.pairwise_distances(data, labels=list("wxyz"))
    assert np.array_equal(dm.d, dm.d.T)
    for i in range(4):
        for j in range(4):
            expected = 0.0 if i == j else cl.dtw_distance(data[i], data[j])
            assert dm.d[i, j] == expected


def test_pairwise_threaded_equals_serial():
    rng = np.random.default_rng(5)
    data = [rng.random(20) for _ in range(14)]
    a = cl.pairwise_distances(data, workers=1)
    b = cl.pairwise_distances(data, workers=4)
    assert np.array_equal(a.d, b.d)


def test_pairwise_needs_two():
    with pytest.raises(ValueError):
        cl.pairwise_distances({"a": [1.0]})


def _dm(d, labels=None):
    d = np.asarray(d, dtype=float)
    return cl.DistanceMatrix(tuple(labels or [f"t{i}" for i in range(len(d))]), d)


THREE = [[0, 1, 10], [1, 0, 10], [10, 10, 0]]


def test_three_point_average_trace():
    dg = cl.hierarchical_cluster(_dm(THREE, "abc"), "average")
    assert [(m.left, m.right, m.distance, m.size) for m in dg.merges] == [(0, 1, 1.0, 2), (2, 3, 10.0, 3)]
    p = cl.cut_dendrogram(dg, 5)
    assert p.assignment == {"a": 1, "b": 1, "c": 2}


def test_equal_distances_merge_at_same_height():
    d = np.full((5, 5), 2.5)
    np.fill_diagonal(d, 0)
    for linkage in cl.LINKAGES:
        assert set(cl.hierarchical_cluster(_dm(d), linkage).heights()) == {2.5}


def test_two_leaves():
    dg = cl.hierarchical_cluster(_dm([[0, 3], [3, 0]]))
    assert len(dg.merges) == 1 and dg.merges[0].distance == 3


def test_cut_extremes():
    dg = cl.hierarchical_cluster(_dm(THREE))
    assert cl.cut_dendrogram(dg, 0.5).k == 3
    assert cl.cut_dendrogram(dg, 100).k == 1


def _random_dm(rng, n):
    pts = rng.random((n, 3))
    d = np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1) * rng.uniform(0.5, 2)
    return _dm((d + d.T) / 2)


@pytest.mark.parametrize("linkage", cl.LINKAGES)
def test_heights_match_scipy_and_naive(linkage):
    rng = np.random.default_rng(1)
    for _ in range(20):
        dm = _random_dm(rng, int(rng.integers(2, 15)))
        ours = cl.hierarchical_cluster(dm, linkage)
        ref = hierarchy.linkage(squareform(dm.d, checks=False), method=linkage)
        np.testing.assert_allclose(ours.heights(), ref[:, 2], atol=1e-12)
        np.testing.assert_allclose(ours.heights(), naive_agglomerate(dm.d, linkage), atol=1e-12)
        np.testing.assert_array_equal(ours.as_linkage_matrix()[:, 3], ref[:, 3])


@pytest.mark.parametrize("linkage", cl.LINKAGES)
def test_cut_matches_scipy_fcluster(linkage):
    rng = np.random.default_rng(2)
    for _ in range(10):
        dm = _random_dm(rng, 12)
        ours = cl.hierarchical_cluster(dm, linkage)
        ref = hierarchy.linkage(squareform(dm.d, checks=False), method=linkage)
        hs = ours.heights()
        # midpoints between merge heights avoid ulp-level ties with the reference
        for h in (hs[1:] + hs[:-1])[[1, 5, 9]] / 2:
            mine = cl.cut_dendrogram(ours, h)
            theirs = hierarchy.fcluster(ref, h, criterion="distance")
            # same grouping up to label names
            pairs_mine = {(a, b) for a in range(12) for b in range(12)
                          if mine[dm.labels[a]] == mine[dm.labels[b]]}
            pairs_ref = {(a, b) for a in range(12) for b in range(12) if theirs[a] == theirs[b]}
            assert pairs_mine == pairs_ref


@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.sampled_from(cl.LINKAGES))
@settings(max_examples=60)
def test_every_cut_is_a_partition(seed, n, linkage):
    rng = np.random.default_rng(seed)
    dm = _random_dm(rng, n)
    dg = cl.hierarchical_cluster(dm, linkage)
    assert len(dg.merges) == n - 1
    assert np.all(np.diff(dg.heights()) >= 0)
    for h in [0.0, *dg.heights(), dg.heights()[-1] + 1]:
        p = cl.cut_dendrogram(dg, h)
        assert sorted(p.assignment) == sorted(dm.labels)
        assert sorted(p.clusters()) == list(range(1, p.k + 1))


def test_cut_heights_for_k():
    dg = cl.hierarchical_cluster(_dm(THREE))
    assert cl.cut_heights_for_k(dg, 2) == (1.0, 10.0)
    lo, hi = cl.cut_heights_for_k(dg, 1)
    assert lo == 10.0 and np.isinf(hi)
    assert cl.cut_heights_for_k(dg, 3) == (0.0, 1.0)


def _bundles(rng, per=4, length=25):
    base = [np.full(length, 0.8), np.full(length, 0.15)]
    data = {}
    for b, level in enumerate(base):
        for k in range(per):
            data[f"b{b}_{k}"] = np.clip(level + rng.normal(0, 0.02, length), 0, 1)
    return data


def test_kmeans_recovers_bundles():
    data = _bundles(np.random.default_rng(0))
    res = cl.kmeans_dtw(data, 2, seed=3, restarts=3)
    groups = {frozenset(v) for v in res.partition.clusters().values()}
    assert groups == {frozenset(k for k in data if k.startswith("b0")),
                      frozenset(k for k in data if k.startswith("b1"))}
    # exhaustive check: no 2-split scores lower than the bundle split under medoid cost
    names = list(data)
    dm = cl.pairwise_distances(data)

    def medoid_cost(members):
        idx = [names.index(m) for m in members]
        return min(dm.d[np.ix_(idx, idx)].sum(axis=1)) if idx else np.inf

    best = min(
        (medoid_cost([n for i, n in enumerate(names) if mask >> i & 1])
         + medoid_cost([n for i, n in enumerate(names) if not mask >> i & 1]), mask)
        for mask in range(1, 2 ** len(names) - 1)
    )
    best_split = {frozenset(n for i, n in enumerate(names) if best[1] >> i & 1),
                  frozenset(n for i, n in enumerate(names) if not best[1] >> i & 1)}
    assert best_split == groups


def test_kmeans_k_equals_n_and_k_one():
    rng = np.random.default_rng(1)
    data = {f"s{i}": rng.random(10) for i in range(5)}
    res = cl.kmeans_dtw(data, 5, seed=0, restarts=2)
    assert res.cost == 0.0 and res.partition.k == 5
    res1 = cl.kmeans_dtw(data, 1, seed=0, restarts=2)
    assert set(res1.partition.assignment.values()) == {1}


def test_kmeans_deterministic_and_cost_monotone():
    rng = np.random.default_rng(9)
    data = {f"s{i}": rng.random(int(rng.integers(8, 20))) for i in range(10)}
    a = cl.kmeans_dtw(data, 3, seed=7, restarts=3)
    b = cl.kmeans_dtw(data, 3, seed=7, restarts=3, workers=1)
    assert a.partition.assignment == b.partition.assignment
    assert a.cost == b.cost
    assert all(y <= x + 1e-12 for x, y in zip(a.cost_history, a.cost_history[1:]))


def test_kmeans_rejects_large_k():
    with pytest.raises(ValueError):
        cl.kmeans_dtw({"a": [1.0]}, 2)


def test_dba_update_does_not_increase_cost():
    rng = np.random.default_rng(3)
    members = [rng.random(int(rng.integers(5, 15))) for _ in range(6)]
    start = members[0].copy()
    before = sum(cl.dtw_distance(start, m) for m in members)
    c, after = cl.dba_update(start, members)
    assert after <= before
    assert after == pytest.approx(sum(cl.dtw_distance(c, m) for m in members))


def _meta(team, geo, league, pci, mv, final, mv_rank=1, pci_rank=1):
    return TeamMetadata(team, league, geo, pci, 0.1, 100.0, mv, 1, final, mv_rank, pci_rank)


def test_profile_hand_tally():
    meta = {
        "a": _meta("a", "North", "A", 10, 100, 1), "b": _meta("b", "North", "A", 20, 200, 2),
        "c": _meta("c", "South", "B", 30, 300, 1), "d": _meta("d", "Center", "B", 40, 400, 2),
        "e": _meta("e", "North", "C", 50, 500, 1), "f": _meta("f", "South", "C", 60, 600, 2),
    }
    p = cl.Partition({"a": 1, "b": 1, "c": 1, "d": 2, "e": 2, "f": 2})
    prof = {pr.cluster: pr for pr in cl.profile_clusters(p, meta)}
    assert prof[1].counts["geo"] == {"North": 2, "Center": 0, "South": 1}
    assert prof[2].counts["geo"] == {"North": 1, "Center": 1, "South": 1}
    assert prof[1].counts["league"] == {"A": 2, "B": 1, "C": 0}
    # tertiles fixed on all six teams: {10,20} Q1, {30,40} Q2, {50,60} Q3
    assert prof[1].counts["pci_tertile"] == {"Q1": 2, "Q2": 1, "Q3": 0}
    assert prof[2].counts["mv_tertile"] == {"Q1": 0, "Q2": 1, "Q3": 2}
    for pr in prof.values():
        for feature in pr.counts.values():
            assert sum(feature.values()) == pr.size
    assert prof[1].summaries["final_rank"]["max"] == 2


def test_profile_single_cluster_and_singleton():
    meta = {t: _meta(t, g, "A", v, v, r) for t, g, v, r in
            [("a", "North", 1, 1), ("b", "South", 2, 2), ("c", "Center", 3, 3)]}
    whole = cl.profile_clusters(cl.Partition({"a": 1, "b": 1, "c": 1}), meta)[0]
    assert whole.counts["geo"] == {"North": 1, "Center": 1, "South": 1}
    assert whole.summaries["final_rank"] == {"min": 1, "q1": 1.5, "median": 2, "q3": 2.5, "max": 3}
    single = cl.profile_clusters(cl.Partition({"a": 1, "b": 2, "c": 2}), meta)[0]
    assert single.counts["geo"] == {"North": 1, "Center": 0, "South": 0}


def test_profile_missing_metadata():
    with pytest.raises(MissingMetadataError, match="zz"):
        cl.profile_clusters(cl.Partition({"zz": 1}), {})


def test_exports(tmp_path):
    dm = _dm(THREE, "abc")
    dg = cl.hierarchical_cluster(dm)
    cl.write_distance_matrix(tmp_path / "d.csv", dm)
    back = cl.read_distance_matrix(tmp_path / "d.csv")
    assert back.labels == dm.labels and np.array_equal(back.d, dm.d)
    cl.write_dendrogram(tmp_path / "g.csv", dg)
    assert (tmp_path / "g.csv").read_text().splitlines() == [
        "step,left,right,distance,size", "0,0,1,1.0,2", "1,2,3,10.0,3"]
    cl.write_partition(tmp_path / "p.csv", cl.cut_dendrogram(dg, 5))
    assert (tmp_path / "p.csv").read_text().splitlines() == ["team_id,cluster", "a,1", "b,1", "c,2"]
