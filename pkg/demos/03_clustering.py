"""DTW clustering of daily joy signals, hierarchical and k-means.

The synthetic teams follow three joy archetypes (steady high, steady low,
oscillating); both methods should group them accordingly.
"""

from pathlib import Path

from fandomdyn import clustering, ingest
from fandomdyn.model import Emotion

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

posts = ingest.load_posts(DATA / "posts.csv")
meta = ingest.load_metadata(DATA / "metadata.csv")
signals = {}
for team, team_posts in posts.items():
    retained, _ = ingest.apply_median_threshold(team_posts)
    signals[team] = ingest.aggregate_daily(ingest.posts_to_series(retained)).signal(Emotion.JOY)

dm = clustering.pairwise_distances(signals)
for linkage in clustering.LINKAGES:
    dg = clustering.hierarchical_cluster(dm, linkage)
    lo, hi = clustering.cut_heights_for_k(dg, 3)
    part = clustering.cut_dendrogram(dg, (lo + hi) / 2)
    print(f"{linkage:>8} linkage, cut in [{lo:.2f}, {hi:.2f}):",
          {c: sorted(t) for c, t in part.clusters().items()})

res = clustering.kmeans_dtw(signals, 3, seed=0, restarts=5)
print("\nk-means (DTW, median barycentres): cost", round(res.cost, 3))
for prof in clustering.profile_clusters(res.partition, meta):
    print(f"  cluster {prof.cluster}: {prof.size} teams, geo {prof.counts['geo']}, "
          f"median final rank {prof.summaries['final_rank']['median']}")
