"""From raw posts to per-team emotional series and binary event trains.

Loads the bundled synthetic posts, applies the median comment threshold,
averages posts into daily distributions and turns one team's post sequence
into joy events.
"""

from pathlib import Path

from fandomdyn import ingest
from fandomdyn.model import Emotion

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

posts = ingest.load_posts(DATA / "posts.csv")
print(f"loaded {sum(map(len, posts.values()))} posts for {len(posts)} teams")

team = "team00"
retained, stats = ingest.apply_median_threshold(posts[team])
print(f"{team}: median comments {stats.median_comments}, kept "
      f"{stats.retained_posts} of {stats.total_posts} posts")

series = ingest.posts_to_series(retained)
daily = ingest.aggregate_daily(series)
print(f"post-level series has {series.m} points, daily series {daily.m} days")
print("first daily joy shares:", [round(float(v), 3) for v in daily.signal(Emotion.JOY)[:5]])

events = ingest.binarize(series, Emotion.JOY)
taus = ingest.extract_inter_event(events)
print(f"joy dominates {sum(events.bits)} posts; {taus.n_tau} inter-event gaps, "
      f"mean {taus.as_array().mean() / 86400:.2f} days")
