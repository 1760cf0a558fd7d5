"""Final rank against socio-economic predictors and joy burstiness.

Fits the full model on the synthetic fixture, then drops joy burstiness
and reports how much explanatory power goes with it.
"""

from pathlib import Path

from fandomdyn import ingest, regression, temporal
from fandomdyn.model import Emotion

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

posts = ingest.load_posts(DATA / "posts.csv")
meta = ingest.load_metadata(DATA / "metadata.csv")
joy = {}
for team, team_posts in posts.items():
    retained, _ = ingest.apply_median_threshold(team_posts)
    events = ingest.binarize(ingest.posts_to_series(retained), Emotion.JOY)
    joy[team] = temporal.report(events)

design = regression.build_full_model(meta, joy)
result = regression.ablation_compare(design, "b_joy")
print(f"{len(design.rows)} teams, predictors {design.columns[1:]}")
for name in design.columns:
    print(f"  {name:>9}: {result.full.coef(name):+.4g}")
print(f"full    R^2 {result.full.r2:.3f}  RMSE {result.full.rmse:.3f}")
print(f"reduced R^2 {result.reduced.r2:.3f}  RMSE {result.reduced.rmse:.3f}")
print(f"dropping b_joy: R^2 falls {result.delta_r2_pct:.1f}%, RMSE rises {result.delta_rmse_pct:.1f}%")
