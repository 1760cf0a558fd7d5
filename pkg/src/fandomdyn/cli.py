"""Command-line front end: ``fandomdyn <command> [options]``.

Commands
--------
ingest       posts.csv -> series/<team>.json (retained posts + daily means),
             ingest_stats.csv
burstiness   series/ -> burstiness.csv
             (team_id,emotion,n_tau,mu,sigma,r,B,B_n,M,lag; M blank when
             undefined) and burstiness_warnings.csv
cluster      series/ -> distances.csv, dendrogram.csv
             (step,left,right,distance,size), partition.csv (team_id,cluster),
             profiles.json when --metadata is given
regress      metadata.csv + burstiness.csv -> regression.json
simulate     synthetic event times -> CSV (index,time)
report       every step above from posts.csv + metadata.csv, plus
             burstiness_memory_plot.csv and clustering_replication.json

Every command writes ``<command>.provenance.json`` next to its outputs with
the configuration, its SHA-256, the master seed and a hash of each output.
Nothing time-dependent is written, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import clustering, ingest, regression, simulate, temporal
from .errors import FandomDynError, InsufficientEventsError
from .model import EMOTIONS, BurstinessReport, Emotion

logger = logging.getLogger("fandomdyn")

BURSTINESS_COLUMNS = ("team_id", "emotion", "n_tau", "mu", "sigma", "r", "B", "B_n", "M", "lag")
DEFAULT_EMOTIONS = (Emotion.JOY, Emotion.ANGER)
# published composition of the geographically homogeneous hierarchical cluster
PUBLISHED_GEO_CLUSTER = {"North": 15, "Center": 3, "South": 1}


class CLIError(Exception):
    pass


@dataclass
class PipelineConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    seed: int = 0

    def validate(self) -> None:
        for name, path in self.inputs.items():
            if path is not None and not Path(path).exists():
                raise CLIError(f"{name}: no such file or directory: {path}")

    def describe(self) -> dict:
        inputs = {}
        for name, path in sorted(self.inputs.items()):
            if path is None:
                continue
            inputs[name] = {"path": str(path), "sha256": _hash_path(Path(path))}
        return {"command": self.command, "inputs": inputs,
                "options": self.options, "seed": self.seed}

    def digest(self) -> str:
        return hashlib.sha256(_canonical(self.describe()).encode()).hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _hash_path(path: Path) -> str:
    h = hashlib.sha256()
    if path.is_dir():
        for p in sorted(path.rglob("*")):
            if p.is_file():
                h.update(str(p.relative_to(path)).encode())
                h.update(p.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def _write_provenance(out: Path, config: PipelineConfig, outputs: Sequence[Path]) -> None:
    doc = {
        **config.describe(),
        "config_hash": config.digest(),
        "outputs": {str(p.relative_to(out)): _hash_path(p) for p in sorted(outputs)},
    }
    (out / f"{config.command}.provenance.json").write_text(
        json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_emotions(text: str) -> tuple[Emotion, ...]:
    if text == "all":
        return EMOTIONS
    try:
        return tuple(Emotion(t.strip()) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise CLIError(f"--emotions: {exc}") from None


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------

def cmd_ingest(config: PipelineConfig, out: Path) -> list[Path]:
    config.validate()
    posts = ingest.load_posts(config.inputs["posts"])
    series_dir = out / "series"
    series_dir.mkdir(parents=True, exist_ok=True)
    written, stats = [], []
    for team, team_posts in posts.items():
        retained, st = ingest.apply_median_threshold(team_posts)
        stats.append(st)
        if not retained:
            logger.warning("team %s has no posts left after thresholding", team)
            continue
        daily = ingest.aggregate_daily(ingest.posts_to_series(retained))
        path = series_dir / f"{team}.json"
        ingest.write_series_json(path, retained, daily)
        written.append(path)
    stats_path = out / "ingest_stats.csv"
    ingest.write_ingest_stats(stats_path, stats)
    written.append(stats_path)
    return written


def _load_series_dir(path) -> dict:
    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise CLIError(f"no series JSON files in {path}")
    out = {}
    for f in files:
        retained, daily = ingest.read_series_json(f)
        out[daily.team_id] = (retained, daily)
    return out


def compute_reports(series: dict, emotions: Sequence[Emotion], lag: int = 1):
    reports, warnings = [], []
    for team, (retained, _) in series.items():
        es = ingest.posts_to_series(retained)
        for e in emotions:
            try:
                rep = temporal.report(ingest.binarize(es, e), lag=lag)
            except InsufficientEventsError as exc:
                warnings.append((team, e.value, "insufficient_events", str(exc)))
                continue
            if rep.M is None:
                warnings.append((team, e.value, "undefined_memory",
                                 "zero-variance inter-event window"))
            reports.append(rep)
    return reports, warnings


def write_burstiness_csv(path: Path, reports: Sequence[BurstinessReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BURSTINESS_COLUMNS)
        for r in reports:
            w.writerow([r.team_id, r.emotion.value, r.n_tau, _fmt(r.mu_tau), _fmt(r.sigma_tau),
                        _fmt(r.r), _fmt(r.B), _fmt(r.B_n), _fmt(r.M), r.lag])


def read_burstiness_csv(path) -> list[BurstinessReport]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(BurstinessReport(
                team_id=row["team_id"], emotion=Emotion(row["emotion"]),
                n_tau=int(row["n_tau"]), mu_tau=float(row["mu"]), sigma_tau=float(row["sigma"]),
                r=float(row["r"]), B=float(row["B"]), B_n=float(row["B_n"]),
                M=float(row["M"]) if row["M"] else None, lag=int(row["lag"]),
            ))
    return out


def _write_warnings(path: Path, warnings) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team_id", "emotion", "kind", "detail"])
        w.writerows(warnings)


def cmd_burstiness(config: PipelineConfig, out: Path) -> list[Path]:
    config.validate()
    series = _load_series_dir(config.inputs["series"])
    emotions = _parse_emotions(config.options["emotions"])
    reports, warnings = compute_reports(series, emotions, config.options["lag"])
    out.mkdir(parents=True, exist_ok=True)
    rep_path, warn_path = out / "burstiness.csv", out / "burstiness_warnings.csv"
    write_burstiness_csv(rep_path, reports)
    _write_warnings(warn_path, warnings)
    return [rep_path, warn_path]


def _cluster_dataset(series: dict, emotion: Emotion) -> dict:
    return {team: daily.signal(emotion) for team, (_, daily) in series.items()}


def cmd_cluster(config: PipelineConfig, out: Path) -> list[Path]:
    config.validate()
    opts = config.options
    series = _load_series_dir(config.inputs["series"])
    data = _cluster_dataset(series, Emotion(opts["emotion"]))
    out.mkdir(parents=True, exist_ok=True)
    written = []

    dm = clustering.pairwise_distances(data)
    p = out / "distances.csv"
    clustering.write_distance_matrix(p, dm)
    written.append(p)

    extra = {"method": opts["method"], "seed": config.seed}
    if opts["method"] == "hierarchical":
        dg = clustering.hierarchical_cluster(dm, opts["linkage"])
        p = out / "dendrogram.csv"
        clustering.write_dendrogram(p, dg)
        written.append(p)
        if opts.get("cut") is not None:
            height = float(opts["cut"])
        else:
            span = clustering.cut_heights_for_k(dg, int(opts["k"]))
            if span is None:
                raise CLIError(f"no cut height yields exactly {opts['k']} clusters")
            lo, hi = span
            height = lo if math.isinf(hi) else (lo + hi) / 2
        partition = clustering.cut_dendrogram(dg, height)
        extra.update(linkage=opts["linkage"], cut_height=height)
    else:
        res = clustering.kmeans_dtw(data, int(opts["k"]), seed=config.seed,
                                    restarts=int(opts["restarts"]))
        partition = res.partition
        extra.update(restarts=int(opts["restarts"]), cost=res.cost)
        p = out / "centroids.json"
        p.write_text(json.dumps({str(c + 1): list(map(float, v)) for c, v in enumerate(res.centroids)},
                                indent=1, sort_keys=True) + "\n", encoding="utf-8")
        written.append(p)
    extra["k"] = partition.k

    p = out / "partition.csv"
    clustering.write_partition(p, partition)
    written.append(p)
    if config.inputs.get("metadata"):
        meta = ingest.load_metadata(config.inputs["metadata"])
        profiles = clustering.profile_clusters(partition, meta)
        p = out / "profiles.json"
        clustering.write_profiles(p, profiles, extra)
        written.append(p)
    return written


def cmd_regress(config: PipelineConfig, out: Path) -> list[Path]:
    config.validate()
    opts = config.options
    meta = ingest.load_metadata(config.inputs["metadata"])
    reports = read_burstiness_csv(config.inputs["burstiness"])
    joy = {r.team_id: r for r in reports if r.emotion is Emotion.JOY}
    predictors = [s.strip() for s in opts["predictors"].split(",") if s.strip()]
    dm = regression.build_design(meta, joy, predictors, opts["response"], opts.get("league"))
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "b_joy" in predictors:
        excluded = [(t, "joy", "excluded_from_regression", "no joy burstiness")
                    for t in sorted(meta) if t not in dm.rows
                    and (opts.get("league") is None or meta[t].league == opts["league"])]
        if excluded:
            p = out / "regression_warnings.csv"
            _write_warnings(p, excluded)
            written.append(p)
    p = out / "regression.json"
    extra = {"response": opts["response"], "predictors": predictors,
             "league": opts.get("league"), "seed": config.seed}
    if opts.get("drop"):
        result = regression.ablation_compare(dm, opts["drop"])
    else:
        result = regression.fit_ols(dm)
    regression.write_regression_json(p, result, extra)
    return [*written, p]


def cmd_simulate(config: PipelineConfig, out: Path) -> list[Path]:
    opts = config.options
    params = {k: opts[k] for k in ("interval", "rate", "shape", "scale", "p_stay",
                                   "fast_rate", "slow_rate") if opts.get(k) is not None}
    try:
        times = simulate.simulate_events(opts["kind"], int(opts["n"]), config.seed, **params)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    out.parent.mkdir(parents=True, exist_ok=True)
    simulate.write_events(out, times, {"kind": opts["kind"], "seed": config.seed,
                                       "config_hash": config.digest(),
                                       **{k: v for k, v in params.items()}})
    return [out]


def replication_check(dm: clustering.DistanceMatrix, meta: dict, k: int = 3) -> dict:
    """Look for a k-cluster cut, per linkage, containing the published
    North/Center/South cluster within +/-2 teams per category."""
    doc = {"target_geo": PUBLISHED_GEO_CLUSTER, "k": k, "linkages": {}}
    matched = []
    for linkage in clustering.LINKAGES:
        dg = clustering.hierarchical_cluster(dm, linkage)
        span = clustering.cut_heights_for_k(dg, k)
        entry = {"cut_interval": None, "clusters": [], "match": False}
        if span is not None:
            lo, hi = span
            height = lo if math.isinf(hi) else (lo + hi) / 2
            entry["cut_interval"] = [lo, None if math.isinf(hi) else hi]
            part = clustering.cut_dendrogram(dg, height)
            for c, teams in part.clusters().items():
                geo = {g: sum(meta[t].geo == g for t in teams if t in meta)
                       for g in PUBLISHED_GEO_CLUSTER}
                ok = all(abs(geo[g] - PUBLISHED_GEO_CLUSTER[g]) <= 2 for g in geo)
                entry["clusters"].append({"cluster": c, "size": len(teams), "geo": geo, "match": ok})
                entry["match"] = entry["match"] or ok
        if entry["match"]:
            matched.append(linkage)
        doc["linkages"][linkage] = entry
    doc["matched_linkages"] = matched
    doc["status"] = "match" if matched else "convention_mismatch"
    if not matched:
        doc["note"] = ("no linkage reproduces the published cluster composition under "
                       "absolute-difference, unnormalised DTW")
    return doc


def cmd_report(config: PipelineConfig, out: Path) -> list[Path]:
    config.validate()
    opts = config.options
    seed = config.seed
    out.mkdir(parents=True, exist_ok=True)
    written = []

    sub = PipelineConfig("ingest", {"posts": config.inputs["posts"]}, {}, seed)
    written += cmd_ingest(sub, out)
    series_dir = out / "series"

    sub = PipelineConfig("burstiness", {"series": series_dir},
                         {"emotions": opts["emotions"], "lag": opts["lag"]}, seed)
    written += cmd_burstiness(sub, out)

    cl_opts = {"emotion": "joy", "method": "hierarchical", "linkage": opts["linkage"],
               "cut": opts.get("cut"), "k": opts["k"], "restarts": opts["restarts"]}
    written += cmd_cluster(PipelineConfig("cluster", {"series": series_dir,
                                                       "metadata": config.inputs["metadata"]},
                                          cl_opts, seed), out / "hierarchical")
    km_opts = dict(cl_opts, method="kmeans")
    written += cmd_cluster(PipelineConfig("cluster", {"series": series_dir,
                                                       "metadata": config.inputs["metadata"]},
                                          km_opts, seed), out / "kmeans")

    meta = ingest.load_metadata(config.inputs["metadata"])
    dm = clustering.read_distance_matrix(out / "hierarchical" / "distances.csv")
    p = out / "clustering_replication.json"
    p.write_text(json.dumps(replication_check(dm, meta, int(opts["k"])), indent=1,
                            sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)

    reports = read_burstiness_csv(out / "burstiness.csv")
    p = out / "burstiness_memory_plot.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team_id", "league", "emotion", "B_n", "M", "final_rank"])
        for r in sorted(reports, key=lambda r: (meta[r.team_id].league if r.team_id in meta else "",
                                                r.emotion.value, r.team_id)):
            m = meta.get(r.team_id)
            w.writerow([r.team_id, m.league if m else "", r.emotion.value, _fmt(r.B_n),
                        _fmt(r.M), m.final_rank if m else ""])
    written.append(p)

    reg_opts = {"response": "final_rank", "predictors": opts["predictors"],
                "drop": opts["drop"], "league": None}
    sub = PipelineConfig("regress", {"metadata": config.inputs["metadata"],
                                     "burstiness": out / "burstiness.csv"}, reg_opts, seed)
    try:
        written += cmd_regress(sub, out)
    except (FandomDynError, ValueError) as exc:
        logger.warning("regression skipped: %s", exc)
        _write_warnings(out / "regression_warnings.csv", [("", "", "regression_failed", str(exc))])
        written.append(out / "regression_warnings.csv")
    return written


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fandomdyn", description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("\n\n", 1)[1], formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help="output directory"):
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")

    p = subs.add_parser("ingest", help="threshold posts and build per-team series",
                        description="posts.csv header: " + ",".join(ingest.POSTS_COLUMNS)
                        + " [,seq]; emotions as fractions or percentages")
    p.add_argument("--posts", required=True)
    common(p)

    p = subs.add_parser("burstiness", help="burstiness/memory per team and emotion",
                        description="writes burstiness.csv: " + ",".join(BURSTINESS_COLUMNS))
    p.add_argument("--series", required=True, help="series/ directory written by ingest")
    p.add_argument("--emotions", default="joy,anger", help="comma list or 'all' (default joy,anger)")
    p.add_argument("--lag", type=int, default=1)
    common(p)

    p = subs.add_parser("cluster", help="DTW clustering of daily signals",
                        description="writes distances.csv, dendrogram.csv "
                        "(step,left,right,distance,size), partition.csv (team_id,cluster), "
                        "profiles.json")
    p.add_argument("--series", required=True)
    p.add_argument("--metadata")
    p.add_argument("--emotion", default="joy")
    p.add_argument("--method", choices=("hierarchical", "kmeans"), default="hierarchical")
    p.add_argument("--linkage", choices=clustering.LINKAGES, default="average")
    p.add_argument("--cut", type=float, help="dendrogram cut height")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--restarts", type=int, default=10)
    common(p)

    p = subs.add_parser("regress", help="OLS of final rank with optional ablation",
                        description="metadata.csv header: " + ",".join(ingest.METADATA_COLUMNS)
                        + " [,mv_rank,pci_rank]")
    p.add_argument("--metadata", required=True)
    p.add_argument("--burstiness", required=True, help="burstiness.csv")
    p.add_argument("--response", default="final_rank", choices=sorted(regression.RESPONSES))
    p.add_argument("--predictors", default=",".join(regression.FULL_MODEL),
                   help=f"comma list from {sorted(regression.PREDICTORS)}")
    p.add_argument("--drop", help="predictor to remove for the ablation comparison")
    p.add_argument("--league", choices=("A", "B", "C"), help="fit a single league")
    common(p)

    p = subs.add_parser("simulate", help="synthetic event times",
                        description="writes CSV index,time with '#' provenance lines")
    p.add_argument("kind", choices=simulate.KINDS)
    p.add_argument("--n", type=int, default=1000, help="number of events")
    p.add_argument("--interval", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--shape", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--p-stay", dest="p_stay", type=float)
    p.add_argument("--fast-rate", dest="fast_rate", type=float)
    p.add_argument("--slow-rate", dest="slow_rate", type=float)
    common(p, "output CSV file")

    p = subs.add_parser("report", help="run the whole pipeline")
    p.add_argument("--posts", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--emotions", default="joy,anger")
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--linkage", choices=clustering.LINKAGES, default="average")
    p.add_argument("--cut", type=float)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--predictors", default=",".join(regression.FULL_MODEL))
    p.add_argument("--drop", default="b_joy")
    common(p)
    return parser


_INPUTS = {
    "ingest": ("posts",),
    "burstiness": ("series",),
    "cluster": ("series", "metadata"),
    "regress": ("metadata", "burstiness"),
    "simulate": (),
    "report": ("posts", "metadata"),
}
_STEPS = {
    "ingest": cmd_ingest,
    "burstiness": cmd_burstiness,
    "cluster": cmd_cluster,
    "regress": cmd_regress,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    values = vars(args).copy()
    inputs = {k: values.pop(k) for k in _INPUTS[args.command]}
    for k in ("command", "out", "seed", "verbose"):
        values.pop(k, None)
    return PipelineConfig(args.command, inputs, values, args.seed)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = config_from_args(args)
    out = Path(args.out)
    try:
        config.validate()
        written = _STEPS[args.command](config, out)
    except (CLIError, FandomDynError, ValueError, OSError) as exc:
        print(f"fandomdyn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.command == "simulate":
        return 0
    _write_provenance(out, config, written)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
