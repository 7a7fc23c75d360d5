"""Command line interface: audit, meanvar, gen-synth, regions."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .dataset import DatasetError, MeasureMode, load_dataset, read_rows, write_csv
from .geometry import Region
from .likelihood import Direction
from .pipeline import (
    AuditConfig,
    audit,
    export_meanvar,
    export_report,
    meanvar_partitionings,
    run_meanvar,
    _derive_seeds,
)
from .regions import (
    kmeans_centers,
    random_partitionings,
    regular_grid,
    save_region_families,
    square_scan_set,
)
from . import synth

_MODES = {
    "parity": MeasureMode.STATISTICAL_PARITY,
    "opportunity": MeasureMode.EQUAL_OPPORTUNITY,
    "predictive-equality": MeasureMode.PREDICTIVE_EQUALITY,
}
_DIRECTIONS = {
    "two-sided": Direction.TWO_SIDED,
    "higher-inside": Direction.HIGHER_INSIDE,
    "lower-inside": Direction.LOWER_INSIDE,
}


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        mx, my = int(w), int(h)
    except ValueError:
        raise ValueError(f"--grid expects WxH, e.g. 100x50, got {text!r}") from None
    return mx, my


def _parse_splits(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise ValueError(
            f"--splits expects MIN..MAX, e.g. 10..40, got {text!r}"
        ) from None


def _parse_sides(text: str) -> tuple[float, ...]:
    try:
        lo, hi, count = text.split(":")
        return tuple(np.linspace(float(lo), float(hi), int(count)))
    except ValueError:
        raise ValueError(
            f"--sides expects LO:HI:COUNT, e.g. 0.1:2.0:20, got {text!r}"
        ) from None


def _parse_rect(text: str) -> Region:
    try:
        x0, y0, x1, y1 = (float(v) for v in text.split(","))
    except ValueError:
        raise ValueError(
            f"expected X0,Y0,X1,Y1 rectangle, got {text!r}"
        ) from None
    return Region(x0, y0, x1, y1)


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", metavar="WxH",
                   help="regular WxH grid partitioning of the bounding box")
    p.add_argument("--random-partitionings", type=int, metavar="K",
                   help="K random rectangular partitionings")
    p.add_argument("--splits", metavar="MIN..MAX",
                   help="split-count range for random partitionings "
                        "(default 10..40)")
    p.add_argument("--squares", action="store_true",
                   help="square scan set around k-means centers")
    p.add_argument("--centers", type=int, metavar="K",
                   help="number of k-means centers for --squares (default 100)")
    p.add_argument("--sides", metavar="LO:HI:COUNT",
                   help="square side lengths for --squares "
                        "(default 0.1:2.0:20)")
    p.add_argument("--regions-file", metavar="PATH",
                   help="load candidate regions from a region-family JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairscan",
        description="Audit binary classifier outcomes for spatial fairness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser(
        "audit",
        help="decide fairness and export evidence regions",
        description="Scan candidate regions, simulate fair worlds, and "
                    "report the verdict with significant regions.",
    )
    pa.add_argument("--config", metavar="PATH",
                    help="JSON file of option defaults; explicit flags win")
    pa.add_argument("--data", metavar="PATH",
                    help="observations CSV (id,lon,lat,outcome[,label])")
    pa.add_argument("--mode", choices=sorted(_MODES),
                    help="outcome slice to audit (default parity)")
    pa.add_argument("--direction", choices=sorted(_DIRECTIONS),
                    help="which rate deviations count (default two-sided)")
    _add_family_flags(pa)
    pa.add_argument("--alpha", type=float,
                    help="significance level (default 0.005)")
    pa.add_argument("--worlds", type=int, metavar="W",
                    help="simulated fair worlds; the real world is added on "
                         "top (default 999)")
    pa.add_argument("--seed", type=int, help="master PRNG seed (default 0)")
    pa.add_argument("--resolution", metavar="GXxGY",
                    help="index grid resolution (default: sqrt(N) per axis)")
    pa.add_argument("--top-k", type=int, metavar="K",
                    help="keep only the K strongest evidence regions")
    pa.add_argument("--out", metavar="DIR",
                    help="write report.json, regions.geojson, nulldist.json")
    pa.add_argument("--threads", type=int, metavar="T",
                    help="worker threads for the simulation (default: all "
                         "CPUs); results do not depend on T")
    pa.add_argument("--fail-on-unfair", action="store_true",
                    help="exit with status 2 when the verdict is UNFAIR")
    pa.set_defaults(func=cmd_audit)

    pm = sub.add_parser(
        "meanvar",
        help="rate-variance baseline over partitionings",
        description="Compute the MeanVar baseline (mean over partitionings "
                    "of the variance of per-cell positive rates).",
    )
    pm.add_argument("--data", required=True, metavar="PATH",
                    help="observations CSV (id,lon,lat,outcome[,label])")
    pm.add_argument("--mode", choices=sorted(_MODES), default="parity",
                    help="outcome slice to audit (default parity)")
    pm.add_argument("--grid", metavar="WxH",
                    help="regular WxH grid partitioning")
    pm.add_argument("--random-partitionings", type=int, metavar="K",
                    help="K random rectangular partitionings")
    pm.add_argument("--splits", metavar="MIN..MAX",
                    help="split-count range (default 10..40)")
    pm.add_argument("--seed", type=int, default=0, help="PRNG seed")
    pm.add_argument("--top-k", type=int, default=50, metavar="K",
                    help="contributors to report (default 50)")
    pm.add_argument("--out", metavar="DIR", help="write meanvar.json")
    pm.set_defaults(func=cmd_meanvar)

    pg = sub.add_parser(
        "gen-synth",
        help="generate synthetic datasets",
        description="Emit synthetic observation CSVs for experiments.",
    )
    pg.add_argument("--kind", required=True,
                    choices=["uniform-split", "fair", "planted"],
                    help="generator: split-rate, fair Bernoulli, or planted "
                         "hot region")
    pg.add_argument("--out", required=True, metavar="PATH", help="output CSV")
    pg.add_argument("--n", type=int, help="number of observations")
    pg.add_argument("--seed", type=int, default=0, help="PRNG seed")
    pg.add_argument("--rect", default="0,0,1,1", metavar="X0,Y0,X1,Y1",
                    help="sampling rectangle (default 0,0,1,1)")
    pg.add_argument("--rho", type=float, default=0.5,
                    help="positive rate for --kind fair (default 0.5)")
    pg.add_argument("--locations", metavar="PATH",
                    help="CSV whose lon/lat columns supply locations for "
                         "--kind fair (subsampled to --n if smaller)")
    pg.add_argument("--plant", metavar="X0,Y0,X1,Y1",
                    help="planted rectangle for --kind planted")
    pg.add_argument("--rho-bg", type=float, default=0.5,
                    help="background rate for --kind planted (default 0.5)")
    pg.add_argument("--rho-in", type=float, default=0.8,
                    help="inside-plant rate for --kind planted (default 0.8)")
    pg.set_defaults(func=cmd_gen_synth)

    pr = sub.add_parser(
        "regions",
        help="generate a region-family file",
        description="Materialize a region family to JSON for replayable "
                    "audits via --regions-file.",
    )
    pr.add_argument("--out", required=True, metavar="PATH", help="output JSON")
    pr.add_argument("--data", metavar="PATH",
                    help="dataset CSV supplying the bounding box (and the "
                         "k-means sample for --squares)")
    pr.add_argument("--bbox", metavar="X0,Y0,X1,Y1",
                    help="explicit bounding box (grid/random families only)")
    _add_family_flags(pr)
    pr.add_argument("--seed", type=int, default=0, help="PRNG seed")
    pr.set_defaults(func=cmd_regions)
    return parser


def _audit_config(args: argparse.Namespace) -> AuditConfig:
    """Merge built-in defaults, optional config file, and explicit flags."""
    defaults = {
        "data": None, "mode": "parity", "direction": "two-sided",
        "grid": None, "random_partitionings": None, "splits": "10..40",
        "squares": False, "centers": 100, "sides": None,
        "regions_file": None, "alpha": 0.005, "worlds": 999, "seed": 0,
        "resolution": None, "top_k": None,
    }
    merged = dict(defaults)
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ValueError(
                f"unknown keys in config file: {', '.join(sorted(unknown))}"
            )
        merged.update(file_cfg)
    for key in defaults:
        flag_value = getattr(args, key, None)
        if key == "squares":
            if args.squares:
                merged[key] = True
        elif flag_value is not None:
            merged[key] = flag_value

    if merged["data"] is None:
        raise ValueError("--data is required (flag or config file)")
    grid = merged["grid"]
    if isinstance(grid, str):
        grid = _parse_grid(grid)
    splits = merged["splits"]
    if isinstance(splits, str):
        splits = _parse_splits(splits)
    sides = merged["sides"]
    if isinstance(sides, str):
        sides = _parse_sides(sides)
    elif sides is not None:
        sides = tuple(float(s) for s in sides)
    resolution = merged["resolution"]
    if isinstance(resolution, str):
        resolution = _parse_grid(resolution)
    elif resolution is not None:
        resolution = (int(resolution[0]), int(resolution[1]))
    return AuditConfig(
        data=merged["data"],
        mode=_MODES[merged["mode"]],
        direction=_DIRECTIONS[merged["direction"]],
        grid=grid,
        random_parts=merged["random_partitionings"],
        splits=tuple(splits),
        squares_centers=(int(merged["centers"]) if merged["squares"] else None),
        sides=sides,
        regions_file=merged["regions_file"],
        alpha=float(merged["alpha"]),
        num_worlds=int(merged["worlds"]) + 1,
        seed=int(merged["seed"]),
        resolution=resolution,
        top_k=merged["top_k"],
    )


def cmd_audit(args: argparse.Namespace) -> int:
    cfg = _audit_config(args)
    print("CONFIG " + json.dumps(cfg.echo(), sort_keys=True))
    report = audit(cfg, threads=args.threads)
    v = report.verdict
    if v.fair:
        print(f"FAIR p={v.p_value:.6g}")
    else:
        print(f"UNFAIR p={v.p_value:.6g} tau_log={v.tau_log:.6g}")
    if args.out:
        paths = export_report(report, args.out)
        for name in ("report", "regions", "nulldist"):
            print(f"wrote {paths[name]}")
    if args.fail_on_unfair and not v.fair:
        return 2
    return 0


def cmd_meanvar(args: argparse.Namespace) -> int:
    cfg = AuditConfig(
        data=args.data,
        mode=_MODES[args.mode],
        grid=_parse_grid(args.grid) if args.grid else None,
        random_parts=args.random_partitionings,
        splits=_parse_splits(args.splits) if args.splits else (10, 40),
        seed=args.seed,
    )
    echo = {
        "data": cfg.data, "mode": MeasureMode(cfg.mode).value,
        "family": cfg.family_spec(), "seed": cfg.seed, "top_k": args.top_k,
    }
    print("CONFIG " + json.dumps(echo, sort_keys=True))
    d = load_dataset(cfg.data, cfg.mode)
    report = run_meanvar(d, cfg, top_k=args.top_k)
    print(f"MEANVAR {report.mean_var:.6g}")
    if args.out:
        path = export_meanvar(report, echo, args.out)
        print(f"wrote {path}")
    return 0


def cmd_gen_synth(args: argparse.Namespace) -> int:
    rect = _parse_rect(args.rect)
    if args.kind == "uniform-split":
        if args.n is None:
            raise ValueError("--n is required for --kind uniform-split")
        d = synth.gen_uniform_split(args.n, rect, seed=args.seed)
    elif args.kind == "fair":
        # Locations and labels need distinct streams: reusing one seed for
        # both would tie each label to its own coordinate draw.
        loc_seed, label_seed = _derive_seeds(args.seed)
        if args.locations is not None:
            rows = read_rows(args.locations)
            pts = np.array([[o.lon, o.lat] for o in rows])
            if args.n is not None:
                if args.n > len(pts):
                    raise ValueError(
                        f"--n {args.n} exceeds the {len(pts)} available "
                        "locations"
                    )
                rng = np.random.default_rng(loc_seed)
                pts = pts[rng.choice(len(pts), size=args.n, replace=False)]
        else:
            if args.n is None:
                raise ValueError("--kind fair needs --locations or --n")
            rng = np.random.default_rng(loc_seed)
            pts = np.column_stack((
                rng.uniform(rect.xmin, rect.xmax, size=args.n),
                rng.uniform(rect.ymin, rect.ymax, size=args.n),
            ))
        d = synth.gen_fair_bernoulli(pts, args.rho, seed=label_seed)
    else:
        if args.n is None or args.plant is None:
            raise ValueError("--kind planted needs --n and --plant")
        d = synth.gen_planted(args.n, rect, _parse_rect(args.plant),
                              args.rho_bg, args.rho_in, seed=args.seed)
    write_csv(d, args.out)
    print(f"wrote {args.out} N={d.N} P={d.P} rho={d.rho:.6g}")
    return 0


def cmd_regions(args: argparse.Namespace) -> int:
    if args.data is not None:
        d = load_dataset(args.data)
        bbox = d.bbox
    elif args.bbox is not None:
        d = None
        bbox = _parse_rect(args.bbox)
    else:
        raise ValueError("need --data or --bbox")
    region_seed, _ = _derive_seeds(args.seed)
    families = []
    if args.grid:
        families.append(regular_grid(bbox, *_parse_grid(args.grid)))
    if args.random_partitionings:
        lo, hi = _parse_splits(args.splits) if args.splits else (10, 40)
        families.extend(random_partitionings(
            bbox, args.random_partitionings, lo, hi, seed=region_seed))
    if args.squares:
        if d is None:
            raise ValueError("--squares needs --data for the k-means centers")
        centers = kmeans_centers(d, args.centers or 100, seed=region_seed)
        sides = _parse_sides(args.sides) if args.sides else None
        families.append(square_scan_set(centers, sides))
    if args.regions_file:
        raise ValueError("--regions-file makes no sense for the regions command")
    if not families:
        raise ValueError("no region family requested")
    save_region_families(args.out, families)
    total = sum(len(f) for f in families)
    print(f"wrote {args.out} families={len(families)} regions={total}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
