"""End-to-end audit: load, index, generate regions, scan, simulate, report.

The pipeline wires the pieces together without adding statistics of its
own. Partitioning families are flattened into one candidate list before
scanning, so the global max and the significance cutoff range over every
cell of every partitioning.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset, MeasureMode, load_dataset
from .geometry import Region, regions_overlap
from .index import SpatialIndex, build_index
from .likelihood import Direction, ScoredRegion, scan_regions
from .meanvar import MeanVarReport, mean_var
from .montecarlo import (
    AuditVerdict,
    MaxStatDistribution,
    critical_value,
    global_p_value,
    significant_regions,
    simulate_worlds,
)
from .regions import (
    DEFAULT_MAX_SPLITS,
    DEFAULT_MIN_SPLITS,
    Partitioning,
    kmeans_centers,
    load_region_families,
    random_partitionings,
    regular_grid,
    square_scan_set,
)
from .scanner import CompositeScanner, as_scanner


@dataclass
class AuditConfig:
    """Resolved audit parameters.

    Exactly one region family must be specified: grid, random_parts,
    squares_centers, or regions_file. num_worlds counts the real world,
    so the simulation draws num_worlds - 1 fair worlds.
    """

    data: str | None = None
    mode: MeasureMode = MeasureMode.STATISTICAL_PARITY
    direction: Direction = Direction.TWO_SIDED
    grid: tuple[int, int] | None = None
    random_parts: int | None = None
    splits: tuple[int, int] = (DEFAULT_MIN_SPLITS, DEFAULT_MAX_SPLITS)
    squares_centers: int | None = None
    sides: tuple[float, ...] | None = None
    regions_file: str | None = None
    alpha: float = 0.005
    num_worlds: int = 1000
    seed: int = 0
    resolution: tuple[int, int] | None = None
    top_k: int | None = None

    def family_spec(self) -> dict:
        specs = []
        if self.grid is not None:
            specs.append({"kind": "grid", "mx": self.grid[0], "my": self.grid[1]})
        if self.random_parts is not None:
            specs.append({
                "kind": "random_partitionings",
                "count": self.random_parts,
                "min_splits": self.splits[0],
                "max_splits": self.splits[1],
            })
        if self.squares_centers is not None:
            specs.append({
                "kind": "squares",
                "centers": self.squares_centers,
                "sides": list(self.sides) if self.sides is not None else None,
            })
        if self.regions_file is not None:
            specs.append({"kind": "regions_file", "path": self.regions_file})
        if len(specs) != 1:
            raise ValueError(
                f"exactly one region family must be specified, got {len(specs)}"
            )
        return specs[0]

    def validate(self) -> None:
        self.family_spec()
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.num_worlds < 2:
            raise ValueError(
                f"num_worlds must be >= 2 (real world plus at least one "
                f"simulated), got {self.num_worlds}"
            )
        if self.alpha * self.num_worlds < 1.0:
            raise ValueError(
                f"alpha*num_worlds = {self.alpha * self.num_worlds:.3f} < 1; "
                "raise num_worlds or alpha"
            )
        if self.grid is not None and (self.grid[0] < 1 or self.grid[1] < 1):
            raise ValueError(f"grid dims must be positive, got {self.grid}")
        if self.random_parts is not None:
            lo, hi = self.splits
            if self.random_parts < 1:
                raise ValueError("random_parts must be positive")
            if not 1 <= lo <= hi:
                raise ValueError(f"bad splits range {lo}..{hi}")
        if self.squares_centers is not None and self.squares_centers < 1:
            raise ValueError("squares_centers must be positive")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be positive when given")

    def echo(self) -> dict:
        """Resolved configuration embedded in every report."""
        return {
            "data": self.data,
            "mode": MeasureMode(self.mode).value,
            "direction": Direction(self.direction).value,
            "family": self.family_spec(),
            "alpha": self.alpha,
            "num_worlds": self.num_worlds,
            "seed": self.seed,
            "resolution": list(self.resolution) if self.resolution else None,
            "top_k": self.top_k,
        }


@dataclass
class AuditReport:
    verdict: AuditVerdict
    evidence: list[ScoredRegion]
    non_overlapping: list[ScoredRegion]
    dist: MaxStatDistribution
    config: dict
    dataset_summary: dict
    timings: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "dataset": self.dataset_summary,
            "config": self.config,
            "verdict": {
                "fair": self.verdict.fair,
                "p_value": self.verdict.p_value,
                "tau_log": self.verdict.tau_log,
                "alpha": self.verdict.alpha,
                "critical_llr": self.verdict.critical_llr,
                "num_worlds": self.dist.w,
            },
            "evidence": [_scored_json(s, i + 1) for i, s in
                         enumerate(self.evidence)],
            "non_overlapping": [_scored_json(s, i + 1) for i, s in
                                enumerate(self.non_overlapping)],
            "timings": self.timings,
        }


def _scored_json(s: ScoredRegion, rank: int) -> dict:
    return {
        "rank": rank,
        "xmin": s.region.xmin, "ymin": s.region.ymin,
        "xmax": s.region.xmax, "ymax": s.region.ymax,
        "center_id": s.region.center_id,
        "n": s.counts.n, "p": s.counts.p,
        "rho": s.local_rate,
        "llr": s.llr,
        "p_value": s.p_value,
    }


def _derive_seeds(seed: int) -> tuple[int, int]:
    """Independent sub-seeds for region generation and world simulation.

    Both consumers spawn their own child streams by index, so they must not
    share a root; two words of the master sequence keep them apart.
    """
    state = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def build_family(d: Dataset, ix: SpatialIndex, cfg: AuditConfig):
    """Materialize the configured region family against this dataset.

    Returns (scanner, partitionings); partitionings is empty for square or
    plain-region families.
    """
    spec = cfg.family_spec()
    region_seed, _ = _derive_seeds(cfg.seed)
    if spec["kind"] == "grid":
        parts = [regular_grid(d.bbox, *cfg.grid)]
        return as_scanner(ix, parts), parts
    if spec["kind"] == "random_partitionings":
        parts = random_partitionings(
            d.bbox, cfg.random_parts, cfg.splits[0], cfg.splits[1],
            seed=region_seed,
        )
        return as_scanner(ix, parts), parts
    if spec["kind"] == "squares":
        centers = kmeans_centers(d, cfg.squares_centers, seed=region_seed)
        squares = square_scan_set(centers, cfg.sides)
        return as_scanner(ix, squares), []
    families = load_region_families(cfg.regions_file)
    scanners = [as_scanner(ix, fam if isinstance(fam, Partitioning) else fam)
                for fam in families]
    parts = [fam for fam in families if isinstance(fam, Partitioning)]
    return CompositeScanner(scanners), parts


def _degenerate_distribution(cfg: AuditConfig) -> MaxStatDistribution:
    # All-positive or all-negative data: every fair world reproduces the
    # data exactly, so every simulated max is 0 and simulation is skipped.
    _, sim_seed = _derive_seeds(cfg.seed)
    return MaxStatDistribution(
        values=np.zeros(cfg.num_worlds - 1, dtype=np.float64),
        w=cfg.num_worlds,
        seed=sim_seed,
        direction=Direction(cfg.direction),
    )


def run_audit(d: Dataset, cfg: AuditConfig,
              threads: int | None = 1) -> AuditReport:
    """Audit an in-memory dataset. ``audit`` is the file-loading wrapper."""
    cfg.validate()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    ix = build_index(d, cfg.resolution)
    timings["index_s"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    scanner, _ = build_family(d, ix, cfg)
    timings["regions_s"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    scored, tau_log = scan_regions(ix, scanner, cfg.direction)
    timings["scan_s"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    _, sim_seed = _derive_seeds(cfg.seed)
    if 0.0 < d.rho < 1.0:
        dist = simulate_worlds(
            ix, scanner, d.rho, cfg.num_worlds - 1, seed=sim_seed,
            direction=cfg.direction, threads=threads,
        )
    else:
        dist = _degenerate_distribution(cfg)
    timings["simulate_s"] = time.perf_counter() - t3

    p_value = global_p_value(tau_log, dist)
    cutoff = critical_value(dist, cfg.alpha)
    fair = p_value > cfg.alpha
    verdict = AuditVerdict(
        tau_log=tau_log, p_value=p_value, alpha=cfg.alpha, fair=fair,
        critical_llr=cutoff,
    )
    if fair:
        evidence: list[ScoredRegion] = []
        non_overlapping: list[ScoredRegion] = []
    else:
        evidence = significant_regions(scored, cutoff, dist)
        if cfg.top_k is not None:
            evidence = evidence[:cfg.top_k]
        non_overlapping = select_non_overlapping(evidence)
    timings["total_s"] = time.perf_counter() - t0
    return AuditReport(
        verdict=verdict,
        evidence=evidence,
        non_overlapping=non_overlapping,
        dist=dist,
        config=cfg.echo(),
        dataset_summary={
            "N": d.N, "P": d.P, "rho": d.rho,
            "bbox": list(d.bbox.bounds()),
        },
        timings=timings,
    )


def audit(cfg: AuditConfig, threads: int | None = 1) -> AuditReport:
    """Load the configured dataset and audit it."""
    if cfg.data is None:
        raise ValueError("config has no dataset path")
    t0 = time.perf_counter()
    d = load_dataset(cfg.data, cfg.mode)
    load_s = time.perf_counter() - t0
    report = run_audit(d, cfg, threads=threads)
    report.timings["load_s"] = load_s
    report.timings["total_s"] += load_s
    return report


def select_non_overlapping(evidence: Sequence[ScoredRegion]
                           ) -> list[ScoredRegion]:
    """Greedy disjoint subset of the evidence, strongest first.

    First the best-scoring region per center is kept (regions without a
    center_id each count as their own center), then candidates are admitted
    in descending score order unless they overlap an admitted region with
    positive area. Ties keep input order.
    """
    best_per_center: dict[object, ScoredRegion] = {}
    for i, s in enumerate(evidence):
        key = s.region.center_id if s.region.center_id is not None else ("#", i)
        cur = best_per_center.get(key)
        if cur is None or s.llr > cur.llr:
            best_per_center[key] = s
    candidates = sorted(best_per_center.values(), key=lambda s: -s.llr)
    chosen: list[ScoredRegion] = []
    for s in candidates:
        if not any(regions_overlap(s.region, c.region) for c in chosen):
            chosen.append(s)
    return chosen


def _dump_json(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _geojson_feature(s: ScoredRegion, rank: int) -> dict:
    r = s.region
    ring = [
        [r.xmin, r.ymin], [r.xmax, r.ymin], [r.xmax, r.ymax],
        [r.xmin, r.ymax], [r.xmin, r.ymin],
    ]
    return {
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [ring]},
        "properties": {
            "n": s.counts.n, "p": s.counts.p, "rho": s.local_rate,
            "llr": s.llr, "p_value": s.p_value, "rank": rank,
        },
    }


def export_report(report: AuditReport, out_dir: str) -> dict[str, str]:
    """Write report.json, regions.geojson, and nulldist.json into out_dir.

    Identical configs and seeds produce byte-identical files apart from the
    timings field of report.json.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "report": os.path.join(out_dir, "report.json"),
        "regions": os.path.join(out_dir, "regions.geojson"),
        "nulldist": os.path.join(out_dir, "nulldist.json"),
    }
    _dump_json(report.to_json_dict(), paths["report"])
    features = [_geojson_feature(s, i + 1)
                for i, s in enumerate(report.evidence)]
    _dump_json({"type": "FeatureCollection", "features": features},
               paths["regions"])
    _dump_json(report.dist.to_json_dict(), paths["nulldist"])
    return paths


def export_meanvar(report: MeanVarReport, config: dict, out_dir: str) -> str:
    """Write meanvar.json into out_dir and return its path."""
    os.makedirs(out_dir, exist_ok=True)
    doc = report.to_json_dict()
    doc["config"] = config
    path = os.path.join(out_dir, "meanvar.json")
    _dump_json(doc, path)
    return path


def meanvar_partitionings(d: Dataset, cfg: AuditConfig) -> list[Partitioning]:
    """The partitioning family for a MeanVar run (grid or random only)."""
    spec = cfg.family_spec()
    region_seed, _ = _derive_seeds(cfg.seed)
    if spec["kind"] == "grid":
        return [regular_grid(d.bbox, *cfg.grid)]
    if spec["kind"] == "random_partitionings":
        return random_partitionings(
            d.bbox, cfg.random_parts, cfg.splits[0], cfg.splits[1],
            seed=region_seed,
        )
    raise ValueError(
        "MeanVar needs a partitioning family (grid or random partitionings)"
    )


def run_meanvar(d: Dataset, cfg: AuditConfig, top_k: int = 50
                ) -> MeanVarReport:
    ix = build_index(d, cfg.resolution)
    parts = meanvar_partitionings(d, cfg)
    return mean_var(ix, parts, top_k=top_k)
