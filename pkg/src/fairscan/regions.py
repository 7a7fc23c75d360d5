"""Candidate region families: grids, random partitionings, k-means squares."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import Dataset
from .geometry import Region

DEFAULT_MIN_SPLITS = 10
DEFAULT_MAX_SPLITS = 40
# 20 side lengths, 0.1 through 2.0 degrees.
DEFAULT_SIDE_LENGTHS = tuple(np.linspace(0.1, 2.0, 20))


@dataclass(frozen=True)
class Partitioning:
    """A grid of disjoint rectangles covering a bounding box.

    xbounds/ybounds are the sorted cell boundaries including both outer
    edges; regions holds the (len(xbounds)-1) * (len(ybounds)-1) cells in
    row-major order (y outer, x inner), matching cell index iy*ncols + ix.
    """

    regions: tuple[Region, ...]
    xbounds: np.ndarray
    ybounds: np.ndarray
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.regions)


def _grid_partitioning(xbounds: np.ndarray, ybounds: np.ndarray,
                       provenance: Mapping[str, object]) -> Partitioning:
    cells = []
    for iy in range(len(ybounds) - 1):
        for ix in range(len(xbounds) - 1):
            cells.append(Region(
                float(xbounds[ix]), float(ybounds[iy]),
                float(xbounds[ix + 1]), float(ybounds[iy + 1]),
            ))
    return Partitioning(
        regions=tuple(cells),
        xbounds=np.asarray(xbounds, dtype=np.float64),
        ybounds=np.asarray(ybounds, dtype=np.float64),
        provenance=dict(provenance),
    )


def regular_grid(bbox: Region, mx: int, my: int) -> Partitioning:
    """Partition bbox into mx-by-my equal-extent cells."""
    if mx < 1 or my < 1:
        raise ValueError(f"grid dimensions must be positive, got {mx}x{my}")
    if bbox.width == 0.0 and mx > 1:
        raise ValueError("bbox has zero width; a grid with mx > 1 is degenerate")
    if bbox.height == 0.0 and my > 1:
        raise ValueError("bbox has zero height; a grid with my > 1 is degenerate")
    xb = np.linspace(bbox.xmin, bbox.xmax, mx + 1)
    yb = np.linspace(bbox.ymin, bbox.ymax, my + 1)
    return _grid_partitioning(xb, yb, {"kind": "regular", "mx": mx, "my": my})


def random_partitionings(bbox: Region, count: int,
                         min_splits: int = DEFAULT_MIN_SPLITS,
                         max_splits: int = DEFAULT_MAX_SPLITS,
                         seed: int = 0) -> list[Partitioning]:
    """Draw random rectangular partitionings of bbox.

    Partitioning i consumes its own PRNG stream, spawned from the seed by
    index, so results do not depend on generation order or worker count.
    Within a stream the draw order is: h (x-axis split count), v (y-axis
    split count), the h x-coordinates, then the v y-coordinates; split
    counts are uniform on [min_splits, max_splits] inclusive and split
    coordinates uniform over the bbox extent. Each partitioning therefore
    has between (min_splits+1)^2 and (max_splits+1)^2 cells.
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if not 1 <= min_splits <= max_splits:
        raise ValueError(
            f"need 1 <= min_splits <= max_splits, got {min_splits}..{max_splits}"
        )
    root = np.random.SeedSequence(seed)
    parts = []
    for i, child in enumerate(root.spawn(count)):
        rng = np.random.default_rng(child)
        h = int(rng.integers(min_splits, max_splits + 1))
        v = int(rng.integers(min_splits, max_splits + 1))
        xsplits = np.sort(rng.uniform(bbox.xmin, bbox.xmax, size=h))
        ysplits = np.sort(rng.uniform(bbox.ymin, bbox.ymax, size=v))
        xb = np.concatenate(([bbox.xmin], xsplits, [bbox.xmax]))
        yb = np.concatenate(([bbox.ymin], ysplits, [bbox.ymax]))
        parts.append(_grid_partitioning(
            xb, yb,
            {"kind": "random", "seed": seed, "index": i, "h": h, "v": v},
        ))
    return parts


def _points_of(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.points
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got {pts.shape}")
    return pts


def kmeans_centers(data, k: int, seed: int = 0, max_iters: int = 100,
                   return_inertia: bool = False):
    """Cluster observation locations with k-means++ seeded Lloyd iterations.

    Runs on every observation, so duplicate locations act as weights.
    Deterministic for a given seed. Stops when assignments stabilize or
    after max_iters. With return_inertia=True also returns the inertia
    recorded after each assignment step (a non-increasing sequence).
    """
    pts = _points_of(data)
    npts = len(pts)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    distinct = np.unique(pts, axis=0)
    if k > len(distinct):
        raise ValueError(
            f"k={k} exceeds the {len(distinct)} distinct locations"
        )
    rng = np.random.default_rng(seed)

    # k-means++ initialization: spread starting centers by squared distance.
    centers = np.empty((k, 2), dtype=np.float64)
    centers[0] = pts[rng.integers(npts)]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        centers[j] = pts[rng.choice(npts, p=d2 / d2.sum())]
        d2 = np.minimum(d2, ((pts - centers[j]) ** 2).sum(axis=1))

    inertia_trace: list[float] = []
    assign = None
    for _ in range(max_iters):
        dist2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist2.argmin(axis=1)
        inertia_trace.append(float(dist2[np.arange(npts), new_assign].sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        sums = np.zeros((k, 2), dtype=np.float64)
        np.add.at(sums, assign, pts)
        sizes = np.bincount(assign, minlength=k)
        empty = sizes == 0
        if empty.any():
            # Re-seed each empty cluster on the point farthest from its
            # current center; deterministic via argmax.
            far_order = np.argsort(-dist2[np.arange(npts), assign],
                                   kind="stable")
            taken = 0
            for cj in np.flatnonzero(empty):
                centers[cj] = pts[far_order[taken]]
                taken += 1
            # Recompute assignment against repaired centers next loop.
            nonempty = ~empty
            centers[nonempty] = sums[nonempty] / sizes[nonempty, None]
            continue
        centers = sums / sizes[:, None]
    if return_inertia:
        return centers, inertia_trace
    return centers


def square_scan_set(centers, side_lengths: Sequence[float] | None = None
                    ) -> list[Region]:
    """Squares of every given side length centered on every given point.

    Squares are not clipped to any bounding box; empty overhang is handled
    by the counting layer. Each square carries the center_id of the center
    it came from, so overlap pruning can pick one square per center.
    """
    if side_lengths is None:
        side_lengths = DEFAULT_SIDE_LENGTHS
    sides = [float(s) for s in side_lengths]
    for s in sides:
        if s <= 0:
            raise ValueError(f"side lengths must be positive, got {s}")
    out = []
    for i, (cx, cy) in enumerate(np.asarray(centers, dtype=np.float64)):
        cid = f"c{i}"
        for s in sides:
            half = s / 2.0
            out.append(Region(cx - half, cy - half, cx + half, cy + half,
                              center_id=cid))
    return out


def save_region_families(path: str, families: Iterable) -> None:
    """Serialize partitionings and plain region lists to a JSON document."""
    doc_families = []
    for fam in families:
        if isinstance(fam, Partitioning):
            doc_families.append({
                "kind": "partitioning",
                "provenance": dict(fam.provenance),
                "xbounds": [float(v) for v in fam.xbounds],
                "ybounds": [float(v) for v in fam.ybounds],
                "regions": [list(r.bounds()) for r in fam.regions],
            })
        else:
            doc_families.append({
                "kind": "regions",
                "regions": [
                    {"xmin": r.xmin, "ymin": r.ymin,
                     "xmax": r.xmax, "ymax": r.ymax,
                     "center_id": r.center_id}
                    for r in fam
                ],
            })
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"schema": 1, "families": doc_families}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")


def load_region_families(path: str) -> list:
    """Inverse of save_region_families."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != 1:
        raise ValueError(f"unsupported region file schema: {doc.get('schema')!r}")
    out = []
    for fam in doc["families"]:
        if fam["kind"] == "partitioning":
            part = _grid_partitioning(
                np.asarray(fam["xbounds"], dtype=np.float64),
                np.asarray(fam["ybounds"], dtype=np.float64),
                fam.get("provenance", {}),
            )
            out.append(part)
        elif fam["kind"] == "regions":
            out.append([
                Region(r["xmin"], r["ymin"], r["xmax"], r["ymax"],
                       center_id=r.get("center_id"))
                for r in fam["regions"]
            ])
        else:
            raise ValueError(f"unknown region family kind: {fam['kind']!r}")
    return out
