"""Scenario construction: GPS log ingestion and synthetic generation.

Ingestion turns raw location updates (user id, timestamp, lat/lon) into a
per-street-point, per-slot UE density: records are projected to local
planar meters, snapped to the nearest street point when close enough
(far-away records are classified as indoor and dropped), bucketed into
time slots, optionally deduplicated per user and slot, and scaled.

The synthetic generator replaces unavailable real logs for tests and
demos: a grid or random-geometric street graph plus hotspot-mixture
densities with exact per-slot totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import csv
import numpy as np
from scipy.spatial import cKDTree

from .coverage import DensityProfile
from .street_graph import StreetGraph, StreetPoint, build_graph

EARTH_RADIUS_M = 6_371_000.0
SECONDS_PER_DAY = 86_400.0


class IngestError(ValueError):
    """Ingestion aborted: too many malformed input rows."""


@dataclass(frozen=True)
class UpdateRecord:
    user_id: str
    timestamp: float
    lat: float
    lon: float


@dataclass(frozen=True)
class ScenarioConfig:
    """Ingestion parameters. ``bbox`` is (lat_min, lat_max, lon_min, lon_max)."""

    bbox: tuple[float, float, float, float]
    snap_radius_m: float = 20.0
    slot_seconds: float = 3600.0
    scale: int = 1
    dedup_per_slot: bool = False
    max_bad_row_ratio: float = 0.1

    def __post_init__(self):
        lat_min, lat_max, lon_min, lon_max = self.bbox
        if not (lat_min < lat_max and lon_min < lon_max):
            raise ValueError(f"degenerate bounding box {self.bbox}")
        if not self.snap_radius_m > 0:
            raise ValueError("snap radius must be positive")
        if not self.slot_seconds > 0:
            raise ValueError("slot duration must be positive")
        if int(self.scale) < 1:
            raise ValueError("scale must be a positive integer")
        object.__setattr__(self, "bbox", tuple(float(b) for b in self.bbox))
        object.__setattr__(self, "scale", int(self.scale))


@dataclass(frozen=True)
class IngestStats:
    total_rows: int
    kept: int
    deduplicated: int
    outside_bbox: int
    indoor: int
    malformed: int

    @property
    def discarded(self) -> int:
        return self.outside_bbox + self.indoor


def project(lat: float, lon: float,
            bbox: tuple[float, float, float, float]) -> tuple[float, float]:
    """Local equirectangular projection, origin at the bbox southwest corner."""
    lat_min, lat_max, lon_min, _ = bbox
    lat_mid = math.radians((lat_min + lat_max) / 2.0)
    x = EARTH_RADIUS_M * math.radians(lon - lon_min) * math.cos(lat_mid)
    y = EARTH_RADIUS_M * math.radians(lat - lat_min)
    return x, y


def unproject(x: float, y: float,
              bbox: tuple[float, float, float, float]) -> tuple[float, float]:
    lat_min, lat_max, lon_min, _ = bbox
    lat_mid = math.radians((lat_min + lat_max) / 2.0)
    lat = lat_min + math.degrees(y / EARTH_RADIUS_M)
    lon = lon_min + math.degrees(x / (EARTH_RADIUS_M * math.cos(lat_mid)))
    return lat, lon


def snap_and_aggregate(records: Iterable[UpdateRecord | None], g: StreetGraph,
                       cfg: ScenarioConfig) -> tuple[DensityProfile, IngestStats]:
    """Turn an update stream into a density profile.

    ``None`` entries in the stream stand for rows that failed parsing
    upstream and are counted as malformed. Records with out-of-range or
    non-finite fields are malformed too. Aborts with :class:`IngestError`
    once the malformed fraction exceeds ``cfg.max_bad_row_ratio``.
    The slot origin is midnight of the day of the earliest valid record.
    """
    lat_min, lat_max, lon_min, lon_max = cfg.bbox
    total = malformed = outside = indoor = 0
    snapped: list[tuple[float, str, int]] = []  # (timestamp, user, point id)

    tree = cKDTree(g.coordinates) if g.n_points else None
    for rec in records:
        total += 1
        if rec is None or not _valid_record(rec):
            malformed += 1
            continue
        if not (lat_min <= rec.lat <= lat_max and lon_min <= rec.lon <= lon_max):
            outside += 1
            continue
        x, y = project(rec.lat, rec.lon, cfg.bbox)
        if tree is None:
            indoor += 1
            continue
        dist, idx = tree.query([x, y])
        if dist > cfg.snap_radius_m:
            indoor += 1
            continue
        snapped.append((rec.timestamp, rec.user_id, int(idx)))

    if total and malformed / total > cfg.max_bad_row_ratio:
        raise IngestError(
            f"{malformed} of {total} rows malformed, above the allowed "
            f"ratio {cfg.max_bad_row_ratio:g}")

    deduplicated = 0
    counts: dict[tuple[int, int], int] = {}
    num_slots = 0
    if snapped:
        t0 = math.floor(min(ts for ts, _, _ in snapped) / SECONDS_PER_DAY) \
            * SECONDS_PER_DAY
        seen: set[tuple[str, int]] = set()
        for ts, user, point in snapped:
            slot = int((ts - t0) // cfg.slot_seconds)
            if cfg.dedup_per_slot:
                key = (user, slot)
                if key in seen:
                    deduplicated += 1
                    continue
                seen.add(key)
            counts[(point, slot)] = counts.get((point, slot), 0) + cfg.scale
            num_slots = max(num_slots, slot + 1)

    profile = DensityProfile(counts=counts, num_slots=num_slots)
    stats = IngestStats(total_rows=total, kept=len(snapped) - deduplicated,
                        deduplicated=deduplicated, outside_bbox=outside,
                        indoor=indoor, malformed=malformed)
    return profile, stats


def read_updates_csv(path) -> Iterator[UpdateRecord | None]:
    """Yield records from a ``user_id,timestamp,lat,lon`` CSV.

    Unparseable rows come out as ``None`` so the aggregator can count them
    without dying mid-stream.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip().lower() for c in next(reader)]
        except StopIteration:
            return
        if header != ["user_id", "timestamp", "lat", "lon"]:
            raise IngestError(
                f"{path}: expected header user_id,timestamp,lat,lon got {header}")
        for row in reader:
            if not row:
                continue
            try:
                yield UpdateRecord(user_id=row[0], timestamp=float(row[1]),
                                   lat=float(row[2]), lon=float(row[3]))
            except (ValueError, IndexError):
                yield None


def ingest_updates_csv(path, g: StreetGraph,
                       cfg: ScenarioConfig) -> tuple[DensityProfile, IngestStats]:
    return snap_and_aggregate(read_updates_csv(path), g, cfg)


def generate_synthetic(seed: int, graph_spec: dict,
                       profile_spec: dict) -> tuple[StreetGraph, DensityProfile]:
    """Deterministic synthetic scenario.

    ``graph_spec``: ``{"kind": "grid", "rows", "cols", "spacing_m"}`` or
    ``{"kind": "geometric", "n_points", "radius_m"[, "extent_m"]}``.
    ``profile_spec``: ``{"hotspots": int, "slot_totals": [ints]}`` plus an
    optional ``"sigma_m"`` hotspot width. Zero hotspots means uniform
    density. Per-slot totals are met exactly via largest-remainder
    apportionment of the hotspot weights.
    """
    rng = np.random.default_rng(int(seed))
    kind = graph_spec.get("kind", "grid")
    if kind == "grid":
        g = grid_graph(int(graph_spec["rows"]), int(graph_spec["cols"]),
                       float(graph_spec["spacing_m"]))
    elif kind == "geometric":
        n = int(graph_spec["n_points"])
        radius = float(graph_spec["radius_m"])
        extent = float(graph_spec.get("extent_m", radius * math.sqrt(max(n, 1))))
        g = geometric_graph(n, radius, extent, rng)
    else:
        raise ValueError(f"unknown graph kind {kind!r}")

    totals = [int(t) for t in profile_spec["slot_totals"]]
    if any(t < 0 for t in totals):
        raise ValueError("slot totals must be non-negative")
    hotspots = int(profile_spec.get("hotspots", 0))
    if hotspots < 0:
        raise ValueError("hotspot count must be non-negative")
    sigma = float(profile_spec.get("sigma_m", 150.0))

    n = g.n_points
    if n == 0:
        raise ValueError("synthetic graph has no points")
    weights = np.ones(n)
    if hotspots > 0:
        coords = g.coordinates
        centers = rng.choice(n, size=min(hotspots, n), replace=False)
        amplitudes = rng.uniform(0.5, 1.5, size=len(centers))
        weights = np.full(n, 0.02)
        for c, amp in zip(centers, amplitudes):
            d2 = ((coords - coords[c]) ** 2).sum(axis=1)
            weights = weights + amp * np.exp(-d2 / (2.0 * sigma * sigma))

    counts: dict[tuple[int, int], int] = {}
    for slot, total in enumerate(totals):
        for point_id, c in enumerate(_apportion(weights, total)):
            if c:
                counts[(point_id, slot)] = int(c)
    profile = DensityProfile(counts=counts, num_slots=len(totals))
    return g, profile


def synthetic_from_document(doc: dict) -> tuple[StreetGraph, DensityProfile]:
    """Build from the JSON document shape used by the CLI.

    Keys: ``seed``, ``graph`` (see :func:`generate_synthetic`),
    ``hotspots``, ``slots`` (list of per-slot totals), optional ``sigma_m``.
    """
    profile_spec = {"hotspots": doc.get("hotspots", 0),
                    "slot_totals": doc["slots"]}
    if "sigma_m" in doc:
        profile_spec["sigma_m"] = doc["sigma_m"]
    return generate_synthetic(doc["seed"], doc["graph"], profile_spec)


def grid_graph(rows: int, cols: int, spacing_m: float) -> StreetGraph:
    """Rectangular street grid, row-major ids, 4-neighbour edges."""
    if rows < 1 or cols < 1 or not spacing_m > 0:
        raise ValueError("grid needs rows >= 1, cols >= 1 and positive spacing")
    points = [StreetPoint(r * cols + c, c * spacing_m, r * spacing_m)
              for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, spacing_m))
            if r + 1 < rows:
                edges.append((v, v + cols, spacing_m))
    return build_graph(points, edges)


def geometric_graph(n_points: int, radius_m: float, extent_m: float,
                    rng: np.random.Generator) -> StreetGraph:
    """Random geometric graph in a square; may be disconnected."""
    if n_points < 1 or not radius_m > 0 or not extent_m > 0:
        raise ValueError("geometric graph needs n >= 1 and positive radius/extent")
    coords = rng.uniform(0.0, extent_m, size=(n_points, 2))
    points = [StreetPoint(i, float(x), float(y))
              for i, (x, y) in enumerate(coords)]
    tree = cKDTree(coords)
    edges = []
    for u, v in sorted(tree.query_pairs(radius_m)):
        length = float(math.hypot(*(coords[u] - coords[v])))
        if length > 0:
            edges.append((int(u), int(v), length))
    return build_graph(points, edges)


def _apportion(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` by weight, exact by construction.

    Largest-remainder rounding; ties go to the smallest point id. All-zero
    weights fall back to uniform.
    """
    n = len(weights)
    if total == 0:
        return np.zeros(n, dtype=np.int64)
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones(n)
    quotas = total * w / w.sum()
    base = np.floor(quotas).astype(np.int64)
    remainder = int(total - base.sum())
    if remainder > 0:
        fractions = quotas - base
        order = np.lexsort((np.arange(n), -fractions))
        base[order[:remainder]] += 1
    return base


def _valid_record(rec: UpdateRecord) -> bool:
    try:
        ts, lat, lon = float(rec.timestamp), float(rec.lat), float(rec.lon)
    except (TypeError, ValueError):
        return False
    return (math.isfinite(ts) and math.isfinite(lat) and math.isfinite(lon)
            and -90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0)
