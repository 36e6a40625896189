"""Street graph of an urban service area.

Vertices are discretized street points with planar coordinates in meters;
edges join neighbouring points and carry physical lengths. Drones hover
above street points, so every geometric question in this package reduces
to shortest-path ("graph") distances on this structure.

A built graph is immutable and safe to share across threads. Distance
queries are read-only; lazy materialization of the distance matrix and the
per-source row cache are synchronized internally.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

# Above this many points the all-pairs matrix is not built eagerly on first
# query; individual source rows are computed on demand and cached instead.
DEFAULT_MATRIX_CAP = 5000


class GraphConstructionError(ValueError):
    """A point or edge record failed validation."""


@dataclass(frozen=True)
class StreetPoint:
    """A discretized street location. Ids must be dense in [0, n)."""

    id: int
    x: float
    y: float


class StreetGraph:
    """Immutable undirected graph over street points.

    Construct via :func:`build_graph`, which validates the input tables.
    ``distance`` returns ``None`` for disconnected pairs; the internal
    matrix representation uses ``inf`` but that value never escapes the
    scalar query API.
    """

    def __init__(self, points: Sequence[StreetPoint],
                 edges: Sequence[tuple[int, int, float]],
                 matrix_cap: int = DEFAULT_MATRIX_CAP):
        self._points = tuple(points)
        self._edges = tuple(edges)
        self._matrix_cap = matrix_cap
        n = len(self._points)
        rows: list[int] = []
        cols: list[int] = []
        data: list[float] = []
        for u, v, length in self._edges:
            rows.extend((u, v))
            cols.extend((v, u))
            data.extend((length, length))
        self._adjacency = csr_matrix((data, (rows, cols)), shape=(n, n))
        self._coordinates = np.array([(p.x, p.y) for p in self._points],
                                     dtype=float).reshape(n, 2)
        self._matrix: np.ndarray | None = None
        self._row_cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def n_points(self) -> int:
        return len(self._points)

    @property
    def points(self) -> tuple[StreetPoint, ...]:
        return self._points

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        return self._edges

    def point(self, point_id: int) -> StreetPoint:
        self._check_id(point_id)
        return self._points[point_id]

    @property
    def coordinates(self) -> np.ndarray:
        """(n, 2) array of point coordinates in meters. Read-only."""
        return self._coordinates

    @property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs graph distances; ``inf`` marks disconnected pairs.

        Materialized once on first access regardless of the matrix cap
        (solvers need the full matrix); the cap only governs whether scalar
        queries go through it or through the per-row cache.
        """
        if self._matrix is None:
            with self._lock:
                if self._matrix is None:
                    if self.n_points == 0:
                        self._matrix = np.zeros((0, 0))
                    else:
                        m = dijkstra(self._adjacency, directed=False)
                        # Summation order can differ between the two sweep
                        # directions; force exact symmetry.
                        np.minimum(m, m.T, out=m)
                        self._matrix = m
        return self._matrix

    def distance_row(self, point_id: int) -> np.ndarray:
        """Distances from one point to all points (``inf`` if unreachable)."""
        self._check_id(point_id)
        if self.n_points <= self._matrix_cap or self._matrix is not None:
            return self.distance_matrix[point_id]
        with self._lock:
            row = self._row_cache.get(point_id)
        if row is None:
            row = dijkstra(self._adjacency, directed=False, indices=point_id)
            with self._lock:
                self._row_cache[point_id] = row
        return row

    def distance(self, v: int, w: int) -> float | None:
        """Shortest-path length in meters, or ``None`` if disconnected."""
        self._check_id(v)
        self._check_id(w)
        d = float(self.distance_row(v)[w])
        return None if math.isinf(d) else d

    def _check_id(self, point_id: int) -> None:
        if not 0 <= point_id < self.n_points:
            raise KeyError(f"point id {point_id} not in graph of "
                           f"{self.n_points} points")


def build_graph(points: Iterable[StreetPoint | tuple],
                edges: Iterable[Sequence],
                matrix_cap: int = DEFAULT_MATRIX_CAP) -> StreetGraph:
    """Validate the point and edge tables and build an immutable graph.

    Edge records are ``(u, v)`` or ``(u, v, length_m)``; a missing or
    ``None`` length is filled with the Euclidean distance between the
    endpoints. Raises :class:`GraphConstructionError` naming the offending
    record for duplicate ids, dangling endpoints, self loops, duplicate
    edges and non-positive lengths.
    """
    pts: list[StreetPoint] = []
    for p in points:
        if not isinstance(p, StreetPoint):
            p = StreetPoint(int(p[0]), float(p[1]), float(p[2]))
        pts.append(p)

    n = len(pts)
    by_id: dict[int, StreetPoint] = {}
    for p in pts:
        pid = int(p.id)
        if pid in by_id:
            raise GraphConstructionError(f"duplicate point id {pid}")
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise GraphConstructionError(
                f"point {pid} has non-finite coordinates ({p.x}, {p.y})")
        by_id[pid] = StreetPoint(pid, float(p.x), float(p.y))
    if set(by_id) != set(range(n)):
        missing = sorted(set(range(n)) - set(by_id))
        raise GraphConstructionError(
            f"point ids must be dense in [0, {n}); missing {missing[:5]}")
    ordered = [by_id[i] for i in range(n)]

    seen_pairs: set[tuple[int, int]] = set()
    validated: list[tuple[int, int, float]] = []
    for index, rec in enumerate(edges):
        rec = tuple(rec)
        if len(rec) == 2:
            u, v, length = int(rec[0]), int(rec[1]), None
        elif len(rec) == 3:
            u, v = int(rec[0]), int(rec[1])
            length = None if rec[2] is None else float(rec[2])
        else:
            raise GraphConstructionError(
                f"edge record {index} has {len(rec)} fields, expected 2 or 3")
        for endpoint in (u, v):
            if endpoint not in by_id:
                raise GraphConstructionError(
                    f"edge {index} ({u}, {v}): dangling endpoint {endpoint}")
        if u == v:
            raise GraphConstructionError(f"edge {index}: self-loop at point {u}")
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            raise GraphConstructionError(
                f"edge {index}: duplicate edge ({u}, {v})")
        seen_pairs.add(pair)
        if length is None:
            pu, pv = by_id[u], by_id[v]
            length = math.hypot(pu.x - pv.x, pu.y - pv.y)
        if not (math.isfinite(length) and length > 0):
            raise GraphConstructionError(
                f"edge {index} ({u}, {v}) has non-positive length {length}")
        validated.append((u, v, length))

    return StreetGraph(ordered, validated, matrix_cap=matrix_cap)


def graph_distance(g: StreetGraph, v: int, w: int) -> float | None:
    """Shortest-path length between two street points (``None`` if disconnected)."""
    return g.distance(v, w)


def spatial_graph_distance(g: StreetGraph, v: int, h: float,
                           w: int) -> float | None:
    """Distance from a drone hovering at altitude ``h`` above ``v`` to ``w``.

    The hypotenuse of graph distance and altitude; an upper bound on the
    true 3D distance because graph distance upper-bounds ground distance.
    Returns ``None`` for disconnected pairs.
    """
    if h < 0:
        raise ValueError(f"altitude must be non-negative, got {h}")
    d = g.distance(v, w)
    return None if d is None else math.hypot(d, h)


def load_graph_csv(nodes_path, edges_path,
                   matrix_cap: int = DEFAULT_MATRIX_CAP) -> StreetGraph:
    """Read ``nodes.csv`` (header id,x,y) and ``edges.csv`` (header u,v[,length])."""
    points = []
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = _read_header(reader, nodes_path)
        if header[:3] != ["id", "x", "y"]:
            raise GraphConstructionError(
                f"{nodes_path}: expected header id,x,y got {header}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                points.append(StreetPoint(int(row[0]), float(row[1]), float(row[2])))
            except (ValueError, IndexError) as exc:
                raise GraphConstructionError(
                    f"{nodes_path}:{line}: bad node row {row}") from exc

    edges = []
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = _read_header(reader, edges_path)
        if header not in (["u", "v"], ["u", "v", "length"]):
            raise GraphConstructionError(
                f"{edges_path}: expected header u,v[,length] got {header}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                length = None
                if len(row) >= 3 and row[2].strip() != "":
                    length = float(row[2])
                edges.append((int(row[0]), int(row[1]), length))
            except (ValueError, IndexError) as exc:
                raise GraphConstructionError(
                    f"{edges_path}:{line}: bad edge row {row}") from exc

    return build_graph(points, edges, matrix_cap=matrix_cap)


def save_graph_csv(g: StreetGraph, nodes_path, edges_path) -> None:
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "x", "y"])
        for p in g.points:
            writer.writerow([p.id, f"{p.x:.10g}", f"{p.y:.10g}"])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["u", "v", "length"])
        for u, v, length in g.edges:
            writer.writerow([u, v, f"{length:.10g}"])


def _read_header(reader, path) -> list[str]:
    try:
        header = next(reader)
    except StopIteration:
        raise GraphConstructionError(f"{path}: empty file") from None
    return [c.strip().lower() for c in header]
