"""UE demand and drone coverage on the street graph.

UEs are integer counts attached to street points per time slot, not
individual entities: the count of covered UEs equals the summed density
over the covered street points, so all set unions and cardinalities reduce
to sums over point ids.

All operations are pure given an immutable graph and profile and are
deterministic regardless of evaluation order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .street_graph import StreetGraph


@dataclass(frozen=True)
class DensityProfile:
    """Per-point, per-slot UE counts. Absent entries mean zero."""

    counts: Mapping[tuple[int, int], int]
    num_slots: int

    def __post_init__(self):
        normalized: dict[tuple[int, int], int] = {}
        for (point_id, slot), count in self.counts.items():
            point_id, slot, count = int(point_id), int(slot), int(count)
            if count < 0:
                raise ValueError(
                    f"negative UE count {count} at point {point_id}, slot {slot}")
            if not 0 <= slot < self.num_slots:
                raise ValueError(
                    f"slot {slot} outside [0, {self.num_slots}) at point {point_id}")
            if point_id < 0:
                raise ValueError(f"negative point id {point_id}")
            if count:
                normalized[(point_id, slot)] = normalized.get((point_id, slot), 0) + count
        object.__setattr__(self, "counts", normalized)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[int, int, int]],
                  num_slots: int | None = None) -> "DensityProfile":
        """Build from ``(point_id, slot, count)`` triples, summing duplicates."""
        rows = [(int(v), int(t), int(c)) for v, t, c in rows]
        if num_slots is None:
            num_slots = max((t for _, t, _ in rows), default=-1) + 1
        counts: dict[tuple[int, int], int] = {}
        for v, t, c in rows:
            counts[(v, t)] = counts.get((v, t), 0) + c
        return cls(counts=counts, num_slots=num_slots)

    def count(self, point_id: int, slot: int) -> int:
        self._check_slot(slot)
        return self.counts.get((int(point_id), slot), 0)

    def slot_total(self, slot: int) -> int:
        self._check_slot(slot)
        return sum(c for (_, t), c in self.counts.items() if t == slot)

    def slot_counts(self, slot: int, n_points: int) -> np.ndarray:
        """Dense int64 vector of counts for one slot."""
        self._check_slot(slot)
        out = np.zeros(n_points, dtype=np.int64)
        for (point_id, t), c in self.counts.items():
            if t == slot:
                if point_id >= n_points:
                    raise ValueError(
                        f"density references point id {point_id} outside a "
                        f"graph of {n_points} points")
                out[point_id] = c
        return out

    def points_with_demand(self, slot: int) -> list[int]:
        self._check_slot(slot)
        return sorted(v for (v, t), c in self.counts.items() if t == slot and c > 0)

    def max_point_id(self) -> int:
        return max((v for v, _ in self.counts), default=-1)

    def _check_slot(self, slot: int) -> None:
        if not 0 <= slot < self.num_slots:
            raise ValueError(f"slot {slot} outside [0, {self.num_slots})")


@dataclass(frozen=True)
class Deployment:
    """Chosen drone positions for one slot, in greedy pick order.

    ``assignments`` maps each UE-bearing street point covered by at least
    one drone to the index (into ``positions``) of its serving drone.
    """

    slot: int
    positions: tuple[int, ...]
    assignments: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.positions)) != len(self.positions):
            raise ValueError(f"duplicate positions in deployment {self.positions}")

    @classmethod
    def build(cls, g: StreetGraph, positions: Sequence[int],
              density: DensityProfile, slot: int, g_max: float) -> "Deployment":
        positions = tuple(int(p) for p in positions)
        assignments = associate(g, positions, density, slot, g_max) if positions else {}
        return cls(slot=slot, positions=positions, assignments=assignments)


def covered_set(g: StreetGraph, v: int, g_max: float) -> set[int]:
    """Street points within graph distance ``g_max`` of ``v``, inclusive."""
    if g_max < 0:
        raise ValueError(f"coverage radius must be non-negative, got {g_max}")
    row = g.distance_row(v)
    return set(int(w) for w in np.flatnonzero(row <= g_max))


def benefit(g: StreetGraph, v: int, density: DensityProfile, slot: int,
            g_max: float) -> int:
    """UEs served by a drone at ``v``: summed density over its covered set."""
    return sum(density.count(w, slot) for w in covered_set(g, v, g_max))


def marginal_benefit(g: StreetGraph, v: int, already_covered: set[int],
                     density: DensityProfile, slot: int, g_max: float) -> int:
    """Additional UEs served by ``v`` beyond the already covered points."""
    fresh = covered_set(g, v, g_max) - set(already_covered)
    return sum(density.count(w, slot) for w in fresh)


def covered_union(g: StreetGraph, positions: Sequence[int],
                  g_max: float) -> set[int]:
    out: set[int] = set()
    for p in positions:
        out |= covered_set(g, p, g_max)
    return out


def union_benefit(g: StreetGraph, positions: Sequence[int],
                  density: DensityProfile, slot: int, g_max: float) -> int:
    """UEs covered by at least one drone (each counted once)."""
    return sum(density.count(w, slot)
               for w in covered_union(g, positions, g_max))


def associate(g: StreetGraph, positions: Sequence[int],
              density: DensityProfile, slot: int,
              g_max: float) -> dict[int, int]:
    """Assign every covered UE-bearing point to its nearest deployed drone.

    Ties break toward the smallest drone index (greedy pick order). Points
    outside every drone's coverage stay unassigned. Association only feeds
    the interference metrics; the solvers' objective never depends on it.
    """
    positions = [int(p) for p in positions]
    if not positions:
        raise ValueError("cannot associate against an empty deployment")
    demand = density.points_with_demand(slot)
    if not demand:
        return {}
    rows = np.stack([g.distance_row(p) for p in positions])
    out: dict[int, int] = {}
    for w in demand:
        dists = rows[:, w]
        j = int(np.argmin(dists))  # first minimum = smallest drone index
        if dists[j] <= g_max:
            out[w] = j
    return out


def load_density_csv(path, num_slots: int | None = None) -> DensityProfile:
    """Read ``density.csv`` with header point_id,slot,count."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip().lower() for c in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if header != ["point_id", "slot", "count"]:
            raise ValueError(
                f"{path}: expected header point_id,slot,count got {header}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), int(row[1]), int(row[2])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{line}: bad density row {row}") from exc
    return DensityProfile.from_rows(rows, num_slots=num_slots)


def save_density_csv(profile: DensityProfile, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["point_id", "slot", "count"])
        for (point_id, slot) in sorted(profile.counts):
            writer.writerow([point_id, slot, profile.counts[(point_id, slot)]])
