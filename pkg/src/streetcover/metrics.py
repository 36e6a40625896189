"""Evaluation metrics over a deployment.

Served UE ratio, average spectral efficiency under inter-drone
interference, served UEs per drone, and area-normalized network capacity
with an even per-drone bandwidth split capped per UE.

Coverage is purely distance based: a covered UE counts as served even when
interference leaves it with a low spectral efficiency. Floating-point
accumulations use correctly rounded summation over points in id order, so
results are bit-for-bit reproducible and invariant under relabeling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from . import radio
from .coverage import DensityProfile, Deployment, associate
from .street_graph import StreetGraph


class NoServedUEsError(ValueError):
    """The deployment serves no UEs, so the per-UE mean is undefined."""


class EmptyDeploymentError(ValueError):
    """The deployment has no drones."""


@dataclass(frozen=True)
class MetricsReport:
    served_ratio: float
    ase: float | None
    ue_per_drone: float | None
    nc: float | None
    per_drone_load: tuple[int, ...]
    area_km2: float | None


def served_ratio(g: StreetGraph, deployment: Deployment,
                 density: DensityProfile, slot: int, g_max: float) -> float:
    """Covered UEs over all UEs; 0.0 when the slot holds no UEs at all."""
    total = density.slot_total(slot)
    if total == 0:
        return 0.0
    assignments = _assignments(g, deployment, density, slot, g_max)
    served = sum(density.count(w, slot) for w in assignments)
    return served / total


def average_spectral_efficiency(g: StreetGraph, deployment: Deployment,
                                density: DensityProfile, slot: int,
                                cfg: radio.RadioConfig, g_max: float,
                                denominator: str = "served",
                                mode: str = radio.NLOS) -> float:
    """Mean over UEs of log2(1 + linear SINR).

    ``denominator`` chooses whether unserved UEs are excluded ("served",
    the default) or counted as zero-rate entries ("all").
    """
    assignments = _assignments(g, deployment, density, slot, g_max)
    ses = _spectral_efficiencies(g, deployment, assignments, cfg, mode)
    served = sum(density.count(w, slot) for w in assignments)
    if denominator == "served":
        denom = served
    elif denominator == "all":
        denom = density.slot_total(slot)
    else:
        raise ValueError(f"denominator must be 'served' or 'all', got {denominator!r}")
    if served == 0 or denom == 0:
        raise NoServedUEsError("no served UEs in this slot")
    weighted = math.fsum(ses[w] * density.count(w, slot) for w in sorted(ses))
    return weighted / denom


def network_capacity(g: StreetGraph, deployment: Deployment,
                     density: DensityProfile, slot: int,
                     cfg: radio.RadioConfig, g_max: float,
                     w_total_mhz: float, w_max_mhz: float,
                     area_km2: float, mode: str = radio.NLOS) -> float:
    """Mbps per km2: spectral efficiency times allocated bandwidth, summed.

    Each drone splits ``w_total_mhz`` evenly over its served UEs, capped at
    ``w_max_mhz`` per UE. An empty deployment yields 0.
    """
    if not area_km2 > 0:
        raise ValueError(f"area must be positive, got {area_km2}")
    if not deployment.positions:
        return 0.0
    assignments = _assignments(g, deployment, density, slot, g_max)
    if not assignments:
        return 0.0
    loads = per_drone_load(deployment, density, slot, assignments)
    ses = _spectral_efficiencies(g, deployment, assignments, cfg, mode)
    bandwidth = [min(w_total_mhz / m, w_max_mhz) if m > 0 else 0.0 for m in loads]
    total_mbps = math.fsum(
        ses[w] * bandwidth[assignments[w]] * density.count(w, slot)
        for w in sorted(assignments))
    return total_mbps / area_km2


def ue_per_drone(g: StreetGraph, deployment: Deployment,
                 density: DensityProfile, slot: int, g_max: float) -> float:
    """Served UEs (union, each counted once) per deployed drone."""
    if not deployment.positions:
        raise EmptyDeploymentError("no drones deployed")
    assignments = _assignments(g, deployment, density, slot, g_max)
    served = sum(density.count(w, slot) for w in assignments)
    return served / len(deployment.positions)


def per_drone_load(deployment: Deployment, density: DensityProfile,
                   slot: int, assignments: Mapping[int, int] | None = None) -> list[int]:
    """UEs served by each drone; the loads partition the covered UEs."""
    if assignments is None:
        assignments = deployment.assignments
    loads = [0] * len(deployment.positions)
    for w, j in assignments.items():
        loads[j] += density.count(w, slot)
    return loads


def evaluate(g: StreetGraph, deployment: Deployment, density: DensityProfile,
             slot: int, cfg: radio.RadioConfig, g_max: float, *,
             w_total_mhz: float = 100.0, w_max_mhz: float = 2.0,
             area_km2: float | None = None, ase_denominator: str = "served",
             mode: str = radio.NLOS) -> MetricsReport:
    """All metrics in one pass; undefined ones come back as ``None``."""
    ratio = served_ratio(g, deployment, density, slot, g_max)
    assignments = _assignments(g, deployment, density, slot, g_max)
    loads = per_drone_load(deployment, density, slot, assignments)

    try:
        ase = average_spectral_efficiency(g, deployment, density, slot, cfg,
                                          g_max, denominator=ase_denominator,
                                          mode=mode)
    except NoServedUEsError:
        ase = None
    try:
        upd = ue_per_drone(g, deployment, density, slot, g_max)
    except EmptyDeploymentError:
        upd = None
    nc = None
    if area_km2 is not None and area_km2 > 0:
        nc = network_capacity(g, deployment, density, slot, cfg, g_max,
                              w_total_mhz, w_max_mhz, area_km2, mode=mode)
    return MetricsReport(served_ratio=ratio, ase=ase, ue_per_drone=upd, nc=nc,
                         per_drone_load=tuple(loads), area_km2=area_km2)


def _assignments(g: StreetGraph, deployment: Deployment,
                 density: DensityProfile, slot: int,
                 g_max: float) -> dict[int, int]:
    if deployment.assignments:
        return dict(deployment.assignments)
    if not deployment.positions:
        return {}
    return associate(g, deployment.positions, density, slot, g_max)


def _spectral_efficiencies(g: StreetGraph, deployment: Deployment,
                           assignments: Mapping[int, int],
                           cfg: radio.RadioConfig, mode: str) -> dict[int, float]:
    positions = deployment.positions
    out: dict[int, float] = {}
    for w in sorted(assignments):
        j = assignments[w]
        # Drones in other components contribute no interference; drop them
        # so the SINR precondition (all parties connected) holds.
        others = [p for i, p in enumerate(positions)
                  if i != j and g.distance(p, w) is not None]
        sinr_db = radio.sinr(g, w, positions[j], others, mode, cfg)
        out[w] = math.log2(1.0 + 10.0 ** (sinr_db / 10.0))
    return out
