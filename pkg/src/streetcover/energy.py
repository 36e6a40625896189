"""Battery duty cycle: recharge reachability radius and fleet grouping.

A drone's time slot splits into serve, fly and recharge fractions. The fly
budget must cover a round trip from the serving position to a recharge
pole, including the descent to pole height and the ascent back; that turns
the fraction into a maximum graph distance ``g_R`` from any pole.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

from .street_graph import StreetGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyConfig:
    """Duty-cycle fractions, speed, pole geometry and energy rates.

    ``p_consume`` and ``q_recharge`` are per-slot energy amounts in any
    consistent unit; only their ratio matters.
    """

    speed_mps: float = 6.0
    lambda_s: float = 0.45
    lambda_f: float = 0.05
    lambda_r: float = 0.50
    slot_seconds: float = 3600.0
    altitude_m: float = 50.0
    pole_height_m: float = 10.0
    p_consume: float = 1.0
    q_recharge: float = 1.0
    recharge_points: frozenset[int] = frozenset()

    def __post_init__(self):
        if abs(self.lambda_s + self.lambda_f + self.lambda_r - 1.0) > 1e-9:
            raise ValueError("serve, fly and recharge fractions must sum to 1")
        if min(self.lambda_s, self.lambda_f, self.lambda_r) < 0:
            raise ValueError("duty-cycle fractions must be non-negative")
        if not self.speed_mps > 0:
            raise ValueError("speed must be positive")
        if not self.slot_seconds > 0:
            raise ValueError("slot duration must be positive")
        if not (self.p_consume > 0 and self.q_recharge > 0):
            raise ValueError("energy rates must be positive")
        if not 0 <= self.pole_height_m <= self.altitude_m:
            raise ValueError("pole height must lie between 0 and the drone altitude")
        object.__setattr__(self, "recharge_points",
                           frozenset(int(p) for p in self.recharge_points))


class RechargeFeasibility(NamedTuple):
    feasible: bool
    nearest: int | None
    distance: float | None


def compute_g_r(cfg: EnergyConfig) -> float:
    """Maximum graph distance from a serving position to a recharge pole.

    Half the fly budget (in meters) covers the one-way trip plus the
    altitude change down to the pole; a negative raw value means no serving
    position is reachable at all and is floored at zero.
    """
    raw = 0.5 * cfg.speed_mps * cfg.lambda_f * cfg.slot_seconds \
        + cfg.pole_height_m - cfg.altitude_m
    if raw < 0:
        log.warning("fly budget too small: recharge radius %.1f m floored to 0 "
                    "(no serving position is reachable)", raw)
        return 0.0
    return raw


def recharge_groups(k: int, p: float, q: float) -> tuple[int, int]:
    """Fleet split needed to keep consumed energy within recharged energy.

    Returns ``(n_min, group_count)``: the minimum number of drones that
    must be recharging at any time out of ``k``, and the number of groups
    the fleet is divided into to recharge by turns.
    """
    if k < 1:
        raise ValueError("fleet size must be at least 1")
    if not (p > 0 and q > 0):
        raise ValueError("energy rates must be positive")
    n_min = math.ceil(q * k / (q + p) - 1e-12)
    group_count = math.floor((q + p) / q + 1e-12)
    return max(n_min, 0), group_count


def check_recharge_feasible(g: StreetGraph, v: int,
                            cfg: EnergyConfig) -> RechargeFeasibility:
    """Whether a drone serving at ``v`` can reach some recharge pole.

    Returns the nearest pole and its graph distance as the witness;
    ``distance`` is ``None`` when every pole is unreachable.
    """
    if not cfg.recharge_points:
        raise ValueError("recharge point set is empty")
    g_r = compute_g_r(cfg)
    best_id: int | None = None
    best_d: float | None = None
    for r in sorted(cfg.recharge_points):
        d = g.distance(v, r)
        if d is None:
            continue
        if best_d is None or d < best_d:
            best_id, best_d = r, d
    if best_d is None:
        return RechargeFeasibility(False, None, None)
    return RechargeFeasibility(best_d <= g_r, best_id, best_d)
