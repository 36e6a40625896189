"""Drone-to-UE link budget.

Log-distance path loss (coefficients in dB with the distance argument in
kilometers, base-10 logarithm), received power, SNR and SINR, and the
street coverage radius ``g_max`` implied by an SNR threshold. Path loss,
received power and SNR are pure dB-domain additions; SINR is the only
place a dBm-to-milliwatt conversion happens, because interference powers
must be summed linearly.

All functions are pure over immutable configs and safe for unrestricted
concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .street_graph import StreetGraph, spatial_graph_distance

LOS = "los"
NLOS = "nlos"


@dataclass(frozen=True)
class RadioConfig:
    """Link parameters. Defaults yield a 94.6 m coverage radius at 15 dB.

    ``interference_mode`` selects the propagation mode used for signals
    from non-serving drones; the worst-case NLoS mode already used for the
    coverage radius is the default.
    """

    a_los: float = 103.8
    b_los: float = 20.9
    a_nlos: float = 145.4
    b_nlos: float = 37.5
    p_tx_dbm: float = 20.0
    n0_dbm: float = -104.0
    altitude_m: float = 50.0
    alpha_db: float = 15.0
    interference_mode: str = NLOS

    def __post_init__(self):
        if not (self.b_los > 0 and self.b_nlos > 0):
            raise ValueError("path-loss slopes must be positive")
        for name in ("a_los", "a_nlos", "p_tx_dbm", "n0_dbm", "alpha_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.altitude_m < 0 or not math.isfinite(self.altitude_m):
            raise ValueError("altitude must be finite and non-negative")
        if self.interference_mode not in (LOS, NLOS):
            raise ValueError(f"unknown mode {self.interference_mode!r}")


@dataclass(frozen=True)
class LinkBudget:
    """Maximum graph distance at which the SNR threshold still holds."""

    g_max: float


def _coefficients(mode: str, cfg: RadioConfig) -> tuple[float, float]:
    mode = mode.lower()
    if mode == LOS:
        return cfg.a_los, cfg.b_los
    if mode == NLOS:
        return cfg.a_nlos, cfg.b_nlos
    raise ValueError(f"unknown mode {mode!r}, expected 'los' or 'nlos'")


def path_loss(distance_m: float, mode: str, cfg: RadioConfig) -> float:
    """Path loss in dB at a slant range in meters."""
    if not distance_m > 0:
        raise ValueError(f"path loss requires a positive distance, got {distance_m}")
    a, b = _coefficients(mode, cfg)
    return a + b * math.log10(distance_m / 1000.0)


def received_power(g: StreetGraph, drone: int, ue: int, mode: str,
                   cfg: RadioConfig) -> float | None:
    """Power in dBm received at ``ue`` from a drone hovering above ``drone``.

    Returns ``None`` when the two points are disconnected.
    """
    d = spatial_graph_distance(g, drone, cfg.altitude_m, ue)
    if d is None:
        return None
    return cfg.p_tx_dbm - path_loss(d, mode, cfg)


def snr(g: StreetGraph, drone: int, ue: int, mode: str,
        cfg: RadioConfig) -> float | None:
    """Signal-to-noise ratio in dB; ``None`` for disconnected pairs."""
    rx = received_power(g, drone, ue, mode, cfg)
    return None if rx is None else rx - cfg.n0_dbm


def sinr(g: StreetGraph, ue: int, serving: int, others: Iterable[int],
         mode: str, cfg: RadioConfig) -> float | None:
    """Signal-to-interference-and-noise ratio in dB at ``ue``.

    ``serving`` carries the useful signal in ``mode``; every drone in
    ``others`` interferes in ``cfg.interference_mode``. Unreachable pairs
    propagate as ``None``.
    """
    others = list(others)
    if serving in others:
        raise ValueError("serving drone cannot be listed as an interferer")
    s_dbm = received_power(g, serving, ue, mode, cfg)
    if s_dbm is None:
        return None
    interferer_mw = []
    for other in others:
        p = received_power(g, other, ue, cfg.interference_mode, cfg)
        if p is None:
            return None
        interferer_mw.append(_dbm_to_mw(p))
    total = math.fsum(interferer_mw) + _dbm_to_mw(cfg.n0_dbm)
    return 10.0 * math.log10(_dbm_to_mw(s_dbm) / total)


def compute_g_max(cfg: RadioConfig) -> LinkBudget:
    """Largest graph distance whose worst-case (NLoS) SNR meets the threshold.

    Closed form: the threshold fixes a maximum slant range, and the graph
    radius is the horizontal leg after removing the altitude. Degenerate
    configurations where even the point directly below the drone misses the
    threshold yield ``g_max = 0``.
    """
    budget_db = cfg.p_tx_dbm - cfg.n0_dbm - cfg.alpha_db
    slant = 1000.0 * 10.0 ** ((budget_db - cfg.a_nlos) / cfg.b_nlos)
    g_max = math.sqrt(max(0.0, slant * slant - cfg.altitude_m * cfg.altitude_m))
    return LinkBudget(g_max=g_max)


def perpendicular_gap_db(mode: str, cfg: RadioConfig,
                         g_max: float | None = None) -> float:
    """Worst-case overestimate of path loss from using graph distance.

    Two equal perpendicular street segments of combined graph length
    ``g_max`` have a straight-line separation shorter by a factor sqrt(2);
    the returned value is the dB difference between the two path-loss
    evaluations.
    """
    if g_max is None:
        g_max = compute_g_max(cfg).g_max
    if not g_max > 0:
        raise ValueError("gap undefined for a zero coverage radius")
    a = g_max / 2.0
    return path_loss(a + a, mode, cfg) - path_loss(math.hypot(a, a), mode, cfg)


def _dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)
