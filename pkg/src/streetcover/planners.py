"""Greedy drone-placement solvers and exhaustive oracles.

Four problems share one greedy core: place a single drone (exhaustive
argmax), place a fixed budget of drones under a minimum inter-drone
spacing, the same with a recharge reachability constraint, and the minimum
number of drones that reaches a target coverage fraction.

The budgeted greedy follows the literal iteration accounting: each
iteration examines exactly one candidate (the current best) and removes it
from the pool whether or not it is committed, so a run can finish with
fewer placements than the budget when spacing or recharge checks reject
candidates. The ``fill`` flag switches to the variant that keeps going
until the budget is actually placed or the pool runs out.

Oracles enumerate feasible subsets exhaustively behind explicit size
guards; they exist to be trustworthy, not fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .coverage import DensityProfile, Deployment, associate
from .street_graph import StreetGraph

BETA_VIOLATION = "beta_violation"
RECHARGE_VIOLATION = "recharge_violation"

DEFAULT_SUBSET_GUARD = 2_000_000


class InstanceTooLargeError(ValueError):
    """An exhaustive oracle refused to enumerate past its subset guard."""


@dataclass(frozen=True)
class PlannerConfig:
    """Solver parameters. ``g_r`` and ``recharge_points`` only bind EkDD."""

    k: int = 1
    beta: float = 0.0
    gamma: float = 0.9
    g_r: float = math.inf
    recharge_points: frozenset[int] = frozenset()
    fill: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"drone budget must be at least 1, got {self.k}")
        if self.beta < 0:
            raise ValueError(f"spacing must be non-negative, got {self.beta}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"coverage target must be in (0, 1], got {self.gamma}")
        if self.g_r < 0:
            raise ValueError(f"recharge radius must be non-negative, got {self.g_r}")
        object.__setattr__(self, "recharge_points",
                           frozenset(int(p) for p in self.recharge_points))


@dataclass
class PlannerResult:
    deployment: Deployment
    covered_count: int
    per_pick_marginals: list[int]
    skipped: list[tuple[int, str]]
    feasible: bool = True
    scaled_objective: float | None = None


@dataclass(frozen=True)
class OracleResult:
    """Optimal covered count over feasible subsets of the requested size.

    ``relaxed_size`` marks instances where no subset of the requested size
    was feasible and the reported optimum is over the largest feasible
    smaller size instead.
    """

    best_count: int
    best_subset: tuple[int, ...]
    relaxed_size: bool = False
    subsets_evaluated: int = 0


@dataclass(frozen=True)
class MinDDOracleResult:
    k_star: int | None
    best_subset: tuple[int, ...] | None
    feasible: bool
    target: int
    subsets_evaluated: int = 0


def required_coverage(gamma: float, total_ues: int) -> int:
    """Smallest integer UE count satisfying a fractional coverage target.

    A tiny slack absorbs float noise in ``gamma * total`` so that e.g. a
    90% target on 70 UEs asks for 63, not 64.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"coverage target must be in (0, 1], got {gamma}")
    if total_ues < 0:
        raise ValueError("total UE count cannot be negative")
    return max(0, math.ceil(gamma * total_ues - 1e-9))


def solve_sdd(g: StreetGraph, density: DensityProfile, slot: int,
              g_max: float) -> PlannerResult:
    """Best single position: maximum benefit, smallest id among ties."""
    return _greedy_budgeted(g, density, slot, g_max, k=1, beta=0.0, fill=False)


def solve_kdd(g: StreetGraph, density: DensityProfile, slot: int,
              g_max: float, cfg: PlannerConfig) -> PlannerResult:
    """Greedy placement of up to ``k`` drones with pairwise spacing > beta."""
    return _greedy_budgeted(g, density, slot, g_max, k=cfg.k, beta=cfg.beta,
                            fill=cfg.fill)


def solve_ekdd(g: StreetGraph, density: DensityProfile, slot: int,
               g_max: float, cfg: PlannerConfig,
               lambda_s: float | None = None) -> PlannerResult:
    """Greedy kDD with the extra commit condition that some recharge pole
    lies within graph distance ``g_r`` of the position.

    ``lambda_s`` optionally reports the objective scaled by the serving
    fraction of the slot; the raw covered count is always reported too.
    The scaling is a constant factor and never changes any argmax.
    """
    if not cfg.recharge_points:
        raise ValueError("EkDD requires a non-empty recharge point set")
    result = _greedy_budgeted(g, density, slot, g_max, k=cfg.k, beta=cfg.beta,
                              fill=cfg.fill, g_r=cfg.g_r,
                              recharge_points=cfg.recharge_points)
    if lambda_s is not None:
        result.scaled_objective = lambda_s * result.covered_count
    return result


def solve_mindd(g: StreetGraph, density: DensityProfile, slot: int,
                g_max: float, cfg: PlannerConfig) -> PlannerResult:
    """Fewest drones (greedily) reaching the coverage target under spacing.

    Infeasibility (candidate pool exhausted, or no remaining candidate adds
    coverage, before the target is met) is reported as ``feasible=False``
    with the best achieved coverage, never as a silent partial answer.
    """
    dist, cover, rho = _prepare(g, density, slot, g_max)
    total = int(rho.sum())
    target = required_coverage(cfg.gamma, total)

    n = len(rho)
    pool = np.ones(n, dtype=bool)
    covered = np.zeros(n, dtype=bool)
    positions: list[int] = []
    marginals: list[int] = []
    skipped: list[tuple[int, str]] = []
    covered_count = 0
    feasible = True

    while covered_count < target:
        if not pool.any():
            feasible = False
            break
        v, gain = _best_candidate(cover, rho, covered, pool)
        if gain <= 0:
            # Nothing left can grow the cover; committing zero-gain points
            # would only pad the deployment.
            feasible = False
            break
        pool[v] = False
        if all(dist[v, p] > cfg.beta for p in positions):
            positions.append(v)
            marginals.append(gain)
            np.logical_or(covered, cover[v], out=covered)
            covered_count += gain
        else:
            skipped.append((v, BETA_VIOLATION))

    return _package(g, density, slot, g_max, positions, marginals, skipped,
                    feasible=feasible)


def brute_force_kdd(g: StreetGraph, density: DensityProfile, slot: int,
                    g_max: float, cfg: PlannerConfig, *,
                    enforce_recharge: bool = False,
                    guard: int = DEFAULT_SUBSET_GUARD) -> OracleResult:
    """Exhaustive optimum over spacing-feasible subsets of size ``k``.

    With ``enforce_recharge`` every chosen point must also lie within
    ``g_r`` of a recharge pole. If no subset of size ``k`` is feasible the
    search relaxes downward one size at a time and flags the result.
    Refuses instances whose total subset count exceeds ``guard``.
    """
    dist, cover, rho = _prepare(g, density, slot, g_max)
    n = len(rho)
    recharge_ok = _recharge_feasible_points(dist, cfg, n) if enforce_recharge else None

    evaluated = 0
    for size in range(min(cfg.k, n), -1, -1):
        count = math.comb(n, size)
        if evaluated + count > guard:
            raise InstanceTooLargeError(
                f"{evaluated + count} subsets exceed the guard of {guard}; "
                "refusing to enumerate")
        best: tuple[int, tuple[int, ...]] | None = None
        for combo in combinations(range(n), size):
            evaluated += 1
            if not _subset_feasible(dist, combo, cfg.beta, recharge_ok):
                continue
            value = _union_count(cover, rho, combo)
            if best is None or value > best[0]:
                best = (value, combo)  # lexicographically first maximizer
        if best is not None:
            return OracleResult(best_count=best[0], best_subset=best[1],
                                relaxed_size=(size < cfg.k),
                                subsets_evaluated=evaluated)
    raise AssertionError("size 0 is always feasible")  # pragma: no cover


def brute_force_mindd(g: StreetGraph, density: DensityProfile, slot: int,
                      g_max: float, cfg: PlannerConfig, *,
                      guard: int = DEFAULT_SUBSET_GUARD) -> MinDDOracleResult:
    """Smallest spacing-feasible subset reaching the coverage target.

    Iterative deepening over subset size; within a size, subsets are tried
    in lexicographic order and the first achiever is returned.
    """
    dist, cover, rho = _prepare(g, density, slot, g_max)
    n = len(rho)
    total = int(rho.sum())
    target = required_coverage(cfg.gamma, total)

    evaluated = 0
    for size in range(0, n + 1):
        count = math.comb(n, size)
        if evaluated + count > guard:
            raise InstanceTooLargeError(
                f"{evaluated + count} subsets exceed the guard of {guard}; "
                "refusing to enumerate")
        for combo in combinations(range(n), size):
            evaluated += 1
            if not _subset_feasible(dist, combo, cfg.beta, None):
                continue
            if _union_count(cover, rho, combo) >= target:
                return MinDDOracleResult(k_star=size, best_subset=combo,
                                         feasible=True, target=target,
                                         subsets_evaluated=evaluated)
    return MinDDOracleResult(k_star=None, best_subset=None, feasible=False,
                             target=target, subsets_evaluated=evaluated)


def verify_feasibility(g: StreetGraph, positions: Sequence[int], beta: float,
                       *, g_r: float | None = None,
                       recharge_points: Sequence[int] | None = None) -> list[str]:
    """Independent post-hoc audit of a deployment's constraints.

    Recomputes every pairwise distance and, when recharge parameters are
    given, every pole distance from the graph directly, trusting nothing
    the solver recorded. Returns human-readable violations; an empty list
    means the deployment is feasible.
    """
    violations: list[str] = []
    positions = [int(p) for p in positions]
    if len(set(positions)) != len(positions):
        violations.append(f"duplicate positions: {positions}")
    for i, a in enumerate(positions):
        for b in positions[i + 1:]:
            d = g.distance(a, b)
            if d is not None and d <= beta:
                violations.append(
                    f"positions {a} and {b} are {d:.3f} m apart, need > {beta:g}")
    if recharge_points is not None:
        if g_r is None:
            raise ValueError("recharge audit requires g_r")
        poles = sorted(int(r) for r in recharge_points)
        if not poles:
            raise ValueError("recharge audit requires at least one pole")
        for p in positions:
            dists = [g.distance(p, r) for r in poles]
            finite = [d for d in dists if d is not None]
            nearest = min(finite) if finite else math.inf
            if not nearest <= g_r:
                violations.append(
                    f"position {p} is {nearest:.3f} m from the nearest recharge "
                    f"pole, need <= {g_r:g}")
    return violations


def _prepare(g: StreetGraph, density: DensityProfile, slot: int,
             g_max: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if g.n_points == 0:
        raise ValueError("graph has no points")
    if g_max < 0:
        raise ValueError(f"coverage radius must be non-negative, got {g_max}")
    dist = g.distance_matrix
    cover = dist <= g_max
    rho = density.slot_counts(slot, g.n_points)
    return dist, cover, rho


def _best_candidate(cover: np.ndarray, rho: np.ndarray, covered: np.ndarray,
                    pool: np.ndarray) -> tuple[int, int]:
    # Marginal gain of every candidate; already covered points contribute 0.
    active = np.where(covered, 0, rho)
    gains = cover @ active
    masked = np.where(pool, gains, -1)
    v = int(np.argmax(masked))  # first maximum = smallest point id
    return v, int(masked[v])


def _greedy_budgeted(g: StreetGraph, density: DensityProfile, slot: int,
                     g_max: float, *, k: int, beta: float, fill: bool,
                     g_r: float | None = None,
                     recharge_points: frozenset[int] | None = None) -> PlannerResult:
    dist, cover, rho = _prepare(g, density, slot, g_max)
    n = len(rho)
    recharge_dist = None
    if recharge_points:
        recharge_dist = dist[sorted(recharge_points), :].min(axis=0)

    pool = np.ones(n, dtype=bool)
    covered = np.zeros(n, dtype=bool)
    positions: list[int] = []
    marginals: list[int] = []
    skipped: list[tuple[int, str]] = []
    iterations = 0

    while pool.any():
        if fill:
            if len(positions) >= k:
                break
        elif iterations >= k:
            break
        v, gain = _best_candidate(cover, rho, covered, pool)
        pool[v] = False
        iterations += 1
        if not all(dist[v, p] > beta for p in positions):
            skipped.append((v, BETA_VIOLATION))
            continue
        if recharge_dist is not None and not recharge_dist[v] <= g_r:
            skipped.append((v, RECHARGE_VIOLATION))
            continue
        positions.append(v)
        marginals.append(gain)
        np.logical_or(covered, cover[v], out=covered)

    return _package(g, density, slot, g_max, positions, marginals, skipped)


def _package(g: StreetGraph, density: DensityProfile, slot: int, g_max: float,
             positions: list[int], marginals: list[int],
             skipped: list[tuple[int, str]], feasible: bool = True) -> PlannerResult:
    deployment = Deployment.build(g, positions, density, slot, g_max)
    return PlannerResult(deployment=deployment,
                         covered_count=sum(marginals),
                         per_pick_marginals=list(marginals),
                         skipped=list(skipped),
                         feasible=feasible)


def _recharge_feasible_points(dist: np.ndarray, cfg: PlannerConfig,
                              n: int) -> np.ndarray:
    if not cfg.recharge_points:
        raise ValueError("recharge enforcement requires recharge points")
    nearest = dist[sorted(cfg.recharge_points), :].min(axis=0)
    return nearest <= cfg.g_r


def _subset_feasible(dist: np.ndarray, combo: tuple[int, ...], beta: float,
                     recharge_ok: np.ndarray | None) -> bool:
    if recharge_ok is not None and not all(recharge_ok[v] for v in combo):
        return False
    return all(dist[a, b] > beta for a, b in combinations(combo, 2))


def _union_count(cover: np.ndarray, rho: np.ndarray,
                 combo: tuple[int, ...]) -> int:
    if not combo:
        return 0
    mask = cover[list(combo)].any(axis=0)
    return int(rho[mask].sum())
