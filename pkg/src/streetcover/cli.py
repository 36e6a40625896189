"""Command-line front end.

Subcommands: ``gmax`` (print the calibrated coverage radius), ``solve``
(run one solver and emit a deployment plus metrics), ``sweep`` (Cartesian
parameter grids to CSV), ``oracle`` (greedy vs exhaustive optimum on small
instances), ``ingest`` (GPS updates to density), ``synth`` (synthetic
scenario to CSV files).

Configuration is a single JSON document with sections ``radio``,
``energy``, ``planner``, ``scenario``, ``metrics`` and ``paths``. Every
key can be overridden on the command line with ``--section.key value``;
the merged result is echoed to ``resolved_config.json`` in the output
directory. Outputs are byte-identical across runs and thread counts; the
``STREETCOVER_THREADS`` environment variable caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import metrics as metrics_mod
from .coverage import Deployment, load_density_csv, save_density_csv
from .energy import EnergyConfig, compute_g_r, recharge_groups
from .planners import (PlannerConfig, brute_force_kdd, brute_force_mindd,
                       solve_ekdd, solve_kdd, solve_mindd, solve_sdd,
                       verify_feasibility)
from .radio import RadioConfig, compute_g_max
from .scenario import (ScenarioConfig, ingest_updates_csv,
                       synthetic_from_document)
from .street_graph import load_graph_csv, save_graph_csv

PROBLEMS = ("sdd", "kdd", "ekdd", "mindd")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2

DEFAULT_CONFIG = {
    "radio": {
        "a_los": 103.8,
        "b_los": 20.9,
        "a_nlos": 145.4,
        "b_nlos": 37.5,
        "p_tx_dbm": 20.0,
        "n0_dbm": -104.0,
        "altitude_m": 50.0,
        "alpha_db": 15.0,
        "interference_mode": "nlos",
    },
    "energy": {
        "speed_mps": 6.0,
        "lambda_s": 0.45,
        "lambda_f": 0.05,
        "lambda_r": 0.50,
        "slot_seconds": 3600.0,
        "pole_height_m": 10.0,
        "p_consume": 1.0,
        "q_recharge": 1.0,
        "recharge_point_ids": [],
    },
    "planner": {
        "k": 1,
        "beta": 0.0,
        "gamma": 0.9,
        "fill": False,
        "slot": 0,
    },
    "scenario": {
        "bbox": [39.9176, 39.9242, 116.4406, 116.4501],
        "snap_radius_m": 20.0,
        "slot_seconds": 3600.0,
        "scale": 1,
        "dedup_per_slot": False,
    },
    "metrics": {
        "w_total_mhz": 100.0,
        "w_max_mhz": 2.0,
        "area_km2": None,
        "ase_denominator": "served",
    },
    "paths": {
        "nodes": None,
        "edges": None,
        "density": None,
        "updates": None,
        "output_dir": "out",
    },
}

SWEEP_COLUMNS = ["problem", "slot", "k", "beta", "gamma", "speed_mps",
                 "g_max", "g_r", "n_drones", "covered_ues", "total_ues",
                 "served_ratio", "ase", "ue_per_drone", "nc_mbps_per_km2",
                 "feasible", "error"]


class InputError(ValueError):
    """Bad invocation or unreadable input; maps to exit code 1."""


def main(argv=None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_INPUT_ERROR
    try:
        overrides = _parse_overrides(extra)
        config = _load_config(getattr(args, "config", None), overrides, args)
        handler = {
            "gmax": cmd_gmax,
            "solve": cmd_solve,
            "sweep": cmd_sweep,
            "oracle": cmd_oracle,
            "ingest": cmd_ingest,
            "synth": cmd_synth,
        }[args.command]
        return handler(args, config)
    except (InputError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def cmd_gmax(args, config) -> int:
    budget = compute_g_max(_radio_config(config))
    print(f"g_max = {budget.g_max:.3f} m")
    return EXIT_OK


def cmd_solve(args, config) -> int:
    problem = args.problem
    g, density = _load_inputs(config)
    radio_cfg = _radio_config(config)
    energy_cfg = _energy_config(config)
    planner_cfg = _planner_config(config, energy_cfg)
    slot = int(config["planner"]["slot"])
    g_max = compute_g_max(radio_cfg).g_max
    if density.slot_total(slot) == 0:
        print(f"warning: slot {slot} holds no UEs; the deployment will have "
              "zero benefit", file=sys.stderr)

    result = _dispatch_solver(problem, g, density, slot, g_max, planner_cfg,
                              energy_cfg)

    out_dir = _output_dir(config)
    _write_resolved_config(config, out_dir)
    _write_deployment(out_dir / "deployment.json", problem, slot, g_max,
                      planner_cfg, energy_cfg, result)
    report = metrics_mod.evaluate(
        g, result.deployment, density, slot, radio_cfg, g_max,
        **_metrics_kwargs(config, g))
    row = _metrics_row(problem, slot, planner_cfg, energy_cfg, g_max, density,
                       result, report)
    _write_csv(out_dir / "metrics.csv", SWEEP_COLUMNS, [row])
    print(f"wrote {out_dir / 'deployment.json'} and {out_dir / 'metrics.csv'}")
    if problem == "mindd" and not result.feasible:
        print(f"mindd infeasible: best achieved coverage "
              f"{result.covered_count} UEs", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    problem = args.problem
    g, density = _load_inputs(config)
    radio_cfg = _radio_config(config)
    g_max = compute_g_max(radio_cfg).g_max

    axes = _sweep_axes(args, config, g_max)
    cells = _sweep_cells(problem, axes)
    if not cells:
        raise InputError("sweep produced no cells; check the axis lists")

    def run_cell(cell):
        return _run_sweep_cell(problem, cell, g, density, config, radio_cfg,
                               g_max)

    results = _parallel_map(run_cell, cells)

    out_dir = _output_dir(config)
    _write_resolved_config(config, out_dir)
    rows = [row for row, _ in results]
    _write_csv(out_dir / "sweep.csv", SWEEP_COLUMNS, rows)
    with open(out_dir / "deployments.jsonl", "w", encoding="utf-8") as fh:
        for _, dep_record in results:
            fh.write(json.dumps(dep_record, sort_keys=True) + "\n")
    print(f"wrote {len(rows)} rows to {out_dir / 'sweep.csv'}")
    return EXIT_OK


def cmd_oracle(args, config) -> int:
    problem = args.problem
    if problem == "sdd":
        raise InputError("oracle comparison applies to kdd, ekdd and mindd")
    g, density = _load_inputs(config)
    radio_cfg = _radio_config(config)
    energy_cfg = _energy_config(config)
    planner_cfg = _planner_config(config, energy_cfg)
    slot = int(config["planner"]["slot"])
    g_max = compute_g_max(radio_cfg).g_max

    report: dict = {"problem": problem, "slot": slot, "g_max": g_max,
                    "beta": planner_cfg.beta}
    if problem in ("kdd", "ekdd"):
        if problem == "kdd":
            greedy = solve_kdd(g, density, slot, g_max, planner_cfg)
            oracle = brute_force_kdd(g, density, slot, g_max, planner_cfg)
        else:
            greedy = solve_ekdd(g, density, slot, g_max, planner_cfg,
                                lambda_s=energy_cfg.lambda_s)
            oracle = brute_force_kdd(g, density, slot, g_max, planner_cfg,
                                     enforce_recharge=True)
        bound = 1.0 - 1.0 / math.e
        ratio = (greedy.covered_count / oracle.best_count
                 if oracle.best_count > 0 else 1.0)
        report.update({
            "k": planner_cfg.k,
            "greedy_covered": greedy.covered_count,
            "optimal_covered": oracle.best_count,
            "optimal_subset": list(oracle.best_subset),
            "ratio": ratio,
            "bound": bound,
            "bound_satisfied": bool(ratio >= bound - 1e-12),
            "oracle_relaxed_size": oracle.relaxed_size,
        })
    else:
        greedy = solve_mindd(g, density, slot, g_max, planner_cfg)
        oracle = brute_force_mindd(g, density, slot, g_max, planner_cfg)
        total = density.slot_total(slot)
        m = planner_cfg.gamma * total
        if not oracle.feasible:
            report.update({"gamma": planner_cfg.gamma, "m": m,
                           "feasible": False})
        else:
            k_star = oracle.k_star
            bound = (math.log(m) + 1.0) * k_star if m > 0 else float(k_star)
            greedy_count = len(greedy.deployment.positions)
            report.update({
                "gamma": planner_cfg.gamma,
                "m": m,
                "greedy_drones": greedy_count,
                "optimal_drones": k_star,
                "ln_m_plus_1": math.log(m) + 1.0 if m > 0 else None,
                "bound": bound,
                "bound_satisfied": bool(greedy.feasible
                                        and greedy_count <= bound + 1e-9),
                "greedy_feasible": greedy.feasible,
            })

    out_dir = _output_dir(config)
    _write_resolved_config(config, out_dir)
    with open(out_dir / "oracle.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for key in sorted(report):
        print(f"{key} = {report[key]}")
    return EXIT_OK


def cmd_ingest(args, config) -> int:
    g, _ = _load_inputs(config, need_density=False)
    updates = config["paths"].get("updates")
    if not updates:
        raise InputError("ingest requires paths.updates (or --updates)")
    if not Path(updates).exists():
        raise InputError(f"updates file not found: {updates}")
    scenario_cfg = _scenario_config(config)
    profile, stats = ingest_updates_csv(updates, g, scenario_cfg)

    out_dir = _output_dir(config)
    _write_resolved_config(config, out_dir)
    save_density_csv(profile, out_dir / "density.csv")
    with open(out_dir / "ingest_stats.json", "w", encoding="utf-8") as fh:
        json.dump({
            "total_rows": stats.total_rows,
            "kept": stats.kept,
            "deduplicated": stats.deduplicated,
            "outside_bbox": stats.outside_bbox,
            "indoor": stats.indoor,
            "malformed": stats.malformed,
            "num_slots": profile.num_slots,
        }, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"kept {stats.kept} of {stats.total_rows} rows "
          f"({stats.indoor} indoor, {stats.outside_bbox} outside bbox, "
          f"{stats.malformed} malformed); wrote {out_dir / 'density.csv'}")
    return EXIT_OK


def cmd_synth(args, config) -> int:
    spec_path = args.spec
    if not Path(spec_path).exists():
        raise InputError(f"synthetic spec not found: {spec_path}")
    with open(spec_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    g, profile = synthetic_from_document(doc)
    out_dir = _output_dir(config)
    save_graph_csv(g, out_dir / "nodes.csv", out_dir / "edges.csv")
    save_density_csv(profile, out_dir / "density.csv")
    print(f"wrote {g.n_points} points, {len(g.edges)} edges, "
          f"{profile.num_slots} slots to {out_dir}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streetcover",
        description="Drone placement on street graphs")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory (paths.output_dir)")
        p.add_argument("--nodes", help="nodes.csv path (paths.nodes)")
        p.add_argument("--edges", help="edges.csv path (paths.edges)")
        p.add_argument("--density", help="density.csv path (paths.density)")

    p = sub.add_parser("gmax", help="print the calibrated coverage radius")
    p.add_argument("--config", help="JSON configuration file")

    p = sub.add_parser("solve", help="run one solver")
    p.add_argument("problem", choices=PROBLEMS)
    common(p)
    p.add_argument("--k", type=int, help="drone budget (planner.k)")
    p.add_argument("--beta", type=float, help="min inter-drone distance (planner.beta)")
    p.add_argument("--gamma", type=float, help="coverage target (planner.gamma)")
    p.add_argument("--s", type=float, help="flying speed m/s (energy.speed_mps)")
    p.add_argument("--slot", type=int, help="time slot (planner.slot)")
    p.add_argument("--fill", action="store_true", default=None,
                   help="keep placing until the budget is filled")
    p.add_argument("--ase-denominator", choices=["served", "all"],
                   help="metrics.ase_denominator")
    p.add_argument("--area-km2", type=float, help="metrics.area_km2")

    p = sub.add_parser("sweep", help="run a parameter grid")
    p.add_argument("problem", choices=PROBLEMS)
    common(p)
    p.add_argument("--k", help="comma list, e.g. 2,3,4")
    p.add_argument("--beta", help="comma list; values may be multiples like 2gmax")
    p.add_argument("--gamma", help="comma list")
    p.add_argument("--s", help="comma list of speeds m/s")
    p.add_argument("--slot", help="comma list of slots")
    p.add_argument("--ase-denominator", choices=["served", "all"])
    p.add_argument("--area-km2", type=float)

    p = sub.add_parser("oracle", help="compare greedy against the exhaustive optimum")
    p.add_argument("problem", choices=PROBLEMS)
    common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--slot", type=int)

    p = sub.add_parser("ingest", help="GPS updates to density.csv")
    common(p)
    p.add_argument("--updates", help="updates CSV path (paths.updates)")

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--spec", required=True, help="synthetic spec JSON")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--out", help="output directory")

    return parser


def _parse_overrides(tokens: list[str]) -> dict[tuple[str, str], object]:
    """Parse trailing ``--section.key value`` (or ``--section.key=value``)."""
    overrides: dict[tuple[str, str], object] = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or "." not in token:
            raise InputError(f"unrecognized argument: {token}")
        body = token[2:]
        if "=" in body:
            key, raw = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(tokens):
                raise InputError(f"missing value for {token}")
            raw = tokens[i + 1]
            i += 2
        section, _, field = key.partition(".")
        if not section or not field:
            raise InputError(f"override must look like --section.key: {token}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides[(section, field)] = value
    return overrides


def _load_config(path, overrides, args) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        if not Path(path).exists():
            raise InputError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        for section, values in loaded.items():
            if section not in config or not isinstance(values, dict):
                raise InputError(f"unknown config section {section!r}")
            for key, value in values.items():
                if key not in config[section]:
                    raise InputError(f"unknown config key {section}.{key}")
                config[section][key] = value
    for (section, key), value in overrides.items():
        if section not in config or key not in config[section]:
            raise InputError(f"unknown override {section}.{key}")
        config[section][key] = value
    _apply_flag(config, "paths", "output_dir", getattr(args, "out", None))
    _apply_flag(config, "paths", "nodes", getattr(args, "nodes", None))
    _apply_flag(config, "paths", "edges", getattr(args, "edges", None))
    _apply_flag(config, "paths", "density", getattr(args, "density", None))
    _apply_flag(config, "paths", "updates", getattr(args, "updates", None))
    _apply_flag(config, "metrics", "ase_denominator",
                getattr(args, "ase_denominator", None))
    _apply_flag(config, "metrics", "area_km2", getattr(args, "area_km2", None))
    if getattr(args, "command", None) in ("solve", "oracle"):
        _apply_flag(config, "planner", "k", getattr(args, "k", None))
        _apply_flag(config, "planner", "beta", getattr(args, "beta", None))
        _apply_flag(config, "planner", "gamma", getattr(args, "gamma", None))
        _apply_flag(config, "planner", "slot", getattr(args, "slot", None))
        _apply_flag(config, "planner", "fill", getattr(args, "fill", None))
        _apply_flag(config, "energy", "speed_mps", getattr(args, "s", None))
    return config


def _apply_flag(config, section, key, value) -> None:
    if value is not None:
        config[section][key] = value


def _radio_config(config) -> RadioConfig:
    return RadioConfig(**config["radio"])


def _energy_config(config) -> EnergyConfig:
    section = dict(config["energy"])
    poles = section.pop("recharge_point_ids")
    # The drone altitude is shared state owned by the radio section.
    return EnergyConfig(altitude_m=config["radio"]["altitude_m"],
                        recharge_points=frozenset(int(p) for p in poles),
                        **section)


def _planner_config(config, energy_cfg: EnergyConfig) -> PlannerConfig:
    section = config["planner"]
    return PlannerConfig(k=int(section["k"]), beta=float(section["beta"]),
                         gamma=float(section["gamma"]),
                         g_r=compute_g_r(energy_cfg),
                         recharge_points=energy_cfg.recharge_points,
                         fill=bool(section["fill"]))


def _scenario_config(config) -> ScenarioConfig:
    section = config["scenario"]
    return ScenarioConfig(bbox=tuple(section["bbox"]),
                          snap_radius_m=float(section["snap_radius_m"]),
                          slot_seconds=float(section["slot_seconds"]),
                          scale=int(section["scale"]),
                          dedup_per_slot=bool(section["dedup_per_slot"]))


def _load_inputs(config, need_density: bool = True):
    paths = config["paths"]
    for key in ("nodes", "edges"):
        if not paths.get(key):
            raise InputError(f"paths.{key} is required (or pass --{key})")
        if not Path(paths[key]).exists():
            raise InputError(f"{key} file not found: {paths[key]}")
    g = load_graph_csv(paths["nodes"], paths["edges"])
    density = None
    if need_density:
        if not paths.get("density"):
            raise InputError("paths.density is required (or pass --density)")
        if not Path(paths["density"]).exists():
            raise InputError(f"density file not found: {paths['density']}")
        density = load_density_csv(paths["density"])
        if density.max_point_id() >= g.n_points:
            raise InputError(
                f"density references point id {density.max_point_id()} but the "
                f"graph has only {g.n_points} points")
    return g, density


def _dispatch_solver(problem, g, density, slot, g_max, planner_cfg, energy_cfg):
    if problem == "sdd":
        return solve_sdd(g, density, slot, g_max)
    if problem == "kdd":
        return solve_kdd(g, density, slot, g_max, planner_cfg)
    if problem == "ekdd":
        return solve_ekdd(g, density, slot, g_max, planner_cfg,
                          lambda_s=energy_cfg.lambda_s)
    if problem == "mindd":
        return solve_mindd(g, density, slot, g_max, planner_cfg)
    raise InputError(f"unknown problem {problem!r}")


def _sweep_axes(args, config, g_max) -> dict[str, list]:
    def parse_list(raw, conv):
        return [conv(tok) for tok in str(raw).split(",") if tok != ""]

    def parse_beta(tok):
        tok = tok.strip().lower()
        if tok.endswith("gmax"):
            factor = tok[:-4]
            return (float(factor) if factor else 1.0) * g_max
        return float(tok)

    planner = config["planner"]
    energy = config["energy"]
    axes = {
        "slot": parse_list(args.slot, int) if args.slot else [int(planner["slot"])],
        "k": parse_list(args.k, int) if args.k else [int(planner["k"])],
        "beta": (parse_list(args.beta, parse_beta) if args.beta
                 else [float(planner["beta"])]),
        "gamma": (parse_list(args.gamma, float) if args.gamma
                  else [float(planner["gamma"])]),
        "s": (parse_list(args.s, float) if args.s
              else [float(energy["speed_mps"])]),
    }
    return axes


def _sweep_cells(problem, axes) -> list[dict]:
    # Only the axes meaningful for the problem vary; the rest collapse to
    # their configured single value so the row count matches expectations.
    relevant = {
        "sdd": ("slot",),
        "kdd": ("slot", "k", "beta"),
        "ekdd": ("slot", "k", "beta", "s"),
        "mindd": ("slot", "beta", "gamma"),
    }[problem]
    cells = [{}]
    for axis in ("slot", "k", "beta", "gamma", "s"):
        values = axes[axis] if axis in relevant else [axes[axis][0]]
        cells = [dict(cell, **{axis: value}) for cell in cells
                 for value in values]
    return cells


def _run_sweep_cell(problem, cell, g, density, config, radio_cfg, g_max):
    energy_section = dict(config["energy"])
    energy_section["speed_mps"] = cell["s"]
    cell_config = dict(config, energy=energy_section)
    energy_cfg = _energy_config(cell_config)
    planner_cfg = PlannerConfig(
        k=int(cell["k"]), beta=float(cell["beta"]), gamma=float(cell["gamma"]),
        g_r=compute_g_r(energy_cfg), recharge_points=energy_cfg.recharge_points,
        fill=bool(config["planner"]["fill"]))
    slot = int(cell["slot"])

    dep_record = {"problem": problem, "slot": slot, "k": planner_cfg.k,
                  "beta": planner_cfg.beta, "gamma": planner_cfg.gamma,
                  "speed_mps": cell["s"], "g_max": g_max,
                  "g_r": planner_cfg.g_r if problem == "ekdd" else None,
                  "positions": [], "feasible": None, "error": None}
    try:
        result = _dispatch_solver(problem, g, density, slot, g_max,
                                  planner_cfg, energy_cfg)
        report = metrics_mod.evaluate(
            g, result.deployment, density, slot, radio_cfg, g_max,
            **_metrics_kwargs(config, g))
        row = _metrics_row(problem, slot, planner_cfg, energy_cfg, g_max,
                           density, result, report)
        dep_record.update(positions=list(result.deployment.positions),
                          feasible=result.feasible,
                          skipped=[[p, reason] for p, reason in result.skipped])
    except Exception as exc:  # recorded in-row, sweep continues
        row = {c: None for c in SWEEP_COLUMNS}
        row.update(problem=problem, slot=slot, k=planner_cfg.k,
                   beta=planner_cfg.beta, gamma=planner_cfg.gamma,
                   speed_mps=cell["s"], g_max=g_max, error=str(exc))
        dep_record["error"] = str(exc)
    return row, dep_record


def _metrics_kwargs(config, g) -> dict:
    section = config["metrics"]
    area = section["area_km2"]
    if area is None:
        area = _bbox_area_km2(g)
    return {"w_total_mhz": float(section["w_total_mhz"]),
            "w_max_mhz": float(section["w_max_mhz"]),
            "area_km2": area,
            "ase_denominator": section["ase_denominator"]}


def _bbox_area_km2(g) -> float | None:
    if g.n_points == 0:
        return None
    coords = g.coordinates
    dx = float(coords[:, 0].max() - coords[:, 0].min())
    dy = float(coords[:, 1].max() - coords[:, 1].min())
    area = dx * dy / 1e6
    return area if area > 0 else None


def _metrics_row(problem, slot, planner_cfg, energy_cfg, g_max, density,
                 result, report) -> dict:
    return {
        "problem": problem,
        "slot": slot,
        "k": planner_cfg.k,
        "beta": planner_cfg.beta,
        "gamma": planner_cfg.gamma if problem == "mindd" else None,
        "speed_mps": energy_cfg.speed_mps if problem == "ekdd" else None,
        "g_max": g_max,
        "g_r": planner_cfg.g_r if problem == "ekdd" else None,
        "n_drones": len(result.deployment.positions),
        "covered_ues": result.covered_count,
        "total_ues": density.slot_total(slot),
        "served_ratio": report.served_ratio,
        "ase": report.ase,
        "ue_per_drone": report.ue_per_drone,
        "nc_mbps_per_km2": report.nc,
        "feasible": result.feasible,
        "error": None,
    }


def _write_deployment(path, problem, slot, g_max, planner_cfg, energy_cfg,
                      result) -> None:
    doc = {
        "problem": problem,
        "slot": slot,
        "g_max": g_max,
        "k": planner_cfg.k,
        "beta": planner_cfg.beta,
        "gamma": planner_cfg.gamma,
        "g_r": planner_cfg.g_r if problem == "ekdd" else None,
        "recharge_points": sorted(planner_cfg.recharge_points),
        "positions": list(result.deployment.positions),
        "per_pick_marginals": result.per_pick_marginals,
        "covered_count": result.covered_count,
        "skipped": [[p, reason] for p, reason in result.skipped],
        "feasible": result.feasible,
        "scaled_objective": result.scaled_objective,
        "assignments": {str(w): j
                        for w, j in sorted(result.deployment.assignments.items())},
    }
    if problem == "ekdd" and energy_cfg.recharge_points:
        n_min, groups = recharge_groups(planner_cfg.k, energy_cfg.p_consume,
                                        energy_cfg.q_recharge)
        doc["recharge_n_min"] = n_min
        doc["recharge_group_count"] = groups
        doc["recharge_group_assignment"] = [
            i % groups for i in range(len(result.deployment.positions))]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _output_dir(config) -> Path:
    out = Path(config["paths"]["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_resolved_config(config, out_dir: Path) -> None:
    with open(out_dir / "resolved_config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _max_workers() -> int:
    raw = os.environ.get("STREETCOVER_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InputError(f"STREETCOVER_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _parallel_map(fn, items):
    workers = _max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


if __name__ == "__main__":
    sys.exit(main())
