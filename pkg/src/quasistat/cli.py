"""Command-line front end: sample, plan, pendulum-analytic, check, export-graph."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .checks import format_report, run_checks
from .config import RunConfig, load_config, parse_grid
from .errors import ConfigError, DegenerateBoundary, InvalidBounds, NoPath
from .graph import build_bottom_grid, export_graph, lift, nearest_node, sample_fibers, shortest_path
from .pendulum import LinearSpringPendulum, optimal_control_curve, optimal_lambda

log = logging.getLogger("quasistat")

EXIT_OK, EXIT_INVALID, EXIT_NOPATH, EXIT_VERIFY = 0, 1, 2, 3
MIN_SOLVED_FRACTION = 0.9


class SolverFailure(RuntimeError):
    pass


def fmt(x) -> str:
    return format(float(x), ".17g")


def parse_point(text: str) -> tuple[np.ndarray, np.ndarray | None]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected ux,uy[,alpha], got {text!r}") from None
    if len(vals) not in (2, 3) or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"expected ux,uy[,alpha], got {text!r}")
    return np.array(vals[:2]), (np.array(vals[2:]) if len(vals) == 3 else None)


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    if args.out is not None:
        over["out"] = Path(args.out)
    if args.grid is not None:
        over["grid"] = parse_grid(args.grid)
    if args.diagonals:
        over["diagonals"] = True
    if args.switch_penalty is not None:
        over["switch_penalty"] = args.switch_penalty
    if args.workers is not None:
        over["workers"] = args.workers
    return dataclasses.replace(cfg, **over).validate()


def _z_columns(n: int) -> list[str]:
    return ["z_star"] if n == 1 else [f"z_star_{i}" for i in range(n)]


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def sample_grid(cfg: RunConfig):
    system = cfg.build_system()
    bottom = build_bottom_grid(cfg.grid_bounds(), cfg.grid, diagonals=cfg.diagonals)
    fibers = sample_fibers(system, bottom, cfg.lift_config())
    solved = sum(bool(f) for f in fibers)
    for i, f in enumerate(fibers):
        if not f:
            log.warning("no equilibrium found over u = %s", bottom.vertices[i])
    if solved < MIN_SOLVED_FRACTION * len(fibers):
        raise SolverFailure(f"only {solved} of {len(fibers)} fibers solved")
    return system, bottom, fibers


def cmd_sample(cfg: RunConfig) -> int:
    system, bottom, fibers = sample_grid(cfg)
    header = ["u_x", "u_y", *_z_columns(system.n_states), "energy", "stability", "det_hess_zz"]
    rows = []
    for u, fiber in zip(bottom.vertices, fibers):
        for p in fiber:
            rows.append([*map(fmt, u), *map(fmt, p.z_star), fmt(p.energy), p.stability.value, fmt(p.det_hess_zz)])
    path = cfg.out / "samples.csv"
    _write_csv(path, header, rows)
    print(f"{len(rows)} equilibria over {sum(bool(f) for f in fibers)}/{len(fibers)} fibers -> {path}")
    return EXIT_OK


def build_graph(cfg: RunConfig):
    system, bottom, fibers = sample_grid(cfg)
    return system, lift(system, bottom, cfg.lift_config(), fibers=fibers)


def cmd_plan(cfg: RunConfig, start: str, goal: str) -> int:
    (u_s, z_s), (u_g, z_g) = parse_point(start), parse_point(goal)
    system, graph = build_graph(cfg)
    a = nearest_node(graph, system, u_s, z_s)
    b = nearest_node(graph, system, u_g, z_g)
    path = shortest_path(graph, a, b)
    header = ["step", "node_id", "u_x", "u_y", *_z_columns(system.n_states), "energy", "cumulative_cost", "switch"]
    rows, total = [], 0.0
    switches = set(path.switch_markers)
    for k, nid in enumerate(path.nodes):
        nd = graph.nodes[nid]
        if k > 0:
            total += path.step_costs[k - 1]
        rows.append([k, nid, *map(fmt, nd.u), *map(fmt, nd.z), fmt(nd.energy), fmt(total), int(k in switches)])
    _write_csv(cfg.out / "path.csv", header, rows)
    # square-root form of the cost, without any switch surcharge
    length = sum(
        math.sqrt(max(w - (cfg.switch_penalty if k in switches else 0.0), 0.0))
        for k, w in enumerate(path.step_costs, start=1)
    )
    summary = f"cost={fmt(path.total_cost)} length={fmt(length)} nodes={len(path)} switches={len(path.switch_markers)}"
    (cfg.out / "summary.txt").write_text(summary + "\n")
    print(summary)
    return EXIT_OK


def cmd_pendulum_analytic(cfg: RunConfig, alpha1, alpha2, lambda1, lambda2, samples) -> int:
    system = LinearSpringPendulum(L0=cfg.L0, mg=cfg.mg, k_c=cfg.k_c)
    curve = optimal_lambda(alpha1, alpha2, lambda1, lambda2)
    rows = optimal_control_curve(system, alpha1, alpha2, lambda1 * cfg.L0, lambda2 * cfg.L0, samples)
    lam = curve(rows[:, 0])
    lam[0], lam[-1] = lambda1, lambda2
    out = cfg.out / "pendulum_curve.csv"
    _write_csv(out, ["alpha", "lambda_u", "u_x", "u_y"], [[fmt(r[0]), fmt(l), fmt(r[1]), fmt(r[2])] for r, l in zip(rows, lam)])
    print(f"{samples} samples -> {out}")
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    results = run_checks(cfg.build_system(), cfg.grid_bounds())
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_export_graph(cfg: RunConfig) -> int:
    _, graph = build_graph(cfg)
    path = cfg.out / "graph.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    export_graph(graph, path)
    print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--out", help="output directory (default from config, else .)")
    common.add_argument("--grid", help="bottom grid resolution NxM")
    common.add_argument("--diagonals", action="store_true", help="connect diagonal grid neighbours")
    common.add_argument("--switch-penalty", type=float, help="constant added to branch-switch edges")
    common.add_argument("--workers", type=int, help="processes used for fiber solving")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="quasistat", description="Quasi-static equilibrium sampling and planning.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="solve every fiber of the grid and write samples.csv")
    sp = sub.add_parser("plan", parents=[common], help="minimum-cost path between two equilibria")
    sp.add_argument("--start", required=True, help="ux,uy[,alpha]")
    sp.add_argument("--goal", required=True, help="ux,uy[,alpha]")
    sp = sub.add_parser("pendulum-analytic", parents=[common], help="closed-form optimal curve of the linear pendulum")
    sp.add_argument("--alpha1", type=float, default=-math.pi / 2)
    sp.add_argument("--alpha2", type=float, default=math.pi / 2)
    sp.add_argument("--lambda1", type=float, default=1.0)
    sp.add_argument("--lambda2", type=float, default=1.0)
    sp.add_argument("--samples", type=int, default=101)
    sub.add_parser("check", parents=[common], help="run the numerical verification suite")
    sub.add_parser("export-graph", parents=[common], help="lift the grid and write graph.txt")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "plan":
            return cmd_plan(cfg, args.start, args.goal)
        if args.command == "pendulum-analytic":
            return cmd_pendulum_analytic(cfg, args.alpha1, args.alpha2, args.lambda1, args.lambda2, args.samples)
        if args.command == "check":
            return cmd_check(cfg)
        return cmd_export_graph(cfg)
    except NoPath as exc:
        print(f"error: {exc} (reachable set: {exc.reachable} nodes)", file=sys.stderr)
        return EXIT_NOPATH
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOPATH
    except (ConfigError, InvalidBounds, DegenerateBoundary, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
