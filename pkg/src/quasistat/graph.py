"""Lifting a control grid to the multi-valued equilibrium graph and planning on it.

The bottom graph is a grid over control space.  Above each of its
vertices sit the stable equilibria found there (the fiber); those are the
nodes of the top graph.  A node is joined to the node over a neighbouring
vertex that lies closest to its first-order prediction, and the edge
carries the squared-Hessian cost of the control step, evaluated at the
source node.
"""

from __future__ import annotations

import heapq
import io
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .equilibrium import (
    DEFAULT_CRIT,
    DEFAULT_DEDUP,
    DEFAULT_TOL,
    EquilibriumPoint,
    Stability,
    _solve_state,
    find_equilibria,
    make_point,
    tangent_map,
)
from .errors import InvalidBounds, NoPath, NonConvergence, SingularJacobian
from .metric import quadratic_cost, squared_hessian
from .potential import PotentialSystem

GRAPH_HEADER = "quasistat-topgraph v1"
MATCH_FLOOR = 1e-3
MATCH_EXTENT_FRACTION = 0.05


@dataclass
class BottomGraph:
    vertices: np.ndarray
    edges: list[tuple[int, int]]
    shape: tuple[int, ...] | None = None
    _adj: list[list[int]] | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if not np.all(np.isfinite(self.vertices)):
            raise InvalidBounds("bottom vertices must be finite")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-edges are not allowed")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.vertices)

    def neighbors(self, i: int) -> list[int]:
        if self._adj is None:
            adj: list[list[int]] = [[] for _ in range(len(self.vertices))]
            for a, b in self.edges:
                adj[a].append(b)
                adj[b].append(a)
            self._adj = [sorted(x) for x in adj]
        return self._adj[i]


def build_bottom_grid(bounds: Sequence[Sequence[float]], resolution: Sequence[int], diagonals: bool = False) -> BottomGraph:
    """Regular grid over control space.

    Vertices are ordered with the first axis varying slowest.  Axis
    neighbours are always joined; ``diagonals`` adds every other neighbour
    in the surrounding unit cell.  An axis with resolution 1 holds a single
    value at the midpoint of its bounds.
    """
    bounds = [tuple(map(float, b)) for b in bounds]
    resolution = [int(r) for r in resolution]
    if len(bounds) != len(resolution) or not bounds:
        raise InvalidBounds("need one (lo, hi) pair and one count per axis")
    axes = []
    for (lo, hi), r in zip(bounds, resolution):
        if r < 1 or not (np.isfinite(lo) and np.isfinite(hi)):
            raise InvalidBounds(f"bad axis ({lo}, {hi}) x {r}")
        if r == 1:
            if lo > hi:
                raise InvalidBounds(f"lower bound {lo} exceeds upper bound {hi}")
            axes.append(np.array([0.5 * (lo + hi)]))
        else:
            if not lo < hi:
                raise InvalidBounds(f"degenerate axis bounds ({lo}, {hi})")
            axes.append(np.linspace(lo, hi, r))
    shape = tuple(resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    vertices = np.column_stack([m.ravel() for m in mesh])

    offsets = []
    for off in itertools.product((-1, 0, 1), repeat=len(shape)):
        nonzero = sum(o != 0 for o in off)
        if nonzero == 0 or (nonzero > 1 and not diagonals):
            continue
        # keep one orientation of each undirected offset
        first = next(o for o in off if o != 0)
        if first > 0:
            offsets.append(off)
    edges = []
    for idx in itertools.product(*(range(r) for r in shape)):
        i = int(np.ravel_multi_index(idx, shape))
        for off in offsets:
            jdx = tuple(a + o for a, o in zip(idx, off))
            if all(0 <= a < r for a, r in zip(jdx, shape)):
                edges.append((i, int(np.ravel_multi_index(jdx, shape))))
    edges.sort()
    return BottomGraph(vertices, edges, shape)


@dataclass
class TopNode:
    node_id: int
    bottom_index: int
    z: np.ndarray
    u: np.ndarray
    energy: float
    stability: Stability
    point: EquilibriumPoint | None = field(default=None, repr=False, compare=False)

    def same_record(self, other: "TopNode") -> bool:
        return (
            self.node_id == other.node_id
            and self.bottom_index == other.bottom_index
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.u, other.u)
            and self.energy == other.energy
            and self.stability == other.stability
        )


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    weight: float
    switch: bool = False


@dataclass
class TopGraph:
    nodes: list[TopNode]
    edges: list[Edge]
    match_threshold: float = float("nan")
    unstable: list[TopNode] = field(default_factory=list)
    _out: dict | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        for e in self.edges:
            if not e.weight >= 0.0:
                raise ValueError(f"edge weight must be nonnegative, got {e.weight}")

    def outgoing(self, node_id: int) -> list[Edge]:
        if self._out is None:
            out: dict[int, list[Edge]] = {}
            for e in self.edges:
                out.setdefault(e.source, []).append(e)
            self._out = out
        return self._out.get(node_id, [])

    def edge(self, source: int, target: int) -> Edge | None:
        for e in self.outgoing(source):
            if e.target == target:
                return e
        return None

    def fiber(self, bottom_index: int) -> list[TopNode]:
        return [n for n in self.nodes if n.bottom_index == bottom_index]

    def structurally_equal(self, other: "TopGraph") -> bool:
        if len(self.nodes) != len(other.nodes) or len(self.edges) != len(other.edges):
            return False
        if not all(a.same_record(b) for a, b in zip(self.nodes, other.nodes)):
            return False
        return all(
            (a.source, a.target, a.weight, a.switch) == (b.source, b.target, b.weight, b.switch)
            for a, b in zip(self.edges, other.edges)
        )


@dataclass
class MultiBranchPath:
    nodes: list[int]
    total_cost: float
    switch_markers: list[int]
    step_costs: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)


# ---------------------------------------------------------------------------
# lifting


@dataclass
class LiftConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = 50
    n_seeds: int = 16
    dedup_radius: float = DEFAULT_DEDUP
    crit_threshold: float = DEFAULT_CRIT
    match_threshold: float | None = None
    complete_fibers: bool = True
    max_completion_passes: int = 20
    switch_penalty: float = 0.0
    symmetric: bool = False
    workers: int = 1


def _solve_fiber(args):
    system, u, cfg = args
    return find_equilibria(
        system,
        u,
        tol=cfg.tol,
        dedup_radius=cfg.dedup_radius,
        max_iter=cfg.max_iter,
        n_seeds=cfg.n_seeds,
        crit_threshold=cfg.crit_threshold,
    )


def sample_fibers(system: PotentialSystem, bottom: BottomGraph, config: LiftConfig | None = None) -> list[list[EquilibriumPoint]]:
    """Solve every fiber of the bottom graph; stable and unstable points alike.

    With ``complete_fibers`` each fiber is additionally seeded with the
    first-order predictions from equilibria over neighbouring vertices,
    repeated until no pass finds anything new.  This recovers branches
    whose Newton basin is narrower than the uniform seed spacing.
    """
    cfg = config or LiftConfig()
    jobs = [(system, u, cfg) for u in bottom.vertices]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            fibers = list(pool.map(_solve_fiber, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        fibers = [_solve_fiber(j) for j in jobs]
    if cfg.complete_fibers:
        _complete_fibers(system, bottom, fibers, cfg)
    return fibers


def _complete_fibers(system, bottom, fibers, cfg):
    tried: set[tuple[int, int]] = set()
    tangents: dict[int, np.ndarray] = {}
    for _ in range(cfg.max_completion_passes):
        added = False
        snapshot = [list(f) for f in fibers]
        for j, u_j in enumerate(bottom.vertices):
            for i in bottom.neighbors(j):
                for p in snapshot[i]:
                    if p.is_critical or (j, id(p)) in tried:
                        continue
                    tried.add((j, id(p)))
                    if id(p) not in tangents:
                        try:
                            tangents[id(p)] = tangent_map(p).matrix
                        except SingularJacobian:
                            continue
                    pred = p.z_star + tangents[id(p)] @ (u_j - p.u)
                    try:
                        z = system.normalize(_solve_state(system, u_j, pred, cfg.tol, cfg.max_iter))
                    except (NonConvergence, SingularJacobian):
                        continue
                    if all(system.fiber_distance(z, r.z_star) > cfg.dedup_radius for r in fibers[j]):
                        fibers[j].append(make_point(system, z, u_j, cfg.crit_threshold))
                        added = True
        for f in fibers:
            f.sort(key=lambda p: (p.energy, tuple(p.z_star)))
        if not added:
            break


def fiber_extent(system: PotentialSystem) -> float:
    """Euclidean size of the fiber: 2*pi per angle, the seeding range otherwise."""
    widths = []
    for i, is_angle in enumerate(system.angular):
        if is_angle:
            widths.append(2.0 * np.pi)
        elif system.state_bounds is not None:
            lo, hi = system.state_bounds[i]
            widths.append(hi - lo)
        else:
            widths.append(1.0)
    return float(np.linalg.norm(widths))


def default_match_threshold(system: PotentialSystem, fibers: Sequence[Sequence[EquilibriumPoint]]) -> float:
    """Three times the median spacing between distinct solutions in a fiber.

    Distinct branches of a fiber are usually far apart, so that rule on its
    own can exceed the whole fiber and accept any jump.  It is therefore
    capped at 5% of the fiber extent; the result never drops below 1e-3.
    """
    cap = MATCH_EXTENT_FRACTION * fiber_extent(system)
    gaps = []
    for f in fibers:
        zs = [p.z_star for p in f]
        for a in range(len(zs)):
            d = [system.fiber_distance(zs[a], zs[b]) for b in range(len(zs)) if b != a]
            if d:
                gaps.append(min(d))
    spacing = 3.0 * float(np.median(gaps)) if gaps else cap
    return max(min(spacing, cap), MATCH_FLOOR)


def match_branch(system: PotentialSystem, source: TopNode, candidates: Sequence[TopNode], match_threshold: float) -> TopNode | None:
    """Candidate closest to the first-order prediction from ``source``.

    Returns None when the source is critical, there are no candidates,
    or the best one is farther than ``match_threshold``.  Ties go to the
    lower fiber coordinate.
    """
    if not candidates or source.point is None or source.point.is_critical:
        return None
    u_j = candidates[0].u
    try:
        pred = source.z + tangent_map(source.point)(u_j - source.u)
    except SingularJacobian:
        return None
    scored = sorted(
        ((system.fiber_distance(c.z, pred), tuple(c.z), c.node_id, c) for c in candidates),
        key=lambda t: t[:3],
    )
    dist, _, _, best = scored[0]
    return best if dist <= match_threshold else None


def lift(system: PotentialSystem, bottom: BottomGraph, config: LiftConfig | None = None, fibers=None) -> TopGraph:
    """Build the top graph over ``bottom`` from the stable equilibria of each fiber."""
    cfg = config or LiftConfig()
    if fibers is None:
        fibers = sample_fibers(system, bottom, cfg)
    nodes: list[TopNode] = []
    unstable: list[TopNode] = []
    by_vertex: list[list[TopNode]] = []
    for i, fiber in enumerate(fibers):
        here = []
        for p in fiber:
            if p.stability is Stability.STABLE:
                node = TopNode(len(nodes), i, p.z_star.copy(), p.u.copy(), p.energy, p.stability, p)
                nodes.append(node)
                here.append(node)
            else:
                unstable.append(TopNode(len(unstable), i, p.z_star.copy(), p.u.copy(), p.energy, p.stability, p))
        by_vertex.append(here)

    threshold = cfg.match_threshold
    if threshold is None:
        threshold = default_match_threshold(system, [[n.point for n in f] for f in by_vertex])

    raw: dict[tuple[int, int], float] = {}
    for node in nodes:
        p = node.point
        if p.is_critical:
            continue
        G2 = squared_hessian(p)
        for j in bottom.neighbors(node.bottom_index):
            best = match_branch(system, node, by_vertex[j], threshold)
            if best is not None:
                raw[(node.node_id, best.node_id)] = quadratic_cost(G2, best.u - node.u)

    edges = []
    for (a, b), w in sorted(raw.items()):
        switch = (b, a) not in raw
        if cfg.symmetric and not switch:
            w = 0.5 * (w + raw[(b, a)])
        if switch:
            w += cfg.switch_penalty
        edges.append(Edge(a, b, w, switch))
    return TopGraph(nodes, edges, float(threshold), unstable)


# ---------------------------------------------------------------------------
# search


def shortest_path(graph: TopGraph, start: int, goal: int) -> MultiBranchPath:
    """Dijkstra over the directed, nonnegative edge weights."""
    n = len(graph.nodes)
    for v in (start, goal):
        if not 0 <= v < n:
            raise KeyError(f"node {v} does not exist")
    if start == goal:
        return MultiBranchPath([start], 0.0, [], [])
    dist = {start: 0.0}
    prev: dict[int, int] = {}
    done = set()
    heap = [(0.0, start)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == goal:
            break
        for e in graph.outgoing(v):
            nd = d + e.weight
            if e.target not in dist or nd < dist[e.target]:
                dist[e.target] = nd
                prev[e.target] = v
                heapq.heappush(heap, (nd, e.target))
    if goal not in done:
        raise NoPath(f"node {goal} unreachable from {start}", reachable=len(done))
    seq = [goal]
    while seq[-1] != start:
        seq.append(prev[seq[-1]])
    seq.reverse()
    steps, switches = [], []
    for k, (a, b) in enumerate(zip(seq[:-1], seq[1:]), start=1):
        e = graph.edge(a, b)
        steps.append(e.weight)
        if e.switch:
            switches.append(k)
    return MultiBranchPath(seq, float(sum(steps)), switches, steps)


def nearest_node(graph: TopGraph, system: PotentialSystem, u, z=None) -> int:
    """Node closest in control, then (if ``z`` is given) in fiber distance."""
    if not graph.nodes:
        raise NoPath("graph has no nodes", reachable=0)
    u = np.asarray(u, dtype=float)

    def key(node):
        du = float(np.linalg.norm(node.u - u))
        dz = system.fiber_distance(node.z, z) if z is not None else 0.0
        return (round(du, 12), dz, node.node_id)

    return min(graph.nodes, key=key).node_id


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_graph(graph: TopGraph, dest=None) -> str:
    """Write the text form of ``graph``; returns it and writes to ``dest`` if given."""
    buf = io.StringIO()
    n_states = graph.nodes[0].z.size if graph.nodes else 0
    n_controls = graph.nodes[0].u.size if graph.nodes else 0
    buf.write(GRAPH_HEADER + "\n")
    buf.write(f"dims {n_states} {n_controls}\n")
    buf.write(f"match_threshold {_fmt(graph.match_threshold)}\n")
    for nd in graph.nodes:
        fields = [str(nd.node_id), str(nd.bottom_index)]
        fields += [_fmt(x) for x in nd.u] + [_fmt(x) for x in nd.z]
        fields += [_fmt(nd.energy), nd.stability.value]
        buf.write("node " + " ".join(fields) + "\n")
    for e in graph.edges:
        buf.write(f"edge {e.source} {e.target} {_fmt(e.weight)}\n")
    text = buf.getvalue()
    if dest is not None:
        if isinstance(dest, (str, os.PathLike)):
            with open(dest, "w", encoding="ascii") as fh:
                fh.write(text)
        else:
            dest.write(text)
    return text


def import_graph(source) -> TopGraph:
    """Inverse of :func:`export_graph`; accepts a path, a file object or the text."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    else:
        text = str(source)
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or " ".join(lines[0]) != GRAPH_HEADER:
        raise ValueError("not a quasistat top-graph file")
    n_states = n_controls = 0
    threshold = float("nan")
    nodes, raw = [], []
    for rec in lines[1:]:
        kind = rec[0]
        if kind == "dims":
            n_states, n_controls = int(rec[1]), int(rec[2])
        elif kind == "match_threshold":
            threshold = float(rec[1])
        elif kind == "node":
            vals = rec[1:]
            expected = 2 + n_controls + n_states + 2
            if len(vals) != expected:
                raise ValueError(f"node record has {len(vals)} fields, expected {expected}")
            u = np.array([float(x) for x in vals[2 : 2 + n_controls]])
            z = np.array([float(x) for x in vals[2 + n_controls : 2 + n_controls + n_states]])
            nodes.append(TopNode(int(vals[0]), int(vals[1]), z, u, float(vals[-2]), Stability(vals[-1])))
        elif kind == "edge":
            raw.append((int(rec[1]), int(rec[2]), float(rec[3])))
        else:
            raise ValueError(f"unknown record type {kind!r}")
    pairs = {(a, b) for a, b, _ in raw}
    edges = [Edge(a, b, w, (b, a) not in pairs) for a, b, w in raw]
    return TopGraph(nodes, edges, threshold)
