"""Post-transient structure of impulsive trajectories: arcs, components, classes.

The class labels (ring, cycle, medusa, medusa-without-ring) are an
operational, heuristic surrogate for pictures of phase portraits.  The
rules, applied per spatial component:

* An arc *settles* when, over the last ``settle_window`` of its duration,
  it moves less than ``settle_ratio`` of its total motion along the
  direction of the kick that started it.  Arcs started by a kick smaller
  than ``loop_tol`` continue the curve they were on and count as settled.
* The *loop points* are the tails (last ``tail_fraction``) of settled arcs
  plus everything after the first revolution of an arc that closes on
  itself.  The component has a closed curve when its loop points cover all
  ``angle_bins`` sectors around their centroid.
* ``revisit_count`` is the number of distinct arcs tracing the closed curve,
  minus one.  A curve traced by a single arc (one pass) has revisit 0.
* The *bundle* is the set of kicked arcs (kick >= ``loop_tol``) that start
  farther than ``tube_radius`` from the closed curve (or all kicked arcs if
  there is no curve).  A bundle needs at least two arcs.

class = cycle if the component is one arc with no jump in or out that
closes on itself; ring if it has a closed curve with revisit >= 1 and no
bundle; medusa if it has a closed curve with revisit >= 1 and a bundle;
medusa-without-ring if it has a bundle but no closed curve; otherwise
unclassified.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .hybrid import HybridTrajectory, ImpulseSchedule, WCSystem, simulate
from .integrate import SolverConfig
from . import presets

log = logging.getLogger(__name__)

__all__ = [
    "CLASSES",
    "COORDS",
    "EmptyPostTransient",
    "ClassifierConfig",
    "ArcNode",
    "SegmentGraph",
    "ComponentReport",
    "AttractorReport",
    "coupled_system",
    "extract_segments",
    "cluster_components",
    "classify_component",
    "analyze",
    "mu_sweep",
]

CYCLE = "cycle"
RING = "ring"
MEDUSA = "medusa"
MEDUSA_WITHOUT_RING = "medusa-without-ring"
UNCLASSIFIED = "unclassified"
CLASSES = (MEDUSA, MEDUSA_WITHOUT_RING, RING, CYCLE)

COORDS = ("E", "I", "e", "i")


class EmptyPostTransient(ValueError):
    """Nothing of the trajectory is left after the transient cut."""


@dataclass(frozen=True)
class ClassifierConfig:
    transient_cut: float = 30.0
    merge_radius: float = 0.05
    loop_tol: float = 0.01
    tube_radius: float = 0.02
    settle_ratio: float = 0.05
    settle_window: float = 0.2
    tail_fraction: float = 0.5
    angle_bins: int = 24
    thin_spacing: float = 0.005
    projection: tuple[int, ...] = (0, 2, 3)

    def __post_init__(self):
        object.__setattr__(self, "projection", tuple(int(k) for k in self.projection))
        if not self.merge_radius > 0:
            raise ValueError("merge_radius must be positive")
        if not 0 < self.thin_spacing < self.merge_radius:
            raise ValueError("thin_spacing must be in (0, merge_radius)")
        if not (0 < self.settle_window < 1 and 0 < self.tail_fraction <= 1):
            raise ValueError("settle_window and tail_fraction are fractions of an arc")


def coupled_system(mu: float) -> tuple[WCSystem, ImpulseSchedule]:
    """Tristable impulsive pair with time constant ``mu`` next to the oscillating pair.

    The two pairs share only the time axis; the printed equations have no
    cross terms.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    return WCSystem([presets.THREE_STATES.with_mu(mu), presets.PERIODIC]), presets.coupled_schedule()


@dataclass
class ArcNode:
    traj: int
    seg: int
    t: np.ndarray
    points: np.ndarray
    kick: np.ndarray | None
    jump_out: bool
    settle: float | None

    @property
    def kicked(self) -> bool:
        return self.kick is not None


@dataclass
class SegmentGraph:
    nodes: list[ArcNode]
    edges: list[tuple[int, int]]
    projection: tuple[int, ...]

    @classmethod
    def union(cls, graphs: Sequence["SegmentGraph"]) -> "SegmentGraph":
        if not graphs:
            raise EmptyPostTransient("no graphs to merge")
        nodes, edges, off = [], [], 0
        for g in graphs:
            if g.projection != graphs[0].projection:
                raise ValueError("projections differ")
            nodes.extend(g.nodes)
            edges.extend((a + off, b + off) for a, b in g.edges)
            off += len(g.nodes)
        return cls(nodes, edges, graphs[0].projection)


def _settle_ratio(t, pts, kick, window):
    """Motion along the kick direction over the final ``window`` fraction, relative to the whole arc."""
    u = kick / np.linalg.norm(kick)
    s = pts @ u
    total = abs(s[-1] - s[0])
    if total < 1e-12:
        return 0.0
    k = int(np.searchsorted(t, t[-1] - window * (t[-1] - t[0])))
    k = min(k, len(s) - 1)
    return float(abs(s[-1] - s[k]) / total)


def extract_segments(
    traj: HybridTrajectory,
    transient_cut: float = 30.0,
    projection: Sequence[int] = (0, 2, 3),
    *,
    traj_id: int = 0,
    loop_tol: float = 0.01,
    settle_window: float = 0.2,
) -> SegmentGraph:
    """One node per smooth piece ending after ``transient_cut``; edges are the jumps between them."""
    if transient_cut >= traj.T:
        raise EmptyPostTransient(f"transient_cut {transient_cut} is not below T={traj.T}")
    proj = list(projection)
    if traj.segments and max(proj) >= traj.segments[0].x.shape[1]:
        raise ValueError(f"projection {tuple(proj)} exceeds state dimension {traj.segments[0].x.shape[1]}")
    nodes: list[ArcNode] = []
    edges: list[tuple[int, int]] = []
    prev = None
    for k, seg in enumerate(traj.segments):
        if seg.t[-1] <= transient_cut:
            continue
        keep = seg.t >= transient_cut
        if keep.sum() < 2:
            continue
        full = seg.x[:, proj]
        kick = None
        settle = None
        if k > 0:
            jr = traj.jumps[k - 1]
            d = (jr.post - jr.pre)[proj]
            if np.linalg.norm(d) >= loop_tol:
                kick = d
                settle = _settle_ratio(seg.t, full, d, settle_window)
        nodes.append(ArcNode(traj_id, k, seg.t[keep], full[keep], kick, k < len(traj.jumps), settle))
        if prev is not None and prev == k - 1:
            edges.append((len(nodes) - 2, len(nodes) - 1))
        prev = k
    if not nodes:
        raise EmptyPostTransient(f"no samples after t={transient_cut}")
    return SegmentGraph(nodes, edges, tuple(projection))


def _thin(points: np.ndarray, spacing: float) -> np.ndarray:
    """Keep a point once it is at least ``spacing`` from the last kept one; always keep the last."""
    keep = [0]
    last = points[0]
    for j in range(1, len(points)):
        if np.sqrt(((points[j] - last) ** 2).sum()) >= spacing:
            keep.append(j)
            last = points[j]
    if keep[-1] != len(points) - 1:
        keep.append(len(points) - 1)
    return points[keep]


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def cluster_components(g: SegmentGraph, merge_radius: float = 0.05, thin_spacing: float = 0.005) -> list[list[int]]:
    """Single-linkage grouping of arcs whose point sets come within ``merge_radius``.

    Jump edges play no role.  Components are returned as sorted node-index
    lists, ordered by their first node.
    """
    if not merge_radius > 0:
        raise ValueError("merge_radius must be positive")
    pts = [_thin(n.points, min(thin_spacing, merge_radius / 4)) for n in g.nodes]
    trees = [cKDTree(p) for p in pts]
    lo = np.array([p.min(axis=0) for p in pts]) - merge_radius
    hi = np.array([p.max(axis=0) for p in pts]) + merge_radius
    ds = _DisjointSet(len(pts))
    n = len(pts)
    for a in range(n):
        overlap = np.all((lo[a + 1:] <= hi[a]) & (hi[a + 1:] >= lo[a]), axis=1)
        for b in np.nonzero(overlap)[0] + a + 1:
            if ds.find(a) == ds.find(int(b)):
                continue
            if trees[a].count_neighbors(trees[b], merge_radius) > 0:
                ds.union(a, int(b))
    groups: dict[int, list[int]] = {}
    for k in range(n):
        groups.setdefault(ds.find(k), []).append(k)
    return sorted(groups.values(), key=lambda c: c[0])


def _plane(points: np.ndarray):
    c = points.mean(axis=0)
    if len(points) < 3:
        return c, np.eye(points.shape[1])[:2]
    _, _, vt = np.linalg.svd(points - c, full_matrices=False)
    return c, vt[:2]


def _closes(points: np.ndarray, loop_tol: float) -> tuple[bool, int | None]:
    """Whether the arc winds once around its centroid and returns within ``loop_tol``.

    Also returns the index at which the first full revolution is completed.
    """
    if len(points) < 4:
        return False, None
    c, basis = _plane(points)
    xy = (points - c) @ basis.T
    ang = np.unwrap(np.arctan2(xy[:, 1], xy[:, 0]))
    turned = np.abs(ang - ang[0])
    full = np.nonzero(turned >= 2 * np.pi)[0]
    if full.size == 0:
        return False, None
    first = int(full[0])
    # the end compared with where the arc was one revolution earlier
    back = np.nonzero(np.abs(ang[-1] - ang) >= 2 * np.pi)[0]
    if back.size == 0:
        # wound once, then backed off
        return False, first
    gap = np.linalg.norm(points[-1] - points[int(back[-1])])
    return bool(gap < loop_tol), first


@dataclass
class ComponentReport:
    cls: str
    arc_count: int
    loop_score: float
    revisit_count: int
    bundle_size: int
    has_loop: bool
    trajectories: tuple[int, ...]
    centroid: tuple[float, ...]
    nodes: list[int] = field(default_factory=list, repr=False)


def classify_component(g: SegmentGraph, comp: Sequence[int], cfg: ClassifierConfig = ClassifierConfig()) -> ComponentReport:
    if not comp:
        raise ValueError("empty component")
    nodes = [g.nodes[k] for k in comp]
    loop_parts = []
    loop_arcs = 0
    self_closing = []
    for n in nodes:
        closes, first = _closes(n.points, cfg.loop_tol)
        self_closing.append(closes)
        if closes:
            loop_parts.append(n.points[first:])
            loop_arcs += 1
        elif n.kicked and n.settle is not None and n.settle <= cfg.settle_ratio or not n.kicked and n.seg > 0:
            # settled after a kick, or continuing the curve after a negligible one
            k = int(len(n.points) * (1 - cfg.tail_fraction))
            loop_parts.append(n.points[k:])
            loop_arcs += 1

    has_loop = False
    loop_pts = None
    if loop_parts:
        loop_pts = np.concatenate(loop_parts)
        if len(loop_pts) >= cfg.angle_bins:
            c, basis = _plane(loop_pts)
            xy = (loop_pts - c) @ basis.T
            ang = np.arctan2(xy[:, 1], xy[:, 0])
            bins = np.floor((ang + np.pi) / (2 * np.pi) * cfg.angle_bins).astype(int) % cfg.angle_bins
            has_loop = np.unique(bins).size == cfg.angle_bins

    kicked = [n for n in nodes if n.kicked]
    if has_loop:
        tree = cKDTree(loop_pts)
        heads = np.array([n.points[0] for n in kicked]) if kicked else np.empty((0, len(g.projection)))
        dist = tree.query(heads)[0] if len(heads) else np.empty(0)
        bundle = int((dist > cfg.tube_radius).sum())
    else:
        bundle = len(kicked)
    has_bundle = bundle >= 2
    revisit = max(0, loop_arcs - 1) if has_loop else 0

    incident = any(n.kicked or n.jump_out or n.seg > 0 for n in nodes)
    if len(nodes) == 1 and not incident and self_closing[0]:
        cls = CYCLE
    elif has_loop and revisit >= 1 and not has_bundle:
        cls = RING
    elif has_loop and revisit >= 1 and has_bundle:
        cls = MEDUSA
    elif not has_loop and has_bundle:
        cls = MEDUSA_WITHOUT_RING
    else:
        cls = UNCLASSIFIED

    allpts = np.concatenate([n.points for n in nodes])
    return ComponentReport(
        cls=cls,
        arc_count=len(nodes),
        loop_score=loop_arcs / len(nodes),
        revisit_count=revisit,
        bundle_size=bundle,
        has_loop=bool(has_loop),
        trajectories=tuple(sorted({n.traj for n in nodes})),
        centroid=tuple(float(v) for v in allpts.mean(axis=0)),
        nodes=list(comp),
    )


@dataclass
class AttractorReport:
    mu: float
    components: list[ComponentReport]
    initial_states: list[tuple[float, ...]]
    failures: list[tuple[tuple[float, ...], str]] = field(default_factory=list)
    config: ClassifierConfig = field(default_factory=ClassifierConfig)

    @property
    def counts(self) -> dict[str, int]:
        """Number of components of each named class (unclassified excluded)."""
        c = Counter(comp.cls for comp in self.components)
        return {k: c[k] for k in CLASSES if c[k]}

    @property
    def unclassified(self) -> int:
        return sum(comp.cls == UNCLASSIFIED for comp in self.components)

    def to_text(self) -> str:
        names = "".join(COORDS[k] for k in self.config.projection) if max(self.config.projection) < 4 else str(self.config.projection)
        lines = [
            f"mu = {self.mu!r}",
            "classifier = heuristic (operational surrogate for medusa/ring/cycle pictures)",
            f"projection = {names}",
            f"transient_cut = {self.config.transient_cut!r}",
            f"merge_radius = {self.config.merge_radius!r}",
            "initial_states = " + "; ".join(", ".join(repr(float(v)) for v in x0) for x0 in self.initial_states),
            "counts = " + (", ".join(f"{k}: {v}" for k, v in self.counts.items()) or "none"),
            f"unclassified = {self.unclassified}",
        ]
        for j, c in enumerate(self.components):
            lines.append(
                f"component {j}: class={c.cls} arcs={c.arc_count} loop_score={c.loop_score:.4f} "
                f"revisit_count={c.revisit_count} bundle={c.bundle_size} trajectories={list(c.trajectories)} "
                "centroid=(" + ", ".join(f"{v:.5f}" for v in c.centroid) + ")"
            )
        for x0, msg in self.failures:
            lines.append(f"failure {tuple(float(v) for v in x0)}: {msg}")
        return "\n".join(lines) + "\n"


def analyze(trajs: Sequence[HybridTrajectory], cfg: ClassifierConfig = ClassifierConfig()) -> list[ComponentReport]:
    """Extract, cluster and classify the post-transient parts of several trajectories together."""
    graphs = [
        extract_segments(tr, cfg.transient_cut, cfg.projection, traj_id=j,
                         loop_tol=cfg.loop_tol, settle_window=cfg.settle_window)
        for j, tr in enumerate(trajs)
    ]
    g = SegmentGraph.union(graphs)
    comps = cluster_components(g, cfg.merge_radius, cfg.thin_spacing)
    return [classify_component(g, c, cfg) for c in comps]


def mu_sweep(
    build: Callable[[float], tuple[object, ImpulseSchedule]],
    mu_list: Sequence[float],
    initial_states: Sequence[Sequence[float]],
    T: float,
    cfg: ClassifierConfig = ClassifierConfig(),
    solver: SolverConfig = SolverConfig(),
    *,
    on_trajectory: Callable[[float, int, HybridTrajectory], None] | None = None,
) -> list[AttractorReport]:
    """Simulate every (mu, x0) cell, then classify the merged trajectories per mu.

    A failing cell is recorded in the report and the sweep carries on.
    """
    if not mu_list:
        raise ValueError("mu_list must be nonempty")
    reports = []
    for mu in mu_list:
        system, sched = build(mu)
        trajs, used, failures = [], [], []
        for j, x0 in enumerate(initial_states):
            try:
                tr = simulate(system, sched, x0, T, solver)
            except Exception as e:  # noqa: BLE001 - any cell failure is reported, not fatal
                log.warning("mu=%s x0=%s failed: %s", mu, x0, e)
                failures.append((tuple(x0), f"{type(e).__name__}: {e}"))
                continue
            if on_trajectory is not None:
                on_trajectory(mu, j, tr)
            trajs.append(tr)
            used.append(tuple(x0))
        comps = analyze(trajs, cfg) if trajs else []
        reports.append(AttractorReport(mu, comps, [tuple(x) for x in initial_states], failures, cfg))
    return reports
