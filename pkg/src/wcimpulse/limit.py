"""Checks of the three convergence conditions and the small-mu limit path.

As both time constants go to zero, trajectories of the impulsive system
approach a piecewise-constant path through stable equilibria.  The path
switches at every regular instant to the equilibrium that the regular jump
map sends the current one to.  Singular instants leave the limit unchanged
as long as the scaled singular map vanishes near each stable state.
"""

from __future__ import annotations

import contextlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from .hybrid import HybridTrajectory, ImpulseSchedule, WCSystem, simulate
from .integrate import SolverConfig
from .jumps import DomainError
from .model import SteadyStateReport, SubpopulationParams

__all__ = [
    "BasinUndetermined",
    "C2Entry",
    "C3Row",
    "ConditionReport",
    "LimitSolution",
    "check_c1",
    "check_c2",
    "check_c3",
    "check_conditions",
    "probe_basin",
    "limit_solution",
    "convergence_metric",
]

C2_TOL = 1e-5
C3_TOL = 1e-3
DEFAULT_MU_GRID = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_RADIUS_GRID = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


class BasinUndetermined(RuntimeError):
    """The unimpulsed probe did not settle on a stable equilibrium."""


@contextlib.contextmanager
def _quiet_clamping():
    logger = logging.getLogger("wcimpulse.jumps")
    prev = logger.disabled
    logger.disabled = True
    try:
        yield
    finally:
        logger.disabled = prev


def check_c1(report: SteadyStateReport) -> list[bool]:
    """Hurwitz flag for every listed equilibrium, in report order."""
    if not report.points:
        raise ValueError("empty steady-state report")
    return [s.hurwitz for s in report.points]


@dataclass(frozen=True)
class C2Entry:
    source: int
    target: int
    residual: float
    passed: bool


def check_c2(report: SteadyStateReport, sched: ImpulseSchedule, tol: float = C2_TOL) -> list[C2Entry]:
    """Where the regular jump sends each stable state.

    Indices refer to ``report.stable``.  ``target`` is the nearest stable
    state to the image and ``residual`` the distance to it.
    """
    stable = report.stable
    if not stable:
        raise ValueError("no stable states")
    pts = np.array([s.point for s in stable])
    out = []
    for j, s in enumerate(stable):
        dE, dI = sched.regular_jump(s.E, s.I)
        image = np.array([s.E + dE, s.I + dI])
        d = np.hypot(*(pts - image).T)
        i = int(np.argmin(d))
        out.append(C2Entry(j, i, float(d[i]), bool(d[i] < tol)))
    return out


@dataclass(frozen=True)
class C3Row:
    state: int
    mu: float
    radius: float
    max_k: float
    max_j: float

    @property
    def norm(self) -> float:
        return math.hypot(self.max_k, self.max_j)


def _disk(center, radius, n_angles=16):
    phi = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    pts = [center]
    for rho in (radius / 2, radius):
        pts.extend(zip(center[0] + rho * np.cos(phi), center[1] + rho * np.sin(phi)))
    return pts


def check_c3(
    sched: ImpulseSchedule,
    report: SteadyStateReport,
    mu_grid=DEFAULT_MU_GRID,
    radius_grid=DEFAULT_RADIUS_GRID,
    tol: float = C3_TOL,
) -> tuple[list[C3Row], list[bool]]:
    """Sample ``max |(K/mu, J/mu)|`` over small disks around each stable state.

    A state passes when the sampled maxima do not grow as either ``mu`` or
    the disk radius shrinks and the smallest-mu, smallest-radius entry is
    below ``tol``.  Sample points where the map is undefined are skipped.
    """
    if not mu_grid or not radius_grid:
        raise ValueError("grids must be nonempty")
    if min(mu_grid) <= 0 or min(radius_grid) <= 0:
        raise ValueError("mu and radius values must be positive")
    mus = sorted(mu_grid, reverse=True)
    radii = sorted(radius_grid, reverse=True)
    rows: list[C3Row] = []
    verdicts = []
    with _quiet_clamping():
        for j, s in enumerate(report.stable):
            table = np.full((len(mus), len(radii)), np.nan)
            for a, mu in enumerate(mus):
                for b, r in enumerate(radii):
                    mk = mj = 0.0
                    for E, I in _disk(s.point, r):
                        try:
                            K, J = sched.singular_jump(E, I, mu, mu)
                        except DomainError:
                            continue
                        mk = max(mk, abs(K / mu))
                        mj = max(mj, abs(J / mu))
                    rows.append(C3Row(j, mu, r, mk, mj))
                    table[a, b] = math.hypot(mk, mj)
            slack = 1e-12 + 1e-9 * np.abs(table)
            monotone = bool(np.all(np.diff(table, axis=0) <= slack[1:, :])
                            and np.all(np.diff(table, axis=1) <= slack[:, 1:]))
            verdicts.append(bool(monotone and table[-1, -1] < tol))
    return rows, verdicts


@dataclass
class ConditionReport:
    c1_pass: list[bool]
    c2_map: list[C2Entry]
    c3_samples: list[C3Row]
    c3_pass: list[bool]

    @property
    def passed(self) -> bool:
        return (
            sum(self.c1_pass) >= 1
            and all(e.passed for e in self.c2_map)
            and all(self.c3_pass)
        )


def check_conditions(report, sched, mu_grid=DEFAULT_MU_GRID, radius_grid=DEFAULT_RADIUS_GRID,
                     c2_tol: float = C2_TOL, c3_tol: float = C3_TOL) -> ConditionReport:
    c1 = check_c1(report)
    c2 = check_c2(report, sched, c2_tol)
    rows, c3 = check_c3(sched, report, mu_grid, radius_grid, c3_tol)
    return ConditionReport(c1, c2, rows, c3)


@dataclass(frozen=True)
class LimitSolution:
    """Piecewise-constant path: ``states[k]`` holds on ``(breaks[k], breaks[k+1]]``."""

    breaks: tuple[float, ...]
    states: tuple[tuple[float, float], ...]
    indices: tuple[int, ...]
    origin_domain: int

    @property
    def pieces(self):
        return [((self.breaks[k], self.breaks[k + 1]), self.states[k]) for k in range(len(self.states))]

    def at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        # right-closed intervals: t == breaks[k+1] still belongs to piece k
        k = np.searchsorted(np.asarray(self.breaks[1:-1]), t, side="left")
        return np.asarray(self.states)[k]


def probe_basin(
    p: SubpopulationParams,
    report: SteadyStateReport,
    x0,
    T_probe: float = 100.0,
    tol: float = 1e-4,
    cfg: SolverConfig = SolverConfig(),
) -> int:
    """Index into ``report.stable`` of the state the unimpulsed flow (mu = 1) reaches."""
    traj = simulate(WCSystem([p.with_mu(1.0, 1.0)]), ImpulseSchedule(), x0, T_probe, cfg)
    end = traj.end
    for j, s in enumerate(report.stable):
        if math.hypot(end[0] - s.E, end[1] - s.I) < tol:
            return j
    raise BasinUndetermined(f"probe from {tuple(x0)} ended at {tuple(end)} after t={T_probe}")


def limit_solution(
    p: SubpopulationParams,
    report: SteadyStateReport,
    sched: ImpulseSchedule,
    x0,
    T: float,
    *,
    T_probe: float = 100.0,
    c2_tol: float = C2_TOL,
) -> LimitSolution:
    """Build the limit path for initial state ``x0`` on ``(0, T]``."""
    j = probe_basin(p, report, x0, T_probe)
    c2 = {e.source: e for e in check_c2(report, sched, c2_tol)}
    thetas = [t for t in sched.theta_instants if t < T]
    breaks = [0.0]
    idx = [j]
    for th in thetas:
        e = c2[idx[-1]]
        if not e.passed:
            raise ValueError(f"regular jump does not map stable state {e.source} onto a stable state "
                             f"(residual {e.residual:.3g})")
        breaks.append(th)
        idx.append(e.target)
    breaks.append(float(T))
    stable = report.stable
    return LimitSolution(tuple(breaks), tuple(stable[i].point for i in idx), tuple(idx), j)


def convergence_metric(traj: HybridTrajectory, z: LimitSolution, layer_width: float = 0.05) -> float:
    """Sup distance between trajectory and limit path outside the boundary layers.

    Samples in ``[s, s + layer_width]`` are dropped for ``s = 0`` and every
    instant at which a segment starts.
    """
    if not layer_width > 0:
        raise ValueError("layer_width must be positive")
    starts = traj.segment_starts()
    gaps = np.diff(starts + [traj.T])
    if gaps.size and layer_width >= gaps.min():
        raise ValueError("layer_width must be smaller than the smallest gap between instants")
    worst = 0.0
    for seg in traj.segments:
        keep = seg.t > seg.t[0] + layer_width
        if not keep.any():
            continue
        d = seg.x[keep, :2] - z.at(seg.t[keep])
        worst = max(worst, float(np.sqrt((d**2).sum(axis=1)).max()))
    return worst
