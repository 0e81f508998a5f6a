"""Hybrid simulation: smooth flow between prescribed instants, state jumps at them.

Regular jumps add ``(Kbar(E, I), Jbar(E, I))`` to the first pair.  Singular
jumps add ``(K/mu_e, J/mu_i)`` where ``(K, J)`` is the raw map value, so the
kick grows as the time constants shrink unless the map vanishes with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .integrate import Arc, SolverConfig, integrate_segment
from .jumps import DomainError, RegularJump, SingularJump
from .model import EXP_CLAMP, SubpopulationParams

__all__ = [
    "REGULAR",
    "SINGULAR",
    "ImpulseSchedule",
    "JumpRecord",
    "HybridTrajectory",
    "WCSystem",
    "RCCircuit",
    "arithmetic_instants",
    "apply_regular_jump",
    "apply_singular_jump",
    "simulate",
]

REGULAR = "regular"
SINGULAR = "singular"


def arithmetic_instants(slope: float, offset: float, i_from: int, i_to: int, denom: float = 1.0):
    """Instants ``(slope*i + offset)/denom`` for ``i = i_from..i_to`` inclusive."""
    return tuple((slope * i + offset) / denom for i in range(i_from, i_to + 1))


@dataclass(frozen=True)
class ImpulseSchedule:
    theta_instants: tuple[float, ...] = ()
    eta_instants: tuple[float, ...] = ()
    regular_jump: RegularJump = field(default_factory=RegularJump)
    singular_jump: SingularJump = field(default_factory=SingularJump)

    def __post_init__(self):
        th = tuple(float(t) for t in self.theta_instants)
        et = tuple(float(t) for t in self.eta_instants)
        object.__setattr__(self, "theta_instants", th)
        object.__setattr__(self, "eta_instants", et)
        for name, xs in (("theta", th), ("eta", et)):
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError(f"{name} instants must be strictly increasing")
            if xs and xs[0] <= 0:
                raise ValueError(f"{name} instants must be positive")
        if set(th) & set(et):
            raise ValueError(f"regular and singular instants coincide: {sorted(set(th) & set(et))}")

    def events(self, T: float) -> list[tuple[float, str]]:
        """Merged ``(instant, kind)`` list restricted to ``(0, T)``."""
        ev = [(t, REGULAR) for t in self.theta_instants] + [(t, SINGULAR) for t in self.eta_instants]
        return sorted(e for e in ev if e[0] < T)

    @property
    def is_empty(self) -> bool:
        return not (self.theta_instants or self.eta_instants)


@dataclass(frozen=True)
class JumpRecord:
    t: float
    kind: str
    pre: np.ndarray
    post: np.ndarray


@dataclass
class HybridTrajectory:
    segments: list[Arc]
    jumps: list[JumpRecord]
    T: float

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([s.t for s in self.segments])

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([s.x for s in self.segments])

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].end

    def segment_starts(self) -> list[float]:
        return [float(s.t[0]) for s in self.segments]


class WCSystem:
    """One or more Wilson-Cowan pairs stacked into ``(E1, I1, E2, I2, ...)``.

    Impulses act on the first pair only.
    """

    def __init__(self, pairs: Sequence[SubpopulationParams]):
        if not pairs:
            raise ValueError("need at least one pair")
        self.pairs = tuple(pairs)
        self.dim = 2 * len(self.pairs)
        self._coef = [self._unpack(p) for p in self.pairs]

    @staticmethod
    def _unpack(p):
        off_e = 1.0 / (1.0 + math.exp(min(p.sig_e.a * p.sig_e.theta, EXP_CLAMP)))
        off_i = 1.0 / (1.0 + math.exp(min(p.sig_i.a * p.sig_i.theta, EXP_CLAMP)))
        return (p.c1, p.c2, p.c3, p.c4, p.P, p.Q, p.ke, p.ki, p.re, p.ri,
                p.sig_e.a, p.sig_e.theta, off_e, p.sig_i.a, p.sig_i.theta, off_i,
                1.0 / p.mu_e, 1.0 / p.mu_i)

    @property
    def mu_min(self) -> float:
        return min(min(p.mu_e, p.mu_i) for p in self.pairs)

    @property
    def jump_time_constants(self) -> tuple[float, float]:
        return self.pairs[0].mu_e, self.pairs[0].mu_i

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        out = np.empty(self.dim)
        exp = math.exp
        for k, (c1, c2, c3, c4, P, Q, ke, ki, re, ri, ae, the, oe, ai, thi, oi, we, wi) in enumerate(self._coef):
            E = x[2 * k]
            I = x[2 * k + 1]
            ue = -ae * (c1 * E - c2 * I + P - the)
            ui = -ai * (c3 * E - c4 * I + Q - thi)
            se = 1.0 / (1.0 + exp(min(max(ue, -EXP_CLAMP), EXP_CLAMP))) - oe
            si = 1.0 / (1.0 + exp(min(max(ui, -EXP_CLAMP), EXP_CLAMP))) - oi
            out[2 * k] = (-E + (ke - re * E) * se) * we
            out[2 * k + 1] = (-I + (ki - ri * I) * si) * wi
        return out

    __call__ = rhs


class RCCircuit:
    """``RC dV/dt = -V + I R``; exact solution ``V(t) = IR + (V0 - IR) exp(-t/RC)``."""

    dim = 1

    def __init__(self, R: float, C: float, current: float):
        if not (R > 0 and C > 0):
            raise ValueError("R and C must be positive")
        self.R, self.C, self.current = R, C, current

    @property
    def mu_min(self) -> float:
        return self.R * self.C

    def rhs(self, t, x):
        return np.array([(-x[0] + self.current * self.R) / (self.R * self.C)])

    __call__ = rhs

    def exact(self, t, v0: float = 0.0):
        ir = self.current * self.R
        return ir + (v0 - ir) * np.exp(-np.asarray(t) / (self.R * self.C))


def apply_regular_jump(sched: ImpulseSchedule, s) -> np.ndarray:
    """State after a regular impulse; only the first two coordinates change."""
    out = np.array(s, dtype=float)
    dE, dI = sched.regular_jump(out[0], out[1])
    out[0] += dE
    out[1] += dI
    return out


def apply_singular_jump(sched: ImpulseSchedule, s, mu_e: float, mu_i: float) -> np.ndarray:
    """State after a singular impulse: ``s + (K/mu_e, J/mu_i)``."""
    if not (mu_e > 0 and mu_i > 0):
        raise ValueError("time constants must be positive")
    out = np.array(s, dtype=float)
    K, J = sched.singular_jump(out[0], out[1], mu_e, mu_i)
    inc = (K / mu_e, J / mu_i)
    if not all(math.isfinite(v) for v in inc):
        raise DomainError(f"singular jump not finite at {tuple(out[:2])}")
    out[0] += inc[0]
    out[1] += inc[1]
    return out


def simulate(system, sched: ImpulseSchedule, x0, T: float, cfg: SolverConfig = SolverConfig()) -> HybridTrajectory:
    """Integrate between instants and apply the scheduled jumps.

    Instants at or beyond ``T`` are ignored.  On failure the exception gets
    ``t`` (the failing time) and ``partial`` (the trajectory so far).
    """
    x = np.array(x0, dtype=float)
    if x.shape != (system.dim,) or not np.all(np.isfinite(x)):
        raise ValueError(f"initial state must be {system.dim} finite values")
    if not T > 0:
        raise ValueError("horizon must be positive")
    events = sched.events(T)
    if events and system.dim < 2:
        raise ValueError("impulses need a system with an (E, I) pair")
    mu_min = getattr(system, "mu_min", None)
    segments: list[Arc] = []
    jumps: list[JumpRecord] = []
    t0 = 0.0
    try:
        for tk, kind in events + [(T, None)]:
            arc = integrate_segment(system.rhs, t0, tk, x, cfg, mu_min=mu_min)
            segments.append(arc)
            x = arc.end.copy()
            if kind is None:
                break
            try:
                if kind == REGULAR:
                    post = apply_regular_jump(sched, x)
                else:
                    post = apply_singular_jump(sched, x, *system.jump_time_constants)
            except DomainError as e:
                err = DomainError(f"{e} (impulse at t={tk})")
                err.t = tk
                raise err from e
            jumps.append(JumpRecord(tk, kind, x, post))
            x = post
            t0 = tk
    except Exception as e:
        if not hasattr(e, "t"):
            e.t = t0
        e.partial = HybridTrajectory(segments, jumps, T)
        raise
    return HybridTrajectory(segments, jumps, T)
