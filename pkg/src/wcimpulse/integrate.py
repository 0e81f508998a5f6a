"""Adaptive Dormand-Prince 5(4) integration of one smooth segment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["SolverConfig", "StepUnderflow", "Arc", "integrate_segment", "sample_times"]

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and embedded 4th order weights
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension (Shampine), columns are powers theta^1..theta^4
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# below this membrane time constant the step is capped at mu/2
STIFF_MU = 0.05


class StepUnderflow(RuntimeError):
    """Error control demanded a step smaller than ``min_step``."""

    def __init__(self, t: float, h: float):
        super().__init__(f"step size {h:.3g} below min_step at t={t:.9g}")
        self.t = t
        self.h = h


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.1
    min_step: float = 1e-12
    sample_dt: float = 1e-3

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.min_step < self.max_step:
            raise ValueError("need 0 < min_step < max_step")
        if not self.sample_dt > 0:
            raise ValueError("sample_dt must be positive")

    def step_cap(self, mu_min: float | None) -> float:
        if mu_min is not None and mu_min < STIFF_MU:
            return min(self.max_step, mu_min / 2)
        return self.max_step


@dataclass
class Arc:
    """Samples of one smooth piece: ``t`` has shape (n,), ``x`` has shape (n, dim)."""

    t: np.ndarray
    x: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def end(self) -> np.ndarray:
        return self.x[-1]


def sample_times(t0: float, t1: float, dt: float) -> np.ndarray:
    """``t0``, the global grid points ``k*dt`` strictly inside ``(t0, t1)``, then ``t1``."""
    k0 = math.floor(t0 / dt) + 1
    k1 = math.ceil(t1 / dt) - 1
    inner = np.arange(k0, k1 + 1) * dt if k1 >= k0 else np.empty(0)
    # guard the grid against rounding at the ends
    inner = inner[(inner > t0 + 1e-12 * max(1.0, abs(t0))) & (inner < t1 - 1e-12 * max(1.0, abs(t1)))]
    return np.concatenate(([t0], inner, [t1]))


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / v.size)


def _initial_step(f, t0, y0, f0, h_max, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, h_max)


def integrate_segment(
    field: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    x0,
    cfg: SolverConfig = SolverConfig(),
    *,
    mu_min: float | None = None,
) -> Arc:
    """Integrate ``x' = field(t, x)`` from ``t0`` to exactly ``t1``.

    The returned arc is sampled on the fixed grid of :func:`sample_times`;
    the last sample is the state at ``t1`` from the final accepted step.
    ``mu_min`` is the smallest time constant of the system and caps the
    step when the problem is stiff.
    """
    if not t1 > t0:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1}]")
    y = np.array(x0, dtype=float)
    ts = sample_times(t0, t1, cfg.sample_dt)
    out = np.empty((ts.size, y.size))
    out[0] = y
    nxt = 1  # next sample index to fill

    h_max = cfg.step_cap(mu_min)
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    t = t0
    f0 = np.asarray(field(t, y), dtype=float)
    h = _initial_step(field, t, y, f0, h_max, rtol, atol)
    K = np.empty((7, y.size))
    n_steps = n_rej = 0

    while t < t1:
        last = False
        if t + h >= t1 or (t1 - (t + h)) < 1e-12 * max(1.0, abs(t1)):
            h = t1 - t
            last = True
        K[0] = f0
        for s in range(1, 6):
            dy = np.dot(_A[s], K[:s]) * h
            K[s] = field(t + _C[s] * h, y + dy)
        y_new = y + h * np.dot(_B[:6], K[:6])
        f_new = np.asarray(field(t + h, y_new), dtype=float)
        K[6] = f_new
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        err = _rms(h * np.dot(_E, K) / scale)

        if err <= 1.0:
            t_new = t1 if last else t + h
            # dense output for the grid samples in (t, t_new)
            stop = min(int(np.searchsorted(ts, t_new, side="left")), ts.size - 1)
            if stop > nxt:
                theta = (ts[nxt:stop] - t) / h
                powers = np.stack([theta, theta**2, theta**3, theta**4])
                out[nxt:stop] = y + h * (K.T @ (_P @ powers)).T
                nxt = stop
            t, y, f0 = t_new, y_new, f_new
            n_steps += 1
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
            if not last:
                h = min(h * factor, h_max)
                if h < cfg.min_step and t1 - t > cfg.min_step:
                    raise StepUnderflow(t, h)
        else:
            n_rej += 1
            factor = MIN_FACTOR if not math.isfinite(err) else max(MIN_FACTOR, SAFETY * err ** -0.2)
            h *= factor
            if h < cfg.min_step:
                raise StepUnderflow(t, h)

    out[-1] = y
    return Arc(ts, out, n_steps, n_rej)
