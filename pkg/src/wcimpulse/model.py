"""Two-population Wilson-Cowan model: sigmoid, vector field, Jacobian, equilibria."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "NoConvergence",
    "SigmoidParams",
    "SubpopulationParams",
    "SteadyState",
    "SteadyStateReport",
    "sigmoid",
    "sigmoid_slope",
    "unscaled_field",
    "vector_field",
    "jacobian",
    "eigenvalues_2x2",
    "is_hurwitz",
    "find_steady_states",
]

# exp() arguments are clamped here; the logistic has saturated long before.
EXP_CLAMP = 500.0


class NoConvergence(RuntimeError):
    """No Newton seed converged to a root of the rate function."""


@dataclass(frozen=True)
class SigmoidParams:
    """Shifted logistic ``1/(1+exp(-a(x-theta))) - 1/(1+exp(a*theta))``.

    ``theta`` is the threshold (position of maximum slope), not an impulse
    instant.
    """

    a: float
    theta: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"sigmoid slope must be positive, got a={self.a}")


@dataclass(frozen=True)
class SubpopulationParams:
    """Coefficients of one excitatory/inhibitory pair.

    The excitatory input is ``c1*E - c2*I + P`` and the inhibitory input is
    ``c3*E - c4*I + Q``.  ``mu_e`` and ``mu_i`` are the membrane time
    constants multiplying the derivatives.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    ke: float
    ki: float
    re: float
    ri: float
    sig_e: SigmoidParams
    sig_i: SigmoidParams
    P: float = 0.0
    Q: float = 0.0
    mu_e: float = 1.0
    mu_i: float = 1.0

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.mu_e > 0 and self.mu_i > 0):
            raise ValueError("membrane time constants must be positive")

    def with_mu(self, mu_e: float, mu_i: float | None = None) -> "SubpopulationParams":
        return replace(self, mu_e=mu_e, mu_i=mu_e if mu_i is None else mu_i)


def _clamp(z):
    return np.clip(z, -EXP_CLAMP, EXP_CLAMP)


def sigmoid(p: SigmoidParams, x):
    """Logistic shifted so that ``sigmoid(p, 0) == 0``. Works on scalars and arrays."""
    u = _clamp(-p.a * (np.asarray(x, dtype=float) - p.theta))
    out = 1.0 / (1.0 + np.exp(u)) - 1.0 / (1.0 + math.exp(min(p.a * p.theta, EXP_CLAMP)))
    return out if np.ndim(out) else float(out)


def sigmoid_slope(p: SigmoidParams, x):
    # a*s*(1-s) with s the logistic; exp(-|z|) keeps it finite far from theta
    w = np.exp(-np.abs(_clamp(p.a * (np.asarray(x, dtype=float) - p.theta))))
    out = p.a * w / (1.0 + w) ** 2
    return out if np.ndim(out) else float(out)


def _inputs(p: SubpopulationParams, E, I):
    return p.c1 * E - p.c2 * I + p.P, p.c3 * E - p.c4 * I + p.Q


def unscaled_field(p: SubpopulationParams, E, I):
    """The rate numerators ``F(E, I)``; roots of this are the equilibria for any mu."""
    xe, xi = _inputs(p, E, I)
    fe = -E + (p.ke - p.re * E) * sigmoid(p.sig_e, xe)
    fi = -I + (p.ki - p.ri * I) * sigmoid(p.sig_i, xi)
    return fe, fi


def vector_field(p: SubpopulationParams, E, I):
    """Time derivatives ``(dE/dt, dI/dt)``, i.e. ``F`` divided by the time constants."""
    fe, fi = unscaled_field(p, E, I)
    return fe / p.mu_e, fi / p.mu_i


def jacobian(p: SubpopulationParams, E, I) -> np.ndarray:
    """Analytic Jacobian of the unscaled field.

    Returns a ``(2, 2)`` matrix for scalar input, ``(..., 2, 2)`` for arrays.
    """
    E = np.asarray(E, dtype=float)
    I = np.asarray(I, dtype=float)
    xe, xi = _inputs(p, E, I)
    se, si = sigmoid(p.sig_e, xe), sigmoid(p.sig_i, xi)
    dse, dsi = sigmoid_slope(p.sig_e, xe), sigmoid_slope(p.sig_i, xi)
    ge = p.ke - p.re * E
    gi = p.ki - p.ri * I
    J = np.empty(E.shape + (2, 2))
    J[..., 0, 0] = -1.0 - p.re * se + ge * dse * p.c1
    J[..., 0, 1] = -ge * dse * p.c2
    J[..., 1, 0] = gi * dsi * p.c3
    J[..., 1, 1] = -1.0 - p.ri * si - gi * dsi * p.c4
    return J


def eigenvalues_2x2(J) -> tuple[complex, complex]:
    """Eigenvalues from the characteristic quadratic ``l^2 - tr*l + det``."""
    tr = J[0][0] + J[1][1]
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    disc = tr * tr / 4.0 - det
    if disc >= 0:
        r = math.sqrt(disc)
        # larger-magnitude root first, then det/l1 for accuracy
        l1 = tr / 2.0 + math.copysign(r, tr) if tr != 0 else r
        l2 = det / l1 if l1 != 0 else tr - l1
        lo, hi = sorted((l1, l2))
        return complex(hi), complex(lo)
    r = math.sqrt(-disc)
    return complex(tr / 2.0, r), complex(tr / 2.0, -r)


def is_hurwitz(J) -> bool:
    return all(ev.real < 0 for ev in eigenvalues_2x2(J))


@dataclass(frozen=True)
class SteadyState:
    E: float
    I: float
    eigenvalues: tuple[complex, complex]
    hurwitz: bool

    @property
    def point(self) -> tuple[float, float]:
        return (self.E, self.I)


@dataclass(frozen=True)
class SteadyStateReport:
    points: tuple[SteadyState, ...]
    domain_bound: float
    merge_tol: float = 1e-6

    @property
    def stable(self) -> list[SteadyState]:
        return [s for s in self.points if s.hurwitz]

    @property
    def unstable(self) -> list[SteadyState]:
        return [s for s in self.points if not s.hurwitz]


def _newton_batch(p, E, I, max_iter, tol):
    """Damped Newton on all seeds at once; returns final iterates and a converged mask."""
    fe, fi = unscaled_field(p, E, I)
    norm = np.hypot(fe, fi)
    for _ in range(max_iter):
        active = norm >= tol
        if not active.any():
            break
        J = jacobian(p, E, I)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        good = active & (np.abs(det) > 1e-14)
        safe = np.where(good, det, 1.0)
        dE = -(J[..., 1, 1] * fe - J[..., 0, 1] * fi) / safe
        dI = -(-J[..., 1, 0] * fe + J[..., 0, 0] * fi) / safe
        dE = np.where(good, dE, 0.0)
        dI = np.where(good, dI, 0.0)
        # Armijo backtracking: halve the step where the residual does not drop
        step = np.ones_like(E)
        pending = good.copy()
        for _ in range(30):
            nE, nI = E + step * dE, I + step * dI
            nfe, nfi = unscaled_field(p, nE, nI)
            nnorm = np.hypot(nfe, nfi)
            ok = nnorm <= (1.0 - 1e-4 * step) * norm
            accept = pending & (ok | ~np.isfinite(norm))
            E = np.where(accept, nE, E)
            I = np.where(accept, nI, I)
            fe = np.where(accept, nfe, fe)
            fi = np.where(accept, nfi, fi)
            norm = np.where(accept, nnorm, norm)
            pending &= ~accept
            if not pending.any():
                break
            step = np.where(pending, step * 0.5, step)
        # seeds stuck in backtracking stop iterating
        norm = np.where(pending & (norm >= tol), np.inf, norm)
    return E, I, norm < tol


def _polish(p, e, i, steps=3):
    # a few plain Newton steps past the stopping tolerance, kept only if they help
    fe, fi = unscaled_field(p, e, i)
    norm = math.hypot(fe, fi)
    for _ in range(steps):
        J = jacobian(p, e, i)
        try:
            de, di = np.linalg.solve(J, [-fe, -fi])
        except np.linalg.LinAlgError:
            break
        ne, ni = e + de, i + di
        nfe, nfi = unscaled_field(p, ne, ni)
        nnorm = math.hypot(nfe, nfi)
        if not nnorm < norm:
            break
        e, i, fe, fi, norm = ne, ni, nfe, nfi, nnorm
    return e, i


def find_steady_states(
    p: SubpopulationParams,
    bound: float = 1.0,
    grid_n: int = 64,
    *,
    tol: float = 1e-10,
    merge_tol: float = 1e-6,
    max_iter: int = 50,
) -> SteadyStateReport:
    """Locate equilibria of ``F`` in ``[-bound, bound]^2`` by grid-seeded Newton."""
    if not bound > 0:
        raise ValueError("bound must be positive")
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    g = np.linspace(-bound, bound, grid_n)
    E0, I0 = np.meshgrid(g, g, indexing="ij")
    E, I, conv = _newton_batch(p, E0.ravel(), I0.ravel(), max_iter, tol)
    inside = conv & (np.abs(E) <= bound) & (np.abs(I) <= bound)
    if not inside.any():
        raise NoConvergence(f"no Newton seed converged in [-{bound}, {bound}]^2")
    # most seeds land on the same few roots; polish one representative per cluster
    cand = np.c_[E[inside], I[inside]]
    _, first = np.unique(np.round(cand / (0.1 * merge_tol)), axis=0, return_index=True)
    roots = sorted(_polish(p, e, i) for e, i in cand[np.sort(first)].tolist())
    kept: list[tuple[float, float]] = []
    for r in roots:
        if all(math.hypot(r[0] - k[0], r[1] - k[1]) > merge_tol for k in kept):
            kept.append(r)
    points = []
    for e, i in kept:
        J = jacobian(p, e, i)
        ev = eigenvalues_2x2(J)
        points.append(SteadyState(e, i, ev, all(v.real < 0 for v in ev)))
    return SteadyStateReport(tuple(points), bound, merge_tol)
