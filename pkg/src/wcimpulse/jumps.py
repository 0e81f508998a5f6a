"""Impulse maps expressed as coefficient tables.

Each component of a jump map has the form::

    alpha * mu**mu_power * x**power * (x - beta)**q  +  gamma * sin(mu**2) * y  +  sum_k poly[k] * x**k

where ``x`` is the coordinate being kicked (``E`` for the excitatory
component, ``I`` for the inhibitory one) and ``y`` is the other coordinate of
the pair.  Regular jumps return the increment directly; singular jumps return
the raw value that the simulator divides by the time constant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

log = logging.getLogger(__name__)

__all__ = [
    "DomainError",
    "JumpComponent",
    "RegularJump",
    "SingularJump",
    "real_power",
]

UNDERSHOOT_WARN = 1e-9


class DomainError(ValueError):
    """A jump map was evaluated where it is undefined."""


def real_power(x: float, p: Fraction, *, undershoot_tol: float = 1e-2) -> float:
    """``x**p`` on the reals.

    Odd-denominator exponents use the sign-preserving root.  For even
    denominators, small negative ``x`` (integration undershoot) is clamped to
    zero; anything below ``-undershoot_tol`` raises :class:`DomainError`.
    """
    if p == 0:
        return 1.0
    if p.denominator == 1:
        return x ** int(p)
    if x < 0:
        if p.denominator % 2:
            return -((-x) ** float(p)) if p.numerator % 2 else (-x) ** float(p)
        if x < -undershoot_tol:
            raise DomainError(f"x**{p} undefined at x={float(x)!r}")
        if x < -UNDERSHOOT_WARN:
            log.warning("clamping x=%.3g to 0 inside x**%s", x, p)
        return 0.0
    return x ** float(p)


def _fraction(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(str(v)).limit_denominator(1000)


@dataclass(frozen=True)
class JumpComponent:
    alpha: float = 0.0
    mu_power: int = 0
    power: Fraction = Fraction(0)
    beta: float = 0.0
    q: int = 0
    gamma: float = 0.0
    poly: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "power", _fraction(self.power))
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))

    @property
    def uses_mu(self) -> bool:
        return (self.alpha != 0 and self.mu_power != 0) or self.gamma != 0

    def __call__(self, x: float, y: float, mu: float | None = None) -> float:
        if mu is None and self.uses_mu:
            raise ValueError("this jump component depends on mu")
        total = 0.0
        if self.alpha:
            scale = self.alpha * (mu**self.mu_power if self.mu_power else 1.0)
            total += scale * real_power(x, self.power) * (x - self.beta) ** self.q
        if self.gamma:
            total += self.gamma * math.sin(mu * mu) * y
        acc = 0.0
        for c in reversed(self.poly):
            acc = acc * x + c
        return total + acc

    def to_dict(self) -> dict:
        d = {}
        defaults = JumpComponent()
        for name in ("alpha", "mu_power", "power", "beta", "q", "gamma", "poly"):
            v = getattr(self, name)
            if v != getattr(defaults, name):
                d[name] = str(v) if name == "power" else (list(v) if name == "poly" else v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "JumpComponent":
        unknown = set(d) - {"alpha", "mu_power", "power", "beta", "q", "gamma", "poly"}
        if unknown:
            raise ValueError(f"unknown jump-component keys: {sorted(unknown)}")
        return cls(**d)


ZERO = JumpComponent()


@dataclass(frozen=True)
class RegularJump:
    """``(E, I) -> (dE, dI)`` applied at the regular instants."""

    e: JumpComponent = ZERO
    i: JumpComponent = ZERO

    def __post_init__(self):
        if self.e.uses_mu or self.i.uses_mu:
            raise ValueError("regular jumps cannot depend on mu")

    def __call__(self, E: float, I: float) -> tuple[float, float]:
        return self.e(E, I), self.i(I, E)


@dataclass(frozen=True)
class SingularJump:
    """``(E, I, mu_e, mu_i) -> (K, J)``; the increment is ``(K/mu_e, J/mu_i)``."""

    e: JumpComponent = ZERO
    i: JumpComponent = ZERO

    def __call__(self, E: float, I: float, mu_e: float, mu_i: float) -> tuple[float, float]:
        return self.e(E, I, mu_e), self.i(I, E, mu_i)
