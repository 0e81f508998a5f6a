"""Parameter sets and impulse maps of the worked examples."""

from __future__ import annotations

from .hybrid import ImpulseSchedule, arithmetic_instants
from .jumps import JumpComponent, RegularJump, SingularJump
from .model import SigmoidParams, SubpopulationParams

# bistable pair: equilibria (0, 0), (0.44234, 0.22751), (0.18816, 0.067243)
MODEL0 = SubpopulationParams(
    c1=12, c2=4, c3=13, c4=11, ke=0.97, ki=0.98, re=1, ri=1,
    sig_e=SigmoidParams(1.2, 2.8), sig_i=SigmoidParams(1.0, 4.0),
)

# E -> 0.44234 - E, I -> 0.22751 - I: swaps the two stable states of MODEL0
MODEL0_REGULAR = RegularJump(
    JumpComponent(poly=(0.44234, -2.0)),
    JumpComponent(poly=(0.22751, -2.0)),
)

# mu*dE = -mu E^(1/2) (E - 0.44234)^2 - sin(mu^2) I, and the analogue for I
SINGULAR_SQRT_CBRT = SingularJump(
    JumpComponent(alpha=-1.0, mu_power=1, power="1/2", beta=0.44234, q=2, gamma=-1.0),
    JumpComponent(alpha=-1.0, mu_power=1, power="1/3", beta=0.22751, q=3, gamma=-1.0),
)

# tristable pair: stable (0, 0), (0.20353, 0.18691), (0.45064, 0.49)
THREE_STATES = SubpopulationParams(
    c1=13, c2=4, c3=22, c4=2, ke=0.97, ki=0.98, re=1, ri=1,
    sig_e=SigmoidParams(1.5, 2.5), sig_i=SigmoidParams(6.0, 4.3),
)

THREE_STATES_REGULAR = RegularJump(
    JumpComponent(poly=(0.45064, -3.58612, 6.741)),
    JumpComponent(poly=(0.49, -3.85682, 6.6087)),
)

# oscillating pair with a limit cycle (period about 4.95), unit time constants
PERIODIC = SubpopulationParams(
    c1=16, c2=12, c3=15, c4=3, ke=0.97, ki=0.98, re=1, ri=1,
    sig_e=SigmoidParams(1.3, 4.0), sig_i=SigmoidParams(2.0, 3.7), P=1.25,
)

# (slope, offset, first i, last i, denominator) of t = (slope*i + offset)/denominator
MODEL0_THETA = (2.0, 0.0, 1, 20, 3.0)
MODEL0_ETA = (2.0, -1.0, 1, 20, 3.0)
COUPLED_THETA = (2.0, 4.95, 1, 50, 1.0)
COUPLED_ETA = (2.0, 3.95, 1, 50, 1.0)

COUPLED_T = 104.95
MODEL0_T = 14.0

# initial states (E, I, e, i) of the coupled-system runs
X0_MEDUSA = (0.4656, 0.1101, 0.1101, 0.04766)
X0_BLUE = (-0.01, 0.0, 0.17, 0.25)
X0_RED = (0.21, 0.20, 0.20, 0.15)
X0_MAGENTA = (0.5, 0.5, 0.3, 0.3)


def model0_schedule() -> ImpulseSchedule:
    return ImpulseSchedule(
        arithmetic_instants(*MODEL0_THETA),
        arithmetic_instants(*MODEL0_ETA),
        MODEL0_REGULAR,
        SINGULAR_SQRT_CBRT,
    )


def coupled_schedule() -> ImpulseSchedule:
    return ImpulseSchedule(
        arithmetic_instants(*COUPLED_THETA),
        arithmetic_instants(*COUPLED_ETA),
        THREE_STATES_REGULAR,
        SINGULAR_SQRT_CBRT,
    )
