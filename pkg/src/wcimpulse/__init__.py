"""Wilson-Cowan pairs with membrane time constants and prescribed-time impulses."""

from .hybrid import HybridTrajectory, ImpulseSchedule, RCCircuit, WCSystem, simulate
from .integrate import SolverConfig, StepUnderflow, integrate_segment
from .jumps import DomainError, JumpComponent, RegularJump, SingularJump
from .model import (
    NoConvergence,
    SigmoidParams,
    SteadyStateReport,
    SubpopulationParams,
    find_steady_states,
    jacobian,
    sigmoid,
    vector_field,
)

__version__ = "0.1.0"
