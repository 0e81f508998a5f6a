"""Scenario files: everything needed to reproduce a run, as YAML.

Schema (top-level keys; anything else is rejected)::

    name: str
    description: str                  # optional
    system: wilson-cowan | rc
    pairs:                            # wilson-cowan only; impulses act on the first pair
      - {c1, c2, c3, c4, ke, ki, re, ri, P, Q, mu_e, mu_i,
         sig_e: {a, theta}, sig_i: {a, theta}}
    rc: {R, C, current}               # rc only
    theta: {slope, offset, i_from, i_to, denom} | {list: [t1, t2, ...]}
    eta:   same form as theta
    regular_jump:  {name: <registry key>} | {e: <component>, i: <component>}
    singular_jump: same form as regular_jump
    mu: [..]                          # time constant(s) of the first pair; [] keeps the pair's own
    initial_states: [[..], ..]
    initial_states_by_mu: {mu: [[..], ..]}   # optional per-mu override for sweeps
    T: float
    layer_width: float                # boundary-layer exclusion for the convergence metric
    solver: {rel_tol, abs_tol, max_step, min_step, sample_dt}
    classifier: {transient_cut, merge_radius, ...}

A jump component is ``{alpha, mu_power, power, beta, q, gamma, poly}`` and
evaluates ``alpha*mu**mu_power * x**power * (x-beta)**q + gamma*sin(mu**2)*y
+ poly[0] + poly[1]*x + ...``; omitted keys take their zero defaults.  The
instant generator yields ``(slope*i + offset)/denom`` for ``i_from <= i <= i_to``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import presets
from .attractors import ClassifierConfig
from .hybrid import ImpulseSchedule, RCCircuit, WCSystem, arithmetic_instants
from .integrate import SolverConfig
from .jumps import JumpComponent, RegularJump, SingularJump
from .model import SigmoidParams, SubpopulationParams

__all__ = [
    "ConfigError",
    "InstantSpec",
    "JumpSpec",
    "RCParams",
    "ScenarioConfig",
    "REGULAR_JUMPS",
    "SINGULAR_JUMPS",
    "BUILTINS",
    "builtin",
    "load",
    "loads",
]

WILSON_COWAN = "wilson-cowan"
RC = "rc"

REGULAR_JUMPS: dict[str, RegularJump] = {
    "none": RegularJump(),
    "model0-swap": presets.MODEL0_REGULAR,
    "3states-quadratic": presets.THREE_STATES_REGULAR,
}
SINGULAR_JUMPS: dict[str, SingularJump] = {
    "none": SingularJump(),
    "sqrt-cbrt": presets.SINGULAR_SQRT_CBRT,
}


class ConfigError(ValueError):
    """Malformed or inconsistent scenario."""


def _check_keys(d, allowed, where, required=()):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(map(str, extra))}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")


def _num(v, where) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return v


@dataclass(frozen=True)
class InstantSpec:
    """Either an arithmetic generator or an explicit list of instants."""

    generator: tuple[float, float, int, int, float] | None = None
    explicit: tuple[float, ...] = ()

    def __post_init__(self):
        if self.generator is not None and self.explicit:
            raise ConfigError("instant spec takes a generator or a list, not both")

    def instants(self) -> tuple[float, ...]:
        if self.generator is not None:
            return arithmetic_instants(*self.generator)
        return tuple(float(t) for t in self.explicit)

    def to_dict(self) -> dict:
        if self.generator is None:
            return {"list": list(self.explicit)}
        slope, offset, i_from, i_to, denom = self.generator
        return {"slope": slope, "offset": offset, "i_from": i_from, "i_to": i_to, "denom": denom}

    @classmethod
    def from_dict(cls, d, where="instants") -> "InstantSpec":
        if d is None:
            return cls()
        if isinstance(d, dict) and "list" in d:
            _check_keys(d, ("list",), where)
            if not isinstance(d["list"], list):
                raise ConfigError(f"{where}.list: expected a list")
            return cls(explicit=tuple(_num(v, where) for v in d["list"]))
        _check_keys(d, ("slope", "offset", "i_from", "i_to", "denom"), where, ("slope", "offset", "i_from", "i_to"))
        i_from, i_to = d["i_from"], d["i_to"]
        if not (isinstance(i_from, int) and isinstance(i_to, int)) or i_to < i_from:
            raise ConfigError(f"{where}: i_from/i_to must be integers with i_from <= i_to")
        denom = _num(d.get("denom", 1.0), where)
        if denom == 0:
            raise ConfigError(f"{where}: denom must be nonzero")
        return cls(generator=(_num(d["slope"], where), _num(d["offset"], where), i_from, i_to, denom))


@dataclass(frozen=True)
class JumpSpec:
    """A registry name or an explicit coefficient table for the two components."""

    name: str | None = None
    e: JumpComponent = JumpComponent()
    i: JumpComponent = JumpComponent()

    def to_dict(self) -> dict:
        if self.name is not None:
            return {"name": self.name}
        return {"e": self.e.to_dict(), "i": self.i.to_dict()}

    @classmethod
    def from_dict(cls, d, registry, where) -> "JumpSpec":
        if d is None:
            return cls(name="none")
        if "name" in d:
            _check_keys(d, ("name",), where)
            if d["name"] not in registry:
                raise ConfigError(f"{where}: unknown jump map {d['name']!r}; known: {sorted(registry)}")
            return cls(name=d["name"])
        _check_keys(d, ("e", "i"), where)
        try:
            return cls(e=JumpComponent.from_dict(d.get("e") or {}), i=JumpComponent.from_dict(d.get("i") or {}))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    @classmethod
    def table(cls, jump) -> "JumpSpec":
        return cls(e=jump.e, i=jump.i)

    def build(self, kind):
        if self.name is not None:
            return (REGULAR_JUMPS if kind is RegularJump else SINGULAR_JUMPS)[self.name]
        try:
            return kind(self.e, self.i)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class RCParams:
    R: float
    C: float
    current: float


_PAIR_KEYS = ("c1", "c2", "c3", "c4", "ke", "ki", "re", "ri", "sig_e", "sig_i", "P", "Q", "mu_e", "mu_i")


def _pair_to_dict(p: SubpopulationParams) -> dict:
    d = dataclasses.asdict(p)
    return {k: d[k] for k in _PAIR_KEYS}


def _pair_from_dict(d, where) -> SubpopulationParams:
    _check_keys(d, _PAIR_KEYS, where, _PAIR_KEYS[:10])
    kw = {}
    for k in _PAIR_KEYS:
        if k not in d:
            continue
        if k in ("sig_e", "sig_i"):
            _check_keys(d[k], ("a", "theta"), f"{where}.{k}", ("a", "theta"))
            try:
                kw[k] = SigmoidParams(_num(d[k]["a"], where), _num(d[k]["theta"], where))
            except ValueError as exc:
                raise ConfigError(f"{where}.{k}: {exc}") from exc
        else:
            kw[k] = _num(d[k], f"{where}.{k}")
    try:
        return SubpopulationParams(**kw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _states(v, where) -> tuple[tuple[float, ...], ...]:
    if not isinstance(v, list):
        raise ConfigError(f"{where}: expected a list of states")
    out = []
    for k, s in enumerate(v):
        if not isinstance(s, list) or not s:
            raise ConfigError(f"{where}[{k}]: expected a nonempty list of numbers")
        out.append(tuple(_num(x, f"{where}[{k}]") for x in s))
    return tuple(out)


def _dataclass_from(cls, d, where):
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(d or {}, names, where)
    try:
        return cls(**(d or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _dataclass_to(obj) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(obj).items()}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    system: str = WILSON_COWAN
    pairs: tuple[SubpopulationParams, ...] = ()
    rc: RCParams | None = None
    theta: InstantSpec = InstantSpec()
    eta: InstantSpec = InstantSpec()
    regular_jump: JumpSpec = JumpSpec(name="none")
    singular_jump: JumpSpec = JumpSpec(name="none")
    mu: tuple[float, ...] = ()
    initial_states: tuple[tuple[float, ...], ...] = ()
    initial_states_by_mu: dict[float, tuple[tuple[float, ...], ...]] = field(default_factory=dict)
    T: float = 1.0
    layer_width: float = 0.05
    solver: SolverConfig = SolverConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    description: str = ""

    def __post_init__(self):
        if self.system not in (WILSON_COWAN, RC):
            raise ConfigError(f"system must be {WILSON_COWAN!r} or {RC!r}")
        if self.system == WILSON_COWAN and not self.pairs:
            raise ConfigError("a wilson-cowan scenario needs at least one pair")
        if self.system == RC and self.rc is None:
            raise ConfigError("an rc scenario needs rc parameters")
        # builds the schedule eagerly so bad instants or jump tables fail at load time
        if not self.schedule().is_empty and self.system == RC:
            raise ConfigError("impulses are only defined for wilson-cowan scenarios")
        if any(not m > 0 for m in self.mu) or any(not m > 0 for m in self.initial_states_by_mu):
            raise ConfigError("mu values must be positive")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not self.layer_width > 0:
            raise ConfigError("layer_width must be positive")
        dim = self.dim
        if max(self.classifier.projection) >= dim:
            raise ConfigError(f"classifier projection {self.classifier.projection} exceeds state dimension {dim}")
        for s in self.initial_states + tuple(x for v in self.initial_states_by_mu.values() for x in v):
            if len(s) != dim:
                raise ConfigError(f"initial state {s} has {len(s)} components, system has {dim}")

    @property
    def dim(self) -> int:
        return 1 if self.system == RC else 2 * len(self.pairs)

    def schedule(self) -> ImpulseSchedule:
        try:
            return ImpulseSchedule(
                self.theta.instants(), self.eta.instants(),
                self.regular_jump.build(RegularJump), self.singular_jump.build(SingularJump),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def pairs_at(self, mu: float | None) -> tuple[SubpopulationParams, ...]:
        if mu is None:
            return self.pairs
        return (self.pairs[0].with_mu(mu),) + self.pairs[1:]

    def build(self, mu: float | None = None):
        """``(system, schedule)`` with the first pair's time constants set to ``mu``."""
        if self.system == RC:
            return RCCircuit(self.rc.R, self.rc.C, self.rc.current), self.schedule()
        return WCSystem(self.pairs_at(mu)), self.schedule()

    def states_for(self, mu: float) -> tuple[tuple[float, ...], ...]:
        return self.initial_states_by_mu.get(mu, self.initial_states)

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"name": self.name}
        if self.description:
            d["description"] = self.description
        d["system"] = self.system
        if self.system == RC:
            d["rc"] = dataclasses.asdict(self.rc)
        else:
            d["pairs"] = [_pair_to_dict(p) for p in self.pairs]
        d["theta"] = self.theta.to_dict()
        d["eta"] = self.eta.to_dict()
        d["regular_jump"] = self.regular_jump.to_dict()
        d["singular_jump"] = self.singular_jump.to_dict()
        d["mu"] = list(self.mu)
        d["initial_states"] = [list(s) for s in self.initial_states]
        if self.initial_states_by_mu:
            d["initial_states_by_mu"] = {m: [list(s) for s in v] for m, v in self.initial_states_by_mu.items()}
        d["T"] = self.T
        d["layer_width"] = self.layer_width
        d["solver"] = _dataclass_to(self.solver)
        d["classifier"] = _dataclass_to(self.classifier)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        top = ("name", "description", "system", "pairs", "rc", "theta", "eta", "regular_jump", "singular_jump",
               "mu", "initial_states", "initial_states_by_mu", "T", "layer_width", "solver", "classifier")
        _check_keys(d, top, "scenario", ("name", "T"))
        system = d.get("system", WILSON_COWAN)
        rc = None
        if d.get("rc") is not None:
            _check_keys(d["rc"], ("R", "C", "current"), "rc", ("R", "C", "current"))
            rc = RCParams(*(_num(d["rc"][k], "rc") for k in ("R", "C", "current")))
            if not (rc.R > 0 and rc.C > 0):
                raise ConfigError("rc: R and C must be positive")
        pairs = d.get("pairs") or []
        if not isinstance(pairs, list):
            raise ConfigError("pairs: expected a list")
        mu = d.get("mu") or []
        if not isinstance(mu, list):
            raise ConfigError("mu: expected a list")
        by_mu = d.get("initial_states_by_mu") or {}
        if not isinstance(by_mu, dict):
            raise ConfigError("initial_states_by_mu: expected a mapping")
        return cls(
            name=str(d["name"]),
            description=str(d.get("description", "")),
            system=system,
            pairs=tuple(_pair_from_dict(p, f"pairs[{k}]") for k, p in enumerate(pairs)),
            rc=rc,
            theta=InstantSpec.from_dict(d.get("theta"), "theta"),
            eta=InstantSpec.from_dict(d.get("eta"), "eta"),
            regular_jump=JumpSpec.from_dict(d.get("regular_jump"), REGULAR_JUMPS, "regular_jump"),
            singular_jump=JumpSpec.from_dict(d.get("singular_jump"), SINGULAR_JUMPS, "singular_jump"),
            mu=tuple(_num(m, "mu") for m in mu),
            initial_states=_states(d.get("initial_states") or [], "initial_states"),
            initial_states_by_mu={_num(m, "initial_states_by_mu"): _states(v, f"initial_states_by_mu[{m}]")
                                  for m, v in by_mu.items()},
            T=_num(d["T"], "T"),
            layer_width=_num(d.get("layer_width", 0.05), "layer_width"),
            solver=_dataclass_from(SolverConfig, d.get("solver"), "solver"),
            classifier=_dataclass_from(ClassifierConfig, d.get("classifier"), "classifier"),
        )

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=100)

    def dump(self, path) -> None:
        Path(path).write_text(self.dumps())


def loads(text: str) -> ScenarioConfig:
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return ScenarioConfig.from_dict(d)


def load(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def _builtins() -> dict[str, ScenarioConfig]:
    model0_theta = InstantSpec(generator=presets.MODEL0_THETA)
    model0_eta = InstantSpec(generator=presets.MODEL0_ETA)
    coupled_theta = InstantSpec(generator=presets.COUPLED_THETA)
    coupled_eta = InstantSpec(generator=presets.COUPLED_ETA)
    sqrt_cbrt = JumpSpec.table(presets.SINGULAR_SQRT_CBRT)
    out = [
        ScenarioConfig(
            name="rc", system=RC, rc=RCParams(R=1.0, C=0.1, current=1.0),
            initial_states=((0.0,),), T=1.0, classifier=ClassifierConfig(projection=(0,)),
            description="RC circuit, RC = 0.1, IR = 1, V(0) = 0",
        ),
        ScenarioConfig(
            name="model0", pairs=(presets.MODEL0,), mu=(0.1,),
            initial_states=((0.25, 0.0),), T=presets.MODEL0_T,
            classifier=ClassifierConfig(projection=(0, 1)),
            description="bistable pair without impulses",
        ),
        ScenarioConfig(
            name="model0+impulses", pairs=(presets.MODEL0,),
            theta=model0_theta, eta=model0_eta,
            regular_jump=JumpSpec.table(presets.MODEL0_REGULAR), singular_jump=sqrt_cbrt,
            mu=(0.3, 0.2, 0.1, 0.05, 0.02, 0.01),
            initial_states=((0.25, 0.0),), T=presets.MODEL0_T,
            classifier=ClassifierConfig(projection=(0, 1)),
            description="bistable pair; regular jumps swap the stable states",
        ),
        ScenarioConfig(
            name="3states", pairs=(presets.THREE_STATES,),
            theta=coupled_theta, eta=coupled_eta,
            regular_jump=JumpSpec.table(presets.THREE_STATES_REGULAR), singular_jump=sqrt_cbrt,
            mu=(1.0,), initial_states=((0.21, 0.2),), T=presets.COUPLED_T,
            classifier=ClassifierConfig(projection=(0, 1)),
            description="tristable pair with quadratic regular jumps",
        ),
        ScenarioConfig(
            name="periodic", pairs=(presets.PERIODIC,),
            initial_states=((0.17, 0.25),), T=100.0,
            classifier=ClassifierConfig(projection=(0, 1)),
            description="pair with a stable limit cycle",
        ),
        ScenarioConfig(
            name="coupled", pairs=(presets.THREE_STATES, presets.PERIODIC),
            theta=coupled_theta, eta=coupled_eta,
            regular_jump=JumpSpec.table(presets.THREE_STATES_REGULAR), singular_jump=sqrt_cbrt,
            mu=(1.0, 0.2, 0.1, 0.05),
            initial_states=(presets.X0_BLUE, presets.X0_RED, presets.X0_MAGENTA),
            initial_states_by_mu={1.0: (presets.X0_BLUE, presets.X0_RED)},
            T=presets.COUPLED_T,
            description="impulsive tristable pair (E, I) alongside the oscillating pair (e, i)",
        ),
    ]
    return {s.name: s for s in out}


BUILTINS = _builtins()


def builtin(name: str) -> ScenarioConfig:
    try:
        return BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; builtins: {sorted(BUILTINS)}") from None
