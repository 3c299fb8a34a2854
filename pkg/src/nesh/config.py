"""Run configuration: YAML sections mapped onto dataclasses.

Every design or bound field accepts either a number or the string ``auto``;
``auto`` fields are filled in by the tuner, explicit ones are used as given.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .dos import DosTrace, generate, read_trace
from .game import DEFAULT_X0, GameSpec, default_game, solve_ne
from .sim import FRAMES
from .topology import Topology
from .tuner import DesignParams, synthesize

AUTO = "auto"


class ConfigError(ValueError):
    pass


def _auto_or_number(section: str, name: str, value, integer: bool = False):
    if value == AUTO or value is None:
        return AUTO
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{name} must be a number or '{AUTO}', got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{section}.{name} must be an integer")
        return int(value)
    return float(value)


@dataclass
class GameSection:
    rho: list[float] = field(default_factory=lambda: default_game().rho.tolist())
    x_desired: list[float] = field(default_factory=lambda: default_game().x_desired.tolist())
    p0: float = 0.1
    q0: float = 0.0

    def build(self) -> GameSpec:
        return GameSpec(rho=self.rho, x_desired=self.x_desired, p0=self.p0, q0=self.q0)


@dataclass
class TopologySection:
    """A named preset (``cycle``, ``path``, ``complete``) or a 0-indexed edge list.

    Edges are ``[i, j]`` or ``[i, j, weight]``; an edge list needs ``n`` and
    ``preset: null``.
    """

    preset: str | None = "cycle"
    n: int | None = 5
    weight: float = 1.0
    edges: list[list[float]] | None = None

    def build(self) -> Topology:
        if self.edges is not None:
            if self.preset is not None:
                raise ConfigError("topology: give either 'preset' or 'edges', not both")
            if self.n is None:
                raise ConfigError("topology: 'n' is required with 'edges'")
            triples = []
            for e in self.edges:
                if len(e) not in (2, 3):
                    raise ConfigError(f"topology edge {e!r} must be [i, j] or [i, j, weight]")
                w = float(e[2]) if len(e) == 3 else self.weight
                if int(e[0]) != e[0] or int(e[1]) != e[1]:
                    raise ConfigError(f"topology edge {e!r} has non-integer endpoints")
                i, j = int(e[0]), int(e[1])
                if not (0 <= i < self.n and 0 <= j < self.n):
                    raise ConfigError(f"topology edge ({i}, {j}) outside 0..{self.n - 1}")
                triples.append((i, j, w))
            return Topology.from_edges(int(self.n), triples)
        if self.preset is None or self.n is None:
            raise ConfigError("topology: 'preset' and 'n' are required without 'edges'")
        return Topology.preset(self.preset, int(self.n), self.weight)


@dataclass
class DosSection:
    """Random generation parameters, or a trace file that overrides them."""

    duty: float = 0.9
    period: float = 10.0
    seed: int = 0
    file: str | None = None

    def build(self, horizon: float, base: Path | None = None) -> DosTrace:
        if self.file is not None:
            path = Path(self.file)
            if base is not None and not path.is_absolute():
                path = base / path
            if not path.exists():
                raise ConfigError(f"dos.file {path} does not exist")
            return read_trace(path)
        return generate(self.duty, self.period, horizon, self.seed)


@dataclass
class DesignSection:
    h: float | str = AUTO
    delta: float | str = AUTO
    gamma1: float | str = AUTO
    r_x: int | str = AUTO
    r_y: int | str = AUTO

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, _auto_or_number("design", f.name, getattr(self, f.name),
                                                  integer=f.name.startswith("r_")))

    @property
    def fully_explicit(self) -> bool:
        return all(getattr(self, f.name) != AUTO for f in fields(self))


@dataclass
class BoundsSection:
    theta0: float | str = AUTO
    c_x0: float | str = AUTO
    c_xstar: float | str = AUTO
    gamma1_margin: float = 0.1

    def __post_init__(self):
        for name in ("theta0", "c_x0", "c_xstar"):
            setattr(self, name, _auto_or_number("bounds", name, getattr(self, name)))
        self.gamma1_margin = float(self.gamma1_margin)


@dataclass
class SimSection:
    delta_seconds: float = 0.01
    horizon_steps: int = 150000
    record_decimation: int = 10
    seed: int = 0
    x0: list[float] = field(default_factory=lambda: list(DEFAULT_X0))
    frame: str = "ne"

    def __post_init__(self):
        if not self.delta_seconds > 0:
            raise ConfigError("sim.delta_seconds must be positive")
        if int(self.horizon_steps) != self.horizon_steps or self.horizon_steps < 1:
            raise ConfigError("sim.horizon_steps must be a positive integer")
        if int(self.record_decimation) != self.record_decimation or self.record_decimation < 1:
            raise ConfigError("sim.record_decimation must be a positive integer")
        if self.frame not in FRAMES:
            raise ConfigError(f"sim.frame must be one of {FRAMES}")
        self.horizon_steps = int(self.horizon_steps)
        self.record_decimation = int(self.record_decimation)
        self.delta_seconds = float(self.delta_seconds)
        self.x0 = [float(v) for v in self.x0]

    @property
    def horizon_seconds(self) -> float:
        return self.delta_seconds * self.horizon_steps


_SECTIONS = {"game": GameSection, "topology": TopologySection, "dos": DosSection,
             "design": DesignSection, "bounds": BoundsSection, "sim": SimSection}


@dataclass
class RunConfig:
    game: GameSection = field(default_factory=GameSection)
    topology: TopologySection = field(default_factory=TopologySection)
    dos: DosSection = field(default_factory=DosSection)
    design: DesignSection = field(default_factory=DesignSection)
    bounds: BoundsSection = field(default_factory=BoundsSection)
    sim: SimSection = field(default_factory=SimSection)
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: dict | None, base_dir: Path | None = None) -> "RunConfig":
        data = dict(data or {})
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, section_cls in _SECTIONS.items():
            raw = data.get(name) or {}
            if name == "design" and raw == AUTO:
                raw = {}
            if not isinstance(raw, dict):
                raise ConfigError(f"section '{name}' must be a mapping")
            known = {f.name for f in fields(section_cls)}
            bad = set(raw) - known
            if bad:
                raise ConfigError(f"unknown keys in '{name}': {sorted(bad)}")
            try:
                kwargs[name] = section_cls(**raw)
            except TypeError as exc:
                raise ConfigError(f"section '{name}': {exc}") from exc
        return cls(**kwargs, base_dir=base_dir)

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def loads(text: str, base_dir: Path | None = None) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    return RunConfig.from_dict(data, base_dir)


def load(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return loads(path.read_text(), base_dir=path.parent)


def save(cfg: RunConfig, path) -> None:
    Path(path).write_text(cfg.dumps())


def resolve_bounds(cfg: RunConfig, game: GameSpec) -> tuple[float, float]:
    """(C_x0, C_x*) with ``auto`` replaced by the tightest admissible value."""
    x0 = np.asarray(cfg.sim.x0, dtype=float)
    c_x0 = float(np.max(np.abs(x0))) if cfg.bounds.c_x0 == AUTO else cfg.bounds.c_x0
    if c_x0 < np.max(np.abs(x0)):
        raise ConfigError(f"bounds.c_x0 = {c_x0} is below max|x0| = {np.max(np.abs(x0))}")
    x_star = solve_ne(game)
    if cfg.bounds.c_xstar == AUTO:
        c_xstar = float(np.max(np.abs(x_star)))
    else:
        c_xstar = cfg.bounds.c_xstar
        if c_xstar < np.max(np.abs(x_star)):
            raise ConfigError(f"bounds.c_xstar = {c_xstar} is below max|x*|")
    return c_x0, c_xstar


def resolve_design(cfg: RunConfig, game: GameSpec, topo: Topology) -> DesignParams:
    """Design constants for ``cfg``: echoed when fully explicit, tuned otherwise.

    Explicit ``r_x``/``r_y`` override the tuned level counts, which is how an
    undersized quantizer is configured on purpose.
    """
    d, b = cfg.design, cfg.bounds
    if d.fully_explicit and b.theta0 != AUTO:
        return DesignParams(h=d.h, delta=d.delta, gamma1=d.gamma1, theta0=b.theta0,
                            r_x=d.r_x, r_y=d.r_y)
    c_x0, c_xstar = resolve_bounds(cfg, game)

    def pick(v):
        return None if v == AUTO else v

    params = synthesize(game, topo, theta0=pick(b.theta0), c_x0=c_x0, c_xstar=c_xstar,
                        gamma1_margin=b.gamma1_margin, h=pick(d.h), delta=pick(d.delta),
                        gamma1=pick(d.gamma1))
    overrides = {k: getattr(d, k) for k in ("r_x", "r_y") if getattr(d, k) != AUTO}
    return replace(params, **overrides) if overrides else params


def design_block(params: DesignParams) -> dict:
    """The mergeable ``design``/``bounds`` sections for a tuned parameter set."""
    return {"design": {"h": params.h, "delta": params.delta, "gamma1": params.gamma1,
                       "r_x": params.r_x, "r_y": params.r_y},
            "bounds": {"theta0": params.theta0}}
