"""Run configuration: a JSON document with nested blocks.

Example::

    {
      "system": {
        "n": 2, "m": 1, "t0": 0.0, "tf": 1.0,
        "A": [[[0.0], [1.0]], [[0.0], [0.0]]],
        "B": [[[0.0]], [[1.0]]]
      },
      "bridge": {"xi0": [0.0, 0.0], "xi1": [0.0, 0.0]},
      "grid": {"N": 1000},
      "simulation": {"seed": 1, "n_paths": 2, "workers": 1},
      "validation": {"query_times": [0.25, 0.5, 0.75], "pairs": [[0.25, 0.5]], "z_threshold": 4.0},
      "output": {"directory": "out", "formats": ["csv"]}
    }

Matrix entries are coefficient lists in ascending powers of ``t``; a
constant entry is a one-element list.  A piecewise matrix is written as
``{"breakpoints": [b1, ...], "pieces": [M0, M1, ...]}``.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .system import LinearSystem, PiecewisePolyMatrix, TimeGrid

__all__ = [
    "SystemConfig",
    "BridgeConfig",
    "GridConfig",
    "SimulationConfig",
    "ValidationConfig",
    "OutputConfig",
    "RunConfig",
    "load_config",
    "dump_config",
]


def _freeze(x):
    if isinstance(x, (list, tuple)):
        return tuple(_freeze(v) for v in x)
    if isinstance(x, dict):
        return {k: _freeze(v) for k, v in x.items()}
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    return x


def _thaw(x):
    if isinstance(x, tuple):
        return [_thaw(v) for v in x]
    if isinstance(x, dict):
        return {k: _thaw(v) for k, v in x.items()}
    return x


def _matrix_from(spec):
    if isinstance(spec, dict):
        return PiecewisePolyMatrix.from_nested(spec["pieces"], spec.get("breakpoints", ()))
    return PiecewisePolyMatrix.from_nested(spec)


@dataclass(frozen=True)
class SystemConfig:
    n: int
    m: int
    A: object
    B: object
    t0: float = 0.0
    tf: float = 1.0

    def build(self) -> LinearSystem:
        sys = LinearSystem(_matrix_from(_thaw(self.A)), _matrix_from(_thaw(self.B)), self.t0, self.tf)
        if sys.n != self.n or sys.m != self.m:
            raise ValueError(f"declared (n, m) = ({self.n}, {self.m}) but matrices give ({sys.n}, {sys.m})")
        return sys


@dataclass(frozen=True)
class BridgeConfig:
    xi0: tuple
    xi1: tuple


@dataclass(frozen=True)
class GridConfig:
    N: int = 1000


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = 1
    n_paths: int = 2
    workers: int = 1


@dataclass(frozen=True)
class ValidationConfig:
    query_times: tuple = (0.25, 0.5, 0.75)
    pairs: tuple = ((0.25, 0.5),)
    z_threshold: float = 4.0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig
    bridge: BridgeConfig
    grid: GridConfig = field(default_factory=GridConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        n = self.system.n
        if len(self.bridge.xi0) != n or len(self.bridge.xi1) != n:
            raise ValueError(f"xi0 and xi1 must have length n = {n}")
        if self.grid.N < 2:
            raise ValueError("grid.N must be at least 2")
        if self.simulation.n_paths < 0:
            raise ValueError("simulation.n_paths must be non-negative")

    @classmethod
    def from_dict(cls, d):
        s = d["system"]
        system = SystemConfig(
            n=int(s["n"]), m=int(s["m"]), A=_freeze(s["A"]), B=_freeze(s["B"]),
            t0=float(s.get("t0", 0.0)), tf=float(s.get("tf", 1.0)),
        )
        b = d["bridge"]
        bridge = BridgeConfig(_freeze(b["xi0"]), _freeze(b["xi1"]))
        g = d.get("grid", {})
        sim = d.get("simulation", {})
        val = d.get("validation", {})
        out = d.get("output", {})
        return cls(
            system,
            bridge,
            GridConfig(int(g.get("N", GridConfig.N))),
            SimulationConfig(
                int(sim.get("seed", SimulationConfig.seed)),
                int(sim.get("n_paths", SimulationConfig.n_paths)),
                int(sim.get("workers", SimulationConfig.workers)),
            ),
            ValidationConfig(
                _freeze(val.get("query_times", ValidationConfig.query_times)),
                _freeze(val.get("pairs", ValidationConfig.pairs)),
                float(val.get("z_threshold", ValidationConfig.z_threshold)),
            ),
            OutputConfig(
                str(out.get("directory", OutputConfig.directory)),
                tuple(out.get("formats", OutputConfig.formats)),
            ),
        )

    def to_dict(self):
        return _thaw(asdict(self))

    def with_overrides(self, *, seed=None, n_paths=None, N=None, workers=None, directory=None, svg=False):
        cfg = self
        if seed is not None or n_paths is not None or workers is not None:
            cfg = replace(
                cfg,
                simulation=SimulationConfig(
                    cfg.simulation.seed if seed is None else int(seed),
                    cfg.simulation.n_paths if n_paths is None else int(n_paths),
                    cfg.simulation.workers if workers is None else int(workers),
                ),
            )
        if N is not None:
            cfg = replace(cfg, grid=GridConfig(int(N)))
        if directory is not None or (svg and "svg" not in cfg.output.formats):
            formats = cfg.output.formats + (("svg",) if svg and "svg" not in cfg.output.formats else ())
            cfg = replace(cfg, output=OutputConfig(cfg.output.directory if directory is None else str(directory), formats))
        return cfg

    def build_system(self) -> LinearSystem:
        return self.system.build()

    def build_grid(self) -> TimeGrid:
        return TimeGrid(self.system.t0, self.system.tf, self.grid.N)


def load_config(path) -> RunConfig:
    with open(path) as f:
        return RunConfig.from_dict(json.load(f))


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
