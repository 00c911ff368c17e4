"""YAML run configuration with strict validation.

A configuration file is a YAML mapping with the blocks ``grid``,
``scenario``, ``integrator``, ``outputs`` and the optional ``physical``,
``multimode``, ``sweep`` and ``verify`` blocks plus a top-level ``mode``.
Unknown keys anywhere are an error.  Every error message starts with the
dotted key it refers to.
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .gauge import ConfigurationError
from .grid import GridError, TransverseGrid
from .propagator import KINDS as INTEGRATOR_KINDS
from .scenarios import PhysicalParams, ScenarioSpec

MODES = ("run", "verify", "sweep")
SUITE_NAMES = ("gauge", "electric", "magnetic", "ab", "multimode")


class ConfigError(ValueError):
    """Invalid configuration text; the message names the offending key."""


@dataclass(frozen=True)
class GridBlock:
    nx: int = 256
    ny: int = 256
    lx: float = 20.0
    ly: float = 20.0
    x_offset: float = 0.0
    y_offset: float = 0.0
    mask: bool = False
    mask_width: float = 2.0
    mask_strength: float = 1.0

    def __post_init__(self):
        if self.mask and not 0 < self.mask_width < min(self.lx, self.ly) / 2:
            raise ConfigurationError("mask_width must lie in (0, min(lx, ly)/2)")
        if not self.mask_strength > 0:
            raise ConfigurationError("mask_strength must be positive")

    def build(self) -> TransverseGrid:
        return TransverseGrid(self.nx, self.ny, self.lx, self.ly, self.x_offset, self.y_offset)


@dataclass(frozen=True)
class IntegratorBlock:
    kind: str = "auto"
    safety: float = 0.5

    def __post_init__(self):
        if self.kind != "auto" and self.kind not in INTEGRATOR_KINDS:
            raise ConfigurationError(f"kind must be 'auto' or one of {INTEGRATOR_KINDS}")
        if not 0 < self.safety <= 1:
            raise ConfigurationError("safety must lie in (0, 1]")


@dataclass(frozen=True)
class OutputsBlock:
    directory: str = "out"
    snapshots: tuple = ()
    diagnostics_every: int = 10

    def __post_init__(self):
        if self.diagnostics_every < 1:
            raise ConfigurationError("diagnostics_every must be >= 1")
        if any(not (math.isfinite(z) and z >= 0) for z in self.snapshots):
            raise ConfigurationError("snapshots must be non-negative zeta values")


@dataclass(frozen=True)
class MultimodeBlock:
    gamma: float = 1000.0
    samples: int = 20

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigurationError("gamma must be non-negative")
        if self.samples < 1:
            raise ConfigurationError("samples must be >= 1")


@dataclass(frozen=True)
class SweepBlock:
    param: str = ""
    values: tuple = ()

    def __post_init__(self):
        if not self.param or not self.values:
            raise ConfigurationError("a sweep needs 'param' and a non-empty 'values' list")


@dataclass(frozen=True)
class VerifyBlock:
    suites: tuple = SUITE_NAMES

    def __post_init__(self):
        bad = [s for s in self.suites if s not in SUITE_NAMES]
        if bad:
            raise ConfigurationError(f"unknown suites {bad}; choose from {SUITE_NAMES}")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "run"
    grid: GridBlock = field(default_factory=GridBlock)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    integrator: IntegratorBlock = field(default_factory=IntegratorBlock)
    outputs: OutputsBlock = field(default_factory=OutputsBlock)
    physical: Optional[PhysicalParams] = None
    multimode: Optional[MultimodeBlock] = None
    sweep: Optional[SweepBlock] = None
    verify: Optional[VerifyBlock] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")


# generic typed construction ----------------------------------------------------------


def _type_name(tp) -> str:
    return getattr(tp, "__name__", str(tp))


def _coerce(value, tp, key):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], key)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, key)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if tp is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise ConfigError(f"{key}[{i}]: expected a number or string, got {v!r}")
            out.append(float(v) if isinstance(v, (int, float)) else v)
        return tuple(out)
    raise ConfigError(f"{key}: unsupported type {_type_name(tp)}")


def _build(cls, data, key):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{key}: expected a mapping, got {data!r}")
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls) if f.init]
    unknown = sorted(set(data) - set(names))
    if unknown:
        where = f"{key}." if key else ""
        raise ConfigError(f"{where}{unknown[0]}: unknown key (allowed: {', '.join(names)})")
    kwargs = {}
    for name in names:
        if name in data:
            kwargs[name] = _coerce(data[name], hints[name], f"{key}.{name}" if key else name)
    try:
        return cls(**kwargs)
    except (ConfigurationError, GridError) as exc:
        raise ConfigError(f"{key or 'config'}: {exc}") from None


# cross-block checks --------------------------------------------------------------------


def _check(cfg: RunConfig, base_dir: Optional[Path]) -> None:
    try:
        grid = cfg.grid.build()
    except GridError as exc:
        raise ConfigError(f"grid: {exc}") from None
    sc = cfg.scenario
    if sc.kind == "magnetic" and sc.realization == "control":
        s = math.sqrt(sc.B / 2)
        ymax = float(np.abs(grid.y).max())
        if s * ymax > 0.5:
            raise ConfigError(
                f"scenario.B: |R| <= 1/2 must hold on the grid, but sqrt(B/2)*max|y| = {s * ymax:.4g} > 1/2 "
                f"(need ly/2 <= {0.5 / s:.4g}); reduce B or ly, or set realization: ideal")
    if sc.kind == "aharonov_bohm":
        r, _ = grid.polar
        if r.min() < 1e-9 * min(grid.dx, grid.dy):
            raise ConfigError("grid.x_offset: a grid node sits on r = 0; set an offset for the Aharonov-Bohm scenario")
    for i, name in enumerate(sc.control_files):
        path = Path(name) if base_dir is None else Path(base_dir) / name
        if not path.is_file():
            raise ConfigError(f"scenario.control_files[{i}]: file {name!r} does not exist")
    late = [z for z in cfg.outputs.snapshots if z > sc.zeta_max]
    if late:
        raise ConfigError(f"outputs.snapshots: zeta {late[0]:g} lies beyond scenario.zeta_max = {sc.zeta_max:g}")
    if cfg.multimode is not None and not (sc.kind == "magnetic" and sc.realization == "periodic"):
        raise ConfigError("multimode: the multimode bench needs scenario.kind: magnetic with realization: periodic")
    if cfg.mode == "sweep" and cfg.sweep is None:
        raise ConfigError("sweep: mode 'sweep' requires a sweep block with param and values")


def parse_config(text: str, base_dir=None) -> RunConfig:
    """Parse and validate YAML configuration text.

    ``base_dir`` resolves relative ``control_files`` paths.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else "?"
        raise ConfigError(f"syntax error at line {line}: {exc.problem or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping of blocks")
    cfg = _build(RunConfig, data, "")
    _check(cfg, None if base_dir is None else Path(base_dir))
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


# serialisation -----------------------------------------------------------------------------


def _plain(value: Any):
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: RunConfig) -> dict:
    """Plain mapping of the configuration; optional blocks left out when unset."""
    out = _plain(cfg)
    return {k: v for k, v in out.items() if v is not None}


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def with_override(cfg: RunConfig, key: str, value, base_dir=None) -> RunConfig:
    """Copy of ``cfg`` with the dotted ``key`` replaced, fully re-validated."""
    data = config_to_dict(cfg)
    parts = key.split(".")
    node = data
    for p in parts[:-1]:
        if p not in node or node[p] is None:
            node[p] = {}
        if not isinstance(node[p], dict):
            raise ConfigError(f"{key}: {p} is not a block")
        node = node[p]
    node[parts[-1]] = value
    return parse_config(yaml.safe_dump(data, sort_keys=False), base_dir=base_dir)
