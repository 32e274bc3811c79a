"""
Experiment configuration files: parsing, validation with field paths and
parameter-axis substitution for sweeps.
"""
import json
import math
import logging
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src import config
from src.errors import ConfigError
from src.kernel import GridSpec
from src.povm import PovmModel, Scheme, default_phases
from src.states import QuantumState
from src.witness import PhotocountExp, TestFunction, lambda_from_dict

logger = logging.getLogger(__name__)

PROBLEMS = ("phase-space", "chsh")
AXES = ("s", "t", "K", "eta")
TOP_LEVEL_FIELDS = {"schema_version", "problem", "state", "povm", "test_function", "s", "sweep",
                    "grid", "seed", "samples", "output", "bins", "chsh"}


@dataclass
class SweepSpec:
    """Parameter axis of a sweep: steps equally spaced values from start to stop."""

    axis: str
    start: float
    stop: float
    steps: int

    def to_dict(self) -> Dict[str, Any]:
        return {"axis": self.axis, "from": self.start, "to": self.stop, "steps": self.steps}

    def values(self) -> List[float]:
        if self.axis == "K":
            return [float(k) for k in range(int(self.start), int(self.stop) + 1)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration."""

    problem: str = "phase-space"
    state: Optional[QuantumState] = None
    povm: Optional[PovmModel] = None
    test_function: Optional[TestFunction] = None
    s: Optional[float] = None
    sweep: Optional[SweepSpec] = None
    grid: GridSpec = field(default_factory=GridSpec)
    seed: Optional[int] = None
    samples: Optional[int] = None
    output: Optional[str] = None
    bins: Optional[Dict[str, Any]] = None
    chsh: str = "tsirelson"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": config.CONFIG_SCHEMA_VERSION,
            "problem": self.problem,
            "state": None if self.state is None else self.state.to_dict(),
            "povm": None if self.povm is None else self.povm.to_dict(),
            "test_function": None if self.test_function is None else self.test_function.to_dict(),
            "s": self.s,
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
            "grid": self.grid.to_dict(),
            "seed": self.seed,
            "samples": self.samples,
            "output": self.output,
            "bins": self.bins,
            "chsh": self.chsh,
        }


def _number(data: Dict[str, Any], key: str, path: str, required: bool = False) -> Optional[float]:
    if key not in data or data[key] is None:
        if required:
            raise ConfigError(path, "is required")
        return None
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, f"must be a finite number, got {value!r}")
    return float(value)


def _integer(data: Dict[str, Any], key: str, path: str) -> Optional[int]:
    value = _number(data, key, path)
    if value is None:
        return None
    if value != int(value):
        raise ConfigError(path, f"must be an integer, got {data[key]!r}")
    return int(value)


def _section(data: Dict[str, Any], key: str, builder, required: bool):
    if data.get(key) is None:
        if required:
            raise ConfigError(key, "is required")
        return None
    section = data[key]
    if not isinstance(section, dict):
        raise ConfigError(key, "must be an object")
    try:
        return builder(section)
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError(f"{key}.params.{e.args[0]}", "is required")
    except (TypeError, ValueError) as e:
        raise ConfigError(key, str(e))


def parse_sweep(data: Dict[str, Any]) -> SweepSpec:
    axis = data.get("axis")
    if axis not in AXES:
        raise ConfigError("sweep.axis", f"must be one of {', '.join(AXES)}, got {axis!r}")
    start = _number(data, "from", "sweep.from", required=True)
    stop = _number(data, "to", "sweep.to", required=True)
    steps = _integer(data, "steps", "sweep.steps")
    if axis != "K" and (steps is None or steps < 2):
        raise ConfigError("sweep.steps", "must be an integer >= 2")
    return SweepSpec(axis=axis, start=start, stop=stop, steps=steps or 0)


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate a configuration object and resolve its descriptors.

    Args:
        data: Decoded JSON configuration

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: Schema violation; the message starts with the field path
    """
    if not isinstance(data, dict):
        raise ConfigError("$", "configuration must be a JSON object")
    unknown = set(data) - TOP_LEVEL_FIELDS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    version = data.get("schema_version")
    if version != config.CONFIG_SCHEMA_VERSION:
        raise ConfigError("schema_version", f"must be {config.CONFIG_SCHEMA_VERSION}, got {version!r}")
    problem = data.get("problem", "phase-space")
    if problem not in PROBLEMS:
        raise ConfigError("problem", f"must be one of {', '.join(PROBLEMS)}, got {problem!r}")
    cfg = ExperimentConfig(problem=problem)
    cfg.chsh = data.get("chsh", "tsirelson")
    if cfg.chsh not in ("tsirelson", "local"):
        raise ConfigError("chsh", f"must be 'tsirelson' or 'local', got {cfg.chsh!r}")
    phase_space = problem == "phase-space"
    cfg.state = _section(data, "state", QuantumState.from_dict, phase_space)
    cfg.povm = _section(data, "povm", PovmModel.from_dict, phase_space)
    cfg.test_function = _section(data, "test_function", lambda_from_dict, False)
    cfg.s = _number(data, "s", "s")
    if cfg.s is not None and not -1.0 <= cfg.s <= 1.0:
        raise ConfigError("s", f"must lie in [-1, 1], got {cfg.s}")
    if data.get("sweep") is not None:
        if not isinstance(data["sweep"], dict):
            raise ConfigError("sweep", "must be an object")
        cfg.sweep = parse_sweep(data["sweep"])
    cfg.grid = _section(data, "grid", GridSpec.from_dict, False) or GridSpec()
    cfg.seed = _integer(data, "seed", "seed")
    cfg.samples = _integer(data, "samples", "samples")
    if cfg.samples is not None:
        if cfg.samples < 1:
            raise ConfigError("samples", "must be >= 1")
        if cfg.seed is None:
            raise ConfigError("seed", "is required when samples are drawn")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "must be a path string")
    cfg.output = output
    bins = data.get("bins")
    if bins is not None:
        if not isinstance(bins, dict) or set(bins) - {"count", "limit"}:
            raise ConfigError("bins", "must be an object with 'count' and/or 'limit'")
        _integer(bins, "count", "bins.count")
        _number(bins, "limit", "bins.limit")
    cfg.bins = bins
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """
    Read and validate a JSON configuration file.

    Raises:
        ConfigError: Unreadable file, invalid JSON or schema violation
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError("$", f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError("$", f"invalid JSON in {path}: {e}")
    cfg = parse_config(data)
    logger.info(f"Loaded configuration {path} ({cfg.problem})")
    return cfg


def with_axis(cfg: ExperimentConfig, axis: str, value: float) -> Tuple[QuantumState, PovmModel, TestFunction, Optional[float]]:
    """
    Substitute one sweep value into the configuration.

    Args:
        cfg: Base configuration
        axis: "s", "t" (photocount test function), "K" (homodyne phases) or "eta" (state efficiency)
        value: Parameter value

    Returns:
        (state, povm, test function, s) for this point
    """
    state, povm, lam, s = cfg.state, cfg.povm, cfg.test_function, cfg.s
    if axis == "s":
        s = value
    elif axis == "t":
        if not isinstance(lam, PhotocountExp):
            raise ConfigError("test_function.form", "a t sweep needs a photocount-exp test function")
        lam = PhotocountExp(t=value, g=lam.g)
    elif axis == "K":
        if povm.scheme != Scheme.BHD:
            raise ConfigError("povm.scheme", "a K sweep needs balanced homodyne detection")
        povm = dataclasses.replace(povm, phases=default_phases(int(value)))
    elif axis == "eta":
        state = dataclasses.replace(state, eta=value)
    else:
        raise ConfigError("sweep.axis", f"unknown axis {axis!r}")
    return state, povm, lam, s
