"""
Declarative run configuration.

A run config is a JSON (or TOML) document whose sections map onto the frozen
dataclasses below. Unknown keys, wrong types, bad enum values and values
outside their documented ranges raise `ConfigError` carrying the 1-based line
of the offending key when it can be found in the source text.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import NoneType, UnionType
from typing import Any, ClassVar, Literal, Mapping, Union, get_args, get_origin, get_type_hints

import toml

from diffeoreg.errors import ConfigError
from diffeoreg.geometry.quadrature import MAX_ORDER

logger = logging.getLogger(__name__)


class _Section:
    """Base for config sections: field-level range checks after coercion."""

    PATH_FIELDS: ClassVar[tuple[str, ...]] = ()

    def problems(self) -> list[tuple[str, str]]:
        return []


@dataclass(frozen=True)
class DomainConfig(_Section):
    kind: Literal["rectangle", "mesh"] = "rectangle"
    bounds: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    mesh_file: str | None = None
    mesh_resolution: int = 12
    quad_order: int = 3
    curved_map: Literal["affine", "sine_bulge"] | None = None
    curved_params: dict[str, float] = field(default_factory=dict)

    PATH_FIELDS: ClassVar[tuple[str, ...]] = ("mesh_file",)

    def problems(self) -> list[tuple[str, str]]:
        found = []
        if self.kind == "mesh" and self.mesh_file is None:
            found.append(("mesh_file", "mesh domains need mesh_file"))
        x_min, x_max, y_min, y_max = self.bounds
        if not (x_min < x_max and y_min < y_max):
            found.append(("bounds", "bounds must satisfy x_min < x_max and y_min < y_max"))
        if self.mesh_resolution < 1:
            found.append(("mesh_resolution", "mesh_resolution must be >= 1"))
        if not 1 <= self.quad_order <= MAX_ORDER:
            found.append(("quad_order", f"quad_order must be in 1..{MAX_ORDER}"))
        return found


@dataclass(frozen=True)
class BasisConfig(_Section):
    degree: int = 1
    temporal_degree: int = 0
    normalize: bool = True
    metric_form: str = "H1semi"
    metric_shift: float = 1e-6
    tikhonov_weight: float = 0.0

    def problems(self) -> list[tuple[str, str]]:
        found = []
        if self.degree < 0:
            found.append(("degree", "degree must be >= 0"))
        if self.temporal_degree < 0:
            found.append(("temporal_degree", "temporal_degree must be >= 0"))
        if self.metric_shift < 0:
            found.append(("metric_shift", "metric_shift must be >= 0"))
        if self.tikhonov_weight < 0:
            found.append(("tikhonov_weight", "tikhonov_weight must be >= 0"))
        return found


@dataclass(frozen=True)
class TargetConfig(_Section):
    kind: Literal["distributed", "pointwise"] = "distributed"
    field: str = "gaussian_ridge"
    field_params: dict[str, Any] = dataclasses.field(default_factory=dict)
    mu: float = 0.2
    z_space: Literal["zero", "polynomial", "snapshots"] = "snapshots"
    z_degree: int = 1
    z_mu: tuple[float, ...] = (0.0,)
    source_file: str | None = None
    target_file: str | None = None
    synthetic_points: int = 50
    synthetic_amplitude: float = 0.5
    em_outer_iters: int = 5
    em_sigma0: float | None = None
    doubly_stochastic: bool = False

    PATH_FIELDS: ClassVar[tuple[str, ...]] = ("source_file", "target_file")

    def problems(self) -> list[tuple[str, str]]:
        found = []
        if (self.source_file is None) != (self.target_file is None):
            found.append(("source_file", "source_file and target_file must be given together"))
        if self.synthetic_points < 1:
            found.append(("synthetic_points", "synthetic_points must be >= 1"))
        if self.em_outer_iters < 0:
            found.append(("em_outer_iters", "em_outer_iters must be >= 0"))
        if self.em_sigma0 is not None and self.em_sigma0 <= 0:
            found.append(("em_sigma0", "em_sigma0 must be > 0"))
        if self.z_degree < 0:
            found.append(("z_degree", "z_degree must be >= 0"))
        return found


@dataclass(frozen=True)
class OptimizerConfig(_Section):
    max_iters: int = 100
    grad_tol: float = 1e-8
    gamma0: float = 1.0
    step_rule: Literal["fixed", "bb"] = "bb"
    rho: float = 0.5
    armijo_c: float = 1e-4
    steps: int = 50
    scheme: Literal["RK4", "RK2"] = "RK4"
    gradient: Literal["adjoint", "direct"] = "adjoint"
    penalty_weight: float = 0.0
    penalty_threshold: float = 0.01
    penalty_continuation: bool = True
    max_continuations: int = 10
    bijectivity_density: int = 41

    def problems(self) -> list[tuple[str, str]]:
        found = []
        if self.max_iters < 0:
            found.append(("max_iters", "max_iters must be >= 0"))
        if self.gamma0 <= 0:
            found.append(("gamma0", "gamma0 must be > 0"))
        if not 0 < self.rho < 1:
            found.append(("rho", "rho must be in (0, 1)"))
        if not 0 < self.armijo_c < 1:
            found.append(("armijo_c", "armijo_c must be in (0, 1)"))
        if self.steps < 1:
            found.append(("steps", "steps must be >= 1"))
        if self.penalty_weight < 0:
            found.append(("penalty_weight", "penalty_weight must be >= 0"))
        if self.penalty_threshold <= 0:
            found.append(("penalty_threshold", "penalty_threshold must be > 0"))
        if self.bijectivity_density < 2:
            found.append(("bijectivity_density", "bijectivity_density must be >= 2"))
        return found


@dataclass(frozen=True)
class ModalConfig(_Section):
    forms: tuple[str, ...] = ("H1semi", "elasticity(1,1/3)", "H2semi")
    basis_kind: Literal["eigen", "gfem"] = "eigen"
    m_max: int | None = None
    mu_values: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    snapshot_file: str | None = None
    gfem_degree: int = 2
    gfem_boundary_degree: int | None = None
    objective: bool = True

    PATH_FIELDS: ClassVar[tuple[str, ...]] = ("snapshot_file",)

    def problems(self) -> list[tuple[str, str]]:
        found = []
        if not self.forms:
            found.append(("forms", "at least one form is needed"))
        if self.m_max is not None and self.m_max < 1:
            found.append(("m_max", "m_max must be >= 1"))
        if self.gfem_degree < 0:
            found.append(("gfem_degree", "gfem_degree must be >= 0"))
        return found


@dataclass(frozen=True)
class CheckConfig(_Section):
    steps: int = 1000
    seeds_per_side: int = 8
    random_fields: int = 5
    amplitude: float = 0.5
    fd_step: float = 1e-5
    identity_tol: float = 1e-14
    round_trip_tol: float = 1e-6
    facet_tol: float = 1e-10
    jacobian_tol: float = 1e-6
    gradient_tol: float = 1e-4
    direct_tol: float = 1e-6
    continuity_margin: float = 1e-6
    cm_gradient_tol: float = 1e-6

    def problems(self) -> list[tuple[str, str]]:
        found = []
        if self.steps < 1:
            found.append(("steps", "steps must be >= 1"))
        if self.seeds_per_side < 2:
            found.append(("seeds_per_side", "seeds_per_side must be >= 2"))
        if self.random_fields < 1:
            found.append(("random_fields", "random_fields must be >= 1"))
        if self.fd_step <= 0:
            found.append(("fd_step", "fd_step must be > 0"))
        return found


@dataclass(frozen=True)
class OutputConfig(_Section):
    directory: str = "out"
    grid_density: int = 21

    def problems(self) -> list[tuple[str, str]]:
        return [("grid_density", "grid_density must be >= 2")] if self.grid_density < 2 else []


@dataclass(frozen=True)
class RunConfig(_Section):
    family: Literal["vf", "cm"] = "vf"
    seed: int = 0
    threads: int = 1
    domain: DomainConfig = field(default_factory=DomainConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    target: TargetConfig = field(default_factory=TargetConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    modal: ModalConfig = field(default_factory=ModalConfig)
    check: CheckConfig = field(default_factory=CheckConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def problems(self) -> list[tuple[str, str]]:
        return [("threads", "threads must be >= 1")] if self.threads < 1 else []

    def to_dict(self) -> dict[str, Any]:
        return _to_plain(self)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], source_text: str = "") -> RunConfig:
        return _build(cls, data, source_text, "")

    def with_overrides(
        self, *, out: str | None = None, seed: int | None = None, threads: int | None = None
    ) -> RunConfig:
        config = self
        if out is not None:
            config = dataclasses.replace(config, output=dataclasses.replace(config.output, directory=out))
        if seed is not None:
            config = dataclasses.replace(config, seed=seed)
        if threads is not None:
            if threads < 1:
                raise ConfigError("--threads must be >= 1")
            config = dataclasses.replace(config, threads=threads)
        return config


def _to_plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value):
        return {f.name: _to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, tuple):
        return [_to_plain(item) for item in value]
    if isinstance(value, dict):
        return {key: _to_plain(item) for key, item in value.items()}
    return value


def locate_key(source_text: str, key: str) -> int | None:
    """1-based line of the first `"key":` (JSON) or `key =` (TOML) in the text."""
    if not source_text:
        return None
    pattern = re.compile(rf'^\s*"?{re.escape(key)}"?\s*[:=]|"{re.escape(key)}"\s*:')
    for number, line in enumerate(source_text.splitlines(), start=1):
        if pattern.search(line):
            return number
    return None


def _coerce(value: Any, hint: Any, key: str, source_text: str) -> Any:
    origin = get_origin(hint)
    args = get_args(hint)

    def fail(expected: str) -> ConfigError:
        return ConfigError(f"{key}: expected {expected}, got {value!r}", locate_key(source_text, key.rsplit(".", 1)[-1]))

    if hint is Any:
        return value
    if origin in (Union, UnionType):
        if value is None and NoneType in args:
            return None
        inner = [arg for arg in args if arg is not NoneType]
        return _coerce(value, inner[0], key, source_text)
    if origin is Literal:
        if value not in args:
            raise fail(f"one of {list(args)}")
        return value
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise fail("a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(item, args[0], key, source_text) for item in value)
        if len(value) != len(args):
            raise fail(f"a list of {len(args)} entries")
        return tuple(_coerce(item, arg, key, source_text) for item, arg in zip(value, args))
    if origin is dict:
        if not isinstance(value, Mapping):
            raise fail("a table")
        return {str(k): _coerce(v, args[1], f"{key}.{k}", source_text) for k, v in value.items()}
    if hint is bool:
        if not isinstance(value, bool):
            raise fail("a boolean")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise fail("an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise fail("a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise fail("a string")
        return value
    raise fail(str(hint))


def _build(cls: type, data: Mapping[str, Any], source_text: str, prefix: str) -> Any:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{prefix or 'config'}: expected a table", locate_key(source_text, prefix.rsplit(".", 1)[-1]))
    hints = get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key '{prefix}{key}'", locate_key(source_text, key))
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        hint = hints[f.name]
        if dataclasses.is_dataclass(hint):
            kwargs[f.name] = _build(hint, data[f.name], source_text, f"{prefix}{f.name}.")
        else:
            kwargs[f.name] = _coerce(data[f.name], hint, f"{prefix}{f.name}", source_text)
    instance = cls(**kwargs)
    for name, message in instance.problems():
        raise ConfigError(f"{prefix}{name}: {message}", locate_key(source_text, name))
    return instance


def _resolve_paths(config: RunConfig, base_dir: Path, source_text: str) -> RunConfig:
    sections = {}
    for f in dataclasses.fields(config):
        section = getattr(config, f.name)
        if not isinstance(section, _Section) or not section.PATH_FIELDS:
            continue
        updates = {}
        for name in section.PATH_FIELDS:
            value = getattr(section, name)
            if value is None:
                continue
            path = Path(value)
            path = path if path.is_absolute() else (base_dir / path)
            if not path.exists():
                raise ConfigError(f"{f.name}.{name}: file {value} does not exist", locate_key(source_text, name))
            updates[name] = str(path.resolve())
        if updates:
            sections[f.name] = dataclasses.replace(section, **updates)
    return dataclasses.replace(config, **sections) if sections else config


def load_config(path: Path) -> RunConfig:
    """Read a `.json` or `.toml` run config, check it, and resolve file paths against its directory."""
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".toml":
            data = toml.loads(text)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    except toml.TomlDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc.msg}", exc.lineno) from exc
    config = _resolve_paths(RunConfig.from_mapping(data, text), path.parent, text)
    logger.debug("Loaded config %s", path)
    return config
