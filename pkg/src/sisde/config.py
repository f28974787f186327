"""Experiment configuration: one flat TOML or JSON table.

Parameter keys are ``N``, ``beta``, ``mu_plus_gamma``, ``sigma``, ``i0``;
the remaining keys are the fields of :class:`ExperimentConfig`. Unknown keys
are rejected, and ``schema_version`` must be 1 when present.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .integrators import METHODS, MODELS, SchemeSpec
from .noise import parse_seed
from .params import PARAM_KEYS, ParameterError, SisParams, validate_params

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["SCHEMA_VERSION", "ConfigError", "ExperimentConfig", "load_config", "config_from_mapping"]

SCHEMA_VERSION = 1
EXACT_METHODS = ("stratonovich_exact", "wong_zakai_exact")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    params: SisParams
    t_end: float = 1.0
    cells: int = 1024
    scheme: str = "logodds_euler"
    model: str = "stratonovich"
    n_paths: int = 100
    base_seed: int = 0
    refinement_levels: int = 0
    reference_levels: int = 6
    substeps: int = 16
    clamp_epsilon: float = 1e-12
    burn_in_fraction: float = 0.1
    window_fraction: float = 0.5
    band: Optional[tuple] = None
    block_size: int = 32
    out_dir: str = "out"

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError("t_end must be positive")
        for name in ("cells", "n_paths", "substeps", "block_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if int(self.refinement_levels) != self.refinement_levels or self.refinement_levels < 0:
            raise ConfigError("refinement_levels must be a nonnegative integer")
        if self.refinement_levels > 0 and self.cells & (self.cells - 1):
            raise ConfigError("cells must be a power of two when refinement_levels > 0")
        if self.scheme not in METHODS + EXACT_METHODS:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.scheme in METHODS:
            try:
                SchemeSpec(self.scheme, self.model, self.clamp_epsilon, self.substeps)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.band is not None:
            lo, hi = self.band
            if not 0 < lo < hi < self.params.N:
                raise ConfigError("band must satisfy 0 < low < high < N")
            object.__setattr__(self, "band", (float(lo), float(hi)))
        object.__setattr__(self, "base_seed", parse_seed(self.base_seed))

    @property
    def spec(self) -> SchemeSpec:
        return SchemeSpec(self.scheme, self.model, self.clamp_epsilon, self.substeps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("params"))
        d["band"] = list(self.band) if self.band is not None else None
        d["schema_version"] = SCHEMA_VERSION
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        pchanges = {k: changes.pop(k) for k in list(changes) if k in PARAM_KEYS}
        params = self.params.replace(**pchanges) if pchanges else self.params
        return replace(self, params=params, **changes)


_EXPERIMENT_KEYS = tuple(f.name for f in fields(ExperimentConfig) if f.name != "params")


def config_from_mapping(raw: Mapping[str, Any]) -> ExperimentConfig:
    raw = dict(raw)
    version = raw.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    unknown = sorted(set(raw) - set(PARAM_KEYS) - set(_EXPERIMENT_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    try:
        params = validate_params({k: raw.pop(k) for k in PARAM_KEYS if k in raw})
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    if raw.get("band") is not None:
        raw["band"] = tuple(raw["band"])
    try:
        return ExperimentConfig(params=params, **raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_bytes()
    try:
        if path.suffix == ".toml":
            raw = tomllib.loads(text.decode())
        else:
            raw = json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table/object")
    return config_from_mapping(raw)
