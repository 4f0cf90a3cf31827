"""Pipeline configuration: a flat TOML file of ``key = value`` lines.

The keys, their meaning and their defaults are documented in
``docs/config.md``; :data:`DEFAULTS` must stay in sync with that table.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dataset import DEFAULT_SENTINELS, CleanPolicy
from .entropy import EstimatorParams
from .regress import ForestParams, SvrParams

__all__ = ["ConfigError", "PipelineConfig", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    has_header: bool = True
    target: str | None = None
    features: tuple[str, ...] | None = None
    ignored: tuple[str, ...] = ()
    sentinels: tuple[float, ...] = DEFAULT_SENTINELS

    k: int = 3
    norm: str = "chebyshev"
    ties: str = "average"

    selection: str = "top_m"
    top_m: int = 2
    threshold: float = 0.05

    model: str = "forest"
    train_features: str = "selected"
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 5
    features_per_split: int | None = None
    svr_C: float = 10.0
    svr_epsilon: float = 0.1
    svr_gamma: float | None = None
    svr_tol: float = 1e-3
    svr_max_iter: int = 200_000

    train_fraction: float = 0.8
    seed: int = 0
    out: str = "out"
    jobs: int = 1

    synth_kind: str = "regression"
    synth_rows: int = 2000
    synth_form: str = "additive_quadratic"
    synth_noise_features: int = 4
    synth_noise_sd: float = 0.1
    synth_offset: float = 2.0
    synth_correlation: tuple[tuple[float, ...], ...] = ((1.0, 0.6), (0.6, 1.0))
    synth_marginals: tuple[str, ...] | None = None
    synth_output: str | None = None

    base_dir: str = "."  # directory relative paths are resolved against

    def __post_init__(self):
        choices = {
            "norm": ("chebyshev", "euclidean"),
            "ties": ("average", "max"),
            "selection": ("top_m", "threshold"),
            "model": ("forest", "svr"),
            "train_features": ("selected", "all"),
            "synth_kind": ("regression", "gaussian_copula"),
        }
        for key, allowed in choices.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {list(allowed)}, got {getattr(self, key)!r}")
        if self.top_m < 1:
            raise ConfigError(f"top_m must be >= 1, got {self.top_m}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not math.isfinite(self.threshold):
            raise ConfigError("threshold must be a finite number")
        try:
            self.estimator_params()
            self.forest_params()
            self.svr_params()
            self.clean_policy()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- derived parameter objects --

    def estimator_params(self) -> EstimatorParams:
        return EstimatorParams(self.k, self.norm, self.ties)

    def forest_params(self) -> ForestParams:
        return ForestParams(self.n_trees, self.max_depth, self.min_leaf,
                            self.features_per_split, self.seed)

    def svr_params(self) -> SvrParams:
        return SvrParams(self.svr_C, self.svr_epsilon, self.svr_gamma,
                         self.svr_tol, self.svr_max_iter)

    def clean_policy(self) -> CleanPolicy:
        return CleanPolicy(self.sentinels)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def input_path(self) -> Path:
        if not self.input:
            raise ConfigError("config key 'input' is required for this command")
        return self.resolve(self.input)

    def out_dir(self) -> Path:
        return self.resolve(self.out)

    def to_dict(self) -> dict:
        """Echo of the user-facing settings (``base_dir`` excluded)."""
        out = {}
        for f in fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out


_TUPLE_KEYS = {"features", "ignored", "sentinels", "synth_marginals"}


def from_mapping(doc: dict, base_dir: str = ".", **overrides) -> PipelineConfig:
    tables = sorted(k for k, v in doc.items() if isinstance(v, dict))
    if tables:
        raise ConfigError(f"config must be flat; found table(s) {tables}")
    known = {f.name for f in fields(PipelineConfig)} - {"base_dir"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {unknown}")
    values = {}
    for key, v in doc.items():
        if key in _TUPLE_KEYS:
            if not isinstance(v, list):
                raise ConfigError(f"{key} must be a list")
            v = tuple(v)
        elif key == "synth_correlation":
            v = tuple(tuple(float(c) for c in row) for row in v)
        values[key] = v
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return PipelineConfig(base_dir=base_dir, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return from_mapping(doc, base_dir=str(path.parent), **overrides)
