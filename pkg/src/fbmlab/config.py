"""Experiment configuration: one JSON object drives every CLI command.

All defaults are explicit, and parse -> serialize -> parse is the identity,
so a dumped config rebuilds the exact experiment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .drifts import drift_from_spec, require_assumption
from .exceptions import ConfigurationError
from .noise import HurstParams

_JSON_KEYS = {
    "H": "hurst",
    "d": "dim",
    "drift": "drift",
    "x0": "x0",
    "x0n": "x0n",
    "n_list": "n_list",
    "n_ref": "n_ref",
    "samples": "samples",
    "p": "p",
    "master_seed": "master_seed",
    "metric": "metric",
    "output_dir": "output_dir",
    "threshold": "threshold",
    "noise_steps": "noise_steps",
    "pair_budget": "pair_budget",
}


@dataclass(frozen=True)
class ExperimentConfig:
    hurst: float = 1.5
    dim: int = 1
    drift: dict = field(default_factory=lambda: {"name": "capped_holder", "params": {"alpha": 0.8}})
    x0: tuple[float, ...] = (0.0,)
    x0n: tuple[float, ...] = (0.0,)
    n_list: tuple[int, ...] = (16, 32, 64, 128, 256)
    n_ref: int = 4096
    samples: int = 200
    p: float = 2.0
    master_seed: int = 20240801
    metric: str = "sup-grid"
    output_dir: str = "out"
    threshold: float = 0.2
    noise_steps: int = 8
    pair_budget: int = 10_000

    def to_dict(self) -> dict:
        return {
            "H": self.hurst,
            "d": self.dim,
            "drift": {"name": self.drift["name"], "params": dict(self.drift.get("params", {}))},
            "x0": list(self.x0),
            "x0n": list(self.x0n),
            "n_list": list(self.n_list),
            "n_ref": self.n_ref,
            "samples": self.samples,
            "p": self.p,
            "master_seed": self.master_seed,
            "metric": self.metric,
            "output_dir": self.output_dir,
            "threshold": self.threshold,
            "noise_steps": self.noise_steps,
            "pair_budget": self.pair_budget,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(_JSON_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for json_key, attr in _JSON_KEYS.items():
            if json_key not in data:
                continue
            value = data[json_key]
            if attr in ("x0", "x0n"):
                value = tuple(float(v) for v in _as_vector(value, json_key))
            elif attr == "n_list":
                value = tuple(int(v) for v in value)
            elif attr == "drift":
                if not isinstance(value, dict):
                    raise ConfigurationError("drift must be an object {name, params}")
                value = {"name": value.get("name"), "params": dict(value.get("params", {}))}
            kwargs[attr] = value
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as err:
            raise ConfigurationError(f"cannot read config file {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"config file {path} is not valid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigurationError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def override(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)

    # -- validation gates, one per command family ---------------------------

    def validate_noise(self) -> None:
        HurstParams(self.hurst)  # rejects integer or nonpositive H
        if self.dim < 1:
            raise ConfigurationError(f"d must be >= 1, got {self.dim}")
        if self.noise_steps < 1:
            raise ConfigurationError(f"noise_steps must be >= 1, got {self.noise_steps}")

    def _validate_common(self) -> None:
        params = HurstParams(self.hurst)
        if params.hurst <= 1.0:
            raise ConfigurationError(f"rate/optimality experiments need H > 1, got {self.hurst}")
        if self.dim < 1:
            raise ConfigurationError(f"d must be >= 1, got {self.dim}")
        for name, vec in (("x0", self.x0), ("x0n", self.x0n)):
            if len(vec) != self.dim:
                raise ConfigurationError(f"{name} has length {len(vec)}, expected d={self.dim}")
            if not all(math.isfinite(v) for v in vec):
                raise ConfigurationError(f"{name} must be finite")
        if len(self.n_list) < 3:
            raise ConfigurationError(f"need >= 3 resolutions in n_list, got {len(self.n_list)}")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigurationError(f"n_list must be strictly increasing, got {list(self.n_list)}")
        for n in self.n_list:
            if n < 1 or self.n_ref % n != 0:
                raise ConfigurationError(f"every n in n_list must divide n_ref={self.n_ref}, got n={n}")
        if self.samples < 2:
            raise ConfigurationError(f"samples must be >= 2, got {self.samples}")
        if self.p < 1:
            raise ConfigurationError(f"p must be >= 1, got {self.p}")
        if self.metric not in ("sup-grid", "Lp-terminal", "Cp-half"):
            raise ConfigurationError(f"unknown metric {self.metric!r}")
        drift_from_spec(self.drift)  # rejects unknown names / bad parameters

    def validate_rate(self) -> None:
        self._validate_common()
        require_assumption(drift_from_spec(self.drift), self.hurst)

    def validate_optimality(self) -> None:
        self._validate_common()
        drift = drift_from_spec(self.drift)
        if not drift.has_gradient:
            raise ConfigurationError(
                f"optimality experiments need a drift with a gradient; {drift.name!r} has none"
            )
        if self.n_ref % 2 != 0:
            raise ConfigurationError(f"n_ref must be even for the limit ODE, got {self.n_ref}")
        for n in self.n_list:
            if (self.n_ref // 2) % n != 0:
                raise ConfigurationError(
                    f"every n in n_list must divide n_ref/2={self.n_ref // 2}, got n={n}"
                )
        for a, b in zip(self.n_list, self.n_list[1:]):
            if b != 2 * a:
                raise ConfigurationError(
                    f"optimality n_list must double at each step, got {list(self.n_list)}"
                )


def _as_vector(value, key):
    if isinstance(value, (int, float)):
        return [value]
    if isinstance(value, (list, tuple)):
        return value
    raise ConfigurationError(f"{key} must be a number or a list of numbers")
