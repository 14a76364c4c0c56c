"""Flat ``key = value`` experiment configuration with dotted keys.

Example::

    model.kind = collar
    model.c = 1.0
    seed = 7
    entropy.T_grid = 2, 4, 6

Values are kept as strings and typed on access, so a config round-trips
through :meth:`ExperimentConfig.to_text` without loss. The hash is taken
over the sorted canonical text and is therefore independent of key order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .surfaces import model_from_dict, parse_model_spec

RESERVED = ("seed", "out", "budget", "experiment")


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    # ---------------------------------------------------------------- io
    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        vals = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            if not k:
                raise ConfigError(f"line {n}: empty key")
            if k in vals:
                raise ConfigError(f"line {n}: duplicate key {k!r}")
            vals[k] = v
        cfg = cls(vals)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None

    def to_text(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def with_overrides(self, **kv) -> "ExperimentConfig":
        vals = dict(self.values)
        vals.update({k: str(v) for k, v in kv.items() if v is not None})
        cfg = ExperimentConfig(vals)
        cfg.validate()
        return cfg

    # ---------------------------------------------------------------- typed access
    def get(self, key, default=None):
        return self.values.get(key, default)

    def get_float(self, key, default=None) -> float:
        v = self.values.get(key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return float(default)
        try:
            x = float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {v!r}") from None
        if not math.isfinite(x):
            raise ConfigError(f"{key}: must be finite")
        return x

    def get_int(self, key, default=None) -> int:
        x = self.get_float(key, default)
        if x != int(x):
            raise ConfigError(f"{key}: expected an integer, got {self.values[key]!r}")
        return int(x)

    def get_floats(self, key, default=None) -> list:
        v = self.values.get(key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return [float(x) for x in default]
        try:
            return [float(x) for x in v.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected a comma list of numbers, got {v!r}") from None

    @property
    def seed(self) -> int:
        return self.get_int("seed", 0)

    def section(self, name) -> dict:
        pre = name + "."
        return {k[len(pre):]: v for k, v in self.values.items() if k.startswith(pre)}

    def model(self):
        d = self.section("model")
        if not d:
            raise ConfigError("config has no model.kind")
        return model_from_dict(d)

    # ---------------------------------------------------------------- checks
    def validate(self):
        for k, v in self.values.items():
            leaf = k.rsplit(".", 1)[-1]
            if leaf == "tol" or leaf.endswith("_tol"):
                x = self.get_float(k)
                if not x > 0:
                    raise ConfigError(f"{k}: tolerances must be positive, got {v}")
        if "seed" in self.values:
            s = self.get_int("seed")
            if s < 0:
                raise ConfigError("seed must be non-negative")
        if "budget" in self.values and not self.get_float("budget") > 0:
            raise ConfigError("budget must be positive")
        if "model.kind" in self.values:
            self.model()


def model_config_text(M) -> str:
    """Config lines describing a model (``model.`` prefixed)."""
    return "".join(f"model.{k} = {v!r}\n" if not isinstance(v, str) else f"model.{k} = {v}\n"
                   for k, v in M.to_dict().items())


__all__ = ["ExperimentConfig", "model_config_text", "parse_model_spec"]
