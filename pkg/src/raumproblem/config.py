"""Tolerance record shared by the numerical geometry modules."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

ENV_VAR = "RAUMPROBLEM_TOL"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    derivative: float = 1e-6
    residual: float = 1e-9
    holonomy: float = 1e-8
    stokes: float = 1e-6
    curvature_zero: float = 1e-8
    gauge_reduction: float = 1e-6
    gauge_invariance: float = 1e-9
    membership: float = 1e-9
    orthonormal: float = 1e-9

    @classmethod
    def parse(cls, text: str, base: "Tolerances | None" = None) -> "Tolerances":
        """``"residual=1e-8,holonomy=1e-7"``; a bare number sets every field."""
        base = base or cls()
        text = text.strip()
        if not text:
            return base
        names = {f.name for f in fields(cls)}
        try:
            if "=" not in text:
                v = float(text)
                return replace(base, **{k: v for k in names})
            updates = {}
            for item in text.split(","):
                key, _, value = item.partition("=")
                key = key.strip()
                if key not in names:
                    raise ConfigError(f"unknown tolerance {key!r}; known: {sorted(names)}")
                updates[key] = float(value)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad {ENV_VAR} value {text!r}") from None
        return replace(base, **updates)

    @classmethod
    def from_env(cls) -> "Tolerances":
        return cls.parse(os.environ.get(ENV_VAR, ""))

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT = Tolerances()
