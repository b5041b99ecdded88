"""Flat key=value experiment configs with typed validation.

The format is one ``key = value`` pair per line, ``#`` comments, no nesting.
Unknown keys are rejected so that typos fail loudly.  Every derived artifact
embeds the config hash for provenance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "config_hash", "DEFAULT_TEXT"]

EXPERIMENTS = ("evolve", "spectrum", "stability", "zdbo", "validate", "bench")
DATA = ("blaschke", "constant", "random_rational", "file")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _parse_float_list(s: str):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _parse_int_list(s: str):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _parse_complex_list(s: str):
    return tuple(complex(x.strip()) for x in s.split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "validate"
    d: int = 2
    k: int = 1
    N: int = 64
    N_out: int = 4096
    datum: str = "blaschke"
    blaschke_degree: int = 1
    blaschke_zeros: tuple = ()       # explicit zeros override the seeded draw
    blaschke_phase: float = 0.0
    velocity: float = 0.0
    conjugate_random: bool = False   # conjugate by a seeded random unitary
    constant_axis: tuple = (0.0, 0.0, 1.0)
    twists: int = 1
    file: str = ""
    t0: float = 0.0
    t1: float = 10.0
    samples: int = 50
    rank_tol: float = 1e-8
    tail_tol: float = 1e-12
    eps_recurrence: float = 1e-3     # relative to the initial Sobolev norm
    horizon: float = 1000.0
    stability_times: tuple = (0.5, 1.0, 2.0)
    stability_n_max: int = 1024
    stability_tol: float = 1e-6
    zdbo_times: tuple = (0.30, 0.40, 0.45, 0.50, 0.525, 0.55, 0.60)
    zdbo_cutoffs: tuple = (256, 512, 1024)
    zdbo_checkpoint: int = 1024
    bench_degrees: tuple = (1, 2, 4)
    dt: float = 1e-3
    seed: int = 42
    out: str = "out"

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.datum not in DATA:
            raise ConfigError(f"datum must be one of {DATA}, got {self.datum!r}")
        if not 1 <= self.k <= self.d - 1:
            raise ConfigError(f"need 1 <= k <= d-1, got (d, k) = ({self.d}, {self.k})")
        if self.N < 1 or self.N_out < 1:
            raise ConfigError("N and N_out must be positive")
        if abs(self.velocity) >= 1.0:
            raise ConfigError(f"|velocity| must be < 1, got {self.velocity}")
        if self.datum == "file" and not self.file:
            raise ConfigError("datum = file requires a file path")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        for zero in self.blaschke_zeros:
            if abs(zero) >= 1.0:
                raise ConfigError(f"Blaschke zero {zero} is not inside the unit disk")
        return self


_PARSERS = {
    "experiment": str,
    "datum": str,
    "file": str,
    "out": str,
    "d": int,
    "k": int,
    "N": int,
    "N_out": int,
    "blaschke_degree": int,
    "twists": int,
    "samples": int,
    "seed": int,
    "stability_n_max": int,
    "zdbo_checkpoint": int,
    "blaschke_phase": float,
    "velocity": float,
    "t0": float,
    "t1": float,
    "rank_tol": float,
    "tail_tol": float,
    "eps_recurrence": float,
    "horizon": float,
    "stability_tol": float,
    "dt": float,
    "conjugate_random": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "constant_axis": _parse_float_list,
    "stability_times": _parse_float_list,
    "zdbo_times": _parse_float_list,
    "zdbo_cutoffs": _parse_int_list,
    "bench_degrees": _parse_int_list,
    "blaschke_zeros": _parse_complex_list,
}

_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
assert set(_PARSERS) == _FIELD_NAMES


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse flat key=value text; unknown keys and bad values raise ConfigError."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](rhs.strip())
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in _PARSERS:
                raise ConfigError(f"unknown override {key!r}")
            values[key] = val
    return ExperimentConfig(**values).validate()


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), overrides=overrides)


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable short hash of the experiment parameters (output paths excluded)."""
    canonical = ";".join(
        f"{f.name}={getattr(cfg, f.name)!r}"
        for f in sorted(fields(cfg), key=lambda f: f.name)
        if f.name != "out"
    )
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


DEFAULT_TEXT = """\
# hwmlab experiment configuration (flat key = value)
experiment = validate
d = 2
k = 1
N = 64
datum = blaschke
blaschke_degree = 1
velocity = 0.5
t0 = 0.0
t1 = 10.0
samples = 50
seed = 42
"""
