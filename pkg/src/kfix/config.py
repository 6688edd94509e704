"""Run configuration: a small ``key = value`` grammar with ``[sections]`` and ``#`` comments.

Every problem in a file is collected (with its line number) before anything
is reported, so one pass fixes them all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

SCENARIOS = ("solve", "check-kernel", "contraction", "uniqueness", "renorm-check")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def _odd_ge4(v):
    if v < 4 or v % 2 == 0:
        return "must be odd and >= 4 (the origin must be a velocity node)"


def _positive(v):
    if not v > 0:
        return "must be positive"


def _nonneg(v):
    if v < 0:
        return "must be >= 0"


def _at_least(n):
    def check(v):
        if v < n:
            return f"must be >= {n}"
    return check


def _one_of(*options):
    def check(v):
        if v not in options:
            return f"must be one of {', '.join(map(str, options))}"
    return check


# section -> key -> (type, default, validator)
SCHEMA = {
    "run": {
        "scenario": (str, "solve", _one_of(*SCENARIOS)),
        "seed": (int, 0, _nonneg),
        "output_dir": (str, "kfix-out", None),
    },
    "velocity": {
        "dim": (int, 3, _one_of(2, 3)),
        "extent": (float, 4.0, _positive),
        "nodes_per_axis": (int, 9, _odd_ge4),
    },
    "space": {
        "period": (float, 1.0, _positive),
        "nodes_per_axis": (int, 1, _at_least(1)),
    },
    "sphere": {
        "order": (int, 4, _at_least(4)),
    },
    "kernel": {
        "form": (str, "hard_sphere", _one_of("hard_sphere", "maxwell", "variable_hard_sphere")),
        "strength": (float, 1.0, _nonneg),
        "exponent": (float, 1.0, None),
        "b1": (float, 1.0, _positive),
        "b": (float, 2.0 * math.pi, _positive),
        "mu": (float, 1.0, _nonneg),
    },
    "solver": {
        "horizon": (float, 0.5, _positive),
        "time_steps": (int, 4, _at_least(1)),
        "max_picard_iters": (int, 100, _at_least(1)),
        "residual_tol": (float, 1e-10, _positive),
    },
    "initial": {
        "kind": (str, "bump", _one_of("vacuum", "bump", "maxwellian")),
        "amplitude": (float, 1.0, _nonneg),
        "radius": (float, 2.0, _positive),
        "temperature": (float, 0.5, _positive),
        "spatial_modulation": (float, 0.0, None),
    },
    "experiment": {
        "pairs": (int, 20, _at_least(1)),
        "perturbations": (int, 3, _at_least(1)),
        "relative_size": (float, 0.1, _positive),
        "slack": (float, 0.15, _nonneg),
        "target_L": (float, 0.0, _nonneg),
        "beta": (str, "log1p", _one_of("log1p", "scaled_log1p", "custom_rational")),
        "beta_scale": (float, 1.0, _positive),
        "sample_speeds": (int, 16, _at_least(1)),
    },
    "output": {
        "snapshot_every": (int, 0, _nonneg),
    },
}


@dataclass
class RunConfig:
    """Validated settings, one attribute per section (a plain dict of key -> value)."""

    run: dict = field(default_factory=dict)
    velocity: dict = field(default_factory=dict)
    space: dict = field(default_factory=dict)
    sphere: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @property
    def scenario(self) -> str:
        return self.run["scenario"]

    @property
    def seed(self) -> int:
        return self.run["seed"]

    def as_dict(self) -> dict:
        return {name: dict(getattr(self, name)) for name in SCHEMA}


def defaults() -> RunConfig:
    return RunConfig(**{s: {k: spec[1] for k, spec in keys.items()} for s, keys in SCHEMA.items()})


def _convert(raw: str, typ):
    if typ is int:
        if raw.lower().startswith(("0x", "-0x")):
            raise ValueError
        return int(raw)
    if typ is float:
        val = float(raw)
        if not math.isfinite(val):
            raise ValueError
        return val
    return raw.strip("\"'")


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ``ConfigError`` listing every problem."""
    cfg = defaults()
    errors = []
    section = None
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {lineno}: malformed section header {line!r}")
                section = None
                continue
            name = line[1:-1].strip()
            if name not in SCHEMA:
                errors.append(f"line {lineno}: unknown section [{name}]")
                section = None
            else:
                section = name
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, raw = (p.strip() for p in line.split("=", 1))
        if section is None:
            errors.append(f"line {lineno}: key {key!r} outside a known section")
            continue
        if key not in SCHEMA[section]:
            errors.append(f"line {lineno}: unknown key {key!r} in [{section}]")
            continue
        if (section, key) in seen:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[section, key]})")
            continue
        seen[section, key] = lineno
        typ, _, check = SCHEMA[section][key]
        try:
            value = _convert(raw, typ)
        except ValueError:
            errors.append(f"line {lineno}: {section}.{key} expects {typ.__name__}, got {raw!r}")
            continue
        problem = check(value) if check else None
        if problem:
            errors.append(f"line {lineno}: {section}.{key} = {raw} {problem}")
            continue
        getattr(cfg, section)[key] = value
    errors.extend(_cross_checks(cfg, seen))
    if errors:
        raise ConfigError(errors)
    return cfg


def _cross_checks(cfg: RunConfig, seen) -> list:
    errors = []
    v = cfg.velocity
    if cfg.initial["kind"] == "bump" and cfg.initial["radius"] > v["extent"]:
        line = seen.get(("initial", "radius"))
        where = f"line {line}: " if line else ""
        errors.append(f"{where}initial.radius exceeds velocity.extent")
    if abs(cfg.initial["spatial_modulation"]) > 1:
        line = seen.get(("initial", "spatial_modulation"))
        where = f"line {line}: " if line else ""
        errors.append(f"{where}initial.spatial_modulation must lie in [-1, 1] to keep f0 >= 0")
    return errors


def validate(cfg: RunConfig) -> RunConfig:
    """Re-run every per-key check on an already-built config (e.g. after overrides)."""
    errors = []
    for section, keys in SCHEMA.items():
        values = getattr(cfg, section)
        for key, (typ, _, check) in keys.items():
            if key not in values:
                errors.append(f"{section}.{key} missing")
                continue
            problem = check(values[key]) if check else None
            if problem:
                errors.append(f"{section}.{key} = {values[key]} {problem}")
    errors.extend(_cross_checks(cfg, {}))
    if errors:
        raise ConfigError(errors)
    return cfg
