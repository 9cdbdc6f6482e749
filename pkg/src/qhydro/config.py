"""Flat ``key = value`` run configuration with typed validation."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _floats(s):
    return tuple(float(p) for p in s.replace(";", ",").split(",") if p.strip())


def _ints(s):
    return tuple(_int(p) for p in s.replace(";", ",").split(",") if p.strip())


def _str(s):
    return s.strip()


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _positive(v):
    items = v if isinstance(v, tuple) else (v,)
    return all(x > 0 for x in items)


def _unit_open(v):
    items = v if isinstance(v, tuple) else (v,)
    return all(0 < x < 1 for x in items)


# key: (parser, check, description)
SCHEMA = {
    "experiment": (_str, None, "catalogue id"),
    "seed": (_int, lambda v: 0 <= v < 2**64, "master seed, unsigned 64-bit"),
    "variant": (_str, lambda v: v in ("sep", "zrp"), "sep or zrp"),
    "h": (_floats, lambda v: len(v) == 2 and all(x >= 0 for x in v), "boundary values h(0), h(1)"),
    "g": (_str, None, "'unit' or comma-separated g(1), g(2), ..."),
    "n_max": (_int, lambda v: v >= 1, "zero-range occupation cap"),
    "d": (_int, lambda v: v == 1, "dimension (experiments run in d = 1)"),
    "N": (_ints, lambda v: len(v) >= 1 and all(x >= 2 for x in v), "particle-number parameters"),
    "nu": (_float, _positive, "density parameter"),
    "region": (_str, lambda v: v == "cube", "region (unit cube)"),
    "grid": (_int, lambda v: 2 <= v <= 512, "interior grid nodes"),
    "tol": (_float, _positive, "numerical tolerance"),
    "paths": (_int, lambda v: v >= 1, "independent trajectories"),
    "samples": (_int, lambda v: v >= 8, "samples per trajectory"),
    "t": (_float, _positive, "macroscopic time"),
    "t_end": (_float, _positive, "macroscopic end time"),
    "dt": (_float, _positive, "macroscopic sampling step"),
    "burn_in": (_float, lambda v: v >= 0, "macroscopic burn-in time"),
    "batches": (_int, lambda v: v >= 8, "batch count (>= 8)"),
    "lags": (_floats, lambda v: len(v) >= 1 and _positive(v), "macroscopic lags"),
    "eps": (_floats, lambda v: len(v) >= 1 and _positive(v), "rescaling parameters"),
    "x0": (_float, _unit_open, "centre of the rescaled test functions"),
    "window": (_float, _positive, "chaoticity window length"),
    "pairs": (_int, lambda v: v >= 1, "number of test-function pairs"),
    "theta_samples": (_int, lambda v: v >= 1, "random gauge phases"),
    "out": (_str, None, "output directory"),
}

REQUIRED = ("experiment", "seed")


@dataclass(frozen=True)
class RunConfig:
    values: dict
    source: str = ""

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def merged(self, defaults: dict) -> "RunConfig":
        return RunConfig({**defaults, **self.values}, self.source)

    def with_overrides(self, **kw) -> "RunConfig":
        vals = dict(self.values)
        for k, v in kw.items():
            if v is not None:
                vals[k] = parse_value(k, v) if isinstance(v, str) else v
        return RunConfig(vals, self.source)

    def canonical(self) -> str:
        return "\n".join(f"{k} = {format_value(self.values[k])}" for k in sorted(self.values))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def format_value(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(format_value(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def parse_value(key: str, raw: str):
    if key not in SCHEMA:
        raise ConfigError(key, f"unknown key; valid keys: {', '.join(sorted(SCHEMA))}")
    parser, check, desc = SCHEMA[key]
    try:
        v = parser(raw)
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r} ({desc}): {exc}") from None
    if check is not None and not check(v):
        raise ConfigError(key, f"value {raw!r} rejected ({desc})")
    return v


def parse_config(text: str, require: bool = True) -> RunConfig:
    vals = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key in vals:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        vals[key] = parse_value(key, raw)
    cfg = RunConfig(vals, text)
    if require:
        check_required(cfg)
    return cfg


def check_required(cfg: RunConfig) -> None:
    for key in REQUIRED:
        if key not in cfg.values:
            raise ConfigError(key, "required key is missing")


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), require=False)
