"""Experiment configuration: one JSON document, environment defaults, CLI overrides.

Precedence is flag > config file > environment (.env) > built-in default.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv

from .diophantine import (DEFAULT_PRECISION_BITS, DEFAULT_SCAN_LIMIT, GROWTH_RULES, MAX_PRECISION_BITS,
                          MIN_PRECISION_BITS, RotationNumber, golden_alpha, make_alpha, make_liouville_alpha)
from .errors import ConfigError
from .roof import ROOF_BUILDERS, FourierRoof

load_dotenv(Path(__file__).parent.parent / ".env")

logger = logging.getLogger(__name__)

ENV_PRECISION = "SPECFLOW_PRECISION"
ENV_OUT = "SPECFLOW_OUT"
ENV_LOG_LEVEL = "SPECFLOW_LOG_LEVEL"

EMIT_CHOICES = ("json", "csv", "both")

THRESHOLD_DEFAULTS = {
    "ratio_floor": 1e-3,
    "hysteresis": 0.25,
    "trend_window": 3,
    "l2_tolerance": 1e-6,
    "divergence_ratio": 0.5,
    "criterion_tolerance": 5e-3,
    "pass_floor": 0.05,
    "refute_ceiling": 0.02,
    "ks": 0.05,
    "cf": 0.02,
}
PLAN_DEFAULTS = {
    "variance_target": 1.0,
    "slack": 0.05,
    "start": 1,
    "indices": None,
    "count": None,
}
CLT_DEFAULTS = {
    "source": "dyadic",
    "sizes": [8, 16, 32, 64, 128],
    "total_variance": 2.0,
    "ratio": 2,
    "t_max": 3.0,
    "dump_samples": False,
}


def env_precision() -> int:
    raw = os.environ.get(ENV_PRECISION)
    if not raw:
        return DEFAULT_PRECISION_BITS
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_PRECISION} must be an integer, got {raw!r}") from None


def env_log_level(default: str = "WARNING") -> str:
    return os.environ.get(ENV_LOG_LEVEL, default).upper()


@dataclass
class ExperimentConfig:
    alpha: Dict[str, Any] = field(default_factory=lambda: {"kind": "golden"})
    roof: Dict[str, Any] = field(default_factory=lambda: {"kind": "dyadic"})
    precision_bits: int = field(default_factory=env_precision)
    horizon: int = 1024
    dense_horizon: int = 1024
    hypothesis_horizon: int = 64
    scan_limit: int = DEFAULT_SCAN_LIMIT
    convergents: int = 10
    lambdas: Optional[Union[List[float], Dict[str, float]]] = None
    grid_log2: int = 12
    samples: int = 100_000
    seed: int = 0
    thresholds: Dict[str, float] = field(default_factory=dict)
    plan: Dict[str, Any] = field(default_factory=dict)
    clt: Dict[str, Any] = field(default_factory=dict)
    out: str = field(default_factory=lambda: os.environ.get(ENV_OUT, "out"))
    emit: str = "json"

    def __post_init__(self):
        self.thresholds = _merge("thresholds", THRESHOLD_DEFAULTS, self.thresholds)
        self.plan = _merge("plan", PLAN_DEFAULTS, self.plan)
        self.clt = _merge("clt", CLT_DEFAULTS, self.clt)
        self.validate()

    @property
    def grid(self) -> int:
        return 1 << self.grid_log2

    def validate(self) -> None:
        if not MIN_PRECISION_BITS <= self.precision_bits <= MAX_PRECISION_BITS:
            raise ConfigError(f"precision_bits must lie in [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}], "
                              f"got {self.precision_bits}")
        if not 6 <= self.grid_log2 <= 20:
            raise ConfigError(f"grid_log2 must lie in [6, 20], got {self.grid_log2}")
        if self.samples < 1000:
            raise ConfigError(f"samples must be >= 1000, got {self.samples}")
        for name in ("horizon", "dense_horizon", "hypothesis_horizon"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be >= 2, got {getattr(self, name)}")
        if self.convergents < 1:
            raise ConfigError(f"convergents must be >= 1, got {self.convergents}")
        for key, value in self.thresholds.items():
            if value is None or value <= 0:
                raise ConfigError(f"threshold {key} must be positive, got {value}")
        if self.emit not in EMIT_CHOICES:
            raise ConfigError(f"emit must be one of {', '.join(EMIT_CHOICES)}, got {self.emit!r}")
        if not isinstance(self.alpha, dict) or "kind" not in self.alpha:
            raise ConfigError("alpha spec needs a 'kind'")
        if not isinstance(self.roof, dict) or "kind" not in self.roof:
            raise ConfigError("roof spec needs a 'kind'")
        if self.clt["source"] not in ("dyadic", "plan"):
            raise ConfigError(f"clt.source must be 'dyadic' or 'plan', got {self.clt['source']!r}")
        if isinstance(self.lambdas, dict):
            unknown = set(self.lambdas) - {"min", "max", "count"}
            if unknown:
                raise ConfigError(f"unknown lambdas keys: {', '.join(sorted(unknown))}")
        elif isinstance(self.lambdas, list) and any(lam == 0 for lam in self.lambdas):
            raise ConfigError("λ = 0 is the trivial eigenvalue")

    def to_dict(self) -> dict:
        return asdict(self)


def _merge(section: str, defaults: dict, given: Optional[dict]) -> dict:
    given = given or {}
    if not isinstance(given, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {section} keys: {', '.join(sorted(unknown))}")
    return {**defaults, **given}


def from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return ExperimentConfig(**data)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """Read a JSON config file; no path gives the defaults."""
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    logger.info(f"loaded config {path}")
    return from_dict(data)


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Set every override that is not None and revalidate."""
    for key, value in overrides.items():
        if value is None:
            continue
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown override {key!r}")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _spec_keys(spec: dict, allowed: set, what: str) -> None:
    unknown = set(spec) - allowed - {"kind"}
    if unknown:
        raise ConfigError(f"unknown {what} keys: {', '.join(sorted(unknown))}")


def build_alpha(spec: dict, precision_bits: int = DEFAULT_PRECISION_BITS) -> RotationNumber:
    kind = spec.get("kind")
    bits = int(spec.get("precision_bits", precision_bits))
    try:
        if kind == "golden":
            _spec_keys(spec, {"precision_bits"}, "alpha")
            return golden_alpha(bits)
        if kind == "quotients":
            _spec_keys(spec, {"terms", "precision_bits"}, "alpha")
            return make_alpha(spec.get("terms", ()), precision_bits=bits)
        if kind == "periodic":
            _spec_keys(spec, {"prefix", "period", "precision_bits"}, "alpha")
            if not spec.get("period"):
                raise ConfigError("periodic alpha needs a nonempty period")
            return make_alpha(spec.get("prefix", (0,)), spec["period"], precision_bits=bits)
        if kind == "rule":
            _spec_keys(spec, {"rule", "seed", "exponent", "precision_bits"}, "alpha")
            name = spec.get("rule")
            if name not in GROWTH_RULES:
                raise ConfigError(f"unknown growth rule {name!r}; choose from {', '.join(GROWTH_RULES)}")
            rule = GROWTH_RULES[name](spec["exponent"]) if name == "power" and "exponent" in spec else GROWTH_RULES[name]()
            return make_liouville_alpha(rule, tuple(spec.get("seed", (0, 1))), precision_bits=bits)
    except (TypeError, KeyError) as e:
        raise ConfigError(f"malformed alpha spec {spec!r}: {e}") from None
    raise ConfigError(f"unknown alpha kind {kind!r}")


def build_roof(spec: dict, alpha: Optional[RotationNumber] = None) -> FourierRoof:
    kind = spec.get("kind")
    if kind not in ROOF_BUILDERS:
        raise ConfigError(f"unknown roof kind {kind!r}; choose from {', '.join(ROOF_BUILDERS)}")
    params = {k: v for k, v in spec.items() if k != "kind"}
    builder = ROOF_BUILDERS[kind]
    try:
        if kind == "resonant":
            if alpha is None:
                raise ConfigError("resonant roof needs an alpha")
            if "indices" in params:
                params["indices"] = tuple(params["indices"])
            return builder(alpha, **params)
        if kind == "table":
            return builder(params.get("entries", []))
        return builder(**params)
    except TypeError as e:
        raise ConfigError(f"malformed roof spec {spec!r}: {e}") from None
