"""Experiment configuration: JSON in, validated :class:`ExperimentConfig` out."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ..geometry import GridDomain
from .expr import ParseError, parse_expr

DEFAULT_TOLERANCES = {
    "algebraic": 1e-9,
    "subspace": 1e-8,
    "order_min": 1.7,
    "order_max": 2.3,
    "pde_abs": 0.1,
    "gram_det": 1e-10,
    "exact": 1e-10,
}

ALL_CHECKS = (
    "unitarity",
    "extended_solution",
    "harmonicity",
    "cocycle",
    "gram",
    "factorization",
    "consistency",
    "s1_structure",
)

DEFAULT_GRID = {"xmin": -1.0, "xmax": 1.0, "ymin": -1.0, "ymax": 1.0, "nx": 33, "ny": 33}

_number = {"type": "number"}
_pair = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["n", "unitons"],
    "properties": {
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1, "maximum": 16},
        "unitons": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["columns"],
                "properties": {
                    "columns": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "string"}},
                    },
                },
                "additionalProperties": False,
            },
        },
        "grid": {
            "type": "object",
            "properties": {
                "xmin": _number, "xmax": _number, "ymin": _number, "ymax": _number,
                "nx": {"type": "integer", "minimum": 5}, "ny": {"type": "integer", "minimum": 5},
            },
            "additionalProperties": False,
        },
        "mu": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["line_angle", "samples"],
                    "properties": {"line_angle": _number,
                                   "samples": {"type": "integer", "minimum": 1},
                                   "t_min": _number, "t_max": _number},
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "required": ["list"],
                    "properties": {"list": {"type": "array", "items": _pair, "minItems": 1}},
                    "additionalProperties": False,
                },
            ]
        },
        "lambda_samples": {"type": "integer", "minimum": 1},
        "checks": {"type": "array", "items": {"enum": list(ALL_CHECKS)}},
        "out": {"type": "string"},
        "z0": _pair,
        "filtration": {"enum": ["segal", "unitons"]},
        "tolerances": {
            "type": "object",
            "properties": {k: _number for k in DEFAULT_TOLERANCES},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    n: int
    unitons: tuple
    grid: GridDomain
    mus: tuple
    lambda_samples: int = 64
    checks: tuple = ALL_CHECKS
    out: str = "out"
    z0: complex = 0j
    filtration: str = "segal"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    name: str = "experiment"
    raw: dict = field(default_factory=dict, repr=False)

    def with_overrides(self, grid: int | None = None, mu: complex | None = None,
                       out: str | None = None, tolerances: dict | None = None) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        if grid is not None:
            raw.setdefault("grid", {}).update({"nx": grid, "ny": grid})
        if mu is not None:
            raw["mu"] = {"list": [[mu.real, mu.imag]]}
        if out is not None:
            raw["out"] = out
        if tolerances:
            raw.setdefault("tolerances", {}).update(tolerances)
        return config_from_dict(raw)


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def config_from_dict(raw: dict) -> ExperimentConfig:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msg = "; ".join(f"{_path(e)}: {e.message}" for e in errors)
        raise ConfigError(f"invalid config: {msg}")
    n = raw["n"]
    unitons = []
    for u, item in enumerate(raw["unitons"]):
        cols = []
        for c, col in enumerate(item["columns"]):
            if len(col) != n:
                raise ConfigError(f"unitons/{u}/columns/{c}: frame has {len(col)} entries, expected n={n}")
            try:
                cols.append(tuple(parse_expr(s) for s in col))
            except ParseError as exc:
                raise ConfigError(f"unitons/{u}/columns/{c}: {exc}") from exc
        if len(cols) >= n:
            raise ConfigError(f"unitons/{u}: {len(cols)} columns span all of C^{n}; "
                              "an identity factor carries no information")
        unitons.append(tuple(cols))
    g = dict(DEFAULT_GRID, **raw.get("grid", {}))
    try:
        grid = GridDomain(float(g["xmin"]), float(g["xmax"]), float(g["ymin"]), float(g["ymax"]),
                          int(g["nx"]), int(g["ny"]))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    mu_spec = raw.get("mu", {"list": [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]})
    if "list" in mu_spec:
        mus = tuple(complex(a, b) for a, b in mu_spec["list"])
    else:
        t = np.linspace(mu_spec.get("t_min", 0.0), mu_spec.get("t_max", 1.0), mu_spec["samples"])
        ph = np.exp(1j * mu_spec["line_angle"])
        mus = tuple(complex(x * ph) if x else 0j for x in t)
    tol = dict(DEFAULT_TOLERANCES, **raw.get("tolerances", {}))
    z0 = complex(*raw.get("z0", [0.0, 0.0]))
    return ExperimentConfig(
        n=n, unitons=tuple(unitons), grid=grid, mus=mus,
        lambda_samples=raw.get("lambda_samples", 64),
        checks=tuple(raw.get("checks", ALL_CHECKS)),
        out=raw.get("out", "out"), z0=z0,
        filtration=raw.get("filtration", "segal"),
        tolerances=tol, name=raw.get("name", "experiment"), raw=copy.deepcopy(raw),
    )


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc})") from exc
    return config_from_dict(raw)


def frame_callables(cfg: ExperimentConfig) -> list:
    """Uniton frames in the form expected by :func:`unitons.geometry.build_loop_field`."""
    return [[list(col) for col in cols] for cols in cfg.unitons]
