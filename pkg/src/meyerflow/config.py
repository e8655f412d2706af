"""Run configuration: JSON document, schema validation, object factories.

Cross-field constraints (grid resolving the top level, lattice floors,
admissible exponents) are checked before any computation; violations raise
``ConfigError`` carrying the offending path.
"""

from __future__ import annotations

import copy
import json
import math

import jsonschema

from .errors import ConfigError
from .lorentz import SpaceParams
from .meyer import (
    GridConfig,
    TRANSITION_PROFILES,
    WaveletTransform,
    build_filter_bank,
)
from .paraproduct import QuadratureSpec
from .solver import SolveConfig
from .trajectory import geometric_mesh

DEFAULT_CONFIG = {
    "format_version": 1,
    "seed": 20240901,
    "grid": {"dim": 2, "side": 16.0, "grid_points": 256, "j_min": -2, "j_max": 2},
    "bank": {"profile_resolution": 256, "transition": "poly"},
    "space": {"p": 4.0, "q": 2.0, "r": 2.0, "m": 1.2, "m_prime": 0.1,
              "gamma": 0.0, "s": None},
    "semigroup": {"t_min": 0.015625, "t_max": 2.8284271247461903,
                  "samples_per_window": 4, "overflow_cap": 700.0,
                  "decay_n": None},
    "quadrature": {"subintervals": 12, "nodes": 8},
    "solver": {"smallness": 1.0, "max_iter": 15, "contraction_tol": 1e-12,
               "residual_tol": 1e-8, "t_min": 0.015625,
               "t_max": 2.8284271247461903, "divergence_tol": 1e-6},
    "verify": {"ensemble": 20, "pairs": 200, "maximal_ensemble": 50,
               "kernel_transition": "poly5"},
}

_NUMBER_OR_INF = {
    "oneOf": [{"type": "number"}, {"type": "string", "enum": ["inf"]}]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "format_version": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dim": {"type": "integer", "enum": [2, 3]},
                "side": {"type": "number", "exclusiveMinimum": 0},
                "grid_points": {"type": "integer", "minimum": 8},
                "j_min": {"type": "integer"},
                "j_max": {"type": "integer"},
            },
        },
        "bank": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "profile_resolution": {"type": "integer", "minimum": 256},
                "transition": {"type": "string",
                               "enum": sorted(TRANSITION_PROFILES)},
            },
        },
        "space": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "number", "exclusiveMinimum": 1},
                "q": _NUMBER_OR_INF,
                "r": _NUMBER_OR_INF,
                "m": {"type": "number", "exclusiveMinimum": 0},
                "m_prime": {"type": "number", "minimum": 0},
                "gamma": {"type": "number", "minimum": 0, "maximum": 0.5},
                "s": {"type": ["number", "null"]},
            },
        },
        "semigroup": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_min": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "samples_per_window": {"type": "integer", "minimum": 4},
                "overflow_cap": {"type": "number", "exclusiveMinimum": 0},
                "decay_n": {"type": ["integer", "null"]},
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "subintervals": {"type": "integer", "minimum": 2},
                "nodes": {"type": "integer", "minimum": 2},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "smallness": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "contraction_tol": {"type": "number", "exclusiveMinimum": 0},
                "residual_tol": {"type": "number", "exclusiveMinimum": 0},
                "t_min": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "divergence_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ensemble": {"type": "integer", "minimum": 1},
                "pairs": {"type": "integer", "minimum": 1},
                "maximal_ensemble": {"type": "integer", "minimum": 1},
                "kernel_transition": {"type": "string",
                                      "enum": sorted(TRANSITION_PROFILES)},
            },
        },
    },
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _decode_inf(value):
    return math.inf if value == "inf" else value


class RunConfig:
    """Validated configuration document with typed object factories."""

    def __init__(self, document=None):
        doc = _merge(DEFAULT_CONFIG, document or {})
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as err:
            path = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ConfigError(f"config schema violation at {path}: {err.message}")
        self.doc = doc
        # cross-field constraints surface immediately
        self.grid()
        self.space_params()
        if not doc["semigroup"]["t_min"] < doc["semigroup"]["t_max"]:
            raise ConfigError("config schema violation at semigroup: t_min >= t_max")

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(json.load(fh))
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: invalid JSON ({err})")

    @property
    def seed(self):
        return int(self.doc["seed"])

    def grid(self):
        g = self.doc["grid"]
        return GridConfig(dim=g["dim"], side=float(g["side"]),
                          grid_points=g["grid_points"], j_min=g["j_min"],
                          j_max=g["j_max"])

    def bank(self, transition=None):
        b = self.doc["bank"]
        return build_filter_bank(b["profile_resolution"],
                                 transition or b["transition"])

    def transform(self, transition=None):
        return WaveletTransform(self.bank(transition=transition), self.grid())

    def space_params(self):
        s = self.doc["space"]
        return SpaceParams(
            n=self.doc["grid"]["dim"], p=float(s["p"]),
            q=_decode_inf(s["q"]), r=_decode_inf(s["r"]),
            m=s["m"], m_prime=s["m_prime"], gamma=s["gamma"], s=s["s"],
        )

    def quadrature(self):
        q = self.doc["quadrature"]
        return QuadratureSpec(subintervals=q["subintervals"], nodes=q["nodes"])

    def solve_config(self):
        sv = self.doc["solver"]
        return SolveConfig(
            params=self.space_params(), smallness=sv["smallness"],
            max_iter=sv["max_iter"], contraction_tol=sv["contraction_tol"],
            residual_tol=sv["residual_tol"], t_min=sv["t_min"],
            t_max=sv["t_max"],
            samples_per_window=self.doc["semigroup"]["samples_per_window"],
            divergence_tol=sv["divergence_tol"],
            overflow_cap=self.doc["semigroup"]["overflow_cap"],
        )

    def t_grid(self):
        sg = self.doc["semigroup"]
        return geometric_mesh(sg["t_min"], sg["t_max"], sg["samples_per_window"])

    def decay_n(self):
        decay = self.doc["semigroup"]["decay_n"]
        return 2 * self.doc["grid"]["dim"] + 2 if decay is None else decay
