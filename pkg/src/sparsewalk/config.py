"""Experiment configuration: JSON files with an include mechanism.

A config is a flat JSON object.  An optional "include" key (path or list of
paths, relative to the including file) supplies shared defaults - kernel and
potential presets mostly - which the including file overrides key by key.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigInvalid
from .lattice import WalkKernel, lazy1d, simple1d, simple2d, validate_kernel
from .potential import (
    PotentialSpec,
    build_geometric_sparse,
    dense_level,
    make_potential,
)

EXPERIMENTS = (
    "validate",
    "green",
    "bs",
    "spectrum",
    "essential",
    "decay",
    "gibbs",
    "doob",
    "fk",
)

#: experiments whose outputs depend on pseudo-randomness
SEEDED = ("doob", "fk")


def load_config(path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as err:
        raise ConfigInvalid(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigInvalid(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"config {path} must be a JSON object")
    includes = raw.pop("include", [])
    if isinstance(includes, str):
        includes = [includes]
    merged: dict = {}
    for inc in includes:
        merged.update(load_config(path.parent / inc))
    merged.update(raw)
    return merged


def kernel_from_config(cfg: dict) -> WalkKernel:
    spec = cfg.get("kernel")
    if spec is None:
        raise ConfigInvalid("config needs a 'kernel' section")
    if "preset" in spec:
        name = spec["preset"]
        if name == "simple1d":
            return simple1d()
        if name == "lazy1d":
            if "q" not in spec:
                raise ConfigInvalid("lazy1d preset needs 'q'")
            return lazy1d(float(spec["q"]))
        if name == "simple2d":
            return simple2d()
        raise ConfigInvalid(f"unknown kernel preset {name!r}")
    if "offsets" in spec:
        try:
            entries = {tuple(int(c) for c in row[:-1]): float(row[-1]) for row in spec["offsets"]}
            return validate_kernel(entries, dimension=spec.get("dimension"))
        except ConfigInvalid:
            raise
        except Exception as err:
            raise ConfigInvalid(f"kernel offsets invalid: {err}") from err
    raise ConfigInvalid("kernel section needs 'preset' or 'offsets'")


def potential_from_config(cfg: dict, dimension: int) -> PotentialSpec | None:
    spec = cfg.get("potential")
    if spec is None or spec.get("type") in (None, "none", "zero"):
        return None
    kind = spec["type"]
    box_radius = spec.get("box_radius")
    try:
        if kind == "geometric":
            anchor = spec.get("anchor")
            if anchor is not None:
                anchor = (tuple(int(c) for c in anchor[:-1]), float(anchor[-1]))
            return build_geometric_sparse(
                dimension,
                v=float(spec.get("v", 1.0)),
                base=int(spec.get("base", 3)),
                box_radius=box_radius,
                anchor=anchor,
            )
        if kind == "dense":
            return dense_level(dimension, float(spec.get("v", 1.0)), int(box_radius or 128))
        if kind in ("explicit", "decaying"):
            sites = {
                tuple(int(c) for c in row[:-1]): float(row[-1]) for row in spec["sites"]
            }
            tail = "decaying" if kind == "decaying" else spec.get("tail", "decaying")
            return make_potential(
                dimension,
                sites,
                tail=tail,
                essential_values=spec.get("essential_values", (0.0,)),
                box_radius=box_radius,
            )
    except ConfigInvalid:
        raise
    except Exception as err:
        raise ConfigInvalid(f"potential section invalid: {err}") from err
    raise ConfigInvalid(f"unknown potential type {kind!r}")


def require(cfg: dict, key: str, kind: str):
    if key not in cfg:
        raise ConfigInvalid(f"experiment '{kind}' needs config key '{key}'")
    return cfg[key]


def check_experiment(cfg: dict) -> str:
    kind = cfg.get("experiment")
    if kind not in EXPERIMENTS:
        raise ConfigInvalid(
            f"experiment must be one of {EXPERIMENTS}, got {kind!r}"
        )
    if kind in SEEDED and "seed" not in cfg:
        raise ConfigInvalid(f"stochastic experiment '{kind}' needs a 'seed'")
    for key in ("tolerance", "tol"):
        if key in cfg and not float(cfg[key]) > 0.0:
            raise ConfigInvalid(f"'{key}' must be positive")
    return kind
