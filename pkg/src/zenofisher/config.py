"""
Experiment configuration: JSON parsing, validation, calibration presets and
construction of the physical objects in SI units.

Times are given in nanoseconds and frequencies in Hz in the JSON file; all
objects built from a config use seconds and rad/s.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .distributions import Dirac, IntervalDistribution, Uniform
from .errors import ArgumentError
from .spins import SpinModel, build_spin_model, ghz_state, product_zero_state, uniform_alphas
from .streams import check_seed
from .trajectories import DEFAULT_BUDGET, MODES

NS = 1e-9
CALIBRATIONS = {"khz": 5e3, "mhz": 5e6}
STATES = ("product_zero", "ghz")
_ALPHA_NAMES = {"all_x": "x", "all_y": "y", "all_z": "z"}

DEFAULTS: dict[str, Any] = {
    "model": {"n": 9, "omega_hz": 5e3, "alphas": "all_x", "state": "product_zero"},
    "distribution": {"type": "uniform", "mu1_ns": 10.0, "mu2_ns": 60.0},
    "m": 5000,
    "runs": 10000,
    "k_moments": 8,
    "mode": "product",
    "seed": 1,
    "budget": DEFAULT_BUDGET,
    "surface": {
        "mu1_ns": {"start": 5.0, "stop": 100.0, "num": 20},
        "mu2_ns": {"start": 5.0, "stop": 100.0, "num": 20},
    },
    "scaling": {
        "n_values": [1, 2, 3, 4, 5, 6, 7, 8, 9],
        "m_values": [1000, 2000, 3000, 4000, 5000],
        "batches": 0,
        "runs_per_batch": 10000,
    },
    "crb": {"batches": 200},
    "ld": {"m_values": [100, 1000, 10000], "runs": 2000},
}


_SECTIONS = ("model", "surface", "scaling", "crb", "ld")


def _merge(base: dict, override: dict) -> dict:
    """Top-level keys replace defaults; section objects are merged one level deep."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ArgumentError(f"unknown config key '{key}'")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ArgumentError(f"config key '{key}' must be an object")
            unknown = set(value) - set(base[key])
            if unknown:
                raise ArgumentError(f"unknown keys in '{key}': {sorted(unknown)}")
            out[key].update(copy.deepcopy(value))
        else:
            out[key] = copy.deepcopy(value)
    return out


def _grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ArgumentError("grid spec needs numeric 'start', 'stop' and 'num'") from exc
        if num < 1:
            raise ArgumentError("grid 'num' must be at least 1")
        return np.linspace(start, stop, num)
    values = np.asarray(spec, dtype=float).ravel()
    if values.size == 0:
        raise ArgumentError("grid list must be non-empty")
    return values


def _int_list(values, name: str) -> list[int]:
    out = [int(v) for v in values]
    if not out or any(v < 1 for v in out):
        raise ArgumentError(f"'{name}' must be a non-empty list of positive integers")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters; see ``DEFAULTS`` for the schema."""

    data: dict = field(repr=False)

    def __post_init__(self):
        d = self.data
        model = d["model"]
        if int(model["n"]) < 1:
            raise ArgumentError("model.n must be at least 1")
        if not float(model["omega_hz"]) > 0:
            raise ArgumentError("model.omega_hz must be positive")
        if model["state"] not in STATES:
            raise ArgumentError(f"model.state must be one of {STATES}")
        alphas = model["alphas"]
        if isinstance(alphas, str):
            if alphas not in _ALPHA_NAMES:
                raise ArgumentError(f"model.alphas string must be one of {sorted(_ALPHA_NAMES)}")
        elif np.asarray(alphas, dtype=float).shape != (int(model["n"]), 3):
            raise ArgumentError("model.alphas must be a string or an n x 3 array")
        if int(d["m"]) < 1 or int(d["runs"]) < 1:
            raise ArgumentError("m and runs must be at least 1")
        if not 1 <= int(d["k_moments"]) <= 8:
            raise ArgumentError("k_moments must be in 1..8")
        if d["mode"] not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}")
        check_seed(d["seed"])
        self.distribution()

    # construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict | None = None) -> "ExperimentConfig":
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ArgumentError("config must be a JSON object")
        return cls(_merge(DEFAULTS, raw))

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)

    def replace(self, **overrides) -> "ExperimentConfig":
        """Copy with top-level keys or ``model``/section dicts partially overridden."""
        return ExperimentConfig(_merge(self.data, overrides))

    def with_calibration(self, name: str) -> "ExperimentConfig":
        if name not in CALIBRATIONS:
            raise ArgumentError(f"calibration must be one of {sorted(CALIBRATIONS)}")
        return self.replace(model={"omega_hz": CALIBRATIONS[name]})

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self.replace(seed=check_seed(seed))

    # serialisation ------------------------------------------------------

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    # accessors ----------------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.data["model"]["n"])

    @property
    def omega(self) -> float:
        """Coupling in rad/s."""
        return 2.0 * math.pi * float(self.data["model"]["omega_hz"])

    @property
    def m(self) -> int:
        return int(self.data["m"])

    @property
    def runs(self) -> int:
        return int(self.data["runs"])

    @property
    def seed(self) -> int:
        return check_seed(self.data["seed"])

    @property
    def k_moments(self) -> int:
        return int(self.data["k_moments"])

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def budget(self) -> int:
        return int(self.data["budget"])

    def section(self, name: str) -> dict:
        return self.data[name]

    def alphas(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        alphas = self.data["model"]["alphas"]
        if isinstance(alphas, str):
            return uniform_alphas(n, _ALPHA_NAMES[alphas])
        if n != self.n:
            raise ArgumentError("explicit alphas cannot be swept over n")
        return np.asarray(alphas, dtype=float)

    def spin_model(self, n: int | None = None) -> SpinModel:
        n = self.n if n is None else n
        return build_spin_model(n, self.omega, self.alphas(n))

    def initial_state(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        return product_zero_state(n) if self.data["model"]["state"] == "product_zero" else ghz_state(n)

    def distribution(self) -> IntervalDistribution:
        spec = self.data["distribution"]
        kind = spec.get("type")
        try:
            if kind == "uniform":
                return Uniform(float(spec["mu1_ns"]) * NS, float(spec["mu2_ns"]) * NS)
            if kind == "dirac":
                return Dirac(float(spec["mu_ns"]) * NS)
        except KeyError as exc:
            raise ArgumentError(f"distribution is missing key {exc}") from exc
        raise ArgumentError("distribution.type must be 'uniform' or 'dirac'")

    def surface_grid(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.data["surface"]
        return _grid(s["mu1_ns"]), _grid(s["mu2_ns"])

    def scaling_sweep(self) -> tuple[list[int], list[int]]:
        s = self.data["scaling"]
        return _int_list(s["n_values"], "scaling.n_values"), _int_list(s["m_values"], "scaling.m_values")

    def ld_sweep(self) -> list[int]:
        values = _int_list(self.data["ld"]["m_values"], "ld.m_values")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ArgumentError("ld.m_values must be strictly ascending")
        return values
