"""Experiment configuration: a JSON document is the single source of truth.

Flags may override only the seed and the output directory, so a manifest
echoing the config plus the seed replays any run exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .surface import ProfileParams
from .tower import CoupledModel, TowerSpec

_PROFILE_DEFAULTS = {"r": 5.0, "L": 0.5, "eps0": 1.0, "kappa_cap": 1.0,
                     "n0": 10}
_TOL_DEFAULTS = {"tol_c": 1e-12, "quad_tol": 1e-10, "ode_tol": 1e-12,
                 "riccati_tol": 1e-7}
_TOWER_DEFAULTS = {"alphas": [1.0, -1.0], "sigma_sqs": [0.25, 0.25],
                   "tau_mode": "unit", "tau_gamma": 0.5,
                   "h_bar": 1.0, "A_total": 16.0 * math.pi}
_RUN_DEFAULTS = {"samples": 200, "steps": 65536, "lags": [8, 16, 32, 64, 128],
                 "orbit_len": 1000000, "n_grid": [4096, 65536],
                 "t_list": [0.25, 0.5, 1.0], "band_lo": 10, "band_hi": 1000,
                 "n_tail_max": 200, "mc_count": 1000000}


@dataclass
class ExperimentConfig:
    profile: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    tower: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.profile = {**_PROFILE_DEFAULTS, **self.profile}
        self.tolerances = {**_TOL_DEFAULTS, **self.tolerances}
        self.tower = {**_TOWER_DEFAULTS, **self.tower}
        self.run = {**_RUN_DEFAULTS, **self.run}
        for key, val in self.tolerances.items():
            if not isinstance(val, (int, float)) or val <= 0:
                raise ConfigError(f"tolerance {key} must be positive")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")

    def profile_params(self) -> ProfileParams:
        p = self.profile
        try:
            return ProfileParams(r=float(p["r"]), L=float(p["L"]),
                                 eps0=float(p["eps0"]),
                                 kappa_cap=float(p["kappa_cap"]),
                                 n0=int(p["n0"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad profile section: {exc}") from exc

    def tower_spec(self) -> TowerSpec:
        t = self.tower
        try:
            return TowerSpec(alphas=tuple(float(a) for a in t["alphas"]),
                             sigma_sqs=tuple(float(s)
                                             for s in t["sigma_sqs"]),
                             tau_mode=str(t["tau_mode"]),
                             tau_gamma=float(t["tau_gamma"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad tower section: {exc}") from exc

    def coupled_model(self) -> CoupledModel:
        t = self.tower
        alphas = t["alphas"]
        if len(alphas) != 2:
            raise ConfigError("coupled model needs exactly two alphas")
        return CoupledModel(self.profile_params(),
                            A_total=float(t["A_total"]),
                            alpha0=float(alphas[0]),
                            alpha_pi=float(alphas[1]),
                            h_bar=float(t["h_bar"]))

    def as_dict(self) -> dict:
        return {"profile": self.profile, "tolerances": self.tolerances,
                "tower": self.tower, "run": self.run, "seed": self.seed}


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    known = {"profile", "tolerances", "tower", "run", "seed"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    for section in ("profile", "tolerances", "tower", "run"):
        if section in doc and not isinstance(doc[section], dict):
            raise ConfigError(f"config section {section} must be an object")
    try:
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
