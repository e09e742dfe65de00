"""Run configuration shared by every CLI subcommand."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from pathlib import Path

from .errors import ConfigError, MramSimError
from .mtj import ParamDistribution
from .multicell import SolveSettings
from .neuron import NeuronConfig

DEFAULT_DATA_DIR = os.environ.get("MRAMSIM_DATA_DIR", "data/mnist")

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "distribution": ParamDistribution().to_dict(),
    "multicell": {
        "delta_i": 1e-7,
        "v_limit": 3.25,
        "read_voltage": 0.05,
        "write_step": 0.005,
        "refine": 10,
        "trials": 300,
        "n_devices": 7,
    },
    "sweep": {
        "n_devices": 3,
        "sampled": True,
        "v_max": 1.5,
        "points_per_leg": 151,
    },
    "neuron": NeuronConfig().to_dict(),
    "network": {
        "n_hidden": 32,
        "iterations": 300,
        "patience": 25,
        "validation_fraction": 0.1,
        "test_fraction": 1 / 6,
        "k": 7,
        "k_range": [1, 2, 3, 4, 5, 6, 7],
        "reshuffles": 10,
        "level_mode": "nominal",
        "hardware_transfer": False,
    },
    "data": {
        "data_dir": DEFAULT_DATA_DIR,
        "pool_size": 12000,
    },
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and key != "distribution":
            if not isinstance(value, dict):
                raise ConfigError(f"'{where}' must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def parse_k_range(value):
    """Accept a list of ints or an inclusive ``"a..b"`` string."""
    if isinstance(value, str):
        try:
            lo, hi = (int(x) for x in value.split(".."))
        except ValueError as exc:
            raise ConfigError(f"bad k_range {value!r}; use 'a..b'") from exc
        value = list(range(lo, hi + 1))
    ks = [int(k) for k in value]
    if not ks or any(not 1 <= k <= 7 for k in ks):
        raise ConfigError(f"k_range entries must lie in [1, 7], got {ks}")
    return ks


class RunConfig:
    """Validated view over a nested JSON configuration."""

    def __init__(self, raw=None):
        self.raw = _merge(DEFAULTS, raw or {})
        try:
            self.distribution = ParamDistribution.from_dict(self.raw["distribution"])
            self.distribution.mean.check()
            mc = self.raw["multicell"]
            self.solve = SolveSettings(
                delta_i=float(mc["delta_i"]), v_limit=float(mc["v_limit"]),
                read_voltage=float(mc["read_voltage"]), write_step=float(mc["write_step"]),
                refine=int(mc["refine"]),
            )
            self.neuron = NeuronConfig.from_dict(self.raw["neuron"])
        except MramSimError as exc:
            raise ConfigError(str(exc)) from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value: {exc}") from exc
        if int(mc["trials"]) < 1 or int(mc["n_devices"]) < 1:
            raise ConfigError("multicell.trials and multicell.n_devices must be >= 1")
        net = self.raw["network"]
        self.k_range = parse_k_range(net["k_range"])
        if not 1 <= int(net["k"]) <= 7:
            raise ConfigError(f"network.k must be in [1, 7], got {net['k']}")
        if int(net["reshuffles"]) < 1:
            raise ConfigError("network.reshuffles must be >= 1")
        if net["level_mode"] not in ("nominal", "sampled"):
            raise ConfigError(f"network.level_mode must be nominal|sampled, got {net['level_mode']!r}")
        if not 0 < float(net["test_fraction"]) < 1:
            raise ConfigError("network.test_fraction must be in (0, 1)")
        if not 0 <= float(net["validation_fraction"]) < 1:
            raise ConfigError("network.validation_fraction must be in [0, 1)")
        sw = self.raw["sweep"]
        if int(sw["points_per_leg"]) < 2 or int(sw["n_devices"]) < 1:
            raise ConfigError("sweep.points_per_leg must be >= 2 and sweep.n_devices >= 1")

    @classmethod
    def load(cls, path=None):
        if path is None:
            return cls()
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        return cls(raw)

    def with_overrides(self, seed=None, output_dir=None):
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            raw["seed"] = seed
        if output_dir is not None:
            raw["output_dir"] = str(output_dir)
        return RunConfig(raw)

    @property
    def seed(self):
        return int(self.raw["seed"])

    @property
    def output_dir(self):
        return Path(self.raw["output_dir"])

    def canonical_json(self):
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def default_config_json():
    return json.dumps(DEFAULTS, indent=2, sort_keys=True) + "\n"
