"""Mapping float weights onto conductance-pair levels of multi-cells."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..mtj import ParamDistribution
from ..multicell import MultiCell, SolveSettings, program_level, read_resistance
from ..neuron import NeuronConfig
from .mlp import Mlp


@dataclass(frozen=True)
class WeightLevelSet:
    """Achievable effective weights ``scale * (G[p] - G[n])`` for k-device cells.

    ``values`` is sorted and unique; ``pairs[j]`` is the ``(level_p, level_n)``
    realizing ``values[j]`` with the smallest total conductance.
    """

    k: int
    conductances: np.ndarray
    scale: float
    values: np.ndarray
    pairs: np.ndarray

    @classmethod
    def from_conductances(cls, conductances, scale=1.0):
        g = np.asarray(conductances, dtype=np.float64)
        best = {}
        for p in range(len(g)):
            for n in range(len(g)):
                value = scale * (g[p] - g[n])
                total = g[p] + g[n]
                if value not in best or total < best[value][0]:
                    best[value] = (total, p, n)
        values = np.array(sorted(best))
        pairs = np.array([best[v][1:] for v in values], dtype=np.int64)
        return cls(len(g) - 1, g, float(scale), values, pairs)

    @property
    def max_value(self):
        return float(self.values[-1])

    def largest_gap(self):
        return float(np.diff(self.values).max()) if len(self.values) > 1 else 0.0

    def nearest(self, targets, alpha=1.0):
        """Index of the nearest ``alpha * values`` entry; ties go to smaller magnitude."""
        v = alpha * self.values
        t = np.asarray(targets, dtype=np.float64)
        if len(v) == 1:
            return np.zeros(t.shape, dtype=np.int64)
        hi = np.clip(np.searchsorted(v, t), 1, len(v) - 1)
        lo = hi - 1
        d_lo = t - v[lo]
        d_hi = v[hi] - t
        take_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (np.abs(v[hi]) < np.abs(v[lo])))
        return np.where(take_hi, hi, lo)

    def to_dict(self):
        return {"k": self.k, "conductances": self.conductances.tolist(), "scale": self.scale}

    @classmethod
    def from_dict(cls, d):
        return cls.from_conductances(d["conductances"], d["scale"])


def level_conductances(cell, cfg=NeuronConfig(), settings=SolveSettings()):
    """Program ``cell`` through every level and read its conductance."""
    read = cfg.read_settings(settings)
    g = []
    for level in range(cell.n + 1):
        program_level(cell, level, settings)
        g.append(1.0 / read_resistance(cell, read))
    return np.array(g)


def build_level_set(k, dist=ParamDistribution(), cfg=NeuronConfig(), mode="nominal",
                    seed=0, settings=SolveSettings()):
    """Simulate a k-device cell, read every level and form the weight lattice.

    ``nominal`` uses the distribution means; ``sampled`` draws the devices.
    """
    if not 1 <= k <= 7:
        raise DomainError(f"k must be in [1, 7], got {k}")
    if mode == "nominal":
        cell = MultiCell.uniform(k, dist.mean)
    elif mode == "sampled":
        cell = MultiCell.sampled(k, dist, seed)
    else:
        raise DomainError(f"unknown level-set mode {mode!r}")
    return WeightLevelSet.from_conductances(
        level_conductances(cell, cfg, settings), cfg.r_f * cfg.gain
    )


@dataclass
class QuantizedNetwork:
    """Level-pair matrices per layer plus the per-layer gain factor ``alpha``.

    Effective weight: ``alpha * scale * (G[level_p] - G[level_n])``.  Biases
    are driven by the constant ``v_bias`` input, worth ``v_bias / v_amp`` in
    network units.
    """

    sizes: tuple
    levels: WeightLevelSet
    alpha: list
    weight_pairs: list  # (n_in, n_out, 2) int arrays
    bias_pairs: list  # (n_out, 2) int arrays
    cfg: NeuronConfig

    @property
    def bias_factor(self):
        return self.cfg.v_bias / self.cfg.sigmoid.v_amp

    def _value(self, pairs, alpha):
        g = self.levels.conductances
        return alpha * self.levels.scale * (g[pairs[..., 0]] - g[pairs[..., 1]])

    def weights(self):
        return [self._value(p, a) for p, a in zip(self.weight_pairs, self.alpha)]

    def biases(self):
        return [self._value(p, a) * self.bias_factor for p, a in zip(self.bias_pairs, self.alpha)]

    def to_mlp(self):
        return Mlp(self.sizes, self.weights(), self.biases())

    def to_dict(self):
        return {
            "format": "mramsim-qnet",
            "layer_sizes": list(self.sizes),
            "level_set": self.levels.to_dict(),
            "alpha": list(self.alpha),
            "weight_level_pairs": [p.reshape(-1, 2).tolist() for p in self.weight_pairs],
            "bias_level_pairs": [p.tolist() for p in self.bias_pairs],
            "neuron_config": self.cfg.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "mramsim-qnet":
            raise DomainError(f"not a quantized network document (format={d.get('format')!r})")
        sizes = tuple(d["layer_sizes"])
        levels = WeightLevelSet.from_dict(d["level_set"])
        wp = [np.array(p, dtype=np.int64).reshape(a, b, 2)
              for p, a, b in zip(d["weight_level_pairs"], sizes[:-1], sizes[1:])]
        bp = [np.array(p, dtype=np.int64).reshape(-1, 2) for p in d["bias_level_pairs"]]
        for arr in wp + bp:
            if arr.size and (arr.min() < 0 or arr.max() > levels.k):
                raise DomainError("level pair outside the cell's level range")
        return cls(sizes, levels, [float(a) for a in d["alpha"]], wp, bp,
                   NeuronConfig.from_dict(d["neuron_config"]))

    def to_json(self, **extra):
        return json.dumps({**self.to_dict(), **extra})


def quantize(net, levels, cfg=NeuronConfig()):
    """Replace every weight and bias by the nearest achievable level.

    Per layer the gain factor ``alpha`` stretches the lattice so its largest
    value equals the largest float magnitude in the layer.
    """
    if len(levels.values) == 0:
        raise DomainError("empty level set")
    bias_factor = cfg.v_bias / cfg.sigmoid.v_amp
    alphas, wpairs, bpairs = [], [], []
    for w, b in zip(net.weights, net.biases):
        b_eq = b / bias_factor
        peak = max(float(np.abs(w).max(initial=0.0)), float(np.abs(b_eq).max(initial=0.0)))
        alpha = peak / levels.max_value if peak > 0 and levels.max_value > 0 else 1.0
        wpairs.append(levels.pairs[levels.nearest(w, alpha)])
        bpairs.append(levels.pairs[levels.nearest(b_eq, alpha)])
        alphas.append(alpha)
    return QuantizedNetwork(net.sizes, levels, alphas, wpairs, bpairs, cfg)
