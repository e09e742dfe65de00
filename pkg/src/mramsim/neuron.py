"""Behavioral analog neuron built from multi-cell conductance pairs.

Signal convention: a network value ``x`` is carried as a bipolar voltage
``x * v_amp`` around the mid-rail reference ``v_mid``.  The summing stage
inverts (V_d = -R_f * sum V_i * dG_i) and so does the sigmoid inverter; the two
inversions cancel, so an input with ``M_P < M_N`` ends up with a positive
weight.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .multicell import SolveSettings, read_resistance


@dataclass(frozen=True)
class SigmoidParams:
    v_mid: float = 0.9
    v_amp: float = 0.9
    steepness: float = 4.0

    def __post_init__(self):
        if not self.v_amp > 0:
            raise DomainError(f"v_amp must be > 0, got {self.v_amp}")
        if not self.steepness > 0:
            raise DomainError(f"steepness must be > 0, got {self.steepness}")


@dataclass(frozen=True)
class NeuronConfig:
    r_f: float = 1000.0
    gain: float = 1.0
    sigmoid: SigmoidParams = field(default_factory=SigmoidParams)
    read_voltage: float = 0.05
    v_bias: float = 1.0

    def __post_init__(self):
        if not self.r_f > 0:
            raise DomainError(f"r_f must be > 0, got {self.r_f}")
        if not self.gain > 0:
            raise DomainError(f"gain must be > 0, got {self.gain}")

    def read_settings(self, base=SolveSettings()):
        return SolveSettings(
            delta_i=base.delta_i, v_limit=base.v_limit, read_voltage=self.read_voltage,
            write_step=base.write_step, refine=base.refine, max_restarts=base.max_restarts,
        )

    def to_dict(self):
        d = asdict(self)
        d.update(d.pop("sigmoid"))
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {"r_f", "gain", "v_mid", "v_amp", "steepness", "read_voltage", "v_bias"}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown neuron keys: {sorted(unknown)}")
        sig = SigmoidParams(**{k: float(d.pop(k)) for k in ("v_mid", "v_amp", "steepness") if k in d})
        return cls(sigmoid=sig, **{k: float(v) for k, v in d.items()})

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class SynapsePair:
    """Positive and negative branch cells of one signed synapse."""

    m_p: object
    m_n: object

    def __post_init__(self):
        if self.m_p.n != self.m_n.n:
            raise DomainError(
                f"pair cells differ in device count ({self.m_p.n} vs {self.m_n.n})"
            )

    def resistances(self, cfg=NeuronConfig()):
        s = cfg.read_settings()
        return read_resistance(self.m_p, s), read_resistance(self.m_n, s)

    def conductance_difference(self, cfg=NeuronConfig()):
        r_p, r_n = self.resistances(cfg)
        return 1.0 / r_p - 1.0 / r_n

    def effective_weight(self, cfg=NeuronConfig()):
        """Signed end-to-end weight ``r_f * gain * (G_P - G_N)``."""
        return cfg.r_f * cfg.gain * self.conductance_difference(cfg)


def weighted_current(inputs, r_p, r_n):
    """Summed branch current ``sum v_i * (1/r_p,i - 1/r_n,i)``; vectorized."""
    r_p = np.asarray(r_p, dtype=np.float64)
    r_n = np.asarray(r_n, dtype=np.float64)
    if np.any(r_p == 0) or np.any(r_n == 0):
        raise DomainError("zero resistance in synapse pair")
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.shape[-1] != r_p.shape[-1] or r_p.shape != r_n.shape:
        raise DomainError("inputs and synapse pairs differ in length")
    return np.sum(inputs * (1.0 / r_p - 1.0 / r_n), axis=-1)


def differential_voltage(inputs, pairs, cfg=NeuronConfig(), bias=None):
    """Output of the divider network and summing amplifiers.

    ``pairs`` is a sequence of :class:`SynapsePair`; ``bias`` an optional pair
    driven by the constant ``cfg.v_bias`` input.
    """
    if len(inputs) != len(pairs):
        raise DomainError(f"{len(inputs)} inputs for {len(pairs)} synapse pairs")
    total = 0.0
    if pairs:
        rs = np.array([p.resistances(cfg) for p in pairs])
        total = float(weighted_current(inputs, rs[:, 0], rs[:, 1]))
    if bias is not None:
        total += bias_input(cfg, bias)
    return -cfg.r_f * total


def bias_input(cfg, pair):
    """Contribution of the constant bias input to the weighted sum."""
    return cfg.v_bias * pair.conductance_difference(cfg)


def activation(v, sig=SigmoidParams()):
    """Inverting tanh-shaped transfer of the sigmoid-generating stage."""
    return sig.v_mid + sig.v_amp * np.tanh(-sig.steepness * (np.asarray(v) - sig.v_mid))


def activation_slope(v, sig=SigmoidParams()):
    t = np.tanh(-sig.steepness * (np.asarray(v) - sig.v_mid))
    return -sig.v_amp * sig.steepness * (1.0 - t * t)


def neuron_forward(inputs, pairs, cfg=NeuronConfig(), bias=None):
    """Full neuron: differential stage, gain referenced to mid-rail, sigmoid."""
    v_d = differential_voltage(inputs, pairs, cfg, bias)
    return float(activation(cfg.sigmoid.v_mid + cfg.gain * v_d, cfg.sigmoid))


def to_circuit(x, sig=SigmoidParams()):
    """Network value to bipolar signal voltage (relative to ``v_mid``)."""
    return np.asarray(x) * sig.v_amp


def from_circuit(v_out, sig=SigmoidParams()):
    """Absolute neuron output voltage back to a network value."""
    return (np.asarray(v_out) - sig.v_mid) / sig.v_amp


def layer_gain(alpha, cfg=NeuronConfig()):
    """Amplifier gain that realizes a tanh argument of ``alpha*r_f*gain*dG*x``."""
    return alpha * cfg.gain / (cfg.sigmoid.steepness * cfg.sigmoid.v_amp)

