"""Classification error of float and quantized networks, and the k-sweep."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..data import SplitSpec, reshuffle_split
from ..errors import DomainError, MramSimError
from ..mtj import ParamDistribution
from ..multicell import SolveSettings
from ..neuron import NeuronConfig, activation, from_circuit, layer_gain, to_circuit
from .mlp import train
from .quantize import QuantizedNetwork, build_level_set, quantize


def hardware_tanh(z, sig):
    """Hidden transfer through the sigmoid circuit, in network units."""
    return from_circuit(activation(sig.v_mid - np.asarray(z) / sig.steepness, sig), sig)


def circuit_forward(qnet, x):
    """Propagate ``x`` through conductance pairs, amplifiers and sigmoid stages.

    Returns the final-layer outputs in network units (monotone in the output
    pre-activations, so argmax matches the software softmax).
    """
    cfg = qnet.cfg
    sig = cfg.sigmoid
    g = qnet.levels.conductances
    for wp, bp, alpha in zip(qnet.weight_pairs, qnet.bias_pairs, qnet.alpha):
        v_in = to_circuit(x, sig)
        dg = g[wp[..., 0]] - g[wp[..., 1]]
        dg_bias = g[bp[:, 0]] - g[bp[:, 1]]
        v_d = -cfg.r_f * (v_in @ dg + cfg.v_bias * dg_bias)
        v_out = activation(sig.v_mid + layer_gain(alpha, cfg) * v_d, sig)
        x = from_circuit(v_out, sig)
    return x


def predict(net, x, hardware_transfer=False, cfg=NeuronConfig()):
    if isinstance(net, QuantizedNetwork):
        if hardware_transfer:
            return np.argmax(circuit_forward(net, x), axis=1)
        net = net.to_mlp()
    if hardware_transfer:
        sig = cfg.sigmoid
        probs = net.activations(x, hidden=lambda z: hardware_tanh(z, sig))[-1]
    else:
        probs = net.predict_proba(x)
    return np.argmax(probs, axis=1)


def evaluate(net, data, hardware_transfer=False, cfg=NeuronConfig()):
    """Fraction of samples whose argmax output differs from the label.

    With ``hardware_transfer`` the hidden layers run through the sigmoid
    circuit model; a quantized network then uses its own neuron config.
    """
    if len(data) == 0:
        raise DomainError("empty evaluation set")
    return float(np.mean(predict(net, data.images, hardware_transfer, cfg) != data.labels))


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)  # (reshuffle, k, error_float, error_quantized)
    failures: list = field(default_factory=list)

    def ks(self):
        return sorted({r[1] for r in self.rows})

    def summary(self):
        """``{k: (mean_q, std_q, mean_float, std_float)}`` over reshuffles."""
        out = {}
        for k in self.ks():
            q = np.array([r[3] for r in self.rows if r[1] == k])
            f = np.array([r[2] for r in self.rows if r[1] == k])
            out[k] = (float(q.mean()), float(q.std()), float(f.mean()), float(f.std()))
        return out

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["reshuffle", "k", "error_float", "error_quantized"])
        for r, k, ef, eq in self.rows:
            w.writerow([r, k, repr(float(ef)), repr(float(eq))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "mean_error_quantized", "std_error_quantized",
                    "mean_error_float", "std_error_float"])
        for k, vals in self.summary().items():
            w.writerow([k, *(repr(v) for v in vals)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class ExperimentSettings:
    n_hidden: int = 32
    k_range: tuple = tuple(range(1, 8))
    reshuffles: int = 10
    test_fraction: float = 1 / 6
    iterations: int = 300
    patience: int = 25
    validation_fraction: float = 0.1
    level_mode: str = "nominal"
    hardware_transfer: bool = False


def train_split(data, settings, seed):
    """Reshuffle, carve a validation subset, train; returns (net, test)."""
    train_set, test = reshuffle_split(data, SplitSpec(settings.test_fraction, seed))
    validation = None
    if settings.validation_fraction > 0:
        train_set, validation = reshuffle_split(
            train_set, SplitSpec(settings.validation_fraction, seed + 1_000_003)
        )
    net = train(train_set, settings.n_hidden, settings.iterations, seed=seed,
                validation=validation, patience=settings.patience)
    return net, test


def _one_reshuffle(args):
    data, settings, r, seed, level_sets, dist, cfg, solve = args
    rows = []
    net, test = train_split(data, settings, seed + r)
    err_float = evaluate(net, test, settings.hardware_transfer, cfg)
    for k in settings.k_range:
        levels = level_sets.get(k)
        if levels is None:
            levels = build_level_set(k, dist, cfg, "sampled", seed + 7919 * r + k, solve)
        q = quantize(net, levels, cfg)
        rows.append((r, k, err_float, evaluate(q, test, settings.hardware_transfer, cfg)))
    return rows


def experiment_curve(data, settings=ExperimentSettings(), seed=0, dist=ParamDistribution(),
                     cfg=NeuronConfig(), solve=SolveSettings(), jobs=1):
    """Error vs cells-per-synapse, averaged over reshuffled train/test splits."""
    if settings.reshuffles < 1:
        raise DomainError("reshuffles must be >= 1")
    level_sets = {}
    if settings.level_mode == "nominal":
        level_sets = {k: build_level_set(k, dist, cfg, "nominal", seed, solve)
                      for k in settings.k_range}
    elif settings.level_mode != "sampled":
        raise DomainError(f"unknown level mode {settings.level_mode!r}")
    tasks = [(data, settings, r, seed, level_sets, dist, cfg, solve)
             for r in range(settings.reshuffles)]
    report = ExperimentReport()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_one_reshuffle, t) for t in tasks]
            outcomes = []
            for f in futures:
                try:
                    outcomes.append(f.result())
                except MramSimError as exc:
                    outcomes.append(exc)
    else:
        outcomes = []
        for t in tasks:
            try:
                outcomes.append(_one_reshuffle(t))
            except MramSimError as exc:
                outcomes.append(exc)
    for r, out in enumerate(outcomes):
        if isinstance(out, Exception):
            report.failures.append((r, str(out)))
        else:
            report.rows.extend(out)
    return report
