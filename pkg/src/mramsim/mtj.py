"""Behavioral model of a single magnetic tunnel junction.

Each state has a resistance that varies linearly with the magnitude of the
bias voltage, ``R = b + a*|V|``; switching happens when the device current
crosses a signed critical current.  Polarity convention used throughout the
package: a positive current at or above ``cP`` drives LOW -> HIGH and a
negative current at or below ``cN`` drives HIGH -> LOW.  With that choice a
positive write raises the chain resistance, so a voltage ramp stops after
each single switch and a serial chain can be programmed level by level.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, FitError, SamplingError, SingularityError

PARAM_NAMES = ("a1", "b1", "a0", "b0", "cN", "cP")

# Maximum bias a single device is expected to see.
V_MAX_OP = 1.0


class MtjState(enum.IntEnum):
    LOW = 0
    HIGH = 1


@dataclass(frozen=True)
class MtjParams:
    """Fitted scalars of one junction (SI units; slopes in ohm per volt)."""

    a1: float
    b1: float
    a0: float
    b0: float
    cN: float
    cP: float

    def branch(self, state):
        """Return ``(slope, intercept)`` of the resistance line for ``state``."""
        if state == MtjState.HIGH:
            return self.a1, self.b1
        return self.a0, self.b0

    def check(self, v_max_op=V_MAX_OP):
        """Raise :class:`DomainError` unless the parameters are physical."""
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"non-finite parameter in {self}")
        if not self.b1 > self.b0 > 0:
            raise DomainError(f"need b1 > b0 > 0, got b1={self.b1}, b0={self.b0}")
        if not self.cN < 0 < self.cP:
            raise DomainError(f"need cN < 0 < cP, got cN={self.cN}, cP={self.cP}")
        for a, b in ((self.a1, self.b1), (self.a0, self.b0)):
            if b + a * v_max_op <= 0:
                raise DomainError(
                    f"resistance {b} + {a}*|V| not positive up to {v_max_op} V"
                )
        return self

    def is_valid(self, v_max_op=V_MAX_OP):
        try:
            self.check(v_max_op)
        except DomainError:
            return False
        return True

    def as_array(self):
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(x) for x in values))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        missing = [n for n in PARAM_NAMES if n not in d]
        if missing:
            raise DomainError(f"missing parameter keys: {missing}")
        return cls(**{n: float(d[n]) for n in PARAM_NAMES})

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


NOMINAL_PARAMS = MtjParams(a1=-310.0, b1=665.0, a0=-30.0, b0=360.0, cN=-3.1e-4, cP=8.0e-4)
NOMINAL_STD = (3.0, 12.0, 3.0, 12.0, 1.5e-5, 1.5e-5)


@dataclass(frozen=True)
class ParamDistribution:
    """Independent normal distribution for each of the six parameters."""

    mean: MtjParams = NOMINAL_PARAMS
    std: tuple = NOMINAL_STD

    def __post_init__(self):
        if len(self.std) != len(PARAM_NAMES):
            raise DomainError("std must have one entry per parameter")
        if any(not (s >= 0) for s in self.std):
            raise DomainError(f"standard deviations must be >= 0, got {self.std}")
        object.__setattr__(self, "std", tuple(float(s) for s in self.std))

    @classmethod
    def nominal(cls, mean=NOMINAL_PARAMS):
        return cls(mean=mean, std=(0.0,) * len(PARAM_NAMES))

    def scaled(self, factor):
        return replace(self, std=tuple(factor * s for s in self.std))

    def to_dict(self):
        return {
            n: [getattr(self.mean, n), s] for n, s in zip(PARAM_NAMES, self.std)
        }

    @classmethod
    def from_dict(cls, d):
        try:
            mean = MtjParams(**{n: float(d[n][0]) for n in PARAM_NAMES})
            std = tuple(float(d[n][1]) for n in PARAM_NAMES)
        except (KeyError, IndexError, TypeError) as exc:
            raise DomainError(f"bad distribution block: {exc}") from exc
        return cls(mean=mean, std=std)


def resistance_at(params, state, v):
    """Resistance of the device at bias ``v`` (even in ``v``)."""
    a, b = params.branch(state)
    r = b + a * abs(v)
    if r <= 0:
        raise DomainError(f"non-positive resistance {r} at {v} V")
    return r


def voltage_for_current(params, state, i):
    """Voltage across the device when ``i`` flows through it.

    Solves ``v = i*(b + a*|v|)`` in closed form.
    """
    a, b = params.branch(state)
    den = 1.0 - a * abs(i)
    if den <= 0:
        raise SingularityError(f"1 - a*|i| = {den} <= 0 for a={a}, i={i}")
    return i * b / den


def check_switch(params, state, i):
    """State after a current ``i`` has been applied."""
    if state == MtjState.LOW and i >= params.cP:
        return MtjState.HIGH
    if state == MtjState.HIGH and i <= params.cN:
        return MtjState.LOW
    return MtjState(state)


def sample_params(dist, rng, max_redraws=100, v_max_op=V_MAX_OP):
    """Draw one physical parameter set; ``rng`` is a seed or a Generator."""
    rng = np.random.default_rng(rng)
    mu = dist.mean.as_array()
    sigma = np.asarray(dist.std)
    for _ in range(max_redraws + 1):
        p = MtjParams.from_array(rng.normal(mu, sigma))
        if p.is_valid(v_max_op):
            return p
    raise SamplingError(
        f"no valid parameter set after {max_redraws} redraws from {dist}"
    )


@dataclass(frozen=True)
class MeasuredLoop:
    """A bipolar R(V) sweep, in acquisition order."""

    voltage: np.ndarray
    resistance: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.voltage, dtype=np.float64)
        r = np.asarray(self.resistance, dtype=np.float64)
        if v.shape != r.shape or v.ndim != 1:
            raise FitError("voltage and resistance must be equal-length 1-D arrays")
        if not (v.max(initial=0) > 0 > v.min(initial=0)):
            raise FitError("loop must span both bias polarities")
        object.__setattr__(self, "voltage", v)
        object.__setattr__(self, "resistance", r)

    def __len__(self):
        return len(self.voltage)

    @classmethod
    def read_csv(cls, path):
        volts, ohms = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["voltage_V", "resistance_Ohm"]:
                raise FitError(f"{path}:1: expected header 'voltage_V,resistance_Ohm'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    v, r = (float(x) for x in row)
                except ValueError as exc:
                    raise FitError(f"{path}:{lineno}: cannot parse {row!r}") from exc
                volts.append(v)
                ohms.append(r)
        return cls(np.array(volts), np.array(ohms))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["voltage_V", "resistance_Ohm"])
            for v, r in zip(self.voltage, self.resistance):
                w.writerow([repr(float(v)), repr(float(r))])


def synthesize_loop(params, v_max=0.5, points_per_leg=25, state=MtjState.LOW,
                    noise_ohm=0.0, rng=None):
    """Simulate a measured loop 0 -> +v_max -> 0 -> -v_max -> 0.

    The exact switching bias is inserted as the last point of the old branch,
    so a noiseless loop carries the critical currents without sampling error.
    """
    legs = [
        np.linspace(0.0, v_max, points_per_leg),
        np.linspace(v_max, 0.0, points_per_leg)[1:],
        np.linspace(0.0, -v_max, points_per_leg)[1:],
        np.linspace(-v_max, 0.0, points_per_leg)[1:],
    ]
    state = MtjState(state)
    volts, ohms = [], []
    for v in np.concatenate(legs):
        i = v / resistance_at(params, state, v)
        new = check_switch(params, state, i)
        if new != state:
            threshold = params.cP if i > 0 else params.cN
            v_sw = voltage_for_current(params, state, threshold)
            volts.append(v_sw)
            ohms.append(resistance_at(params, state, v_sw))
            state = new
        volts.append(v)
        ohms.append(resistance_at(params, state, v))
    ohms = np.array(ohms)
    if noise_ohm:
        ohms = ohms + np.random.default_rng(rng).normal(0.0, noise_ohm, ohms.shape)
    return MeasuredLoop(np.array(volts), ohms)


def _fit_line(v, r):
    design = np.column_stack([np.ones_like(v), np.abs(v)])
    (b, a), *_ = np.linalg.lstsq(design, r, rcond=None)
    rms = math.sqrt(float(np.mean((design @ np.array([b, a]) - r) ** 2)))
    return float(a), float(b), rms


def fit_params(loop, max_residual=20.0):
    """Estimate :class:`MtjParams` from a measured bipolar loop.

    The two largest resistance jumps split the sweep into the two state
    branches.  The last point before each jump gives the switching bias,
    which the fitted branch line converts into a critical current.
    """
    v, r = loop.voltage, loop.resistance
    if len(v) < 16:
        raise FitError(f"loop too short ({len(v)} points)")
    jumps = np.diff(r)
    threshold = 0.5 * (r.max() - r.min())
    candidates = np.flatnonzero(np.abs(jumps) > threshold)
    if len(candidates) < 2:
        raise FitError(f"found {len(candidates)} switching discontinuities, need 2")
    j1, j2 = sorted(candidates[np.argsort(-np.abs(jumps[candidates]))[:2]])

    inner = np.zeros(len(v), dtype=bool)
    inner[j1 + 1 : j2 + 1] = True
    seg_hi, seg_lo = (inner, ~inner) if r[inner].mean() > r[~inner].mean() else (~inner, inner)
    for name, seg in (("high", seg_hi), ("low", seg_lo)):
        if seg.sum() < 8:
            raise FitError(f"{name}-resistance branch has only {seg.sum()} points")
    a1, b1, rms1 = _fit_line(v[seg_hi], r[seg_hi])
    a0, b0, rms0 = _fit_line(v[seg_lo], r[seg_lo])
    if max(rms1, rms0) > max_residual:
        raise FitError(
            f"branch fit residual {max(rms1, rms0):.3g} ohm exceeds {max_residual} ohm"
        )

    crit = {}
    for j in (j1, j2):
        vs = v[j]
        a, b = (a1, b1) if seg_hi[j] else (a0, b0)
        i = vs / (b + a * abs(vs))
        if vs > 0 and not seg_hi[j]:
            crit["cP"] = i
        elif vs < 0 and seg_hi[j]:
            crit["cN"] = i
        else:
            raise FitError(
                f"switch at {vs:+.4g} V has the wrong polarity for this model"
            )
    if set(crit) != {"cN", "cP"}:
        raise FitError("both switching polarities are required")
    return MtjParams(a1=a1, b1=b1, a0=a0, b0=b0, cN=crit["cN"], cP=crit["cP"])
