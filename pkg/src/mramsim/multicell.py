"""Serial chains of MTJs: solving, sweeping, programming and spread statistics."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernel
from .errors import DomainError, MramSimError, ProgrammingError, ReadoutError, SolverError
from .mtj import MtjParams, MtjState, ParamDistribution, sample_params, voltage_for_current

_STATUS_TEXT = {
    kernel.RESTART_LIMIT: "restart limit exceeded",
    kernel.CURRENT_LIMIT: "current limit exceeded",
    kernel.SINGULAR: "resistance model singular",
}


@dataclass(frozen=True)
class SolveSettings:
    """Numerical and protocol settings for chain simulations.

    ``v_limit`` bounds every programming ramp (the write-voltage budget);
    ``write_step`` is the ramp resolution and ``refine`` the number of fine
    steps covered by one coarse probe while nothing switches.
    """

    delta_i: float = 1e-7
    v_limit: float = 3.25
    read_voltage: float = 0.05
    write_step: float = 0.005
    refine: int = 10
    max_restarts: int | None = None

    def __post_init__(self):
        if not self.delta_i > 0:
            raise DomainError(f"delta_i must be > 0, got {self.delta_i}")
        if not self.v_limit > 0:
            raise DomainError(f"v_limit must be > 0, got {self.v_limit}")
        if not self.write_step > 0:
            raise DomainError(f"write_step must be > 0, got {self.write_step}")
        if self.refine < 1:
            raise DomainError(f"refine must be >= 1, got {self.refine}")


class MultiCell:
    """N serially connected junctions with per-device binary state.

    The level of the cell is the number of devices in the HIGH state.
    """

    def __init__(self, params: Sequence[MtjParams], states=None):
        if len(params) < 1:
            raise DomainError("a multi-cell needs at least one device")
        self.params = tuple(params)
        self._table = np.ascontiguousarray(
            np.stack([p.as_array() for p in self.params]), dtype=np.float64
        )
        self._table.flags.writeable = False
        if states is None:
            self.state = np.zeros(len(self.params), dtype=np.uint8)
        else:
            self.state = np.array([int(MtjState(s)) for s in states], dtype=np.uint8)
            if len(self.state) != len(self.params):
                raise DomainError("states and params differ in length")

    @classmethod
    def uniform(cls, n, params, level=0):
        """``n`` copies of ``params``; the first ``level`` devices start HIGH."""
        return cls([params] * n, states=[1] * level + [0] * (n - level))

    @classmethod
    def sampled(cls, n, dist, rng):
        rng = np.random.default_rng(rng)
        return cls([sample_params(dist, rng) for _ in range(n)])

    @property
    def n(self):
        return len(self.params)

    @property
    def level(self):
        return int(self.state.sum())

    @property
    def states(self):
        return [MtjState(int(s)) for s in self.state]

    @property
    def devices(self):
        return list(zip(self.params, self.states))

    @property
    def table(self):
        """Read-only (N, 6) array of ``(a1, b1, a0, b0, cN, cP)`` rows."""
        return self._table

    def snapshot(self):
        return self.state.copy()

    def restore(self, snapshot):
        self.state[:] = snapshot

    def copy(self):
        return MultiCell(self.params, states=self.state)

    def zero_bias_resistance(self):
        return float(np.where(self.state == 1, self._table[:, 1], self._table[:, 3]).sum())

    def chain_voltage(self, i):
        """Total drop for current ``i`` with the present states (no switching)."""
        return sum(voltage_for_current(p, s, i) for p, s in self.devices)

    def __repr__(self):
        bits = "".join("H" if s else "L" for s in self.state)
        return f"MultiCell(n={self.n}, states={bits})"


class SolveResult(NamedTuple):
    current: float
    switched: bool
    v_total: float


def solve_at_voltage(cell, v, settings=SolveSettings()):
    """Find the chain current at applied voltage ``v`` by current stepping.

    Device states of ``cell`` are updated in place.
    """
    if not math.isfinite(v):
        raise SolverError(f"applied voltage {v} is not finite", voltage=v)
    table = cell.table
    max_restarts = settings.max_restarts if settings.max_restarts is not None else 10 * cell.n
    i_limit = 10.0 * max(float(np.abs(table[:, 4]).max()), float(table[:, 5].max()))
    before = cell.snapshot()
    i, vt, _, status = kernel.solve_chain(
        table, cell.state, float(v), float(settings.delta_i), int(max_restarts), i_limit
    )
    if status != kernel.OK:
        raise SolverError(f"solver failed at {v:+.6g} V: {_STATUS_TEXT[status]}", voltage=v)
    return SolveResult(i, bool((cell.state != before).any()), vt)


@dataclass(frozen=True)
class RvCurve:
    """Sampled transport curve; one row per applied voltage."""

    v_applied: np.ndarray
    current: np.ndarray
    r_total: np.ndarray
    level: np.ndarray

    def __len__(self):
        return len(self.v_applied)

    def plateaus(self, min_points=2):
        """Runs of constant level as ``(level, start, stop)`` index triples."""
        runs, start = [], 0
        for k in range(1, len(self.level) + 1):
            if k == len(self.level) or self.level[k] != self.level[start]:
                if k - start >= min_points:
                    runs.append((int(self.level[start]), start, k))
                start = k
        return runs

    @classmethod
    def concat(cls, curves):
        return cls(*(np.concatenate([getattr(c, f) for c in curves])
                     for f in ("v_applied", "current", "r_total", "level")))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["v_applied_V", "i_A", "r_Ohm", "level"])
            for row in zip(self.v_applied, self.current, self.r_total, self.level):
                w.writerow([repr(float(row[0])), repr(float(row[1])),
                            repr(float(row[2])), int(row[3])])


def sweep(cell, v_from, v_to, n_points, settings=SolveSettings()):
    """Solve at evenly spaced voltages, carrying device state between points."""
    if n_points < 2:
        raise DomainError(f"n_points must be >= 2, got {n_points}")
    volts = np.linspace(v_from, v_to, n_points)
    cur = np.empty(n_points)
    res = np.empty(n_points)
    lvl = np.empty(n_points, dtype=np.int64)
    for k, v in enumerate(volts):
        try:
            i = solve_at_voltage(cell, float(v), settings).current
        except SolverError as exc:
            raise SolverError(f"sweep point {k}: {exc}", voltage=float(v)) from exc
        cur[k] = i
        # zero-bias limit where no current flows
        res[k] = v / i if i != 0 else cell.zero_bias_resistance()
        lvl[k] = cell.level
    return RvCurve(volts, cur, res, lvl)


def bipolar_sweep(cell, v_max, points_per_leg, settings=SolveSettings()):
    """Sweep 0 -> +v_max -> -v_max -> 0 as one hysteresis loop."""
    legs = [(0.0, v_max, points_per_leg), (v_max, -v_max, 2 * points_per_leg - 1),
            (-v_max, 0.0, points_per_leg)]
    curves = []
    for k, (a, b, n) in enumerate(legs):
        c = sweep(cell, a, b, n, settings)
        if k:
            c = RvCurve(*(getattr(c, f)[1:] for f in ("v_applied", "current", "r_total", "level")))
        curves.append(c)
    return RvCurve.concat(curves)


def switching_voltage_estimate(cell, polarity=1):
    """Smallest chain bias of the given polarity that can switch any device."""
    table, state = cell.table, cell.state
    if polarity > 0:
        candidates = table[state == 0, 5]
        if not len(candidates):
            return math.inf
        i = float(candidates.min())
    else:
        candidates = table[state == 1, 4]
        if not len(candidates):
            return math.inf
        i = float(candidates.max())
    return abs(cell.chain_voltage(i))


def read_resistance(cell, settings=SolveSettings()):
    """Chain resistance at the (non-perturbing) read voltage."""
    v = settings.read_voltage
    if v == 0:
        return cell.zero_bias_resistance()
    limit = 0.5 * switching_voltage_estimate(cell, 1 if v > 0 else -1)
    if abs(v) > limit:
        raise ReadoutError(f"read voltage {v} V exceeds non-perturbing limit {limit:.4g} V")
    snap = cell.snapshot()
    res = solve_at_voltage(cell, v, settings)
    if res.switched:
        cell.restore(snap)
        raise ReadoutError(f"readout at {v} V changed the cell state")
    return res.v_total / res.current


def _ramp(cell, settings, polarity, stop_level):
    """Raise |V| in ``write_step`` increments until the cell reaches ``stop_level``.

    Yields ``(voltage, level_before, level_after)`` for every observed level
    change.  While nothing switches, the ramp probes ``refine`` steps ahead
    from a snapshot; a switch at a probe means the first switching grid point
    lies inside that window, which is then re-walked step by step.  The
    reported voltages are identical to a plain fine ramp because a state that
    switches at some bias also switches at every larger bias.
    """
    step = settings.write_step
    k_max = int(math.floor(settings.v_limit / step + 1e-9))
    k = 0
    while cell.level != stop_level:
        if k >= k_max:
            raise ProgrammingError(
                f"budget {settings.v_limit} V exhausted at level {cell.level}, "
                f"target {stop_level}"
            )
        k_probe = min(k + settings.refine, k_max)
        snap = cell.snapshot()
        solve_at_voltage(cell, polarity * k_probe * step, settings)
        if (cell.state == snap).all():
            k = k_probe
            continue
        cell.restore(snap)
        for kk in range(k + 1, k_probe + 1):
            before = cell.level
            v = polarity * kk * step
            solve_at_voltage(cell, v, settings)
            if cell.level != before:
                k = kk
                yield v, before, cell.level
                break
        else:
            k = k_probe


class ProgramResult(NamedTuple):
    achieved: int
    write_voltages: list
    erase_voltage: float | None


def program_level(cell, target_level, settings=SolveSettings()):
    """Erase the cell and write it up to ``target_level`` HIGH devices.

    Erase is a negative ramp down to level 0; the write is a positive ramp
    that stops at the first read-back of the target level.
    """
    if not 0 <= target_level <= cell.n:
        raise DomainError(f"target level {target_level} outside [0, {cell.n}]")
    if cell.level == target_level:
        return ProgramResult(target_level, [], None)
    erase_v = None
    for v, _, _ in _ramp(cell, settings, -1, 0):
        erase_v = v
    writes = []
    for v, before, after in _ramp(cell, settings, 1, target_level):
        if after > target_level:
            raise ProgrammingError(
                f"overshoot: level jumped {before} -> {after} at {v:.4g} V, target {target_level}"
            )
        writes.extend([v] * (after - before))
    return ProgramResult(cell.level, writes, erase_v)


@dataclass
class SpreadReport:
    """Monte Carlo samples in long format ``(trial, kind, index, value)``.

    kinds: ``readout`` (index = level, ohm), ``write`` (index = k for the
    k -> k+1 transition, volt) and ``erase`` (index = level erased from, volt).
    """

    n_devices: int
    trials: int
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def _grouped(self, kind):
        groups = {}
        for _, k, idx, value in self.records:
            if k == kind:
                groups.setdefault(idx, []).append(value)
        return {idx: np.array(v) for idx, v in sorted(groups.items())}

    @property
    def readout(self):
        return self._grouped("readout")

    @property
    def write_voltages(self):
        return self._grouped("write")

    @property
    def erase_voltages(self):
        return self._grouped("erase")

    @property
    def failure_count(self):
        return len(self.failures)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "kind", "index", "value"])
            for trial, kind, idx, value in self.records:
                w.writerow([trial, kind, idx, repr(float(value))])
            for trial, reason in self.failures:
                w.writerow([trial, "failure", -1, "nan"])

    def max_write_voltage(self):
        vals = [abs(v) for _, k, _, v in self.records if k in ("write", "erase")]
        return max(vals) if vals else 0.0


def run_trial(trial, n_devices, dist, settings, seed):
    """One write-read-erase cycle on a freshly sampled cell.

    Returns ``(records, failure_reason)``; a failed trial yields no records.
    """
    try:
        cell = MultiCell.sampled(n_devices, dist, seed + trial)
        records = [(trial, "readout", 0, read_resistance(cell, settings))]
        for v, before, after in _ramp(cell, settings, 1, n_devices):
            if after != before + 1:
                return [], f"level jump {before}->{after} at {v:.4g} V"
            records.append((trial, "write", before, v))
            records.append((trial, "readout", after, read_resistance(cell, settings)))
        for v, before, after in _ramp(cell, settings, -1, 0):
            records.append((trial, "erase", before, v))
        return records, None
    except MramSimError as exc:
        return [], str(exc)


def _run_trial_star(args):
    return run_trial(*args)


def monte_carlo_spread(n_devices, dist=ParamDistribution(), trials=300,
                       settings=SolveSettings(), seed=0, jobs=1):
    """Program every level of ``trials`` sampled cells and collect statistics.

    Trial ``t`` draws its devices from seed ``seed + t``, so results do not
    depend on ``jobs``.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    args = [(t, n_devices, dist, settings, seed) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_star, args, chunksize=max(1, trials // (4 * jobs))))
    else:
        results = [run_trial(*a) for a in args]
    report = SpreadReport(n_devices=n_devices, trials=trials)
    for t, (records, reason) in enumerate(results):
        report.records.extend(records)
        if reason is not None:
            report.failures.append((t, reason))
    return report


def count_clusters(values, min_gap):
    """Number of groups in ``values`` separated by gaps wider than ``min_gap``."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if not len(v):
        return 0
    return 1 + int((np.diff(v) > min_gap).sum())
