"""Command-line front end: ``mramsim <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernel
from .ann.evaluate import ExperimentSettings, evaluate, experiment_curve, train_split
from .ann.mlp import Mlp
from .ann.quantize import QuantizedNetwork, build_level_set, quantize
from .config import RunConfig, default_config_json
from .data import SplitSpec, load_pool, reshuffle_split
from .errors import ConfigError, MramSimError
from .mtj import MeasuredLoop, fit_params
from .multicell import MultiCell, bipolar_sweep, monte_carlo_spread

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _manifest(cfg, command, outputs, **extra):
    return {
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "config": cfg.raw,
        "outputs": sorted(outputs),
        "versions": {
            "mramsim": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernel": kernel.BACKEND,
        },
        **extra,
    }


def _finish(cfg, command, outputs, **extra):
    out = cfg.output_dir
    path = out / f"{command}-manifest.json"
    path.write_text(json.dumps(_manifest(cfg, command, outputs, **extra), indent=2, sort_keys=True) + "\n")
    for name in sorted(outputs):
        print(out / name)
    print(path)


def _experiment_settings(cfg, **overrides):
    net = cfg.raw["network"]
    kw = dict(
        n_hidden=int(net["n_hidden"]), k_range=tuple(cfg.k_range),
        reshuffles=int(net["reshuffles"]), test_fraction=float(net["test_fraction"]),
        iterations=int(net["iterations"]), patience=int(net["patience"]),
        validation_fraction=float(net["validation_fraction"]),
        level_mode=net["level_mode"], hardware_transfer=bool(net["hardware_transfer"]),
    )
    kw.update(overrides)
    return ExperimentSettings(**kw)


def _pool(cfg):
    d = cfg.raw["data"]
    return load_pool(d["data_dir"], d["pool_size"], seed=cfg.seed)


def _load_network(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read network {path}: {exc}") from exc
    if doc.get("format") == "mramsim-qnet":
        return QuantizedNetwork.from_dict(doc)
    return Mlp.from_dict(doc)


def cmd_fit(args, cfg):
    loop = MeasuredLoop.read_csv(args.loop_csv)
    text = fit_params(loop, max_residual=args.max_residual).to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args, cfg):
    sw = cfg.raw["sweep"]
    n = int(sw["n_devices"])
    if sw["sampled"]:
        cell = MultiCell.sampled(n, cfg.distribution, cfg.seed)
    else:
        cell = MultiCell.uniform(n, cfg.distribution.mean)
    curve = bipolar_sweep(cell, float(sw["v_max"]), int(sw["points_per_leg"]), cfg.solve)
    curve.to_csv(cfg.output_dir / "sweep.csv")
    _finish(cfg, "sweep", ["sweep.csv"])


def cmd_montecarlo(args, cfg):
    mc = cfg.raw["multicell"]
    report = monte_carlo_spread(int(mc["n_devices"]), cfg.distribution, int(mc["trials"]),
                                cfg.solve, seed=cfg.seed, jobs=args.jobs)
    report.to_csv(cfg.output_dir / "montecarlo.csv")
    with open(cfg.output_dir / "montecarlo_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "index", "count", "mean", "std", "min", "max"])
        for kind, groups in (("readout", report.readout), ("write", report.write_voltages),
                             ("erase", report.erase_voltages)):
            for idx, v in groups.items():
                w.writerow([kind, idx, len(v), *(repr(float(f(v))) for f in
                                                 (np.mean, np.std, np.min, np.max))])
    _finish(cfg, "montecarlo", ["montecarlo.csv", "montecarlo_summary.csv"],
            failures=report.failure_count)


def cmd_train(args, cfg):
    net, test = train_split(_pool(cfg), _experiment_settings(cfg), cfg.seed)
    (cfg.output_dir / "network.json").write_text(net.to_json(config_hash=cfg.hash()) + "\n")
    _finish(cfg, "train", ["network.json"], test_error=evaluate(net, test))


def cmd_quantize(args, cfg):
    net = _load_network(args.network or cfg.output_dir / "network.json")
    if not isinstance(net, Mlp):
        raise ConfigError("quantize expects a float network document")
    k = args.k or int(cfg.raw["network"]["k"])
    mode = cfg.raw["network"]["level_mode"]
    levels = build_level_set(k, cfg.distribution, cfg.neuron, mode, cfg.seed, cfg.solve)
    q = quantize(net, levels, cfg.neuron)
    name = f"quantized_k{k}.json"
    (cfg.output_dir / name).write_text(q.to_json(config_hash=cfg.hash()) + "\n")
    _finish(cfg, "quantize", [name], k=k)


def cmd_eval(args, cfg):
    path = args.network or cfg.output_dir / "network.json"
    net = _load_network(path)
    settings = _experiment_settings(cfg)
    _, test = reshuffle_split(_pool(cfg), SplitSpec(settings.test_fraction, cfg.seed))
    err = evaluate(net, test, settings.hardware_transfer, cfg.neuron)
    with open(cfg.output_dir / "eval.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["network", "kind", "hardware_transfer", "n_test", "error"])
        kind = "quantized" if isinstance(net, QuantizedNetwork) else "float"
        w.writerow([Path(path).name, kind, int(settings.hardware_transfer), len(test), repr(err)])
    _finish(cfg, "eval", ["eval.csv"])


def cmd_experiment(args, cfg):
    report = experiment_curve(_pool(cfg), _experiment_settings(cfg), seed=cfg.seed,
                              dist=cfg.distribution, cfg=cfg.neuron, solve=cfg.solve,
                              jobs=args.jobs)
    if report.failures and not report.rows:
        raise MramSimError(f"every reshuffle failed: {report.failures[0][1]}")
    report.to_csv(cfg.output_dir / "experiment.csv")
    report.summary_csv(cfg.output_dir / "experiment_summary.csv")
    _finish(cfg, "experiment", ["experiment.csv", "experiment_summary.csv"],
            failures=[list(f) for f in report.failures])


def cmd_config(args, cfg):
    if args.print_default:
        sys.stdout.write(default_config_json())
    else:
        sys.stdout.write(json.dumps(cfg.raw, indent=2, sort_keys=True) + "\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override config seed")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="worker processes for Monte Carlo trials and reshuffles")

    parser = argparse.ArgumentParser(
        prog="mramsim", parents=[common],
        description="Multi-state MRAM cell, neuron and quantized-network simulator.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("fit", parents=[common], help="fit MTJ parameters to a measured R(V) loop")
    p.add_argument("loop_csv", help="CSV with header voltage_V,resistance_Ohm")
    p.add_argument("--out", help="write parameter JSON here instead of stdout")
    p.add_argument("--max-residual", type=float, default=20.0,
                   help="largest acceptable branch RMS residual in ohm (default 20)")
    p.set_defaults(func=cmd_fit)

    for name, func, text in (
        ("sweep", cmd_sweep, "bipolar R(V)/I(V) sweep of a multi-cell"),
        ("montecarlo", cmd_montecarlo, "readout and write-voltage spread over sampled cells"),
        ("train", cmd_train, "train the float MLP on MNIST"),
        ("experiment", cmd_experiment, "error vs MTJs per cell over reshuffled splits"),
    ):
        sub.add_parser(name, parents=[common], help=text).set_defaults(func=func)

    p = sub.add_parser("quantize", parents=[common], help="map a trained network onto cell levels")
    p.add_argument("--network", help="float network JSON (default OUT_DIR/network.json)")
    p.add_argument("--k", type=int, help="MTJs per cell (default network.k)")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("eval", parents=[common], help="test error of a float or quantized network")
    p.add_argument("--network", help="network JSON (default OUT_DIR/network.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("config", parents=[common], help="show configuration")
    p.add_argument("--print-default", action="store_true", help="dump the built-in defaults")
    p.set_defaults(func=cmd_config)
    return parser


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.jobs = getattr(args, "jobs", 1)
    try:
        cfg = RunConfig.load(getattr(args, "config", None)).with_overrides(
            seed=getattr(args, "seed", None), output_dir=getattr(args, "out_dir", None)
        )
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    try:
        if args.command not in ("fit", "config"):
            cfg.output_dir.mkdir(parents=True, exist_ok=True)
        args.func(args, cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except (MramSimError, OSError) as exc:
        return _fail(EXIT_RUNTIME, type(exc).__name__, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
