"""Command-line experiment harness.

Subcommands: ``train`` (fit and persist one quantizer), ``eval`` (evaluate a
persisted quantizer), ``sweep-epsilon`` / ``sweep-alpha`` / ``sweep-rate``
(the three experiment grids), and ``plot`` (results CSV to SVG chart).

Configuration is resolved as defaults < JSON config file < command-line
flags; the seed falls back to the CSCOVQ_SEED environment variable. Every
run writes a manifest (resolved configuration, command, version, timestamp)
into the output directory before any computation starts, and a run can be
repeated bit-for-bit by pointing --config at a previous manifest.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .baselines import covq_q_finalize
from .channel import bsc_channel
from .covq import load_quantizer, save_quantizer
from .evaluation import (
    ALL_SCHEMES,
    SCHEME_COVQ_Q,
    SCHEME_CUVQ_E2E,
    SCHEME_COVQ_E2E,
    ExperimentConfig,
    _ExperimentData,
    evaluate_nmse,
    read_results_csv,
    run_alpha_sweep,
    run_epsilon_sweep,
    run_rate_sweep,
    sensing_matrix_for,
    write_results_csv,
)
from .numerics import SingularMatrixError
from .plotting import write_chart

_CONFIG_KEYS = {
    "M": int,
    "K": int,
    "B": int,
    "alpha": float,
    "epsilons": tuple,
    "schemes": tuple,
    "trials": int,
    "training_size": int,
    "seed": int,
    "noise_std": float,
    "tol": float,
    "max_iter": int,
    "redraw_phi": bool,
    "alphas": tuple,
    "rates": tuple,
    "workers": int,
}
_KEY_ALIASES = {"T": "training_size"}


def load_config(path):
    """Parse a JSON experiment config (or a run manifest wrapping one).

    Missing keys take the documented defaults; unknown keys and constraint
    violations raise ValueError with a description.
    """
    config, _ = _load_config_keys(path)
    return config


def _load_config_keys(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top-level JSON value must be an object")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # run manifest
    fields = {}
    for key, value in raw.items():
        key = _KEY_ALIASES.get(key, key)
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        if value is None:
            continue  # JSON null means "use the default"
        kind = _CONFIG_KEYS[key]
        try:
            if kind is tuple:
                if not isinstance(value, (list, tuple)):
                    raise TypeError("expected a list")
                elem = str if key == "schemes" else (int if key == "rates" else float)
                fields[key] = tuple(elem(v) for v in value)
            elif kind is bool:
                if not isinstance(value, bool):
                    raise TypeError("expected true/false")
                fields[key] = value
            else:
                fields[key] = kind(value)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: bad value for {key!r}: {value!r} ({exc})") from exc
    try:
        config = ExperimentConfig(**fields).validate()
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    return config, set(fields)


def _parse_list(text, elem):
    try:
        return tuple(elem(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ValueError(f"bad list value {text!r}: {exc}") from exc


def resolve_config(args, command):
    """Merge defaults, config file, flags, and the seed env fallback."""
    explicit = set()
    if args.config:
        config, explicit = _load_config_keys(args.config)
    else:
        config = ExperimentConfig()

    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    elif "seed" not in explicit and os.environ.get("CSCOVQ_SEED"):
        updates["seed"] = int(os.environ["CSCOVQ_SEED"])
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    if getattr(args, "training_size", None) is not None:
        updates["training_size"] = args.training_size
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "redraw_phi", False):
        updates["redraw_phi"] = True
    for name, elem in (("epsilons", float), ("alphas", float), ("rates", int), ("schemes", str)):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = _parse_list(value, elem)
            explicit.add(name)

    # Sweep-specific crossover defaults when the user did not choose any.
    if "epsilons" not in explicit:
        if command == "sweep-alpha":
            updates["epsilons"] = (0.0, 0.01)
        elif command == "sweep-rate":
            updates["epsilons"] = (0.0, 0.005)

    from dataclasses import replace

    config = replace(config, **updates)
    config.validate()
    return config


def write_manifest(out_dir, command, config):
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "command": command,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "out_dir": os.path.abspath(out_dir),
        "config": asdict(config),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def _progress(row):
    print(
        f"[cscovq] {row.scheme} eps={row.epsilon:g} alpha={row.alpha:g} B={row.B} "
        f"nmse_db={row.nmse_db:.4f} ({row.wall_s:.1f}s)",
        file=sys.stderr,
        flush=True,
    )


def _finish_sweep(out_dir, rows, svg):
    csv_path = os.path.join(out_dir, "results.csv")
    write_results_csv(csv_path, rows)
    print(f"[cscovq] wrote {csv_path} ({len(rows)} rows)", file=sys.stderr)
    if svg:
        svg_path = os.path.join(out_dir, "results.svg")
        write_chart(svg_path, rows)
        print(f"[cscovq] wrote {svg_path}", file=sys.stderr)


def _cmd_sweep(args, command, runner):
    config = resolve_config(args, command)
    write_manifest(args.out, command, config)
    rows = runner(config, progress=_progress)
    _finish_sweep(args.out, rows, args.svg)
    return 0


def _quantizer_path(out_dir, scheme, config, eps):
    return os.path.join(out_dir, f"quantizer_{scheme}_B{config.B}_eps{eps:g}.txt")


def _cmd_train(args):
    config = resolve_config(args, "train")
    write_manifest(args.out, "train", config)
    scheme = config.schemes[0]
    eps = config.epsilons[0]
    data = _ExperimentData.build(config)
    system = data.system(scheme, eps, config)
    quantizer = system.quantizer if scheme == SCHEME_COVQ_Q else system
    path = _quantizer_path(args.out, scheme, config, eps)
    save_quantizer(path, quantizer)
    print(
        f"[cscovq] trained {scheme} (B={config.B}, eps={eps:g}) in {quantizer.iterations} iterations; wrote {path}",
        file=sys.stderr,
    )
    return 0


def _infer_scheme(quantizer, config):
    if quantizer.dim == config.N:
        return SCHEME_COVQ_Q
    if quantizer.dim != config.M:
        raise ValueError(
            f"quantizer dimension {quantizer.dim} matches neither N={config.N} nor M={config.M}"
        )
    if quantizer.channel.crossover == 0.0:
        return SCHEME_CUVQ_E2E
    return SCHEME_COVQ_E2E


def _cmd_eval(args):
    config = resolve_config(args, "eval")
    quantizer = load_quantizer(args.quantizer, channel_dir=os.path.dirname(args.quantizer) or ".")
    scheme = args.scheme or _infer_scheme(quantizer, config)
    write_manifest(args.out, "eval", config)
    phi = sensing_matrix_for(config)
    system = covq_q_finalize(quantizer, phi, config.K) if scheme == SCHEME_COVQ_Q else quantizer
    rows = []
    for eps in config.epsilons:
        row = evaluate_nmse(system, phi, config, channel=bsc_channel(config.B, eps), scheme=scheme)
        rows.append(row)
        _progress(row)
    _finish_sweep(args.out, rows, args.svg)
    return 0


def _cmd_plot(args):
    rows = read_results_csv(getattr(args, "in"))
    write_chart(args.out, rows, x_field=args.x, title=args.title)
    print(f"[cscovq] wrote {args.out}", file=sys.stderr)
    return 0


def _add_run_flags(parser):
    parser.add_argument("--config", metavar="PATH", help="JSON config or run manifest")
    parser.add_argument("--seed", type=int, help="master seed (fallback: CSCOVQ_SEED env var)")
    parser.add_argument("--trials", type=int, help="Monte Carlo evaluation trials")
    parser.add_argument("--training-size", type=int, dest="training_size", help="training sample count")
    parser.add_argument("--workers", type=int, help="parallel worker cap (default: machine parallelism)")
    parser.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    parser.add_argument("--redraw-phi", action="store_true", dest="redraw_phi", help="fresh sensing matrix per trial (slow path)")
    parser.add_argument("--epsilons", metavar="LIST", help="comma-separated crossover probabilities")
    parser.add_argument("--alphas", metavar="LIST", help="comma-separated measurement rates")
    parser.add_argument("--rates", metavar="LIST", help="comma-separated quantization rates (bits)")
    parser.add_argument("--schemes", metavar="LIST", help=f"comma-separated subset of {','.join(ALL_SCHEMES)}")
    parser.add_argument("--svg", action="store_true", help="also write results.svg")


def build_parser():
    parser = argparse.ArgumentParser(prog="cscovq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cscovq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and persist one quantizer (first scheme at first epsilon)")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a persisted quantizer at each epsilon")
    _add_run_flags(p)
    p.add_argument("--quantizer", required=True, metavar="PATH", help="quantizer file from `train`")
    p.add_argument("--scheme", choices=ALL_SCHEMES, help="row label override (default: inferred)")
    p.set_defaults(func=_cmd_eval)

    for name, runner in (
        ("sweep-epsilon", run_epsilon_sweep),
        ("sweep-alpha", run_alpha_sweep),
        ("sweep-rate", run_rate_sweep),
    ):
        p = sub.add_parser(name, help=f"run the {name.split('-')[1]} grid and write results.csv")
        _add_run_flags(p)
        p.set_defaults(func=lambda a, c=name, r=runner: _cmd_sweep(a, c, r))

    p = sub.add_parser("plot", help="render a results CSV as an SVG line chart")
    p.add_argument("--in", required=True, metavar="CSV", help="results file to plot")
    p.add_argument("--out", required=True, metavar="SVG", help="chart file to write")
    p.add_argument("--x", choices=("epsilon", "alpha", "B"), help="swept variable (default: auto)")
    p.add_argument("--title", default="", help="chart title")
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"cscovq: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, SingularMatrixError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"cscovq: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
