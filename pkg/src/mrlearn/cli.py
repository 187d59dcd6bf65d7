"""Command-line front end.

Subcommands: ``decompose`` (dump the resolution ladder of one file),
``train`` (run a config's full experiment), ``attack`` (attack suite
against a saved checkpoint), ``evaluate`` (clean metrics for a checkpoint),
``report`` (regenerate plot CSVs from a bundle).

Exit codes: 0 success, 1 config error, 2 data error, 3 runtime failure.
The ``MRLEARN_OUTPUT_ROOT`` environment variable prefixes relative output
directories.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import read_wav
from .errors import ConfigError, DataError, MrlearnError
from .experiment import (
    OUTPUT_ROOT_ENV,
    emit_plot_data,
    load_dataset,
    mode_label,
    parse_config,
    run_experiment,
)
from .multires import build_resolution
from .nn import evaluate as nn_evaluate
from .nn import load_network

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


def _load_input_array(path: Path):
    if path.suffix.lower() == ".wav":
        return read_wav(path).samples
    if path.suffix.lower() == ".npy":
        return np.load(path, allow_pickle=False)
    raise DataError(f"unsupported input type {path.suffix!r}; expected .wav or .npy")


def cmd_decompose(args) -> int:
    data = _load_input_array(Path(args.input))
    if args.dimensionality == "auto":
        dimensionality = "1D" if data.ndim == 1 else "2D"
    else:
        dimensionality = args.dimensionality.upper()
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"input": str(args.input), "dimensionality": dimensionality, "versions": []}
    for index in range(args.levels, 0, -1):
        version = build_resolution(data, index, dimensionality)
        path = outdir / f"resolution_{index}.npy"
        np.save(path, version.data)
        manifest["versions"].append(
            {"index": index, "kind": version.kind, "depth": version.depth, "file": path.name}
        )
    (outdir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.levels} resolution versions to {outdir}")
    return EXIT_OK


def _apply_overrides(raw: dict, args) -> dict:
    if args.k_levels:
        raw["k_levels"] = [int(k) for k in args.k_levels.split(",")]
    if args.seeds:
        raw["seeds"] = [int(s) for s in args.seeds.split(",")]
    if args.total_epochs is not None:
        raw["total_epochs"] = args.total_epochs
    if args.output_dir:
        raw["output_dir"] = args.output_dir
    return raw


def cmd_train(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{args.config}: top-level JSON value must be an object")
    config = parse_config(_apply_overrides(raw, args))
    bundle = run_experiment(config, output_root=args.output_root)
    print(f"experiment bundle written to {bundle}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = parse_config(args.config)
    network = load_network(args.checkpoint)
    data = load_dataset(config.dataset, seed=config.seeds[0])
    accuracy, loss = nn_evaluate(network, data.X_test, data.y_test)
    payload = {"test_accuracy": accuracy, "test_loss": loss, "samples": int(data.X_test.shape[0])}
    print(json.dumps(payload, sort_keys=True, indent=2))
    if args.output:
        Path(args.output).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_attack(args) -> int:
    from .experiment import _run_attacks  # shared harness

    config = parse_config(args.config)
    if not config.attacks.any_enabled():
        raise ConfigError("no attacks enabled in the config's attacks section")
    network = load_network(args.checkpoint)
    data = load_dataset(config.dataset, seed=config.seeds[0])
    outdir = Path(args.output or "attack-out")
    outdir.mkdir(parents=True, exist_ok=True)
    metrics = _run_attacks(network, data, config.attacks, config.seeds[0], outdir)
    metrics["mode"] = mode_label(config.k_levels[0])
    (outdir / "attack_metrics.json").write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    print(json.dumps(metrics, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    written = emit_plot_data(args.bundle)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrlearn",
        description="Coarse-to-fine wavelet curriculum training and robustness evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="dump the resolution ladder of a .wav or .npy file")
    p.add_argument("--input", required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--dimensionality", choices=["auto", "1d", "2d"], default="auto")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("train", help="run the experiment described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output-root", default=None, help=f"overrides ${OUTPUT_ROOT_ENV}")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--k-levels", default=None, help="comma-separated override, e.g. 1,3")
    p.add_argument("--seeds", default=None, help="comma-separated override, e.g. 0,1,2")
    p.add_argument("--total-epochs", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="clean test metrics for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("attack", help="run the enabled attack suite against a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("report", help="regenerate plot CSVs from a bundle directory")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MrlearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports everything
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
