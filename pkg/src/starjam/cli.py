"""Command-line entry point: one subcommand per sweep kind.

Examples:
    starjam sweep-l --trials 5 --modes es,woj --out results/l_sweep
    starjam convergence --seed 7 --out results/conv
    starjam sweep-power --config scenario.ini --full-scale
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (ConfigError, ExperimentConfig, run_experiment,
                          validate_config)

_SUBCOMMANDS = {
    "convergence": "convergence",
    "sweep-l": "sweep_l",
    "sweep-distance": "sweep_distance",
    "sweep-power": "sweep_power",
    "single": "single",
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None,
                     help="sectioned key=value config file")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--modes", type=str, default=None,
                     help="comma-separated subset of es,ms,woj,wij")
    sub.add_argument("--trials", type=int, default=None, help="trials per sweep point")
    sub.add_argument("--values", type=str, default=None,
                     help="comma-separated sweep values (overrides defaults)")
    sub.add_argument("--out", type=Path, default=None, help="output directory")
    sub.add_argument("--eps", type=float, default=None,
                     help="Eve-link estimation error variance fraction in [0, 1]")
    sub.add_argument("--workers", type=int, default=None, help="worker processes")
    sub.add_argument("--full-scale", action="store_true",
                     help="lift the desk-scale surface-size and trial caps")
    sub.add_argument("--quiet", action="store_true", help="suppress progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starjam",
        description="Secrecy-capacity experiments for the surface-assisted "
                    "full-duplex jamming link")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sub = subs.add_parser(name, help=f"run the {name.replace('-', ' ')} experiment")
        _add_common(sub)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    defaulted: list[str] = []
    if args.config is not None:
        cfg, defaulted = validate_config(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = ExperimentConfig()
    cfg.sweep = _SUBCOMMANDS[args.command]
    cfg.sweep_values = []
    cfg.__post_init__()  # refresh sweep defaults for the chosen kind
    if args.values is not None:
        cfg.sweep_values = [float(t) for t in args.values.split(",") if t]
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.modes is not None:
        cfg.modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if args.trials is not None:
        cfg.trials = args.trials
    if args.out is not None:
        cfg.output_dir = str(args.out)
    if args.eps is not None:
        cfg.imperfect_csi_eps = args.eps
    if args.workers is not None:
        cfg.workers = args.workers
    if args.full_scale:
        cfg.full_scale = True
    cfg.validate()
    for line in defaulted:
        if not args.quiet:
            print(f"[config] {line}")
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    log = (lambda *_: None) if args.quiet else print
    try:
        manifest = run_experiment(cfg, log=log)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        print(f"wrote {manifest['outputs']['raw']} "
              f"({manifest['n_cells']} cells, {manifest['wall_time_s']:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
