"""Command-line front end.

Verbs: ``train`` (fit a model over a scenario stream), ``eval`` (score a
saved model), ``search`` (constrained size search), and ``run`` (search
if configured, then train with evaluations at task boundaries).

Exit codes: 0 success, 2 configuration or usage error, 3 data-format
error, 4 infeasible search constraints.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError, DataFormatError, InfeasibleSearchError
from .harness import (
    ExperimentConfig,
    load_config,
    run_evaluation,
    run_experiment,
    run_search_only,
    run_training,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftsnn",
        description="Spiking-network continual-learning experiments",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("train", "train a model over the configured scenario"),
        ("eval", "evaluate a previously trained model"),
        ("search", "run the memory/energy-constrained size search"),
        ("run", "end-to-end: optional search, training, evaluations"),
    ):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", type=str, default=None, help="YAML config path")
        p.add_argument("--seed", type=int, default=None, help="override every seed")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument(
            "--scenario",
            choices=("dynamic", "shuffled"),
            default=None,
            help="override scenario mode",
        )
        p.add_argument(
            "--tasks",
            type=str,
            default=None,
            help="comma-separated class order, e.g. 0,1,2,3,4",
        )
        p.add_argument("--samples-per-task", type=int, default=None)
        p.add_argument("--n-exc", type=int, default=None, help="excitatory neuron count")
        p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    return parser


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    network = cfg.network
    scenario = cfg.scenario
    if args.seed is not None:
        network = replace(network, seed=args.seed)
        scenario = replace(scenario, seed=args.seed)
    if args.n_exc is not None:
        network = replace(network, n_exc=args.n_exc)
    if args.scenario is not None:
        scenario = replace(scenario, mode=args.scenario)
    if args.tasks is not None:
        try:
            order = [int(t) for t in args.tasks.split(",") if t != ""]
        except ValueError as err:
            raise ConfigError(f"--tasks must be comma-separated integers: {err}")
        scenario = replace(scenario, task_order=order)
    if args.samples_per_task is not None:
        scenario = replace(scenario, samples_per_task=args.samples_per_task)
    cfg = replace(cfg, network=network, scenario=scenario)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = (lambda msg: None) if args.quiet else (lambda msg: print(msg, flush=True))
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = apply_overrides(cfg, args).validate()
        if args.verb == "train":
            run_training(cfg, log=log)
        elif args.verb == "eval":
            run_evaluation(cfg, log=log)
        elif args.verb == "search":
            run_search_only(cfg, log=log)
        else:
            run_experiment(cfg, log=log)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as err:
        print(f"data format error: {err}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleSearchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
