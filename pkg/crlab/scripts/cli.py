"""Command-line entry point: ``crlab {analytic,sweep,mi-bench,train,check}``.

Every field of the subcommand's config model (nested models included) is
exposed as ``--<field>``; values are parsed as JSON when possible, so
``--sigma_y_grid "[0, 0.5]"`` and ``--epochs 10`` both work.
"""
import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Tuple, Type

from pydantic import BaseModel, ValidationError

from crlab.data.configs import AnalyticConfig, MiBenchConfig, SweepConfig, TrainRunConfig
from crlab.errors import CrlabError
from crlab.scripts.analytic import emit_analytic_curves, emit_leakage_curves
from crlab.scripts.check import CHECK_NAMES, run_checks
from crlab.scripts.mi_bench import run_mi_bench
from crlab.scripts.sweep import run_sweep
from crlab.scripts.train import main as train_main

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURES, EXIT_USAGE = 0, 1, 2

COMMANDS: Dict[str, Type[BaseModel]] = {
    "analytic": AnalyticConfig,
    "sweep": SweepConfig,
    "mi-bench": MiBenchConfig,
    "train": TrainRunConfig,
}

FieldPath = Tuple[str, ...]


def _json_or_str(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def _is_model(annotation) -> bool:
    return isinstance(annotation, type) and issubclass(annotation, BaseModel)


def _field_paths(model: Type[BaseModel], prefix: FieldPath = ()) -> List[FieldPath]:
    """Leaf field paths, shallow fields first so they win name clashes."""
    leaves, nested = [], []
    for name, field in model.model_fields.items():
        if _is_model(field.annotation):
            nested.extend(_field_paths(field.annotation, prefix + (name,)))
        else:
            leaves.append(prefix + (name,))
    return leaves + nested


def add_field_flags(parser: argparse.ArgumentParser, model: Type[BaseModel]) -> Dict[str, FieldPath]:
    paths = {}
    for path in _field_paths(model):
        name = path[-1]
        if name in paths:
            continue
        paths[name] = path
        parser.add_argument(
            f"--{name}", type=_json_or_str, default=None, help=f"override {'.'.join(path)}"
        )
    return paths


def build_config(model: Type[BaseModel], args: argparse.Namespace, paths: Dict[str, FieldPath]) -> BaseModel:
    data = {}
    if args.config:
        with open(args.config) as f:
            data = json.load(f)
    for name, path in paths.items():
        value = getattr(args, name)
        if value is None:
            continue
        node = data
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    return model.model_validate(data)


def build_parser() -> Tuple[argparse.ArgumentParser, Dict[str, Dict[str, FieldPath]]]:
    parser = argparse.ArgumentParser(prog="crlab")
    parser.add_argument(
        "--verbosity",
        default="info",
        choices=["debug", "info", "warning", "error"],
        help="logging level",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    paths = {}
    for command, model in COMMANDS.items():
        sub = subparsers.add_parser(command, help=model.__doc__)
        sub.add_argument("--config", type=str, default=None, help="JSON file with config values")
        paths[command] = add_field_flags(sub, model)

    check = subparsers.add_parser("check", help="run the acceptance property suite")
    check.add_argument("--skip-slow", action="store_true", help="skip the training-scale checks")
    check.add_argument("--only", nargs="+", choices=CHECK_NAMES, default=None, help="checks to run")
    check.add_argument("--workers", type=int, default=1, help="processes for the noise sweep")
    check.add_argument("--seed", type=int, default=0, help="base seed")
    return parser, paths


def run_command(command: str, cfg: BaseModel) -> int:
    if command == "analytic":
        logger.info("wrote %s", emit_analytic_curves(cfg))
        if cfg.leakage_out:
            logger.info("wrote %s", emit_leakage_curves(cfg))
        return EXIT_OK
    if command == "sweep":
        table = run_sweep(cfg)
        logger.info("wrote %s", cfg.out)
        return EXIT_FAILURES if table.failed else EXIT_OK
    if command == "mi-bench":
        frame = run_mi_bench(cfg)
        logger.info("wrote %s", cfg.out)
        return EXIT_FAILURES if frame["error"].notna().any() else EXIT_OK
    if command == "train":
        result = train_main(cfg)
        folder = os.path.dirname(cfg.out)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(cfg.out, "w") as f:
            f.write(result.model_dump_json(indent=2))
        logger.info("mae=%.5f sensitivity=%.5f, wrote %s", result.mae, result.sensitivity, cfg.out)
        return EXIT_OK
    raise ValueError(f"unknown command {command!r}")


def main(argv: Optional[List[str]] = None) -> int:
    parser, paths = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=args.verbosity.upper(),
    )

    if args.command == "check":
        results = run_checks(args.only, skip_slow=args.skip_slow, workers=args.workers, seed=args.seed)
        failed = [r.name for r in results if not r.passed]
        if failed:
            logger.error("failed checks: %s", ", ".join(failed))
            return EXIT_FAILURES
        logger.info("all %d checks passed", len(results))
        return EXIT_OK

    try:
        cfg = build_config(COMMANDS[args.command], args, paths[args.command])
    except (ValidationError, json.JSONDecodeError, OSError) as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_USAGE
    try:
        return run_command(args.command, cfg)
    except CrlabError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
