#!/usr/bin/env python3
"""
UTG toolkit command line

Subcommands: stats, discretize, gen-negatives, train, eval, run.
Settings resolve as command-line flags > --config file > environment >
config.py defaults. Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml
from loguru import logger
from pydantic import ValidationError

from batch_runs import BatchRunManager, write_json_atomic
from config import GRANULARITIES, LOG_SETTINGS, MODELS, OUTPUT_SETTINGS
from evaluation import generate_negatives
from exceptions import CsvParseError, ParameterError
from ingest import CsvSchema, SplitSpec, dataset_stats, parse_csv
from input_mapper import discretize, snapshot_manifest
from pipeline import RunConfig, load_splits, negatives_file, negatives_settings, run_single, train_logistic, write_negatives
from seeding import derive_seed

USAGE_ERRORS = (ParameterError, CsvParseError, FileNotFoundError, ValidationError)


def setup_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_SETTINGS["format"])


def load_config_file(path: str | None) -> dict:
    """YAML (or JSON, which YAML accepts) mapping of RunConfig fields."""
    if not path:
        return {}
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: expected a mapping of settings")
    return data


def _set(target: dict, key: str, value) -> None:
    if value is not None:
        target[key] = value


def build_run_config(args: argparse.Namespace, **overrides) -> RunConfig:
    """Merge the config file with the flags given on the command line."""
    data = load_config_file(getattr(args, "config", None))
    _set(data, "dataset", getattr(args, "data", None))

    schema = dict(data.get("csv_schema") or {})
    _set(schema, "header", getattr(args, "header", None))
    data["csv_schema"] = schema

    split = dict(data.get("split") or {})
    for name in ("train_frac", "val_frac", "test_frac"):
        _set(split, name, getattr(args, name, None))
    data["split"] = split

    training = dict(data.get("training") or {})
    for flag, name in (("epochs", "epochs"), ("patience", "patience"), ("train_mode", "mode"),
                       ("optimizer", "optimizer"), ("tolerance", "tolerance")):
        _set(training, name, getattr(args, flag, None))
    if training:
        data["training"] = training

    for flag, name in (
        ("boundaries", "boundaries"), ("granularity", "granularity"), ("model", "model"),
        ("mode", "mode"), ("tie_policy", "tie_policy"), ("q", "q"), ("pool", "pool"),
        ("negatives", "negatives_path"), ("weights", "weights_path"), ("seeds", "seeds"),
        ("batch_size", "batch_size"), ("window_rule", "window_rule"), ("lr", "learning_rates"),
        ("output_dir", "output_directory"),
    ):
        _set(data, name, getattr(args, flag, None))
    if getattr(args, "seed", None) is not None:
        data["seeds"] = [args.seed]
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data)


def emit_json(payload, output: str | None) -> None:
    if output:
        path = write_json_atomic(payload, output)
        print(f"✓ Saved to: {path}")
    else:
        print(json.dumps(payload, indent=OUTPUT_SETTINGS["json_indent"], sort_keys=True))


# ---------------------------------------------------------------- commands


def cmd_stats(args: argparse.Namespace) -> int:
    schema = CsvSchema(header=args.header)
    split = SplitSpec(**{k: v for k, v in (("train_frac", args.train_frac), ("val_frac", args.val_frac),
                                           ("test_frac", args.test_frac)) if v is not None})
    stream = parse_csv(args.data, schema)
    stats = dataset_stats(stream, split, args.granularity)
    payload = {"dataset": Path(args.data).stem, **stats.to_dict()}
    emit_json(payload, args.output)
    return 0


def cmd_discretize(args: argparse.Namespace) -> int:
    stream = parse_csv(args.data, CsvSchema(header=args.header))
    seq = discretize(
        stream,
        granularity=None if args.auto_finest or args.count else args.granularity,
        count=args.count,
        auto_finest=args.auto_finest,
    )
    lines = [json.dumps(record) for record in snapshot_manifest(seq)]
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"✓ {len(seq)} snapshots written to: {args.output}")
    else:
        print("\n".join(lines))
    return 0


def cmd_gen_negatives(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    seed = cfg.seeds[0]
    _, (train, _, test) = load_splits(cfg)
    negatives = generate_negatives(
        train, test, q=cfg.q, seed=derive_seed(seed, "negatives"), pool=cfg.pool, num_nodes=train.num_nodes,
    )
    path = write_negatives(negatives, Path(args.output or negatives_file(cfg, seed)), negatives_settings(cfg, test))
    historical, random = negatives.composition
    print(f"✓ {len(negatives)} positives x {negatives.q} negatives "
          f"({historical} historical, {random} random) saved to: {path}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = build_run_config(args, model="logistic")
    seed = cfg.seeds[0]
    stream, splits = load_splits(cfg)
    _, report, partition = train_logistic(cfg, stream, splits, seed)
    payload = {"dataset": cfg.dataset_name, "seed": seed, "granularity_width": partition.width, **report.to_dict()}
    payload["manifest"] = {**cfg.manifest(), "seeds": [seed]}
    output = args.output or cfg.output_directory / f"train_{cfg.dataset_name}_{report.mode}_seed{seed}.json"
    print("=" * 50)
    print(f"Best epoch {report.best_epoch}: validation MRR {report.best_val_mrr:.4f}")
    emit_json(payload, str(output))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    seed = cfg.seeds[0]
    record = run_single(cfg, seed)
    record["manifest"] = {**cfg.manifest(), "seeds": [seed]}
    output = args.output or cfg.output_directory / f"results_{cfg.model}_{cfg.mode}_seed{seed}.json"
    print("=" * 50)
    print(f"✓ {cfg.model} ({cfg.mode}) seed {seed}: MRR = {record['mrr']:.4f}")
    emit_json(record, str(output))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    models = args.models or [None]
    status = 0
    for model in models:
        cfg = build_run_config(args, model=model)
        manager = BatchRunManager(cfg, progress=args.progress)
        summary = manager.run_batch()
        manager.save_batch_results()
        if not summary["complete"]:
            status = 1
    return status


# ---------------------------------------------------------------- parser


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="event CSV: src,dst,t[,t_end][,weight]")
    p.add_argument("--header", action=argparse.BooleanOptionalAction, default=None,
                   help="first row is a header (default: detect)")
    p.add_argument("--config", help="YAML or JSON file with run settings")


def _split_args(p: argparse.ArgumentParser, boundaries: bool = True) -> None:
    p.add_argument("--train-frac", type=float)
    p.add_argument("--val-frac", type=float)
    p.add_argument("--test-frac", type=float)
    if boundaries:
        p.add_argument("--boundaries", type=int, nargs=2, metavar=("VAL_START", "TEST_START"),
                   help="split at timestamps instead of fractions")


def _granularity(value: str) -> str:
    if value == "auto" or value in GRANULARITIES or value.isdigit():
        return value
    raise argparse.ArgumentTypeError(f"expected auto, a width in seconds or one of {sorted(GRANULARITIES)}")


def _eval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["streaming", "deployed"])
    p.add_argument("--tie-policy", choices=["pessimistic", "optimistic", "mean"])
    p.add_argument("--q", type=int, help="negatives per positive edge")
    p.add_argument("--pool", choices=["source", "global"])
    p.add_argument("--batch-size", type=int)
    p.add_argument("--window-rule", choices=["test_span", "ratio"])
    p.add_argument("--granularity", type=_granularity)


def _train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, nargs="+", help="learning rate(s); several are model-selected")
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--optimizer", choices=["sgd", "adam"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="utg", description="Unified temporal graph evaluation toolkit")
    parser.add_argument("--log-level", default=LOG_SETTINGS["level"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics and surprise index")
    _data_args(p)
    _split_args(p, boundaries=False)
    p.add_argument("--granularity", type=_granularity, default="auto")
    p.add_argument("--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("discretize", help="snapshot manifest (JSONL) for a granularity")
    _data_args(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--granularity", type=_granularity)
    group.add_argument("--count", type=int)
    group.add_argument("--auto-finest", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("gen-negatives", help="fixed negatives file (JSONL)")
    _data_args(p)
    _split_args(p)
    p.add_argument("--q", type=int)
    p.add_argument("--pool", choices=["source", "global"])
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--output")
    p.set_defaults(func=cmd_gen_negatives)

    p = sub.add_parser("train", help="train the logistic scorer, write a training report")
    _data_args(p)
    _split_args(p)
    _train_args(p)
    p.add_argument("--model", choices=["logistic"], default="logistic")
    p.add_argument("--mode", dest="train_mode", choices=["utg", "per_snapshot", "accumulated"])
    p.add_argument("--granularity", type=_granularity)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--output")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate one model for one seed")
    _data_args(p)
    _split_args(p)
    _eval_args(p)
    _train_args(p)
    p.add_argument("--model", choices=sorted(MODELS))
    p.add_argument("--negatives", help="negatives JSONL to use instead of generating")
    p.add_argument("--weights", help="training report with logistic weights (skips training)")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="full pipeline over several seeds and models")
    _data_args(p)
    _split_args(p)
    _eval_args(p)
    _train_args(p)
    p.add_argument("--models", nargs="+", choices=sorted(MODELS))
    p.add_argument("--train-mode", choices=["utg", "per_snapshot", "accumulated"])
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--output-dir")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.opt(exception=e).debug("run failed")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
