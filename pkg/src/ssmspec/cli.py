from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .deep_ssm import save_checkpoint
from .errors import ConfigError, ExperimentDiverged
from .harness.config import ExperimentConfig
from .harness.correlation import summarize_rows
from .harness.datasets import TEST_NAMES, generate_dataset, load_dataset, make_test_inputs, save_dataset
from .harness.experiment import (
    BASELINES,
    collect_runs,
    correlation_table,
    group_by_repetition,
    load_records,
    output_scale,
    run_experiment,
    summarize,
    train_on_dataset,
    write_result,
)
from .harness.figures import DEMO_EXPECTED_ORDER, demo_ordering
from .harness.sweeps import curve_rows, epoch_sweep, k_sweep
from .presets import load_config, read_config_doc
from .sinks import dispatch_outputs
from .validator import validate_config

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load(arg: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> Tuple[Optional[ExperimentConfig], int]:
    try:
        return load_config(arg, overrides), EXIT_OK
    except FileNotFoundError as e:
        print(f"[ERROR] {e}")
    except ConfigError as e:
        for err in e.errors:
            print(f"[ERROR] {err}")
    return None, EXIT_CONFIG


def _write_table(rows: Any, out_dir: Path, stem: str) -> None:
    for path in dispatch_outputs(rows, [{"path": str(out_dir / f"{stem}.json")}, {"path": str(out_dir / f"{stem}.csv")}], name=stem):
        print(f"Wrote {path}")


def cmd_generate(args: argparse.Namespace) -> int:
    overrides: Dict[str, Any] = {}
    if args.plant:
        overrides["plant"] = args.plant
    if args.num is not None:
        overrides["num_datasets"] = args.num
    if args.len is not None:
        overrides["length"] = args.len
        overrides.setdefault("i_max", args.len // 2)
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg, rc = _load(args.config, overrides)
    if cfg is None:
        return rc
    out = Path(args.out)
    for k in range(1, cfg.num_datasets + 1):
        save_dataset(out, generate_dataset(cfg, k))
    (out / "config.json").write_text(json.dumps(cfg.model_dump(mode="json"), indent=2), encoding="utf-8")
    print(f"Wrote {cfg.num_datasets} datasets to {out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    overrides: Dict[str, Any] = {}
    if args.epochs is not None:
        overrides["train"] = {"epochs": args.epochs}
    cfg, rc = _load(args.config, overrides)
    if cfg is None:
        return rc
    if args.data:
        if args.dataset is None:
            print("[ERROR] --data requires --dataset ID")
            return EXIT_FAIL
        try:
            ds = load_dataset(args.data, args.dataset)
        except FileNotFoundError as e:
            print(f"[ERROR] {e}")
            return EXIT_FAIL
    else:
        ds = generate_dataset(cfg, args.dataset or cfg.num_datasets)
    tests = make_test_inputs(cfg)
    out = Path(args.out)
    epochs: List[Dict[str, Any]] = []
    state: Dict[str, Any] = {}

    def on_epoch(rec, outcome) -> None:
        epochs.append(rec.to_dict())
        state["model"] = outcome.model
        state["epoch"] = rec.epoch

    record = train_on_dataset(cfg, ds, tests, output_scale(cfg, tests), on_epoch=on_epoch)
    dispatch_outputs(epochs, str(out / f"epochs_{ds.id}.jsonl"), name="epochs")
    dispatch_outputs(record.to_dict(), str(out / f"record_{ds.id}.json"), name="record")
    print(f"Wrote {out / f'epochs_{ds.id}.jsonl'}")
    if "model" in state:
        path = save_checkpoint(out / f"checkpoint_{ds.id}.json", state["model"], state["epoch"])
        print(f"Wrote {path}")
    if not record.ok:
        print(f"[WARN] run diverged: {record.error}")
        return EXIT_DIVERGED
    for name in TEST_NAMES:
        print(f"{name} MSE: {record.test_mse[name]:.6g}")
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    try:
        records = load_records(args.runs)
    except FileNotFoundError as e:
        print(f"[ERROR] {e}")
        return EXIT_FAIL
    if not records:
        print(f"[ERROR] no run records in {args.runs}")
        return EXIT_FAIL
    metrics = BASELINES if args.metric == "all" else (args.metric,)
    reps = group_by_repetition(records)
    tables = [correlation_table(rep, args.epoch, metrics=metrics) for rep in reps]
    rows = tables[0] if len(tables) == 1 else summarize_rows(tables, TEST_NAMES)
    dispatch_outputs(rows, "-", name="correlation")
    out = Path(args.out or (args.runs if Path(args.runs).is_dir() else Path(args.runs).parent))
    _write_table(rows, out, f"correlation_epoch{args.epoch}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg, rc = _load(args.config)
    if cfg is None:
        return rc
    out = Path(args.out)
    try:
        runs = collect_runs(cfg, args.workers)
    except ExperimentDiverged as e:
        print(f"[ERROR] {e}")
        return EXIT_DIVERGED
    write_result(summarize(cfg, runs), out)
    if args.mode == "epoch":
        rows = curve_rows(epoch_sweep(cfg, runs), "epoch")
    else:
        rows = curve_rows(k_sweep(cfg, runs), "K")
    _write_table(rows, out, f"sweep_{args.mode}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg, rc = _load(args.config)
    if cfg is None:
        return rc
    try:
        result = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    except ExperimentDiverged as e:
        print(f"[ERROR] {e}")
        return EXIT_DIVERGED
    dispatch_outputs(result.summary, "-", name="summary")
    print(f"Wrote {Path(args.out) / 'records.jsonl'}")
    print(f"Wrote {Path(args.out) / 'summary.json'}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        doc = read_config_doc(args.input)
    except FileNotFoundError as e:
        print(f"[ERROR] {e}")
        return EXIT_CONFIG
    except ConfigError as e:
        for err in e.errors:
            print(f"[ERROR] {err}")
        return EXIT_CONFIG
    errors, warnings = validate_config(doc)
    for w in warnings:
        print(f"[WARN] {w}")
    if errors:
        for e in errors:
            print(f"[ERROR] {e}")
        return EXIT_CONFIG
    print("OK: config is valid")
    return EXIT_OK


def cmd_demo_fig2(args: argparse.Namespace) -> int:
    ordering = demo_ordering(K=args.K, T=args.T, seed=args.seed)
    for name, value in ordering:
        print(f"{name}  R={value:.6f}")
    names = tuple(name for name, _ in ordering)
    print(" > ".join(names))
    if args.K == 12 and names != DEMO_EXPECTED_ORDER:
        print(f"[WARN] expected ordering {' > '.join(DEMO_EXPECTED_ORDER)}")
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ssmspec",
        description="K-spectral metric experiments for deep SSMs (generate | train | correlate | sweep | run | validate | demo-fig2)",
    )
    p.add_argument("-v", "--verbose", action="count", default=0, help="More logging (-v info, -vv debug)")
    sub = p.add_subparsers(dest="cmd", required=True)

    pg = sub.add_parser("generate", help="Generate identification datasets")
    pg.add_argument("--config", help="Preset 'desk' | 'full' | path/to/config.json")
    pg.add_argument("--plant", choices=["wiener", "hammerstein"])
    pg.add_argument("--num", type=int, help="Number of datasets")
    pg.add_argument("--len", type=int, help="Samples per dataset")
    pg.add_argument("--seed", type=int)
    pg.add_argument("--out", required=True, help="Output directory")
    pg.set_defaults(func=cmd_generate)

    pt = sub.add_parser("train", help="Train one model and emit per-epoch records")
    pt.add_argument("--config", help="Preset 'desk' | 'full' | path/to/config.json")
    pt.add_argument("--data", help="Directory written by `generate` (default: generate in memory)")
    pt.add_argument("--dataset", type=int, help="Dataset id (default: the richest dataset)")
    pt.add_argument("--epochs", type=int, help="Override train.epochs")
    pt.add_argument("--out", required=True, help="Output directory")
    pt.set_defaults(func=cmd_train)

    pc = sub.add_parser("correlate", help="Correlation table from stored run records")
    pc.add_argument("--runs", required=True, help="Run directory or records.jsonl")
    pc.add_argument("--metric", default="all", choices=[*BASELINES, "all"])
    pc.add_argument("--epoch", type=int, default=1)
    pc.add_argument("--out", help="Output directory (default: the runs directory)")
    pc.set_defaults(func=cmd_correlate)

    ps = sub.add_parser("sweep", help="Epoch or K sweep")
    ps.add_argument("--config", help="Preset 'desk' | 'full' | path/to/config.json")
    ps.add_argument("--mode", choices=["epoch", "k"], required=True)
    ps.add_argument("--out", required=True, help="Output directory")
    ps.add_argument("--workers", type=int)
    ps.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("run", help="Full correlation experiment")
    pr.add_argument("--config", help="Preset 'desk' | 'full' | path/to/config.json")
    pr.add_argument("--out", required=True, help="Output directory")
    pr.add_argument("--workers", type=int)
    pr.set_defaults(func=cmd_run)

    pv = sub.add_parser("validate", help="Validate an experiment config file")
    pv.add_argument("input", help="Config JSON file")
    pv.set_defaults(func=cmd_validate)

    pf = sub.add_parser("demo-fig2", help="Score the four multisine illustration signals")
    pf.add_argument("--K", type=int, default=12)
    pf.add_argument("--T", type=int, default=256)
    pf.add_argument("--seed", type=int, default=0)
    pf.set_defaults(func=cmd_demo_fig2)

    return p


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    code = args.func(args)
    sys.exit(code)


def main_validate(argv: list[str] | None = None) -> None:
    ap = argparse.ArgumentParser(prog="ssmspec-validate", description="Validate an ssmspec experiment config")
    ap.add_argument("input", help="Config JSON file")
    args = ap.parse_args(argv)
    code = cmd_validate(args)
    sys.exit(code)


if __name__ == "__main__":
    main()
