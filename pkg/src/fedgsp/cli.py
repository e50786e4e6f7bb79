"""Experiment runner CLI: ``run``, ``ablation``, ``grid``, ``report``.

Every run writes a manifest (config snapshot + content hash + timestamps), a
per-round CSV with a fixed column schema, and a summary JSON. CSV bytes are a
pure function of the config, so two runs of the same config diff clean; only
manifests carry wall-clock timestamps.

Exit codes: 0 success, 1 config error, 2 runtime failure. The output root is
``--out``, else ``$FEDGSP_OUT_ROOT``, else ``./runs``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ResolvedRun, load_config_file, parse_override, resolve
from .errors import ConfigurationError
from .metrics import cpd
from .orchestrator import run_experiment

OUT_ROOT_ENV = "FEDGSP_OUT_ROOT"

CSV_COLUMNS = (
    "round",
    "M",
    "sampled_groups",
    "accuracy",
    "loss",
    "median_group_cpd",
    "t_comp_cum_s",
    "t_comm_cum_s",
    "d_comm_cum_mb",
)

ABLATION_ARMS = ("fedavg", "naive_gsp", "naive_gsp_icg", "fedgsp")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _out_root(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ROOT_ENV, "runs"))


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_rounds_csv(path: Path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.round_index,
                    r.group_count,
                    r.sampled_groups,
                    _fmt(r.accuracy),
                    _fmt(r.loss),
                    _fmt(r.median_group_cpd),
                    _fmt(r.t_comp_cum_s),
                    _fmt(r.t_comm_cum_s),
                    _fmt(r.d_comm_cum_mb),
                ]
            )


def _rounds_to_target(rows: list[tuple[int, float]], target: float) -> int | None:
    for round_index, accuracy in rows:
        if accuracy >= target:
            return round_index
    return None


def _summary(records, target: float) -> dict:
    rows = [(r.round_index, r.accuracy) for r in records]
    return {
        "final_accuracy": records[-1].accuracy if records else None,
        "final_loss": records[-1].loss if records else None,
        "rounds_to_target": _rounds_to_target(rows, target),
        "target_accuracy": target,
        "rounds": len(records),
    }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _resolve_args_config(args) -> ResolvedRun:
    settings = load_config_file(args.config)
    overrides = dict(parse_override(item) for item in args.set or [])
    return resolve(settings, overrides)


def _execute_run(resolved: ResolvedRun, run_dir: Path, args) -> dict:
    """Run one experiment into ``run_dir``; returns the summary payload."""
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = run_dir / "manifest.json"
    csv_path = run_dir / "rounds.csv"
    summary_path = run_dir / "summary.json"
    manifest = {
        "artifact_version": __version__,
        "config": resolved.snapshot,
        "config_hash": resolved.content_hash,
        "seed": resolved.seed,
        "started_at": _now(),
        "finished_at": None,
        "status": "running",
        "csv_path": csv_path.name,
        "summary_path": summary_path.name,
    }
    _write_json(manifest_path, manifest)

    grouping_dump = None
    on_round = None
    if getattr(args, "dump_groupings", False):
        grouping_dump = open(run_dir / "groupings.jsonl", "w", encoding="utf-8")

        def on_round(state, record):
            grouping_dump.write(state.last_plan.to_json())
            grouping_dump.write("\n")

    try:
        records, _ = run_experiment(
            resolved.experiment,
            resume_from=getattr(args, "resume", None),
            checkpoint_path=str(run_dir / "checkpoint.json")
            if getattr(args, "checkpoint_every", None)
            else None,
            checkpoint_every=getattr(args, "checkpoint_every", None),
            on_round=on_round,
        )
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["finished_at"] = _now()
        _write_json(manifest_path, manifest)
        raise
    finally:
        if grouping_dump is not None:
            grouping_dump.close()

    _write_rounds_csv(csv_path, records)
    summary = _summary(records, resolved.target_accuracy)
    _write_json(summary_path, summary)
    manifest["status"] = "completed"
    manifest["finished_at"] = _now()
    _write_json(manifest_path, manifest)
    return summary


def cmd_run(args) -> int:
    resolved = _resolve_args_config(args)
    name = args.name or Path(args.config).stem
    run_dir = _out_root(args) / name
    summary = _execute_run(resolved, run_dir, args)
    print(f"run complete: {run_dir} (final accuracy {summary['final_accuracy']})")
    return 0


def _first_round_pair_cpds(resolved: ResolvedRun):
    """(first, second, cpd) rows for the round-1 grouping of this arm."""
    from .orchestrator import new_experiment_state, _build_plan

    state = new_experiment_state(resolved.experiment)
    plan = _build_plan(state, 1)
    if resolved.experiment.algorithm == "fedavg":
        units = [c.distribution.counts for c in state.clients]
    else:
        units = [
            sum(state.clients[c].distribution.counts for c in group) for group in plan.groups
        ]
    rows = []
    for i in range(len(units)):
        for j in range(i + 1, len(units)):
            rows.append((i, j, cpd(units[i], units[j])))
    return rows


def cmd_ablation(args) -> int:
    settings = load_config_file(args.config)
    overrides = dict(parse_override(item) for item in args.set or [])
    name = args.name or f"{Path(args.config).stem}-ablation"
    root = _out_root(args) / name
    root.mkdir(parents=True, exist_ok=True)

    effective = dict(settings)
    effective.update(overrides)
    fixed_unset = int(effective.get("fixed_group_count", "0") or 0) == 0

    comparison = []
    cpd_rows = []
    for arm in ABLATION_ARMS:
        arm_overrides = dict(overrides)
        arm_overrides["algorithm"] = arm
        if arm in ("naive_gsp", "naive_gsp_icg") and fixed_unset:
            # Freeze the naive arms at the growth schedule's starting point.
            base = resolve(settings, {**overrides, "algorithm": "fedgsp"})
            arm_overrides["fixed_group_count"] = str(base.experiment.growth(1))
        resolved = resolve(settings, arm_overrides)
        summary = _execute_run(resolved, root / arm, args)
        comparison.append(
            (
                arm,
                summary["final_accuracy"],
                summary["final_loss"],
                summary["rounds_to_target"],
            )
        )
        for i, j, value in _first_round_pair_cpds(resolved):
            cpd_rows.append((arm, i, j, value))

    with open(root / "comparison.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["algorithm", "final_accuracy", "final_loss", "rounds_to_target"])
        for arm, acc, loss, rtt in comparison:
            writer.writerow([arm, _fmt(acc), _fmt(loss), "" if rtt is None else rtt])
    with open(root / "cpd_pairs.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["algorithm", "first", "second", "cpd"])
        for arm, i, j, value in cpd_rows:
            writer.writerow([arm, i, j, _fmt(value)])
    print(f"ablation complete: {root}")
    return 0


def _parse_list(raw: str, kind) -> list:
    items = [part.strip() for part in raw.split(",") if part.strip()]
    if not items:
        raise ConfigurationError(f"empty list: {raw!r}")
    return [kind(item) for item in items]


def cmd_grid(args) -> int:
    settings = load_config_file(args.config)
    overrides = dict(parse_override(item) for item in args.set or [])
    kinds = _parse_list(args.kinds, str)
    alphas = _parse_list(args.alphas, float)
    betas = _parse_list(args.betas, int)

    name = args.name or f"{Path(args.config).stem}-grid"
    root = _out_root(args) / name
    root.mkdir(parents=True, exist_ok=True)

    rows = []
    for kind in kinds:
        for alpha in alphas:
            for beta in betas:
                cell = dict(overrides)
                cell["growth.kind"] = kind
                cell["growth.alpha"] = repr(alpha)
                cell["growth.beta"] = str(beta)
                resolved = resolve(settings, cell)
                records, _ = run_experiment(resolved.experiment)
                rows.append(
                    (
                        kind,
                        alpha,
                        beta,
                        records[-1].loss if records else math.nan,
                        records[-1].accuracy if records else math.nan,
                    )
                )
    with open(root / "grid.csv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kind", "alpha", "beta", "final_loss", "final_accuracy"])
        for kind, alpha, beta, loss, acc in rows:
            writer.writerow([kind, _fmt(alpha), beta, _fmt(loss), _fmt(acc)])
    print(f"grid complete: {root} ({len(rows)} cells)")
    return 0


def cmd_report(args) -> int:
    with open(args.csv, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ConfigurationError(f"unexpected CSV header in {args.csv}: {header}")
        rows = [(int(row[0]), float(row[3]), float(row[4])) for row in reader]
    summary = {
        "final_accuracy": rows[-1][1] if rows else None,
        "final_loss": rows[-1][2] if rows else None,
        "rounds_to_target": _rounds_to_target([(r, a) for r, a, _ in rows], args.target_accuracy),
        "target_accuracy": args.target_accuracy,
        "rounds": len(rows),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="Path to the config file.")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="Override a config key (repeatable, applied after the file).",
    )
    parser.add_argument("--out", help=f"Output root (default ${OUT_ROOT_ENV} or ./runs).")
    parser.add_argument("--name", help="Run directory name (default: config stem).")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedgsp",
        description="Deterministic grouped sequential-to-parallel training simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one experiment from a config file.")
    _add_common(run)
    run.add_argument(
        "--dump-groupings",
        action="store_true",
        help="Write each round's grouping plan to groupings.jsonl.",
    )
    run.add_argument(
        "--checkpoint-every",
        type=int,
        metavar="N",
        help="Write checkpoint.json after every N rounds.",
    )
    run.add_argument("--resume", metavar="PATH", help="Resume from a checkpoint file.")
    run.set_defaults(func=cmd_run)

    ablation = sub.add_parser(
        "ablation", help=f"Run the {', '.join(ABLATION_ARMS)} arms on a shared task/seed."
    )
    _add_common(ablation)
    ablation.set_defaults(func=cmd_ablation)

    grid = sub.add_parser("grid", help="Growth-function grid search; emits grid.csv.")
    _add_common(grid)
    grid.add_argument("--kinds", default="linear,log,exp", help="Comma-separated growth kinds.")
    grid.add_argument("--alphas", required=True, help="Comma-separated alpha values.")
    grid.add_argument("--betas", required=True, help="Comma-separated beta values.")
    grid.set_defaults(func=cmd_grid)

    report = sub.add_parser("report", help="Re-derive a summary from an existing rounds CSV.")
    report.add_argument("--csv", required=True, help="Path to a rounds.csv file.")
    report.add_argument(
        "--target-accuracy",
        type=float,
        default=0.8,
        help="Accuracy threshold for rounds_to_target (default 0.8).",
    )
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # mid-run failure: manifest already marked failed
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
