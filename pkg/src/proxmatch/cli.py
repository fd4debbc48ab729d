"""Command-line interface: calibration, simulation, and the staged pipeline.

Each stage reads and writes plain files, so stages can run separately or via
``pipeline``, which chains them through the exact same readers and writers
and therefore produces byte-identical outputs. Exit codes: 0 on success, 2
for invalid inputs or configuration, 1 for unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from . import io
from .edge import ACTIVE_DEFAULT, SESSION_GAP_S, Activity, run_edge
from .ekf import DT_LINEAR, DT_SQUARED, EkfParams
from .matcher import EVENT_WINDOW_S, SURE_MARGIN_M, MatchProblem, evaluate, solve
from .pathloss import DEFAULT_MODEL, fit, residual_variance
from .simulator import GroundTruth, generate, scenario_static, scenario_swap

__all__ = ["main"]


def _parse_active(csv_names: str) -> frozenset[Activity]:
    classes = set()
    for name in csv_names.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            cls = Activity(name)
        except ValueError:
            raise ValueError(
                f"unknown activity class {name!r}; choose from "
                f"{', '.join(a.value for a in Activity)}"
            ) from None
        if cls is Activity.INACTIVE:
            raise ValueError("'inactive' cannot count as active")
        classes.add(cls)
    if not classes:
        raise ValueError("at least one active class is required")
    return frozenset(classes)


def _load_params(args: argparse.Namespace) -> EkfParams:
    """Filter config from --config (a bare path-loss model JSON is accepted
    and completed with defaults), with flag overrides applied."""
    if args.config:
        doc = io._read_json(args.config)
        if {"q", "r"} <= doc.keys():
            params = EkfParams.from_dict(doc)
        else:
            params = EkfParams(model=io.read_model(args.config))
    else:
        params = EkfParams()
    if args.r is not None:
        params = dataclasses.replace(params, r=args.r)
    if args.dt_mode is not None:
        params = dataclasses.replace(params, dt_mode=args.dt_mode)
    return params


def _estimate_stage(
    ads_path: Path,
    out_path: Path,
    params: EkfParams,
    gap: float,
    active: frozenset[Activity],
) -> int:
    ads, skipped = io.read_advertisements(ads_path)
    for lineno, reason in skipped:
        print(f"{ads_path}:{lineno}: skipped: {reason}", file=sys.stderr)
    reports = run_edge(ads, params, gap=gap, active=active)
    io.write_reports(out_path, reports)
    print(f"{len(reports)} report(s) from {len(ads)} advertisement(s) -> {out_path}")
    return 0


def _match_stage(reports_path: Path, out_path: Path, margin: float, window: float) -> int:
    problem = MatchProblem.from_reports(io.read_reports(reports_path))
    results = solve(problem, threshold=margin, window=window)
    io.write_matches(out_path, results)
    sure = sum(1 for r in results if r.wearable is not None and r.trust.value == "sure")
    unassigned = sum(1 for r in results if r.wearable is None)
    print(
        f"{len(results)} session(s): {sure} sure, "
        f"{len(results) - sure - unassigned} unsure, {unassigned} unassigned -> {out_path}"
    )
    return 0


def _eval_summary(report) -> str:
    d = report.to_dict()

    def pct(m):
        return f"{m['percent']}% ({m['ratio']})" if m else "n/a"

    return (
        f"total {d['total']}  accuracy {pct(d['accuracy'])}  "
        f"recall {pct(d['recall'])}  precision {pct(d['precision'])}"
    )


def cmd_fit(args: argparse.Namespace) -> int:
    samples = io.read_samples(args.samples)
    model = fit(samples, x0=args.x0)
    var = residual_variance(model, samples)
    print(
        f"n={model.n!r} x0_m={model.x0!r} rssi0_db={model.rssi0!r} "
        f"residual_variance_db2={var!r} ({len(samples)} samples)"
    )
    if args.out:
        io.write_model(args.out, model)
        print(f"model -> {args.out}")
    return 0


def cmd_scenario(args: argparse.Namespace) -> int:
    if args.kind == "static":
        config = scenario_static(
            args.workers,
            args.spacing,
            args.duration,
            args.bystanders,
            seed=args.seed,
            noise_std=args.noise_std,
            drop_prob=args.drop_prob,
        )
    else:
        swaps = [float(t) for t in args.swap_times.split(",") if t.strip()] if args.swap_times else []
        config = scenario_swap(
            args.workers,
            args.spacing,
            swaps,
            duration=args.duration,
            seed=args.seed,
            noise_std=args.noise_std,
            drop_prob=args.drop_prob,
        )
    io.write_scenario(args.out, config)
    print(f"scenario ({len(config.workers)} wearables, {len(config.tools)} tags) -> {args.out}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = io.read_scenario(args.scenario)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ads, truth = generate(config)
    io.write_advertisements(out / "advertisements.jsonl", ads)
    io.write_truth(out / "truth.jsonl", truth.sessions)
    print(f"{len(ads)} advertisement(s), {len(truth.sessions)} truth session(s) -> {out}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    return _estimate_stage(
        Path(args.advertisements),
        Path(args.out),
        _load_params(args),
        args.gap_s,
        _parse_active(args.active_classes),
    )


def cmd_match(args: argparse.Namespace) -> int:
    return _match_stage(Path(args.reports), Path(args.out), args.margin_m, args.adv_interval_s)


def cmd_evaluate(args: argparse.Namespace) -> int:
    results = io.read_matches(args.matches)
    truth = io.read_truth(args.truth)
    report = evaluate(results, truth)
    print(_eval_summary(report))
    if args.out:
        io.write_eval(args.out, report)
        print(f"metrics -> {args.out}")
    return 0


def _write_errors_csv(path: Path, reports, truth: GroundTruth) -> None:
    """Per-report ranging error against the true distance at the session midpoint."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["wearable", "tag", "start_s", "stop_s", "estimate_m", "true_m", "error_m"])
        for r in reports:
            mid = 0.5 * (r.start + r.stop)
            true = truth.true_distance(r.wearable, r.tag, mid)
            w.writerow(
                [r.wearable, r.tag, repr(r.start), repr(r.stop),
                 repr(r.distance), repr(true), repr(r.distance - true)]
            )


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = io.read_scenario(args.scenario)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = _load_params(args)
    active = _parse_active(args.active_classes)

    def stage(name, fn):
        try:
            return fn()
        except (ValueError, OSError) as e:
            raise ValueError(f"[{name}] {e}") from e
        except Exception as e:
            raise RuntimeError(f"[{name}] {e}") from e

    def simulate():
        ads, truth = generate(config)
        io.write_advertisements(out / "advertisements.jsonl", ads)
        io.write_truth(out / "truth.jsonl", truth.sessions)
        return truth

    truth = stage("simulate", simulate)
    stage(
        "estimate",
        lambda: _estimate_stage(
            out / "advertisements.jsonl", out / "reports.jsonl", params, args.gap_s, active
        ),
    )
    stage(
        "match",
        lambda: _match_stage(
            out / "reports.jsonl", out / "matches.jsonl", args.margin_m, args.adv_interval_s
        ),
    )

    def evaluate_stage():
        results = io.read_matches(out / "matches.jsonl")
        truth_records = io.read_truth(out / "truth.jsonl")
        report = evaluate(results, truth_records)
        io.write_eval(out / "metrics.json", report)
        return report

    report = stage("evaluate", evaluate_stage)
    stage(
        "errors",
        lambda: _write_errors_csv(out / "errors.csv", io.read_reports(out / "reports.jsonl"), truth),
    )
    print(_eval_summary(report))
    print(f"outputs -> {out}")
    return 0


def _add_estimate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="filter config JSON (a bare path-loss model JSON also works)")
    p.add_argument("--r", type=float, default=None, help="measurement noise variance override, dB^2")
    p.add_argument(
        "--dt-mode", choices=[DT_SQUARED, DT_LINEAR], default=None,
        help="how predicted variance grows with the observation gap",
    )
    p.add_argument(
        "--gap-s", type=float, default=SESSION_GAP_S,
        help="pause that splits two sessions (default %(default)s)",
    )
    p.add_argument(
        "--active-classes", default="usage",
        help="comma-separated activity classes that count as active (default %(default)s)",
    )


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--margin-m", type=float, default=SURE_MARGIN_M,
        help="distance lead required for a sure assignment (default %(default)s)",
    )
    p.add_argument(
        "--adv-interval-s", type=float, default=EVENT_WINDOW_S,
        help="window for treating session starts as simultaneous (default %(default)s)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxmatch",
        description="BLE proximity pipeline: ranging calibration, distance estimation, "
        "asset-operator matching, and scenario simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a path-loss model to distance/RSSI samples")
    p.add_argument("samples", help="CSV with header distance_m,rssi_db")
    p.add_argument("--x0", type=float, default=1.0, help="reference distance, m (default %(default)s)")
    p.add_argument("-o", "--out", help="write the fitted model JSON here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("scenario", help="build a synthetic scenario description")
    kind = p.add_subparsers(dest="kind", required=True)
    for name in ("static", "swap"):
        k = kind.add_parser(name)
        k.add_argument("-n", "--workers", type=int, required=True)
        k.add_argument("--spacing", type=float, required=True, help="worker spacing, m")
        k.add_argument("--duration", type=float, default=360.0)
        k.add_argument("--seed", type=int, default=0)
        k.add_argument("--noise-std", type=float, default=6.99, help="noise std, dB")
        k.add_argument("--drop-prob", type=float, default=0.0)
        k.add_argument("-o", "--out", required=True, help="scenario JSON path")
        if name == "static":
            k.add_argument("--bystanders", type=int, default=0)
        else:
            k.add_argument("--swap-times", default="", help="comma-separated seconds")
        k.set_defaults(func=cmd_scenario)

    p = sub.add_parser("simulate", help="synthesize advertisements and ground truth")
    p.add_argument("scenario", help="scenario JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="advertisements -> per-session distance reports")
    p.add_argument("advertisements", help="advertisement JSONL (or CSV)")
    p.add_argument("-o", "--out", default="reports.jsonl")
    _add_estimate_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("match", help="distance reports -> operator assignments")
    p.add_argument("reports", help="distance report JSONL")
    p.add_argument("-o", "--out", default="matches.jsonl")
    _add_match_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("evaluate", help="score assignments against ground truth")
    p.add_argument("matches", help="match JSONL")
    p.add_argument("truth", help="truth JSONL")
    p.add_argument("-o", "--out", help="write metrics JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="simulate, estimate, match, and evaluate in one run")
    p.add_argument("scenario", help="scenario JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    _add_estimate_flags(p)
    _add_match_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - defensive
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
