"""Command-line interface.

Subcommands: ``simulate`` (run a configured replication study),
``table2`` (null-scenario size grid), ``power`` (per-scenario power
grid), and ``analyze`` (full method battery on a CSV dataset).

Exit codes: 0 success, 2 configuration problem, 3 data problem,
4 numerical failure. The ``NPH_SEED`` environment variable overrides a
config-file seed; an explicit ``--seed`` flag beats both.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

from .data import read_dataset_csv, validate
from .errors import ConfigError, DataError, NphkitError, NumericError
from .report import (
    AnalysisReport,
    analyze_dataset,
    format_rate,
    grid_to_csv,
    report_to_csv,
    summary_to_csv,
)
from .simulate import (
    ALL_METHODS,
    BUILTIN_SCENARIOS,
    DEFAULT_SEED,
    StudyConfig,
    TrialDesign,
)
from .study import StudySummary, run_study, study_config_from_dict
from .version import PACKAGE_VERSION

_TABLE_SIZES = (300, 600, 1200)


def _env_seed() -> int | None:
    raw = os.environ.get("NPH_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"NPH_SEED must be an integer, got {raw!r}") from exc


def _resolve_seed(flag: int | None, config_seed: int | None) -> int:
    if flag is not None:
        return flag
    env = _env_seed()
    if env is not None:
        return env
    if config_seed is not None:
        return config_seed
    return DEFAULT_SEED


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _check_jobs(jobs: int) -> None:
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")


def cmd_simulate(
    config_path: str,
    out_path: str,
    seed: int | None = None,
    jobs: int = 1,
    fmt: str = "json",
) -> StudySummary:
    """Run the study described by a JSON config file and write the summary."""
    _check_jobs(jobs)
    try:
        with open(config_path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {config_path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    config = study_config_from_dict(payload)
    resolved = _resolve_seed(seed, payload.get("seed"))
    if resolved != config.seed:
        config = dataclasses.replace(config, seed=resolved)
    summary = run_study(config, parallelism=jobs)
    if fmt == "json":
        _write_text(out_path, _dump_json(summary.to_dict()))
    else:
        _write_text(out_path, summary_to_csv(summary))
    return summary


def _null_config(n_total: int, enrollment: float, replicates: int, seed: int) -> StudyConfig:
    return StudyConfig(
        scenario=BUILTIN_SCENARIOS["null"],
        design=TrialDesign(n_total=n_total, enrollment_months=float(enrollment)),
        replicates=replicates,
        seed=seed,
    )


def cmd_table2(
    out_path: str,
    enrollment: float = 18,
    jobs: int = 1,
    replicates: int = 20000,
    seed: int | None = None,
    fmt: str = "csv",
) -> list[dict]:
    """Null-scenario rejection grid: sample sizes by the nine methods."""
    _check_jobs(jobs)
    if replicates < 1:
        raise ConfigError("--replicates must be at least 1")
    resolved = _resolve_seed(seed, None)
    rows = []
    for n_total in _TABLE_SIZES:
        summary = run_study(
            _null_config(n_total, enrollment, replicates, resolved), parallelism=jobs
        )
        row: dict = {"sample_size": n_total}
        row.update(
            {name: format_rate(summary.methods[name].rejection_pct) for name in ALL_METHODS}
        )
        rows.append(row)
    if fmt == "json":
        _write_text(
            out_path,
            _dump_json(
                {
                    "enrollment_months": enrollment,
                    "replicates": replicates,
                    "seed": resolved,
                    "rows": rows,
                }
            ),
        )
    else:
        _write_text(out_path, grid_to_csv(rows, ["sample_size", *ALL_METHODS]))
    return rows


def cmd_power_figure(
    out_path: str,
    scenario: str,
    enrollment: float = 18,
    jobs: int = 1,
    replicates: int = 5000,
    seed: int | None = None,
    fmt: str = "csv",
) -> list[dict]:
    """Tidy per-method power grid for one scenario, ready for plotting."""
    _check_jobs(jobs)
    if replicates < 1:
        raise ConfigError("--replicates must be at least 1")
    if scenario not in BUILTIN_SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; built-ins: {', '.join(BUILTIN_SCENARIOS)}"
        )
    resolved = _resolve_seed(seed, None)
    rows = []
    for n_total in _TABLE_SIZES:
        config = StudyConfig(
            scenario=BUILTIN_SCENARIOS[scenario],
            design=TrialDesign(n_total=n_total, enrollment_months=float(enrollment)),
            replicates=replicates,
            seed=resolved,
        )
        summary = run_study(config, parallelism=jobs)
        for name in ALL_METHODS:
            m = summary.methods[name]
            rows.append(
                {
                    "scenario": scenario,
                    "sample_size": n_total,
                    "method": name,
                    "power_pct": format_rate(m.rejection_pct),
                    "mc_se_pct": format_rate(m.mc_se_pct),
                }
            )
    columns = ["scenario", "sample_size", "method", "power_pct", "mc_se_pct"]
    if fmt == "json":
        _write_text(out_path, _dump_json({"seed": resolved, "rows": rows}))
    else:
        _write_text(out_path, grid_to_csv(rows, columns))
    return rows


def cmd_analyze(
    dataset_csv: str,
    out_path: str,
    cuts: tuple[float, ...] = (),
    tau: float | None = None,
    alpha: float = 0.025,
    direction: str = "experimental",
    fmt: str = "json",
) -> AnalysisReport:
    """Analyze one CSV dataset and write the method-comparison report."""
    if direction not in ("experimental", "control"):
        raise ConfigError("--direction must be 'experimental' or 'control'")
    if not 0.0 < alpha < 0.5:
        raise ConfigError("--alpha must lie in (0, 0.5)")
    if tau is not None and not tau > 0:
        raise ConfigError("--tau must be positive")
    if cuts:
        # A trailing inf is allowed (and redundant); everything else must
        # be finite, positive, and strictly ascending.
        finite = cuts[:-1] if cuts[-1] == float("inf") else cuts
        if (
            any(not math.isfinite(c) or c <= 0 for c in finite)
            or any(b <= a for a, b in zip(cuts, cuts[1:]))
        ):
            raise ConfigError("--cuts must be strictly ascending positive numbers")
    try:
        raw = read_dataset_csv(dataset_csv)
    except OSError as exc:
        raise DataError(f"cannot read dataset {dataset_csv!r}: {exc}") from exc
    dataset = validate(raw)
    dataset.require_two_arms()
    if direction == "control":
        dataset = dataset.with_swapped_arms()
    report = analyze_dataset(dataset, cuts=cuts, tau=tau, alpha=alpha)
    report.metadata["direction"] = direction
    if fmt == "json":
        _write_text(out_path, _dump_json(report.to_dict()))
    else:
        _write_text(out_path, report_to_csv(report))
    return report


def _parse_cuts(raw: str) -> tuple[float, ...]:
    if not raw:
        return ()
    try:
        cuts = tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"--cuts must be comma-separated numbers, got {raw!r}") from exc
    return cuts


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nphkit",
        description="Survival tests and trial simulation under non-proportional hazards.",
    )
    parser.add_argument("--version", action="version", version=f"nphkit {PACKAGE_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a replication study from a JSON config")
    sim.add_argument("config_path")
    sim.add_argument("out_path")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--jobs", type=int, default=1)
    sim.add_argument("--format", choices=("csv", "json"), default="json")

    tab = sub.add_parser("table2", help="null-scenario rejection grid over sample sizes")
    tab.add_argument("out_path")
    tab.add_argument("--enrollment", type=float, choices=(12.0, 18.0, 24.0), default=18.0)
    tab.add_argument("--jobs", type=int, default=1)
    tab.add_argument("--replicates", type=int, default=20000)
    tab.add_argument("--seed", type=int, default=None)
    tab.add_argument("--format", choices=("csv", "json"), default="csv")

    power = sub.add_parser("power", help="per-scenario power grid over sample sizes")
    power.add_argument("out_path")
    power.add_argument("--scenario", required=True)
    power.add_argument("--enrollment", type=float, choices=(12.0, 18.0, 24.0), default=18.0)
    power.add_argument("--jobs", type=int, default=1)
    power.add_argument("--replicates", type=int, default=5000)
    power.add_argument("--seed", type=int, default=None)
    power.add_argument("--format", choices=("csv", "json"), default="csv")

    ana = sub.add_parser("analyze", help="apply the method battery to a CSV dataset")
    ana.add_argument("dataset_csv")
    ana.add_argument("out_path")
    ana.add_argument("--cuts", type=str, default="")
    ana.add_argument("--tau", type=float, default=None)
    ana.add_argument("--alpha", type=float, default=0.025)
    ana.add_argument("--direction", choices=("experimental", "control"), default="experimental")
    ana.add_argument("--format", choices=("csv", "json"), default="json")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(
                args.config_path,
                args.out_path,
                seed=args.seed,
                jobs=args.jobs,
                fmt=args.format,
            )
        elif args.command == "table2":
            cmd_table2(
                args.out_path,
                enrollment=args.enrollment,
                jobs=args.jobs,
                replicates=args.replicates,
                seed=args.seed,
                fmt=args.format,
            )
        elif args.command == "power":
            cmd_power_figure(
                args.out_path,
                scenario=args.scenario,
                enrollment=args.enrollment,
                jobs=args.jobs,
                replicates=args.replicates,
                seed=args.seed,
                fmt=args.format,
            )
        elif args.command == "analyze":
            cmd_analyze(
                args.dataset_csv,
                args.out_path,
                cuts=_parse_cuts(args.cuts),
                tau=args.tau,
                alpha=args.alpha,
                direction=args.direction,
                fmt=args.format,
            )
    except ConfigError as exc:
        print(f"nphkit: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"nphkit: data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"nphkit: numerical failure: {exc}", file=sys.stderr)
        return 4
    except NphkitError as exc:
        print(f"nphkit: error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"nphkit: i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
