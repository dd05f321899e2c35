"""Replication studies: run many simulated trials, apply the requested
tests, and aggregate rejection rates and hazard-ratio summaries.

Aggregation is an ordered reduction over per-replicate records keyed by
replicate index, so a study is bit-identical for a fixed seed whatever
the worker-pool size.
"""
from __future__ import annotations

import multiprocessing
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .combo import (
    MAXCOMBO,
    ComboSpec,
    _component_stats,
    _weight_matrix,
    breslow_components,
    max_adjusted_p,
)
from .errors import ConfigError, NphkitError
from .estimation import _fit_from_table
from .kmtests import rmst_diff_test, wkm_test
from .simulate import (
    ALL_METHODS,
    BUILTIN_SCENARIOS,
    DEFAULT_SEED,
    PiecewiseHazard,
    ScenarioSpec,
    StudyConfig,
    TrialDesign,
    TrialResult,
    replicate_rng,
    simulate_trial_detail,
)
from .wlr import FhWeight, event_table

# Reject-code values stored per replicate and method.
_NO, _YES, _FAILED, _SKIPPED = 0, 1, 2, 3

_LEE_IDX = np.array([1, 3])


def _replicate_records(config: StudyConfig, start: int, stop: int) -> dict:
    """Per-replicate outcomes for indices [start, stop)."""
    n_rows = stop - start
    reject = np.full((n_rows, len(ALL_METHODS)), _SKIPPED, dtype=np.int8)
    log_hr_cox = np.full(n_rows, np.nan)
    log_hr_max = np.full(n_rows, np.nan)
    epr = np.empty(n_rows)
    cut_time = np.empty(n_rows)

    methods = set(config.methods)
    col = {name: i for i, name in enumerate(ALL_METHODS)}
    alpha = config.alpha_one_sided
    z_crit = float(ndtri(alpha))
    breslow_crit = float(ndtri(np.sqrt(1.0 - alpha)))
    wants_fh = methods & {"logrank", "fh01", "fh10", "fh11", "maxcombo", "lee"}
    # One weight matrix serves the single-weight tests, Lee, and the
    # (possibly customized) max-combination components.
    base = list(MAXCOMBO.components)
    all_comps = tuple(base + [c for c in config.combo.components if c not in base])
    combo_idx = np.array([all_comps.index(c) for c in config.combo.components])

    for row, rep in enumerate(range(start, stop)):
        res: TrialResult = simulate_trial_detail(
            config.scenario, config.design, replicate_rng(config.seed, rep)
        )
        ds = res.dataset
        epr[row] = res.n_events / config.design.n_total
        cut_time[row] = res.cut_time

        try:
            table = event_table(ds)
        except NphkitError:
            for name in methods:
                reject[row, col[name]] = _FAILED
            continue

        if wants_fh:
            # Lenient component stats: a degenerate weight row fails only
            # the methods that actually need it.
            weights = _weight_matrix(table, all_comps)
            gram = (weights * table.v) @ weights.T
            var = np.diag(gram)
            valid = var > 0.0
            z_all = np.full(len(all_comps), np.nan)
            z_all[valid] = (weights[valid] @ table.u) / np.sqrt(var[valid])
            for name, idx in (("logrank", 0), ("fh01", 1), ("fh11", 2), ("fh10", 3)):
                if name in methods:
                    reject[row, col[name]] = (
                        _FAILED if not valid[idx] else (_YES if z_all[idx] <= z_crit else _NO)
                    )

            def combo_reject(idx: np.ndarray) -> int:
                if not valid[idx].all():
                    return _FAILED
                sd = np.sqrt(var[idx])
                corr = gram[np.ix_(idx, idx)] / np.outer(sd, sd)
                np.fill_diagonal(corr, 1.0)
                return _max_test_reject(-z_all[idx], corr, alpha)

            if "maxcombo" in methods:
                reject[row, col["maxcombo"]] = combo_reject(combo_idx)
                if valid[combo_idx].all():
                    selected = config.combo.components[int(np.argmin(z_all[combo_idx]))]
                    wfit = _fit_from_table(table, selected)
                    if wfit.converged:
                        log_hr_max[row] = wfit.log_hr
            if "lee" in methods:
                reject[row, col["lee"]] = combo_reject(_LEE_IDX)

        if "breslow" in methods:
            try:
                zb, _ = _component_stats(table, breslow_components(table))
                reject[row, col["breslow"]] = (
                    _YES if float(np.max(-zb)) >= breslow_crit else _NO
                )
            except NphkitError:
                reject[row, col["breslow"]] = _FAILED

        if "rmst" in methods:
            try:
                r = rmst_diff_test(ds)
                reject[row, col["rmst"]] = _YES if r.z <= z_crit else _NO
            except NphkitError:
                reject[row, col["rmst"]] = _FAILED

        if "wkm" in methods:
            try:
                r = wkm_test(ds)
                reject[row, col["wkm"]] = _YES if r.z <= z_crit else _NO
            except NphkitError:
                reject[row, col["wkm"]] = _FAILED

        fit = _fit_from_table(table, None)
        if fit.converged:
            log_hr_cox[row] = fit.log_hr

    return {
        "reject": reject,
        "log_hr_cox": log_hr_cox,
        "log_hr_max": log_hr_max,
        "epr": epr,
        "cut_time": cut_time,
    }


def _max_test_reject(z_oriented: np.ndarray, corr: np.ndarray, alpha: float) -> int:
    """Max-test decision with the MVN call skipped when the Bonferroni
    sandwich already settles it."""
    z_max = float(np.max(z_oriented))
    p_min = float(ndtr(-z_max))
    m = len(z_oriented)
    if p_min > alpha:
        return _NO
    if m * p_min <= alpha:
        return _YES
    return _YES if max_adjusted_p(z_max, corr) <= alpha else _NO


def _run_chunk(args) -> dict:
    config, start, stop = args
    return _replicate_records(config, start, stop)


@dataclass(frozen=True)
class MethodSummary:
    """Aggregated decision counts for one test across a study."""

    rejection_pct: float
    mc_se_pct: float
    n_rejected: int
    n_failed: int


@dataclass(frozen=True)
class HrSummary:
    """Geometric-mean hazard ratio with the exclusion tally."""

    geometric_mean: float
    n_used: int
    n_excluded: int


@dataclass(frozen=True)
class StudySummary:
    """Study-level aggregate: Table 2/3-shaped numbers plus config echo."""

    config: dict
    replicates: int
    methods: dict[str, MethodSummary]
    hr_cox: HrSummary
    hr_maxcombo_selected: HrSummary | None
    event_patient_ratio: float
    mean_cut_time: float
    shortfalls: int

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "replicates": self.replicates,
            "methods": {
                name: {
                    "rejection_pct": m.rejection_pct,
                    "mc_se_pct": m.mc_se_pct,
                    "n_rejected": m.n_rejected,
                    "n_failed": m.n_failed,
                }
                for name, m in self.methods.items()
            },
            "hr_cox": _hr_dict(self.hr_cox),
            "hr_maxcombo_selected": _hr_dict(self.hr_maxcombo_selected),
            "event_patient_ratio": self.event_patient_ratio,
            "mean_cut_time": self.mean_cut_time,
            "shortfalls": self.shortfalls,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "StudySummary":
        return cls(
            config=payload["config"],
            replicates=payload["replicates"],
            methods={
                name: MethodSummary(**entry)
                for name, entry in payload["methods"].items()
            },
            hr_cox=_hr_from_dict(payload["hr_cox"]),
            hr_maxcombo_selected=_hr_from_dict(payload["hr_maxcombo_selected"]),
            event_patient_ratio=payload["event_patient_ratio"],
            mean_cut_time=payload["mean_cut_time"],
            shortfalls=payload["shortfalls"],
        )


def _hr_dict(hr: HrSummary | None) -> dict | None:
    if hr is None:
        return None
    return {
        "geometric_mean": hr.geometric_mean,
        "n_used": hr.n_used,
        "n_excluded": hr.n_excluded,
    }


def _hr_from_dict(payload: dict | None) -> HrSummary | None:
    return None if payload is None else HrSummary(**payload)


def config_echo(config: StudyConfig) -> dict:
    """JSON-ready record of everything that determines the study."""
    return {
        "scenario": {
            "name": config.scenario.name,
            "cut_points": list(config.scenario.control.cut_points),
            "control_rates": list(config.scenario.control.rates),
            "experimental_rates": list(config.scenario.experimental.rates),
        },
        "design": {
            "n_total": config.design.n_total,
            "enrollment_months": config.design.enrollment_months,
            "ramp_months": config.design.ramp_months,
            "dropout_rate": config.design.dropout_rate,
            "target_events": config.design.target_events,
        },
        "replicates": config.replicates,
        "alpha_one_sided": config.alpha_one_sided,
        "seed": config.seed,
        "methods": list(config.methods),
        "combo_components": [[c.rho, c.gamma] for c in config.combo.components],
    }


def study_config_from_dict(payload: dict) -> StudyConfig:
    """Build a StudyConfig from parsed JSON, naming any offending key."""
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "scenario",
        "design",
        "replicates",
        "alpha_one_sided",
        "seed",
        "methods",
        "combo_components",
    }
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config key: {sorted(unknown)[0]!r}")
    if "scenario" not in payload:
        raise ConfigError("missing config key: 'scenario'")
    if "replicates" not in payload:
        raise ConfigError("missing config key: 'replicates'")

    raw = payload["scenario"]
    try:
        if isinstance(raw, str):
            if raw not in BUILTIN_SCENARIOS:
                raise ConfigError(
                    f"unknown scenario {raw!r}; built-ins: {', '.join(BUILTIN_SCENARIOS)}"
                )
            scenario = BUILTIN_SCENARIOS[raw]
        else:
            cuts = tuple(raw["cut_points"])
            scenario = ScenarioSpec(
                name=raw.get("name", "custom"),
                control=PiecewiseHazard(cuts, tuple(raw["control_rates"])),
                experimental=PiecewiseHazard(cuts, tuple(raw["experimental_rates"])),
            )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad 'scenario' value: {exc}") from exc

    try:
        design = TrialDesign(**payload.get("design", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad 'design' value: {exc}") from exc

    try:
        combo_raw = payload.get("combo_components")
        combo = (
            MAXCOMBO
            if combo_raw is None
            else ComboSpec(tuple(FhWeight(r, g) for r, g in combo_raw), "maxcombo")
        )
        return StudyConfig(
            scenario=scenario,
            design=design,
            replicates=int(payload["replicates"]),
            alpha_one_sided=float(payload.get("alpha_one_sided", 0.025)),
            seed=int(payload.get("seed", DEFAULT_SEED)),
            methods=tuple(payload.get("methods", ALL_METHODS)),
            combo=combo,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid study configuration: {exc}") from exc


def _geo_summary(log_hr: np.ndarray) -> HrSummary:
    used = np.isfinite(log_hr)
    n_used = int(used.sum())
    geo = float(np.exp(log_hr[used].mean())) if n_used else float("nan")
    return HrSummary(geometric_mean=geo, n_used=n_used, n_excluded=int(len(log_hr) - n_used))


def run_study(config: StudyConfig, parallelism: int = 1) -> StudySummary:
    """Run the configured number of replicates and aggregate.

    ``parallelism`` only changes scheduling; the summary is bit-identical
    for a fixed seed at any worker count.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    reps = config.replicates
    if parallelism == 1 or reps < 4:
        records = _replicate_records(config, 0, reps)
    else:
        n_chunks = min(parallelism * 4, reps)
        edges = np.linspace(0, reps, n_chunks + 1, dtype=int)
        jobs = [
            (config, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a
        ]
        with multiprocessing.get_context("spawn").Pool(parallelism) as pool:
            parts = pool.map(_run_chunk, jobs)
        records = {
            key: np.concatenate([p[key] for p in parts]) for key in parts[0]
        }

    methods: dict[str, MethodSummary] = {}
    for name in config.methods:
        codes = records["reject"][:, ALL_METHODS.index(name)]
        n_rej = int((codes == _YES).sum())
        n_fail = int((codes == _FAILED).sum())
        p_hat = n_rej / reps
        methods[name] = MethodSummary(
            rejection_pct=100.0 * p_hat,
            mc_se_pct=100.0 * float(np.sqrt(p_hat * (1.0 - p_hat) / reps)),
            n_rejected=n_rej,
            n_failed=n_fail,
        )

    finite_cut = np.isfinite(records["cut_time"])
    return StudySummary(
        config=config_echo(config),
        replicates=reps,
        methods=methods,
        hr_cox=_geo_summary(records["log_hr_cox"]),
        hr_maxcombo_selected=(
            _geo_summary(records["log_hr_max"]) if "maxcombo" in config.methods else None
        ),
        event_patient_ratio=float(records["epr"].mean()),
        mean_cut_time=(
            float(records["cut_time"][finite_cut].mean()) if finite_cut.any() else float("nan")
        ),
        shortfalls=int((~finite_cut).sum()),
    )
