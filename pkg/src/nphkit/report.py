"""Dataset analysis reports and file output.

``analyze_dataset`` applies the full battery of tests and estimators to
one dataset and returns an AnalysisReport; the helpers here also render
reports and study summaries as JSON (exact round trip) or CSV (p-values
to 4 significant digits, rates to 3 decimals in percent).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .combo import breslow_combo_test, lee_test, max_combo_test
from .data import ValidatedDataset, dataset_sha256
from .errors import NphkitError
from .estimation import CoxFit, cox_fit, piecewise_cox, schoenfeld_gt_test
from .kmtests import rmst_diff_test, wkm_test
from .version import PACKAGE_VERSION
from .wlr import FhWeight, wlr_test

METHOD_ORDER: tuple[str, ...] = (
    "logrank",
    "fh01",
    "fh10",
    "fh11",
    "rmst",
    "wkm",
    "breslow",
    "maxcombo",
    "lee",
    "cox",
)

_FH_BY_LABEL = {
    "logrank": FhWeight(0, 0),
    "fh01": FhWeight(0, 1),
    "fh10": FhWeight(1, 0),
    "fh11": FhWeight(1, 1),
}


@dataclass(frozen=True)
class MethodRow:
    """One report line: a test's p-values and its effect estimate."""

    method: str
    p_one_sided: float | None
    p_two_sided: float | None
    estimate: float | None
    ci_low: float | None
    ci_high: float | None
    estimate_label: str
    note: str
    error: str | None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "p_one_sided": self.p_one_sided,
            "p_two_sided": self.p_two_sided,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "estimate_label": self.estimate_label,
            "note": self.note,
            "error": self.error,
        }


@dataclass(frozen=True)
class PiecewiseRow:
    """One interval of the piecewise Cox fit."""

    interval: str
    hr: float | None
    ci_low: float | None
    ci_high: float | None
    converged: bool

    def to_dict(self) -> dict:
        return {
            "interval": self.interval,
            "hr": self.hr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class AnalysisReport:
    """Everything cmd_analyze writes: method rows, piecewise HRs, the
    PH-diagnostic summary, and reproducibility metadata."""

    methods: tuple[MethodRow, ...]
    piecewise: tuple[PiecewiseRow, ...]
    schoenfeld: dict
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "methods": [m.to_dict() for m in self.methods],
            "piecewise": [p.to_dict() for p in self.piecewise],
            "schoenfeld": self.schoenfeld,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AnalysisReport":
        return cls(
            methods=tuple(MethodRow(**m) for m in payload["methods"]),
            piecewise=tuple(PiecewiseRow(**p) for p in payload["piecewise"]),
            schoenfeld=payload["schoenfeld"],
            metadata=payload["metadata"],
        )


def _hr_fields(fit: CoxFit | None):
    if fit is None:
        return None, None, None
    return fit.hr, fit.ci_low, fit.ci_high


def _failed_row(method: str, exc: Exception) -> MethodRow:
    return MethodRow(
        method=method,
        p_one_sided=None,
        p_two_sided=None,
        estimate=None,
        ci_low=None,
        ci_high=None,
        estimate_label="",
        note="",
        error=f"{type(exc).__name__}: {exc}",
    )


def analyze_dataset(
    dataset: ValidatedDataset,
    cuts: tuple[float, ...] = (),
    tau: float | None = None,
    alpha: float = 0.025,
) -> AnalysisReport:
    """Apply every test and estimator to one dataset.

    Single-weight log-rank rows carry the matching weighted Cox HR as
    their effect estimate; combination rows carry the selected weight's
    HR; the RMST row carries the restricted-mean difference. A failing
    method is reported in place, never raised.
    """
    rows: list[MethodRow] = []

    for label, weight in _FH_BY_LABEL.items():
        try:
            test = wlr_test(dataset, weight)
            fit = cox_fit(dataset, weight)
            hr, lo, hi = _hr_fields(fit if fit.converged else None)
            rows.append(
                MethodRow(
                    method=label,
                    p_one_sided=test.p_one_sided,
                    p_two_sided=test.p_two_sided,
                    estimate=hr,
                    ci_low=lo,
                    ci_high=hi,
                    estimate_label="weighted hr" if label != "logrank" else "hr",
                    note="",
                    error=None,
                )
            )
        except NphkitError as exc:
            rows.append(_failed_row(label, exc))

    try:
        r = rmst_diff_test(dataset, tau)
        rows.append(
            MethodRow(
                method="rmst",
                p_one_sided=r.p_one_sided,
                p_two_sided=r.p_two_sided,
                estimate=r.diff,
                ci_low=r.ci_low,
                ci_high=r.ci_high,
                estimate_label="rmst difference",
                note=f"tau={r.tau:g}",
                error=None,
            )
        )
    except NphkitError as exc:
        rows.append(_failed_row("rmst", exc))

    try:
        w = wkm_test(dataset)
        rows.append(
            MethodRow(
                method="wkm",
                p_one_sided=w.p_one_sided,
                p_two_sided=w.p_two_sided,
                estimate=None,
                ci_low=None,
                ci_high=None,
                estimate_label="",
                note="",
                error=None,
            )
        )
    except NphkitError as exc:
        rows.append(_failed_row("wkm", exc))

    for label, runner in (
        ("breslow", breslow_combo_test),
        ("maxcombo", max_combo_test),
        ("lee", lee_test),
    ):
        try:
            res = runner(dataset)
            fit = res.selected_hr
            hr, lo, hi = _hr_fields(fit if fit is not None and fit.converged else None)
            selected = (
                f"selected=FH({res.selected.rho:g},{res.selected.gamma:g})"
                if res.selected is not None
                else "selected=acceleration"
            )
            rows.append(
                MethodRow(
                    method=label,
                    p_one_sided=res.p_adjusted,
                    p_two_sided=min(1.0, 2.0 * res.p_adjusted),
                    estimate=hr,
                    ci_low=lo,
                    ci_high=hi,
                    estimate_label="selected-weight hr" if hr is not None else "",
                    note=selected,
                    error=None,
                )
            )
        except NphkitError as exc:
            rows.append(_failed_row(label, exc))

    try:
        fit = cox_fit(dataset)
        test = wlr_test(dataset)
        hr, lo, hi = _hr_fields(fit if fit.converged else None)
        rows.append(
            MethodRow(
                method="cox",
                p_one_sided=test.p_one_sided,
                p_two_sided=test.p_two_sided,
                estimate=hr,
                ci_low=lo,
                ci_high=hi,
                estimate_label="hr",
                note="" if fit.converged else "did not converge",
                error=None,
            )
        )
    except NphkitError as exc:
        rows.append(_failed_row("cox", exc))

    piecewise_rows: list[PiecewiseRow] = []
    if cuts:
        try:
            pw = piecewise_cox(dataset, cuts)
            for (lo_t, hi_t), fit in zip(pw.intervals, pw.fits):
                label = (
                    f"({lo_t:g}, inf)"
                    if hi_t == float("inf")
                    else f"({lo_t:g}, {hi_t:g}]"
                )
                if fit.converged:
                    piecewise_rows.append(
                        PiecewiseRow(label, fit.hr, fit.ci_low, fit.ci_high, True)
                    )
                else:
                    piecewise_rows.append(PiecewiseRow(label, None, None, None, False))
        except NphkitError:
            piecewise_rows = []

    try:
        diag = schoenfeld_gt_test(dataset)
        schoenfeld = {
            "gt_statistic": diag.gt_statistic,
            "gt_p": diag.gt_p,
            "n_event_times": int(len(diag.event_times)),
            "error": None,
        }
    except NphkitError as exc:
        schoenfeld = {
            "gt_statistic": None,
            "gt_p": None,
            "n_event_times": None,
            "error": f"{type(exc).__name__}: {exc}",
        }

    metadata = {
        "dataset_sha256": dataset_sha256(dataset),
        "version": PACKAGE_VERSION,
        "n": dataset.n,
        "n_experimental": dataset.n_experimental,
        "n_control": dataset.n_control,
        "n_events": dataset.n_events,
        "cuts": list(cuts),
        "tau": tau,
        "alpha_one_sided": alpha,
    }
    return AnalysisReport(
        methods=tuple(rows),
        piecewise=tuple(piecewise_rows),
        schoenfeld=schoenfeld,
        metadata=metadata,
    )


def format_p(p: float | None) -> str:
    """p-values carry 4 significant digits in delimited output."""
    return "" if p is None else f"{p:.4g}"


def format_rate(pct: float) -> str:
    """Rates are percentages with 3 decimals, Table-2 style."""
    return f"{pct:.3f}"


def _num(x: float | None) -> str:
    return "" if x is None else f"{x:.6g}"


def report_to_csv(report: AnalysisReport) -> str:
    """Single-table CSV rendering with a section column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "section",
            "name",
            "p_one_sided",
            "p_two_sided",
            "estimate",
            "ci_low",
            "ci_high",
            "note",
        ]
    )
    for row in report.methods:
        writer.writerow(
            [
                "method",
                row.method,
                format_p(row.p_one_sided),
                format_p(row.p_two_sided),
                _num(row.estimate),
                _num(row.ci_low),
                _num(row.ci_high),
                row.error or row.note,
            ]
        )
    for pw in report.piecewise:
        writer.writerow(
            [
                "piecewise",
                pw.interval,
                "",
                "",
                _num(pw.hr),
                _num(pw.ci_low),
                _num(pw.ci_high),
                "" if pw.converged else "non-estimable",
            ]
        )
    sch = report.schoenfeld
    writer.writerow(
        [
            "schoenfeld",
            "grambsch-therneau",
            format_p(sch.get("gt_p")),
            "",
            _num(sch.get("gt_statistic")),
            "",
            "",
            sch.get("error") or "",
        ]
    )
    for key in sorted(report.metadata):
        writer.writerow(["metadata", key, "", "", "", "", "", str(report.metadata[key])])
    return buf.getvalue()


def summary_to_csv(summary) -> str:
    """CSV rendering of a StudySummary."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "name", "value", "mc_se", "n_rejected", "n_failed"])
    for name, m in summary.methods.items():
        writer.writerow(
            [
                "rejection_pct",
                name,
                format_rate(m.rejection_pct),
                format_rate(m.mc_se_pct),
                m.n_rejected,
                m.n_failed,
            ]
        )
    writer.writerow(
        [
            "hr_geometric_mean",
            "cox",
            _num(summary.hr_cox.geometric_mean),
            "",
            summary.hr_cox.n_used,
            summary.hr_cox.n_excluded,
        ]
    )
    if summary.hr_maxcombo_selected is not None:
        writer.writerow(
            [
                "hr_geometric_mean",
                "maxcombo_selected",
                _num(summary.hr_maxcombo_selected.geometric_mean),
                "",
                summary.hr_maxcombo_selected.n_used,
                summary.hr_maxcombo_selected.n_excluded,
            ]
        )
    writer.writerow(
        ["study", "event_patient_ratio", _num(summary.event_patient_ratio), "", "", ""]
    )
    writer.writerow(["study", "mean_cut_time", _num(summary.mean_cut_time), "", "", ""])
    writer.writerow(["study", "shortfalls", summary.shortfalls, "", "", ""])
    writer.writerow(["study", "replicates", summary.replicates, "", "", ""])
    writer.writerow(["study", "seed", summary.config["seed"], "", "", ""])
    writer.writerow(["study", "scenario", summary.config["scenario"]["name"], "", "", ""])
    return buf.getvalue()


def grid_to_csv(rows: list[dict], columns: list[str]) -> str:
    """Tidy grid CSV used by the table and power commands."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] for c in columns])
    return buf.getvalue()
