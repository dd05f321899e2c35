"""Hazard-ratio estimation and proportional-hazards diagnostics.

Cox partial likelihood for the single arm covariate (Breslow ties), the
weighted-score variant matching the FH log-rank weights, piecewise HRs on
a time-split follow-up, and the Grambsch-Therneau trend test on scaled
Schoenfeld residuals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, norm

from .data import ValidatedDataset, _validated_from_sorted
from .errors import NonConvergenceError
from .wlr import EventTable, FhWeight, event_table, fh_weight_at

_Z975 = float(norm.ppf(0.975))
_MAX_ABS_BETA = 30.0
_MAX_ITER = 50


@dataclass(frozen=True, slots=True)
class CoxFit:
    """A fitted (possibly weighted) Cox hazard ratio for the arm effect.

    When the partial likelihood is monotone (all weighted events on one
    side) no maximum exists; the fit reports ``converged=False``, the
    log HR clipped at +/-30, and NaN confidence limits.
    """

    log_hr: float
    se: float
    hr: float
    ci_low: float
    ci_high: float
    weight: FhWeight | None
    iterations: int
    converged: bool


@dataclass(frozen=True, slots=True)
class PiecewiseCoxFit:
    """Independent Cox fits on follow-up split at ``cut_points``.

    Interval j covers (c_{j-1}, c_j]; an event on a boundary belongs to
    the interval it closes. Fits for intervals without events in both
    arms are flagged ``converged=False``.
    """

    cut_points: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    fits: tuple[CoxFit, ...]


@dataclass(frozen=True, slots=True)
class SchoenfeldDiagnostics:
    """Scaled Schoenfeld residuals against time plus the G-T trend test."""

    event_times: np.ndarray
    scaled_residuals: np.ndarray
    gt_statistic: float
    gt_p: float


def _table_quantities(table: EventTable, weight: FhWeight | None):
    w = np.ones_like(table.times) if weight is None else fh_weight_at(weight, table.s_left)
    return w, table.d, table.d_e, table.n, table.n_e


def _fit_from_table(table: EventTable, weight: FhWeight | None) -> CoxFit:
    w, d, d_e, n, n_e = _table_quantities(table, weight)
    n_c = n - n_e
    d_c = d - d_e

    def score_info(beta: float):
        eb = np.exp(beta)
        p = n_e * eb / (n_c + n_e * eb)
        return float(np.dot(w, d_e - d * p)), float(np.dot(w, d * p * (1.0 - p)))

    # A finite root needs the score to change sign. Risk sets holding a
    # single arm contribute nothing at either extreme, so the limits are
    # sum(w d_e) over times with controls still at risk (beta -> -inf)
    # and -sum(w d_c) over times with experimentals at risk (beta -> +inf).
    lim_low = float(np.dot(w, d_e * (n_c > 0)))
    lim_high = float(np.dot(w, d_c * (n_e > 0)))
    monotone = lim_low <= 0.0 or lim_high <= 0.0
    beta = 0.0
    iterations = 0
    converged = False
    if not monotone:
        for _ in range(_MAX_ITER):
            iterations += 1
            score, info = score_info(beta)
            if info <= 0.0:
                break
            step = score / info
            beta += step
            if abs(beta) > _MAX_ABS_BETA:
                beta = float(np.sign(beta)) * _MAX_ABS_BETA
                break
            if abs(score) < 1e-9 or abs(step) < 1e-10:
                converged = True
                break
    else:
        beta = -_MAX_ABS_BETA if lim_low <= 0.0 else _MAX_ABS_BETA

    _, info = score_info(beta)
    se = 1.0 / np.sqrt(info) if info > 0.0 else float("inf")
    if converged:
        with np.errstate(over="ignore"):
            ci_low = float(np.exp(beta - _Z975 * se))
            ci_high = float(np.exp(beta + _Z975 * se))
    else:
        ci_low = ci_high = float("nan")
    return CoxFit(
        log_hr=float(beta),
        se=float(se),
        hr=float(np.exp(beta)),
        ci_low=ci_low,
        ci_high=ci_high,
        weight=weight,
        iterations=iterations,
        converged=converged,
    )


def cox_fit(dataset: ValidatedDataset, weight: FhWeight | None = None) -> CoxFit:
    """Cox hazard ratio for experimental vs control.

    Newton iteration on the (weighted) Breslow score equation; the
    standard error comes from the weighted model-based information, which
    for a single binary covariate is indistinguishable from the sandwich
    form. With ``weight=None`` or FH(0,0) this is the ordinary partial
    likelihood estimate.
    """
    return _fit_from_table(event_table(dataset), weight)


def weighted_cox(dataset: ValidatedDataset, weight: FhWeight) -> CoxFit:
    """Hazard ratio from the FH-weighted score equation."""
    return _fit_from_table(event_table(dataset), weight)


def _non_estimable() -> CoxFit:
    return CoxFit(
        log_hr=float("nan"),
        se=float("inf"),
        hr=float("nan"),
        ci_low=float("nan"),
        ci_high=float("nan"),
        weight=None,
        iterations=0,
        converged=False,
    )


def piecewise_cox(dataset: ValidatedDataset, cut_points) -> PiecewiseCoxFit:
    """One Cox HR per follow-up interval defined by ``cut_points``.

    A subject with follow-up crossing a cut contributes a censored
    episode to the earlier interval and re-enters the later one, so each
    interval's risk sets contain exactly the subjects still under
    observation there. Intervals are analyzed independently.
    """
    dataset.require_two_arms()
    cuts = tuple(float(c) for c in cut_points)
    if any(c2 <= c1 for c1, c2 in zip(cuts, cuts[1:])):
        raise ValueError("cut points must be strictly ascending")
    if cuts and cuts[0] <= 0:
        raise ValueError("cut points must be positive")
    bounds = [0.0, *cuts]
    if not cuts or cuts[-1] != float("inf"):
        bounds.append(float("inf"))
    intervals = tuple(zip(bounds[:-1], bounds[1:]))

    fits = []
    for lo, hi in intervals:
        keep = dataset.time > lo if lo > 0 else np.ones(dataset.n, dtype=bool)
        if not keep.any():
            fits.append(_non_estimable())
            continue
        time = np.minimum(dataset.time[keep], hi)
        event = dataset.event[keep] & (dataset.time[keep] <= hi)
        is_exp = dataset.is_experimental[keep]
        d_e = int(event[is_exp].sum())
        d_c = int(event[~is_exp].sum())
        if d_e == 0 or d_c == 0:
            fits.append(_non_estimable())
            continue
        order = np.argsort(time, kind="stable")
        sub = _validated_from_sorted(
            time[order], event[order], is_exp[order], dataset.entry[keep][order]
        )
        fits.append(_fit_from_table(event_table(sub), None))
    return PiecewiseCoxFit(cut_points=cuts, intervals=intervals, fits=tuple(fits))


def schoenfeld_gt_test(dataset: ValidatedDataset) -> SchoenfeldDiagnostics:
    """Grambsch-Therneau test for a time trend in the arm effect.

    Scaled Schoenfeld residuals are computed at the fitted log HR with
    the averaged-information scaling and regressed on identity time; the
    score statistic is referred to chi-square(1). Under proportional
    hazards the residuals have no trend.

    Raises
    ------
    NonConvergenceError
        The underlying unweighted Cox fit did not converge.
    """
    table = event_table(dataset)
    fit = _fit_from_table(table, None)
    if not fit.converged:
        raise NonConvergenceError("Cox fit did not converge; residuals undefined")
    eb = np.exp(fit.log_hr)
    p = table.n_e * eb / ((table.n - table.n_e) + table.n_e * eb)
    resid = table.d_e - table.d * p
    info_terms = table.d * p * (1.0 - p)
    info = float(info_terms.sum())
    d_total = float(table.d.sum())
    v_bar = info / d_total
    # Mean individual residual at tied times keeps the plot scale right.
    scaled = fit.log_hr + (resid / table.d) / v_bar

    g = table.times
    g_bar = float(np.dot(table.d, g) / d_total)
    num = float(np.dot(g - g_bar, resid)) ** 2
    den = v_bar * float(np.dot(table.d, (g - g_bar) ** 2))
    statistic = num / den if den > 0 else 0.0
    p_value = float(chi2.sf(statistic, df=1))
    return SchoenfeldDiagnostics(
        event_times=table.times.copy(),
        scaled_residuals=np.asarray(scaled, dtype=float),
        gt_statistic=float(statistic),
        gt_p=p_value,
    )
