"""Tests built on the Kaplan-Meier curve: the restricted-mean survival
time (RMST) difference and the Pepe-Fleming weighted Kaplan-Meier test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import ValidatedDataset
from .errors import DegenerateVarianceError, NoEventsError, TauBeyondFollowUpError
from .km import KmCurve, censoring_km, km_estimate
from .wlr import TestResult, result_from_z

_Z975 = float(norm.ppf(0.975))


@dataclass(frozen=True, slots=True)
class RmstEstimate:
    """Restricted mean survival time: area under the KM step on [0, tau],
    with the area-integral Greenwood variance."""

    tau: float
    value: float
    variance: float


@dataclass(frozen=True, slots=True)
class RmstDiffResult:
    """RMST difference test. ``diff`` and its CI are on the natural
    E-minus-C months scale (positive favors E); ``z`` is negated onto the
    package-wide "negative favors experimental" orientation."""

    z: float
    p_one_sided: float
    p_two_sided: float
    method_label: str
    diff: float
    ci_low: float
    ci_high: float
    tau: float
    rmst_experimental: RmstEstimate
    rmst_control: RmstEstimate


def _segments(curve: KmCurve, tau: float):
    # Segment i spans [starts[i], ends[i]) with constant survival vals[i].
    inside = curve.times <= tau
    t_sub = curve.times[inside]
    s_sub = curve.survival[inside]
    starts = np.concatenate(([0.0], t_sub))
    vals = np.concatenate(([1.0], s_sub))
    ends = np.concatenate((t_sub, [tau]))
    return starts, ends, vals, inside


def rmst(curve: KmCurve, tau: float) -> RmstEstimate:
    """Exact area under the KM step function on [0, tau].

    The curve is carried flat past its last drop, so tau may exceed the
    last event time but not the last observed (possibly censored) time.

    Raises
    ------
    TauBeyondFollowUpError
        tau exceeds the sample's observed follow-up.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if tau > curve.max_follow_up:
        raise TauBeyondFollowUpError(
            f"tau {tau:g} exceeds observed follow-up {curve.max_follow_up:g}"
        )
    starts, ends, vals, inside = _segments(curve, tau)
    seg_areas = vals * (ends - starts)
    value = float(seg_areas.sum())
    # A_k: area under the curve from event time t_k to tau.
    suffix = np.cumsum(seg_areas[::-1])[::-1]
    a_k = suffix[1:]
    n_k = curve.at_risk[inside]
    d_k = curve.events[inside]
    keep = n_k > d_k
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(keep, d_k / (n_k * (n_k - d_k)), 0.0)
    variance = float(np.dot(a_k * a_k, terms))
    return RmstEstimate(tau=float(tau), value=value, variance=variance)


def rmst_diff_test(dataset: ValidatedDataset, tau: float | None = None) -> RmstDiffResult:
    """Two-sample RMST difference with a normal test and 95% CI.

    Default tau is the smaller of the two arms' largest observed times,
    the widest window where both curves are identified.

    Raises
    ------
    DegenerateVarianceError
        Both variances are zero while the difference is not; the test
        is undefined.
    """
    dataset.require_two_arms()
    curve_e = km_estimate(dataset, "E")
    curve_c = km_estimate(dataset, "C")
    if tau is None:
        tau = min(curve_e.max_follow_up, curve_c.max_follow_up)
    est_e = rmst(curve_e, tau)
    est_c = rmst(curve_c, tau)
    diff = est_e.value - est_c.value
    var = est_e.variance + est_c.variance
    if var <= 0.0:
        if diff != 0.0:
            raise DegenerateVarianceError("zero variance with nonzero RMST difference")
        z_natural = 0.0
        se = 0.0
    else:
        se = float(np.sqrt(var))
        z_natural = diff / se
    base = result_from_z(-z_natural, "rmst")
    return RmstDiffResult(
        z=base.z,
        p_one_sided=base.p_one_sided,
        p_two_sided=base.p_two_sided,
        method_label=base.method_label,
        diff=float(diff),
        ci_low=float(diff - _Z975 * se),
        ci_high=float(diff + _Z975 * se),
        tau=float(tau),
        rmst_experimental=est_e,
        rmst_control=est_c,
    )


def wkm_test(dataset: ValidatedDataset) -> TestResult:
    """Pepe-Fleming weighted Kaplan-Meier test.

    Statistic sqrt(n_E n_C / n) * integral over [0, tau] of
    w(t) (S_E(t) - S_C(t)) dt, where the stability weight
    w(t) = n C_E(t-) C_C(t-) / (n_E C_E(t-) + n_C C_C(t-)) is built from
    the per-arm censoring-KM curves and tau is the last time both arms
    are still at risk. With no censoring w is 1 and the statistic is
    proportional to the RMST difference. The variance is the Greenwood
    style area form: each arm contributes the squared suffix integral of
    w S_j weighted by d/(Y(Y-d)) at its event times.
    """
    dataset.require_two_arms()
    if dataset.n_events == 0:
        raise NoEventsError("weighted KM test needs at least one event")
    surv_e = km_estimate(dataset, "E")
    surv_c = km_estimate(dataset, "C")
    cens_e = censoring_km(dataset, "E")
    cens_c = censoring_km(dataset, "C")
    n_e, n_c = dataset.n_experimental, dataset.n_control
    n = n_e + n_c
    tau = min(surv_e.max_follow_up, surv_c.max_follow_up)

    cuts = np.concatenate([c.times for c in (surv_e, surv_c, cens_e, cens_c)])
    starts = np.unique(np.concatenate(([0.0], cuts[cuts < tau])))
    ends = np.append(starts[1:], tau)
    widths = ends - starts

    s_e = surv_e.step_values(starts)
    s_c = surv_c.step_values(starts)
    # On the open interval past each start the left limit C(t-) equals
    # the step value at the start itself.
    g_e = cens_e.step_values(starts)
    g_c = cens_c.step_values(starts)
    denom = n_e * g_e + n_c * g_c
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(denom > 0, n * g_e * g_c / denom, 0.0)
    integral = float(np.dot(w * (s_e - s_c), widths))

    def arm_term(curve: KmCurve, s_vals: np.ndarray) -> float:
        seg = w * s_vals * widths
        suffix = np.append(np.cumsum(seg[::-1])[::-1], 0.0)
        inside = curve.times <= tau
        t_k = curve.times[inside]
        idx = np.searchsorted(starts, t_k)
        # An event time equal to tau sits past the last segment: A = 0.
        a_k = np.where(t_k < tau, suffix[np.minimum(idx, len(starts) - 1)], 0.0)
        y_k = curve.at_risk[inside]
        d_k = curve.events[inside]
        keep = y_k > d_k
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(keep, d_k / (y_k * (y_k - d_k)), 0.0)
        return float(np.dot(a_k * a_k, terms))

    scale = n_e * n_c / n
    var = scale * (arm_term(surv_e, s_e) + arm_term(surv_c, s_c))
    stat = np.sqrt(scale) * integral
    if var <= 0.0:
        if stat != 0.0:
            raise DegenerateVarianceError("zero variance with nonzero weighted KM statistic")
        z_natural = 0.0
    else:
        z_natural = stat / np.sqrt(var)
    return result_from_z(-z_natural, "wkm")
