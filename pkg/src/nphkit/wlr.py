"""Weighted log-rank tests with Fleming-Harrington weights.

The plain log-rank is FH(0,0). All two-sample rank machinery shares one
per-event-time table (:class:`EventTable`) built once per dataset.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .data import ValidatedDataset
from .errors import NoEventsError, ZeroVarianceError


@dataclass(frozen=True, slots=True)
class FhWeight:
    """Fleming-Harrington weight FH(rho, gamma): S(t-)^rho (1-S(t-))^gamma.

    (0,0) weighs all event times equally (log-rank); (0,1) emphasizes
    late differences, (1,0) early ones, (1,1) mid-study ones.
    """

    rho: float
    gamma: float

    def __post_init__(self):
        if not (self.rho >= 0 and self.gamma >= 0):
            raise ValueError("rho and gamma must be non-negative")

    @property
    def label(self) -> str:
        return f"FH({self.rho:g},{self.gamma:g})"


LOGRANK = FhWeight(0, 0)


@dataclass(frozen=True, slots=True)
class TestResult:
    """Outcome of a two-sample test.

    ``z`` is oriented so that negative values favor the experimental
    arm (consistent with a hazard ratio below 1); ``p_one_sided`` is the
    lower tail of z and ``p_two_sided = 2 min(p, 1-p)``.
    """

    z: float
    p_one_sided: float
    p_two_sided: float
    method_label: str


def result_from_z(z: float, label: str) -> TestResult:
    p_one = float(ndtr(z))
    return TestResult(
        z=float(z),
        p_one_sided=p_one,
        p_two_sided=2.0 * min(p_one, 1.0 - p_one),
        method_label=label,
    )


@dataclass(frozen=True)
class WlrComponents:
    """Per-event-time decomposition of a weighted log-rank statistic.

    For each distinct pooled event time: the FH weight w_k, the
    experimental-arm observed-minus-expected count u_k, and the
    hypergeometric variance term v_k.
    """

    event_times: np.ndarray
    weights: np.ndarray
    observed_minus_expected: np.ndarray
    variance_terms: np.ndarray


@dataclass(frozen=True)
class EventTable:
    """Risk-set counts at the distinct pooled event times.

    Fields: times; pooled at-risk ``n`` and events ``d``; experimental
    at-risk ``n_e`` and events ``d_e``; pooled KM left limit ``s_left``;
    pooled Nelson-Aalen left limit ``na_left``; observed-minus-expected
    ``u`` and hypergeometric variance ``v``.
    """

    times: np.ndarray
    n: np.ndarray
    n_e: np.ndarray
    d: np.ndarray
    d_e: np.ndarray
    s_left: np.ndarray
    na_left: np.ndarray
    u: np.ndarray
    v: np.ndarray


def event_table(dataset: ValidatedDataset) -> EventTable:
    """Build (or fetch the cached) two-sample event table."""
    cached = dataset._table_cache
    if cached is not None:
        return cached
    dataset.require_two_arms()
    time, event, is_exp = dataset.time, dataset.event, dataset.is_experimental
    evt_mask = event
    if not evt_mask.any():
        raise NoEventsError("rank tests need at least one observed event")
    evt_times = time[evt_mask]
    times, d = np.unique(evt_times, return_counts=True)
    codes = np.searchsorted(times, evt_times)
    d = d.astype(float)
    d_e = np.bincount(codes, weights=is_exp[evt_mask].astype(float), minlength=len(times))
    n = (len(time) - np.searchsorted(time, times, side="left")).astype(float)
    time_e = time[is_exp]
    n_e = (len(time_e) - np.searchsorted(time_e, times, side="left")).astype(float)
    frac = d / n
    s_step = np.cumprod(1.0 - frac)
    s_left = np.concatenate(([1.0], s_step[:-1]))
    na_left = np.concatenate(([0.0], np.cumsum(frac)[:-1]))
    u = d_e - d * n_e / n
    n_c = n - n_e
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(n > 1, n_e * n_c * d * (n - d) / (n * n * (n - 1)), 0.0)
    table = EventTable(
        times=times, n=n, n_e=n_e, d=d, d_e=d_e, s_left=s_left, na_left=na_left, u=u, v=v
    )
    object.__setattr__(dataset, "_table_cache", table)
    return table


def fh_weight_at(weight: FhWeight, s_left) -> float | np.ndarray:
    """Evaluate FH(rho, gamma) at pooled left-limit survival value(s).

    0^0 is 1, so FH(0,0) is exactly 1 everywhere.
    """
    s = np.asarray(s_left, dtype=float)
    if np.any(s < 0) or np.any(s > 1):
        raise ValueError("s_left must lie in [0, 1]")
    out = s**weight.rho * (1.0 - s) ** weight.gamma
    return float(out) if np.isscalar(s_left) else out


def wlr_components(dataset: ValidatedDataset, weight: FhWeight) -> WlrComponents:
    """Per-event-time weights, observed-minus-expected, and variances.

    u_k = d_Ek - d_k n_Ek / n_k and
    v_k = n_Ek n_Ck d_k (n_k - d_k) / (n_k^2 (n_k - 1)), zero when n_k = 1.
    """
    table = event_table(dataset)
    w = fh_weight_at(weight, table.s_left)
    return WlrComponents(
        event_times=table.times,
        weights=np.asarray(w),
        observed_minus_expected=table.u,
        variance_terms=table.v,
    )


def _z_from_table(table: EventTable, w: np.ndarray) -> float:
    num = float(np.dot(w, table.u))
    var = float(np.dot(w * w, table.v))
    if var <= 0.0:
        raise ZeroVarianceError("weighted variance is zero; statistic undefined")
    return num / np.sqrt(var)


def wlr_test(dataset: ValidatedDataset, weight: FhWeight = LOGRANK) -> TestResult:
    """Weighted log-rank test; Z < 0 favors the experimental arm.

    Raises
    ------
    ZeroVarianceError
        Every weighted variance term is zero: the test is undefined
        (never reported as p = 0).
    """
    table = event_table(dataset)
    w = np.asarray(fh_weight_at(weight, table.s_left))
    label = "logrank" if weight == LOGRANK else weight.label
    return result_from_z(_z_from_table(table, w), label)
