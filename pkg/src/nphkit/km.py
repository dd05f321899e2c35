"""Kaplan-Meier estimation, censoring-distribution estimation, and the
pooled left-limit survival used by Fleming-Harrington weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ValidatedDataset
from .errors import EmptyAfterFilterError


@dataclass(frozen=True)
class KmCurve:
    """Product-limit estimate over the distinct event times of a sample.

    Attributes
    ----------
    times : ndarray
        Strictly increasing distinct event times t_1 < ... < t_K.
    survival : ndarray
        S(t_k), right-continuous step values; S is 1 before t_1.
    at_risk : ndarray
        n_k, subjects at risk at t_k (censored-at-t_k subjects count:
        at a tied time events happen first).
    events : ndarray
        d_k >= 1 events at t_k.
    greenwood_var : ndarray
        Greenwood variance of S(t_k); segments where n_k = d_k stop
        accumulating (the curve is 0 there and stays 0).
    n0 : int
        Sample size the curve was estimated from.
    max_follow_up : float
        Largest observed time (event or censored) in the sample; the
        curve is carried flat to this point and beyond.
    """

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    greenwood_var: np.ndarray
    n0: int
    max_follow_up: float

    def step_values(self, at: np.ndarray) -> np.ndarray:
        """S evaluated at each point of ``at`` (right-continuous)."""
        idx = np.searchsorted(self.times, at, side="right")
        padded = np.concatenate(([1.0], self.survival))
        return padded[idx]

    def left_values(self, at: np.ndarray) -> np.ndarray:
        """Left limits S(t-) at each point of ``at``."""
        idx = np.searchsorted(self.times, at, side="left")
        padded = np.concatenate(([1.0], self.survival))
        return padded[idx]


def _km_from_arrays(time: np.ndarray, event: np.ndarray) -> KmCurve:
    # time must be sorted ascending; ties between events and censorings
    # are resolved by counting censored subjects in the risk set.
    n = len(time)
    evt_times = time[event]
    if evt_times.size:
        distinct, counts = np.unique(evt_times, return_counts=True)
    else:
        distinct = np.empty(0)
        counts = np.empty(0, dtype=int)
    at_risk = n - np.searchsorted(time, distinct, side="left")
    frac = counts / at_risk
    survival = np.cumprod(1.0 - frac)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(at_risk > counts, counts / (at_risk * (at_risk - counts)), 0.0)
    greenwood = survival**2 * np.cumsum(terms)
    return KmCurve(
        times=distinct,
        survival=survival,
        at_risk=at_risk,
        events=counts,
        greenwood_var=greenwood,
        n0=n,
        max_follow_up=float(time[-1]) if n else 0.0,
    )


def _filtered_arrays(dataset: ValidatedDataset, arm_filter):
    if arm_filter is None:
        return dataset.time, dataset.event
    from .data import Arm

    experimental = Arm.coerce(arm_filter) is Arm.EXPERIMENTAL
    mask = dataset.is_experimental == experimental
    if not mask.any():
        raise EmptyAfterFilterError(f"no records in arm {'E' if experimental else 'C'}")
    return dataset.time[mask], dataset.event[mask]


def km_estimate(dataset: ValidatedDataset, arm_filter=None) -> KmCurve:
    """Kaplan-Meier curve of the whole dataset or one arm.

    Parameters
    ----------
    dataset : ValidatedDataset
    arm_filter : optional
        "C"/"E" (or an :class:`~nphkit.data.Arm`) restricts to one arm.

    Raises
    ------
    EmptyAfterFilterError
        The filter matched no records.
    """
    time, event = _filtered_arrays(dataset, arm_filter)
    return _km_from_arrays(time, event)


def censoring_km(dataset: ValidatedDataset, arm_filter=None) -> KmCurve:
    """Kaplan-Meier estimate of the censoring distribution.

    Identical to :func:`km_estimate` with the event flags inverted, so
    censorings are the "events" and events are the "censorings".
    """
    time, event = _filtered_arrays(dataset, arm_filter)
    return _km_from_arrays(time, ~event)


def pooled_km_left(dataset: ValidatedDataset, t: float) -> float:
    """Pooled-arms KM survival at ``t-``, the step value just before t.

    Equals 1 for any t at or before the first pooled event time.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    curve = km_estimate(dataset)
    return float(curve.left_values(np.array([t]))[0])
