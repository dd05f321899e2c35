"""Maximum-type combination tests over correlated weighted log-rank
statistics: the four-weight MaxCombo, Lee's two-weight combination, and
the Breslow log-rank-plus-acceleration pair.

All component Z's share the package convention that negative favors the
experimental arm; the max is taken over the sign-flipped values so the
combination stays a one-sided upper-tail test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .data import ValidatedDataset
from .errors import ZeroVarianceError
from .estimation import CoxFit, _fit_from_table
from .mvn import mvn_lower_orthant
from .wlr import EventTable, FhWeight, event_table, fh_weight_at


@dataclass(frozen=True, slots=True)
class ComboSpec:
    """A set of distinct FH weights to combine, with a display label."""

    components: tuple[FhWeight, ...]
    label: str

    def __post_init__(self):
        if len(self.components) < 2:
            raise ValueError("a combination test needs at least two components")
        if len(set(self.components)) != len(self.components):
            raise ValueError("combination components must be distinct")


MAXCOMBO = ComboSpec(
    (FhWeight(0, 0), FhWeight(0, 1), FhWeight(1, 1), FhWeight(1, 0)), "maxcombo"
)
LEE = ComboSpec((FhWeight(0, 1), FhWeight(1, 0)), "lee")


@dataclass(frozen=True, slots=True)
class ComboResult:
    """Outcome of a maximum-type combination test.

    ``component_z`` keeps the natural orientation (negative favors E);
    ``z_max`` is the maximum of the flipped values. ``selected`` is the
    component with the smallest unadjusted p; it is None when that
    component has no FH form (the Breslow acceleration term), and then
    ``selected_hr`` is None too.
    """

    component_z: np.ndarray
    correlation: np.ndarray
    z_max: float
    p_adjusted: float
    selected: FhWeight | None
    selected_hr: CoxFit | None
    method_label: str

    @property
    def p_min(self) -> float:
        """Smallest unadjusted one-sided component p-value."""
        return float(ndtr(-self.z_max))


def _weight_matrix(table: EventTable, components: tuple[FhWeight, ...]) -> np.ndarray:
    return np.vstack([fh_weight_at(c, table.s_left) for c in components])


def _component_stats(table: EventTable, weights: np.ndarray):
    """Component Z's and their plug-in correlation from stacked weight rows."""
    gram = (weights * table.v) @ weights.T
    var = np.diag(gram)
    if np.any(var <= 0.0):
        raise ZeroVarianceError("a combination component has zero variance")
    sd = np.sqrt(var)
    z = (weights @ table.u) / sd
    corr = gram / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return z, corr


def max_adjusted_p(z_max: float, corr: np.ndarray) -> float:
    """P(max of N(0, corr) components exceeds z_max), one-sided.

    Clamped into the Bonferroni sandwich [p_min, m * p_min], which the
    exact probability satisfies; only integration noise can stray.
    """
    m = corr.shape[0]
    p_min = float(ndtr(-z_max))
    joint = mvn_lower_orthant(np.full(m, z_max), corr)
    p = 1.0 - joint
    return float(min(max(p, p_min), min(m * p_min, 1.0)))


def wlr_correlation(dataset: ValidatedDataset, spec: ComboSpec) -> np.ndarray:
    """Plug-in correlation matrix of the spec's standardized components.

    Entry (i, j) is sum(w_i w_j v) / sqrt(sum(w_i^2 v) sum(w_j^2 v)) over
    the shared per-event-time hypergeometric variances v.
    """
    table = event_table(dataset)
    _, corr = _component_stats(table, _weight_matrix(table, spec.components))
    return corr


def _select(table: EventTable, spec: ComboSpec, z: np.ndarray):
    idx = int(np.argmin(z))
    selected = spec.components[idx]
    return selected, _fit_from_table(table, selected)


def max_combo_test(dataset: ValidatedDataset, spec: ComboSpec = MAXCOMBO) -> ComboResult:
    """Maximum of the spec's weighted log-rank Z's with an MVN-adjusted p.

    The adjusted p is the probability, under a zero-mean multivariate
    normal with the estimated component correlation, that any component
    reaches the observed maximum.
    """
    table = event_table(dataset)
    z, corr = _component_stats(table, _weight_matrix(table, spec.components))
    z_max = float(np.max(-z))
    p_adj = max_adjusted_p(z_max, corr)
    selected, fit = _select(table, spec, z)
    return ComboResult(
        component_z=z,
        correlation=corr,
        z_max=z_max,
        p_adjusted=p_adj,
        selected=selected,
        selected_hr=fit,
        method_label=spec.label,
    )


def lee_test(dataset: ValidatedDataset) -> ComboResult:
    """Two-component FH(0,1)/FH(1,0) combination."""
    return max_combo_test(dataset, LEE)


def breslow_acceleration_weights(table: EventTable) -> np.ndarray:
    """Event-time weights of the acceleration component.

    One minus the left-limit pooled Kaplan-Meier survival. A shift of
    the time scale moves the bulk of the event distribution, which this
    contrast picks up where the pooled curve has already dropped; it is
    zero at the first event time, so its overlap with the constant
    log-rank weight stays moderate even at deep follow-up.
    """
    return 1.0 - table.s_left


def breslow_components(table: EventTable) -> np.ndarray:
    """Stacked weight rows entering the Breslow maximum.

    The acceleration contrast needs the pooled curve to traverse a
    meaningful survival range before it measures anything but noise, so
    it enters only once at least two thirds of the initial risk set have
    had events. Below that maturity the test reduces to its log-rank
    component.
    """
    ones = np.ones_like(table.times)
    if table.d.sum() * 3 < table.n[0] * 2:
        return ones[np.newaxis, :]
    return np.vstack([ones, breslow_acceleration_weights(table)])


def breslow_combo_test(dataset: ValidatedDataset) -> ComboResult:
    """Log-rank plus acceleration components combined as a maximum test.

    The adjusted p treats the two designed components as independent,
    p = 1 - Phi(z_max)^2, so it is exact when they are orthogonal and
    conservative when censoring ties them together positively. The same
    two-component adjustment applies when immaturity leaves only the
    log-rank term in the maximum.
    """
    table = event_table(dataset)
    z, corr = _component_stats(table, breslow_components(table))
    z_max = float(np.max(-z))
    p_adj = float(1.0 - ndtr(z_max) ** 2)
    if z[0] <= z.min():
        selected: FhWeight | None = FhWeight(0, 0)
        fit: CoxFit | None = _fit_from_table(table, None)
    else:
        selected = None
        fit = None
    return ComboResult(
        component_z=z,
        correlation=corr,
        z_max=z_max,
        p_adjusted=p_adj,
        selected=selected,
        selected_hr=fit,
        method_label="breslow",
    )
