"""Trial simulation: piecewise-exponential survival with a staged
enrollment ramp, independent exponential dropout, and an event-count
triggered data cut.

Every random quantity is drawn through inverse CDFs from counter-based
substreams, so a (seed, replicate index) pair fully determines a trial
no matter how replicates are scheduled across workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .combo import MAXCOMBO, ComboSpec
from .data import ValidatedDataset, _validated_from_sorted


@dataclass(frozen=True)
class PiecewiseHazard:
    """Piecewise-constant hazard: rates[j] applies on [cut[j-1], cut[j])."""

    cut_points: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cut_points)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "cut_points", cuts)
        object.__setattr__(self, "rates", rates)
        if len(rates) != len(cuts) + 1:
            raise ValueError("need exactly one rate per segment (cuts + 1)")
        if any(r <= 0 for r in rates):
            raise ValueError("hazard rates must be positive")
        if any(c <= 0 for c in cuts) or any(
            b <= a for a, b in zip(cuts, cuts[1:])
        ):
            raise ValueError("cut points must be positive and strictly ascending")

    def cumulative_at_cuts(self) -> np.ndarray:
        """Cumulative hazard evaluated at each cut point."""
        starts = np.concatenate(([0.0], self.cut_points))
        return np.cumsum(np.asarray(self.rates[:-1]) * np.diff(starts))


def sample_piecewise_exp(hazard: PiecewiseHazard, u) -> np.ndarray | float:
    """Inverse-CDF draw: the time where the cumulative hazard reaches -ln u."""
    u_arr = np.asarray(u, dtype=float)
    h = -np.log(u_arr)
    bounds = hazard.cumulative_at_cuts()
    idx = np.searchsorted(bounds, h, side="left")
    starts = np.concatenate(([0.0], hazard.cut_points))
    base_h = np.concatenate(([0.0], bounds))
    rates = np.asarray(hazard.rates)
    t = starts[idx] + (h - base_h[idx]) / rates[idx]
    return float(t) if np.isscalar(u) else t


@dataclass(frozen=True)
class ScenarioSpec:
    """A named pair of arm hazards sharing one change-point grid."""

    name: str
    control: PiecewiseHazard
    experimental: PiecewiseHazard

    def __post_init__(self):
        if self.control.cut_points != self.experimental.cut_points:
            raise ValueError("arms must share the same change points")


def _scenario(name: str, cuts, control, experimental) -> ScenarioSpec:
    return ScenarioSpec(
        name,
        PiecewiseHazard(cuts, control),
        PiecewiseHazard(cuts, experimental),
    )


# Per-month rates for the nine built-in simulation scenarios.
BUILTIN_SCENARIOS: dict[str, ScenarioSpec] = {
    s.name: s
    for s in (
        _scenario("delayed1", (3,), (0.104, 0.161), (0.103, 0.077)),
        _scenario("delayed2", (3,), (0.226, 0.222), (0.210, 0.079)),
        _scenario("diminishing", (6,), (0.134, 0.140), (0.098, 0.137)),
        _scenario("crossing1", (6,), (0.061, 0.090), (0.068, 0.048)),
        _scenario("crossing2", (6,), (0.108, 0.334), (0.123, 0.120)),
        _scenario("ph", (3,), (0.104, 0.161), (0.071, 0.110)),
        _scenario("null", (3,), (0.104, 0.161), (0.104, 0.161)),
        _scenario("delayconv1", (2, 7), (0.104, 0.161, 0.140), (0.103, 0.077, 0.168)),
        _scenario("delayconv2", (2, 7), (0.104, 0.161, 0.161), (0.103, 0.077, 0.137)),
    )
}


@dataclass(frozen=True)
class TrialDesign:
    """Enrollment, dropout, and data-cut settings for one simulated trial."""

    n_total: int = 300
    enrollment_months: float = 18.0
    ramp_months: float = 6.0
    dropout_rate: float = 0.014
    target_events: int = 210

    def __post_init__(self):
        if self.n_total <= 0 or self.n_total % 2 != 0:
            raise ValueError("n_total must be a positive even integer (1:1 allocation)")
        if not 0 < self.target_events <= self.n_total:
            raise ValueError("target_events must be in (0, n_total]")
        if self.enrollment_months <= self.ramp_months:
            raise ValueError("enrollment duration must exceed the ramp-up period")
        if self.ramp_months < 0 or self.dropout_rate < 0:
            raise ValueError("ramp_months and dropout_rate must be nonnegative")


def sample_entry(design: TrialDesign, u) -> np.ndarray | float:
    """Inverse-CDF draw from the accrual law: the enrollment rate climbs
    linearly from zero across the ramp, then holds constant."""
    u_arr = np.asarray(u, dtype=float)
    ramp, total = design.ramp_months, design.enrollment_months
    mass = total - ramp / 2.0
    ramp_mass = (ramp / 2.0) / mass
    with np.errstate(invalid="ignore"):
        in_ramp = np.sqrt(np.maximum(u_arr * 2.0 * ramp * mass, 0.0))
    t = np.where(u_arr <= ramp_mass, in_ramp, u_arr * mass + ramp / 2.0)
    return float(t) if np.isscalar(u) else t


@dataclass(frozen=True)
class TrialResult:
    """A simulated dataset plus the cut bookkeeping run_study aggregates."""

    dataset: ValidatedDataset
    cut_time: float
    shortfall: bool
    n_enrolled: int
    n_events: int


def simulate_trial_detail(
    scenario: ScenarioSpec, design: TrialDesign, rng: np.random.Generator
) -> TrialResult:
    """One trial with its administrative-cut metadata.

    Draw order (entry, survival, dropout; control block first) is part of
    the reproducibility contract and must not change.
    """
    n = design.n_total
    half = n // 2
    u_entry = rng.random(n)
    u_surv = rng.random(n)
    u_drop = rng.random(n)

    entry = np.asarray(sample_entry(design, u_entry))
    surv = np.empty(n)
    surv[:half] = sample_piecewise_exp(scenario.control, 1.0 - u_surv[:half])
    surv[half:] = sample_piecewise_exp(scenario.experimental, 1.0 - u_surv[half:])
    if design.dropout_rate > 0:
        dropout = -np.log(1.0 - u_drop) / design.dropout_rate
    else:
        dropout = np.full(n, np.inf)
    is_exp = np.zeros(n, dtype=bool)
    is_exp[half:] = True

    dies_first = surv <= dropout
    event_calendar = entry[dies_first] + surv[dies_first]
    if event_calendar.size >= design.target_events:
        cut = float(np.partition(event_calendar, design.target_events - 1)[
            design.target_events - 1
        ])
        shortfall = False
    else:
        cut = float("inf")
        shortfall = True

    enrolled = entry <= cut
    time = np.minimum(np.minimum(surv, dropout), cut - entry)[enrolled]
    event = dies_first[enrolled] & (entry[enrolled] + surv[enrolled] <= cut)
    order = np.argsort(time, kind="stable")
    dataset = _validated_from_sorted(
        time[order],
        event[order],
        is_exp[enrolled][order],
        entry[enrolled][order],
    )
    return TrialResult(
        dataset=dataset,
        cut_time=cut,
        shortfall=shortfall,
        n_enrolled=int(enrolled.sum()),
        n_events=int(event.sum()),
    )


def simulate_trial(
    scenario: ScenarioSpec, design: TrialDesign, rng: np.random.Generator
) -> ValidatedDataset:
    """One simulated trial dataset, administratively cut at the calendar
    time of the target_events-th event (full follow-up on a shortfall)."""
    return simulate_trial_detail(scenario, design, rng).dataset


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Counter-based substream for one replicate of one study."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, replicate], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


ALL_METHODS: tuple[str, ...] = (
    "logrank",
    "fh01",
    "fh10",
    "fh11",
    "rmst",
    "wkm",
    "breslow",
    "maxcombo",
    "lee",
)

DEFAULT_SEED = 1905


@dataclass(frozen=True)
class StudyConfig:
    """Everything needed to reproduce a replication study bit-for-bit."""

    scenario: ScenarioSpec
    design: TrialDesign
    replicates: int
    alpha_one_sided: float = 0.025
    seed: int = DEFAULT_SEED
    methods: tuple[str, ...] = ALL_METHODS
    combo: ComboSpec = MAXCOMBO

    def __post_init__(self):
        if self.replicates <= 0:
            raise ValueError("replicates must be positive")
        if not 0.0 < self.alpha_one_sided < 0.5:
            raise ValueError("alpha_one_sided must lie in (0, 0.5)")
        object.__setattr__(self, "methods", tuple(self.methods))
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if not self.methods:
            raise ValueError("at least one method is required")
