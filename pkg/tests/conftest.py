"""Shared fixtures: small hand-checkable datasets and one frozen
moderate dataset with ties and censoring used across oracle tests."""
import numpy as np
import pytest

from nphkit import SurvivalDataset, validate


def make_dataset(time, event, arm, entry=None):
    return validate(SurvivalDataset.from_arrays(time, event, arm, entry))


@pytest.fixture
def hand_dataset():
    """Six subjects, no censoring: control events at 1, 2, 3 and
    experimental events at 4, 5, 6. Log-rank U = -1.85, V = 0.6775."""
    return make_dataset(
        [1, 2, 3, 4, 5, 6],
        [1, 1, 1, 1, 1, 1],
        [0, 0, 0, 1, 1, 1],
    )


def tied_censored_arrays():
    """Frozen recipe for a 120-subject dataset with heavy ties (times on
    a one-decimal grid) and about 45% censoring. Oracle values frozen in
    the tests were computed against this exact draw."""
    rng = np.random.default_rng(20240614)
    n = 120
    t = np.round(rng.exponential(10.0, n), 1) + 0.1
    arm = np.repeat([0, 1], n // 2)
    t = t.copy()
    t[arm == 1] *= 1.35
    cens = np.round(rng.exponential(14.0, n), 1) + 0.1
    event = t <= cens
    return np.minimum(t, cens), event, arm


@pytest.fixture
def tied_censored_dataset():
    time, event, arm = tied_censored_arrays()
    return make_dataset(time, event, arm)


@pytest.fixture
def step_dataset():
    """Eight subjects with censoring; KM areas work out to simple
    fractions (experimental 5.0 and control 3.75 at tau = 6)."""
    return make_dataset(
        [2, 4, 6, 8, 1, 3, 5, 7],
        [1, 0, 1, 0, 1, 1, 1, 0],
        [1, 1, 1, 1, 0, 0, 0, 0],
    )


@pytest.fixture
def sim_dataset():
    """Replicate 0 of the delayed1 scenario under the default design."""
    from nphkit import BUILTIN_SCENARIOS, TrialDesign, replicate_rng, simulate_trial

    return simulate_trial(
        BUILTIN_SCENARIOS["delayed1"], TrialDesign(), replicate_rng(1905, 0)
    )
