"""Kaplan-Meier estimation against hand-computed product-limit values."""
import numpy as np
import pytest

from nphkit import EmptyAfterFilterError, censoring_km, km_estimate, pooled_km_left

from conftest import make_dataset


class TestKmEstimate:
    def test_uncensored_hand_values(self):
        # Four subjects, events at 1, 2, 3, 4.
        ds = make_dataset([1, 2, 3, 4], [1, 1, 1, 1], ["E"] * 4)
        c = km_estimate(ds)
        np.testing.assert_array_equal(c.times, [1, 2, 3, 4])
        np.testing.assert_allclose(c.survival, [0.75, 0.5, 0.25, 0.0], rtol=0, atol=1e-15)
        np.testing.assert_array_equal(c.at_risk, [4, 3, 2, 1])
        np.testing.assert_array_equal(c.events, [1, 1, 1, 1])
        # Greenwood: S(t)^2 * sum d/(n(n-d)); the n = d term is dropped.
        np.testing.assert_allclose(
            c.greenwood_var, [0.046875, 0.0625, 0.046875, 0.0], rtol=0, atol=1e-15
        )
        assert c.n0 == 4 and c.max_follow_up == 4.0

    def test_censoring_shrinks_risk_set(self):
        # Censoring at a tied time stays in that risk set (event first).
        ds = make_dataset([1, 2, 2, 3], [1, 0, 1, 1], ["E"] * 4)
        c = km_estimate(ds)
        np.testing.assert_array_equal(c.times, [1, 2, 3])
        np.testing.assert_allclose(c.survival, [0.75, 0.5, 0.0], atol=1e-15)
        np.testing.assert_array_equal(c.at_risk, [4, 3, 1])

    def test_step_and_left_values(self):
        ds = make_dataset([1, 2, 3, 4], [1, 1, 1, 1], ["E"] * 4)
        c = km_estimate(ds)
        np.testing.assert_allclose(c.step_values(np.array([0.5, 1.0, 2.5])), [1.0, 0.75, 0.5])
        np.testing.assert_allclose(c.left_values(np.array([1.0, 2.0, 2.5])), [1.0, 0.75, 0.5])

    def test_arm_filter(self):
        ds = make_dataset([1, 2, 3, 4], [1, 1, 1, 1], ["C", "E", "C", "E"])
        ce = km_estimate(ds, "E")
        np.testing.assert_array_equal(ce.times, [2, 4])
        np.testing.assert_array_equal(ce.at_risk, [2, 1])
        assert ce.n0 == 2

    def test_empty_filter_rejected(self):
        ds = make_dataset([1, 2], [1, 1], ["C", "C"])
        with pytest.raises(EmptyAfterFilterError):
            km_estimate(ds, "E")

    def test_no_events_gives_flat_curve(self):
        ds = make_dataset([1, 2], [0, 0], ["C", "E"])
        c = km_estimate(ds)
        assert c.times.size == 0
        np.testing.assert_allclose(c.step_values(np.array([0.0, 5.0])), [1.0, 1.0])
        assert c.max_follow_up == 2.0


class TestCensoringKm:
    def test_inverts_event_flags(self):
        ds = make_dataset([1, 2, 2, 3], [1, 0, 1, 1], ["E"] * 4)
        g = censoring_km(ds)
        np.testing.assert_array_equal(g.times, [2])
        np.testing.assert_allclose(g.survival, [2 / 3])

    def test_matches_km_on_inverted_dataset(self):
        ds = make_dataset([1, 2, 3, 4, 5], [1, 0, 1, 0, 1], ["C", "E", "C", "E", "C"])
        g = censoring_km(ds)
        k = km_estimate(ds.with_inverted_events())
        np.testing.assert_array_equal(g.times, k.times)
        np.testing.assert_array_equal(g.survival, k.survival)


class TestPooledLeft:
    def test_hand_values(self):
        ds = make_dataset([1, 2], [1, 1], ["E", "C"])
        assert pooled_km_left(ds, 1.0) == 1.0
        assert pooled_km_left(ds, 2.0) == 0.5
        assert pooled_km_left(ds, 2.5) == 0.0

    def test_pools_both_arms(self):
        ds = make_dataset([1, 2, 3, 4, 5, 6], [1] * 6, [0, 0, 0, 1, 1, 1])
        np.testing.assert_allclose(
            [pooled_km_left(ds, t) for t in (1, 2, 3, 4, 5, 6)],
            [1.0, 5 / 6, 4 / 6, 3 / 6, 2 / 6, 1 / 6],
        )

    def test_negative_time_rejected(self):
        ds = make_dataset([1], [1], ["C"])
        with pytest.raises(ValueError):
            pooled_km_left(ds, -0.5)
