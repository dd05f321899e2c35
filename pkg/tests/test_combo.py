"""Combination tests: component statistics, correlation, selection, and
the Bonferroni sandwich on the adjusted p-value."""
import numpy as np
import pytest
from scipy.special import ndtr

from nphkit import (
    ComboSpec,
    FhWeight,
    LEE,
    MAXCOMBO,
    ZeroVarianceError,
    breslow_combo_test,
    cox_fit,
    event_table,
    lee_test,
    max_combo_test,
    wlr_correlation,
    wlr_test,
)
from nphkit.combo import breslow_acceleration_weights

from conftest import make_dataset


class TestSpecs:
    def test_builtin_components(self):
        assert [(w.rho, w.gamma) for w in MAXCOMBO.components] == [
            (0, 0), (0, 1), (1, 1), (1, 0)
        ]
        assert [(w.rho, w.gamma) for w in LEE.components] == [(0, 1), (1, 0)]

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ComboSpec((FhWeight(0, 0),), "solo")
        with pytest.raises(ValueError):
            ComboSpec((FhWeight(0, 0), FhWeight(0, 0)), "dup")


class TestMaxCombo:
    def test_components_match_single_tests(self, tied_censored_dataset):
        res = max_combo_test(tied_censored_dataset)
        for z_i, w in zip(res.component_z, MAXCOMBO.components):
            assert z_i == pytest.approx(wlr_test(tied_censored_dataset, w).z, abs=1e-12)

    def test_z_max_is_flipped_maximum(self, tied_censored_dataset):
        res = max_combo_test(tied_censored_dataset)
        assert res.z_max == pytest.approx(float(np.max(-res.component_z)), abs=0)
        assert res.p_min == pytest.approx(float(ndtr(-res.z_max)), abs=1e-15)

    def test_bonferroni_sandwich(self, tied_censored_dataset, sim_dataset, hand_dataset):
        for ds in (tied_censored_dataset, sim_dataset, hand_dataset):
            res = max_combo_test(ds)
            m = len(MAXCOMBO.components)
            assert res.p_min <= res.p_adjusted <= min(m * res.p_min, 1.0) + 1e-12

    def test_selection_is_smallest_p(self, tied_censored_dataset):
        res = max_combo_test(tied_censored_dataset)
        idx = int(np.argmin(res.component_z))
        assert res.selected == MAXCOMBO.components[idx]
        assert res.selected_hr is not None
        assert res.selected_hr.weight == res.selected

    def test_selected_logrank_hr_matches_cox(self, hand_dataset):
        res = max_combo_test(hand_dataset)
        assert res.selected == FhWeight(0, 0)
        assert res.selected_hr.log_hr == cox_fit(hand_dataset).log_hr

    def test_arm_swap_negates_components(self, tied_censored_dataset):
        a = max_combo_test(tied_censored_dataset)
        b = max_combo_test(tied_censored_dataset.with_swapped_arms())
        np.testing.assert_allclose(b.component_z, -a.component_z, atol=1e-12)
        np.testing.assert_allclose(b.correlation, a.correlation, atol=1e-12)

    def test_perfectly_correlated_pair_collapses_to_single_test(self):
        # With a single event time every weight is a scalar, so any two
        # components are perfectly correlated and the adjusted p equals
        # the unadjusted one.
        ds = make_dataset([1, 1, 1, 1, 2, 2], [1, 1, 1, 1, 0, 0], [1, 1, 0, 0, 1, 0])
        spec = ComboSpec((FhWeight(0, 0), FhWeight(1, 0)), "pair")
        res = max_combo_test(ds, spec)
        assert res.correlation[0, 1] == pytest.approx(1.0, abs=1e-12)
        assert res.p_adjusted == pytest.approx(res.p_min, abs=5e-4)

    def test_zero_variance_component(self):
        # A single event at the first time makes FH(0,1) identically zero.
        ds = make_dataset([1, 1, 2, 2], [1, 1, 0, 0], ["C", "E", "C", "E"])
        with pytest.raises(ZeroVarianceError):
            max_combo_test(ds)

    def test_lee_is_two_component(self, tied_censored_dataset):
        res = lee_test(tied_censored_dataset)
        assert res.method_label == "lee"
        assert len(res.component_z) == 2
        for z_i, w in zip(res.component_z, LEE.components):
            assert z_i == pytest.approx(wlr_test(tied_censored_dataset, w).z, abs=1e-12)


class TestCorrelation:
    def test_structure(self, tied_censored_dataset):
        corr = wlr_correlation(tied_censored_dataset, MAXCOMBO)
        assert corr.shape == (4, 4)
        np.testing.assert_allclose(corr, corr.T, atol=1e-15)
        np.testing.assert_allclose(np.diag(corr), 1.0, atol=0)
        assert np.all(corr > 0) and np.all(corr <= 1.0)
        assert np.all(np.linalg.eigvalsh(corr) > -1e-12)

    def test_matches_component_formula(self, hand_dataset):
        # FH(0,0) x FH(1,0) on the hand dataset: weights 1 and S(t-).
        t = event_table(hand_dataset)
        w1 = np.ones_like(t.times)
        w2 = t.s_left
        expected = float(
            np.dot(w1 * w2, t.v)
            / np.sqrt(np.dot(w1 * w1, t.v) * np.dot(w2 * w2, t.v))
        )
        spec = ComboSpec((FhWeight(0, 0), FhWeight(1, 0)), "pair")
        corr = wlr_correlation(hand_dataset, spec)
        assert corr[0, 1] == pytest.approx(expected, abs=1e-14)


class TestBreslow:
    def test_first_component_is_logrank(self, tied_censored_dataset):
        res = breslow_combo_test(tied_censored_dataset)
        assert res.component_z[0] == pytest.approx(
            wlr_test(tied_censored_dataset).z, abs=1e-12
        )
        assert res.method_label == "breslow"

    def test_acceleration_weights_complement_pooled_km(self, hand_dataset):
        t = event_table(hand_dataset)
        w = breslow_acceleration_weights(t)
        # First event: the pooled curve has not dropped yet -> weight 0.
        assert w[0] == 0.0
        np.testing.assert_allclose(w, 1.0 - t.s_left, atol=0)

    def test_acceleration_component_matches_late_wlr(self, hand_dataset):
        res = breslow_combo_test(hand_dataset)
        late = wlr_test(hand_dataset, FhWeight(0, 1))
        assert res.component_z.shape == (2,)
        assert res.component_z[1] == pytest.approx(late.z, abs=1e-12)

    def test_immature_data_reduces_to_logrank(self):
        # 3 events in 12 subjects: under two thirds of the initial risk
        # set, so the acceleration term stays out of the maximum while
        # the two-component p adjustment still applies.
        ds = make_dataset(
            [1, 2, 3, 4, 4, 4, 4, 4, 4, 4, 4, 4],
            [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
            [0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
        )
        res = breslow_combo_test(ds)
        assert res.component_z.shape == (1,)
        assert res.z_max == pytest.approx(-wlr_test(ds).z, abs=1e-12)
        assert res.p_adjusted == pytest.approx(1.0 - ndtr(res.z_max) ** 2, abs=1e-15)
        assert res.selected == FhWeight(0, 0)

    def test_independent_max_p(self, tied_censored_dataset):
        res = breslow_combo_test(tied_censored_dataset)
        assert res.p_adjusted == pytest.approx(1.0 - ndtr(res.z_max) ** 2, abs=1e-15)
        # 1 - Phi^2 = p_min (2 - p_min) always sits in the sandwich.
        assert res.p_min <= res.p_adjusted <= 2 * res.p_min

    def test_selection_semantics(self, hand_dataset):
        res = breslow_combo_test(hand_dataset)
        if res.component_z[0] <= res.component_z[1]:
            assert res.selected == FhWeight(0, 0)
            assert res.selected_hr.log_hr == cox_fit(hand_dataset).log_hr
        else:
            assert res.selected is None and res.selected_hr is None

    def test_arm_swap_negates_components(self, tied_censored_dataset):
        a = breslow_combo_test(tied_censored_dataset)
        b = breslow_combo_test(tied_censored_dataset.with_swapped_arms())
        np.testing.assert_allclose(b.component_z, -a.component_z, atol=1e-12)


class TestWeightScaling:
    def test_z_invariant_under_weight_scaling(self, tied_censored_dataset):
        from nphkit.combo import _component_stats, _weight_matrix

        t = event_table(tied_censored_dataset)
        w = _weight_matrix(t, MAXCOMBO.components)
        z1, c1 = _component_stats(t, w)
        z2, c2 = _component_stats(t, w * np.array([[2.0], [0.5], [7.0], [1e-3]]))
        np.testing.assert_allclose(z2, z1, atol=1e-12)
        np.testing.assert_allclose(c2, c1, atol=1e-12)
