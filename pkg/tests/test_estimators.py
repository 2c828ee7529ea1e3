import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curetest import (
    AllWeightsZero,
    CureRateOne,
    EmptyStratum,
    KernelConfig,
    NoEvents,
    StepCurve,
    beran_survival,
    censoring_curve,
    cure_rate_at,
    km_survival,
    latency_curve,
    multivar_conditional_pl,
    nw_weights,
    stratified_km,
)
from curetest.estimators import epanechnikov, latency_from_survival, latency_matrix, survival_matrix
from curetest.sample import DISCRETE, NOMINAL

from conftest import make_sample, make_xz_sample, random_sample


def km_oracle(time, status):
    """Textbook KM over distinct event times, written with plain loops."""
    out = []
    s = 1.0
    for t in sorted(set(t for t, d in zip(time, status) if d == 1)):
        d = sum(1 for ti, di in zip(time, status) if ti == t and di == 1)
        r = sum(1 for ti in time if ti >= t)
        s *= 1 - d / r
        out.append((t, s))
    return out


class TestStepCurve:
    def test_right_continuous_and_one_before_first_jump(self):
        c = StepCurve([1.0, 2.0], [0.5, 0.25])
        assert c(0.999) == 1.0
        assert c(1.0) == 0.5
        assert c(1.5) == 0.5
        assert c(10.0) == 0.25
        assert c.plateau == 0.25

    def test_vectorised_call(self):
        c = StepCurve([1.0, 2.0], [0.5, 0.25])
        np.testing.assert_array_equal(c(np.array([0.0, 1.0, 3.0])), [1.0, 0.5, 0.25])

    def test_rejects_increasing_values(self):
        with pytest.raises(ValueError):
            StepCurve([1.0, 2.0], [0.5, 0.7])


class TestKaplanMeier:
    def test_hand_example(self):
        # times 1,2+,3,4 -> S = 3/4, then 3/4 * 1/2
        s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
        c = km_survival(s)
        np.testing.assert_array_equal(c.jump_times, [1.0, 3.0])
        np.testing.assert_allclose(c.values, [0.75, 0.375])

    def test_tie_event_before_censoring(self):
        # censored subject at t=2 is still at risk for the event at t=2
        s = make_sample([2, 2, 3], [1, 0, 1])
        assert km_survival(s)(2.0) == pytest.approx(2 / 3)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 40))
    def test_matches_loop_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, n, ties=True)
        expected = km_oracle(list(s.time), list(s.status))
        c = km_survival(s)
        assert len(c) == len(expected)
        for (t, v), jt, jv in zip(expected, c.jump_times, c.values):
            assert jt == t
            assert jv == pytest.approx(v, abs=1e-12)

    def test_values_nonincreasing_in_unit_interval(self, rng):
        c = km_survival(random_sample(rng, 60, ties=True))
        assert np.all(np.diff(c.values) <= 0)
        assert np.all((c.values >= 0) & (c.values <= 1))


class TestBeran:
    def test_infinite_bandwidth_equals_km(self, rng):
        for _ in range(20):
            s = random_sample(rng, 30, ties=True)
            b = beran_survival(s, 0.0, KernelConfig(math.inf))
            k = km_survival(s)
            np.testing.assert_array_equal(b.jump_times, k.jump_times)
            np.testing.assert_allclose(b.values, k.values, atol=1e-12)

    def test_nw_weights_normalised(self, rng):
        s = random_sample(rng, 40)
        w = nw_weights(s, 0.1, KernelConfig(0.5))
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w[np.abs(s.column("z") - 0.1) >= 0.5] == 0)

    def test_local_weights_oracle(self):
        # only the two subjects within h of x0 carry weight: weights 0.75*(1-0.25)
        s = make_sample([1, 2, 3], [1, 1, 1], [0.0, 0.5, 5.0])
        c = beran_survival(s, 0.0, KernelConfig(1.0))
        # equal kernel values at 0 and 0.5? K(0)=0.75, K(0.5)=0.5625
        w1, w2 = 0.75, 0.5625
        assert c(1.0) == pytest.approx(1 - w1 / (w1 + w2))
        assert c(2.0) == pytest.approx(0.0)

    def test_no_support_raises(self):
        s = make_sample([1, 2], [1, 1], [0.0, 0.1])
        with pytest.raises(AllWeightsZero):
            beran_survival(s, 10.0, KernelConfig(1.0))

    def test_stratified_equals_subset_km(self, rng):
        s = random_sample(rng, 50, kind=DISCRETE)
        mask = s.column("z") == 2.0
        sub = km_survival(s.take(np.flatnonzero(mask)))
        c = stratified_km(s, 2, "z")
        np.testing.assert_allclose(c.values, sub.values)

    def test_stratified_missing_level(self, rng):
        s = random_sample(rng, 20, kind=NOMINAL)
        with pytest.raises(EmptyStratum):
            stratified_km(s, "zzz", "z")

    def test_exact_match_equals_stratified(self, rng):
        s = random_sample(rng, 60, kind=DISCRETE)
        a = multivar_conditional_pl(s, {"z": 3.0}, {"z": None})
        b = stratified_km(s, 3.0)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)

    def test_product_kernel_with_match(self, rng):
        n = 80
        x = rng.uniform(0, 1, n)
        z = rng.integers(0, 2, n).astype(float)
        t = rng.exponential(1, n)
        d = (rng.random(n) < 0.7).astype(int)
        s = make_xz_sample(t, d, x, z, z_kind=DISCRETE)
        c = multivar_conditional_pl(s, {"x": 0.5, "z": 1.0}, {"x": KernelConfig(math.inf), "z": None})
        expected = km_survival(s.take(np.flatnonzero(z == 1.0)))
        np.testing.assert_allclose(c.values, expected.values, atol=1e-12)


class TestCensoringCurve:
    def test_flips_roles(self):
        # censoring KM on 1,2+,3,4+: jumps at censorings 2 and 4
        s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
        c = censoring_curve(s)
        np.testing.assert_array_equal(c.jump_times, [2.0, 4.0])
        np.testing.assert_allclose(c.values, [2 / 3, 0.0])

    def test_tie_censoring_first(self):
        # at t=2 the censoring is processed before the event; 3 at risk
        s = make_sample([2, 2, 3], [1, 0, 0])
        assert censoring_curve(s)(2.0) == pytest.approx(2 / 3)


class TestCureAndLatency:
    def test_cure_rate_is_plateau_at_largest_event(self):
        s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
        assert cure_rate_at(s, 0.0, KernelConfig(math.inf)) == pytest.approx(0.375)

    def test_latency_hand_example(self):
        surv = StepCurve([1.0, 3.0], [0.75, 0.375])
        lat = latency_from_survival(surv, 0.375)
        np.testing.assert_allclose(lat.values, [0.6, 0.0])

    def test_latency_cure_one_raises(self):
        with pytest.raises(CureRateOne):
            latency_from_survival(StepCurve([], []), 1.0)

    def test_latency_curve_monotone(self, rng):
        s = random_sample(rng, 80)
        lat = latency_curve(s, {"z": 0.0}, {"z": KernelConfig(0.8)})
        assert np.all(np.diff(lat.values) <= 0)
        assert lat.values[-1] == 0.0

    def test_no_events(self):
        s = make_sample([1, 2], [0, 0])
        with pytest.raises(NoEvents):
            cure_rate_at(s, 0.0, KernelConfig(1.0))


class TestMatrices:
    def test_survival_matrix_rows_match_curves(self, rng):
        s = random_sample(rng, 40)
        z = s.column("z")
        q = np.array([[-0.5], [0.0], [0.7]])
        order, t_sorted, surv = survival_matrix(s.time, s.status, z[:, None], (0.6,), q)
        for row, x0 in zip(surv, q[:, 0]):
            c = beran_survival(s, x0, KernelConfig(0.6))
            np.testing.assert_allclose(c(t_sorted), row, atol=1e-12)

    def test_latency_matrix_nan_for_zero_incidence(self):
        surv = np.array([[1.0, 1.0, 1.0], [0.5, 0.5, 0.25]])
        lat, cure = latency_matrix(surv, np.array([1.0, 2.0, 3.0]), 3.0)
        assert np.isnan(lat[0]).all()
        np.testing.assert_allclose(lat[1], [1 / 3, 1 / 3, 0.0])
        np.testing.assert_allclose(cure, [1.0, 0.25])


def test_epanechnikov_integrates_to_one():
    u = np.linspace(-1, 1, 200_001)
    assert epanechnikov(u).mean() * 2.0 == pytest.approx(1.0, abs=1e-4)
