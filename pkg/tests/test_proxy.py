import numpy as np
import pytest

from curetest import GSaturated, KernelConfig, NoEvents, censoring_curve, compute_eta, estimate_tau

from conftest import make_sample, random_sample


def test_tau_is_largest_event():
    s = make_sample([1, 5, 3, 9], [1, 1, 0, 0])
    assert estimate_tau(s) == 5.0


def test_tau_without_events():
    with pytest.raises(NoEvents):
        estimate_tau(make_sample([1, 2], [0, 0]))


def test_eta_rule_with_given_g():
    # events and early censorings get 0; censored beyond tau get 1/(1-G)
    s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
    eta = compute_eta(s, np.array([0.0, 0.1, 0.2, 0.5]))
    assert eta.tau_hat == 3.0
    np.testing.assert_allclose(eta.values, [0, 0, 0, 2.0])


def test_eta_from_km_censoring_curve():
    # censoring KM on 1,2+,3,4+ at tau=3 is 2/3, so G = 1/3 and eta_4 = 3/2
    s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
    eta = compute_eta(s, None)
    np.testing.assert_allclose(eta.g_at_tau, 1 / 3)
    np.testing.assert_allclose(eta.values, [0, 0, 0, 1.5])


def test_eta_kernel_matches_censoring_curve(rng):
    s = random_sample(rng, 50)
    cfg = {"z": KernelConfig(0.7)}
    eta = compute_eta(s, cfg)
    tau = eta.tau_hat
    for i in range(s.n):
        g = 1.0 - censoring_curve(s, {"z": s.column("z")[i]}, cfg)(tau)
        assert eta.g_at_tau[i] == pytest.approx(g, abs=1e-12)


def test_eta_callable():
    s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
    eta = compute_eta(s, lambda sample, tau: np.full(sample.n, 0.75))
    assert eta.values[-1] == pytest.approx(4.0)


def test_saturation_cap():
    s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
    eta = compute_eta(s, np.array([0, 0, 0, 1.0]))
    assert eta.n_capped == 1
    assert eta.values[-1] == pytest.approx(4.0)  # 1 / (1 - (1 - 1/4))


def test_saturation_without_cap_raises():
    s = make_sample([1, 2, 3, 4], [1, 0, 1, 0])
    with pytest.raises(GSaturated) as info:
        compute_eta(s, np.array([0, 0, 0, 1.0]), cap=False)
    assert info.value.index == 3


def test_eta_mean_estimates_cure_fraction(rng):
    # no covariate effect, uniform censoring beyond the latency support
    n = 4000
    cured = rng.random(n) < 0.4
    y = np.where(cured, np.inf, rng.uniform(0, 1, n))
    c = rng.uniform(0, 3, n)
    s = make_sample(np.minimum(y, c), (y <= c).astype(int))
    eta = compute_eta(s, None)
    # E(eta) = P(cured) up to estimation error
    assert eta.mean() == pytest.approx(0.4, abs=0.04)
