import math

import numpy as np
import pytest

from curetest import AllWeightsZero, KernelConfig, beran_survival, censoring_curve, cv_bandwidth, make_grid, statistic_bandwidths
from curetest.bandwidth import CENSORING, SURVIVAL, BandwidthGrid, cv_scores, select_bandwidth
from curetest.errors import InvalidRange

from conftest import make_sample, random_sample


class TestGrid:
    def test_make_grid_values(self):
        g = make_grid(4, 60, 10, 1 / 5, 100)
        scale = 100 ** (-1 / 5)
        assert g.values[0] == pytest.approx(4 * scale)
        assert g.values[-1] == pytest.approx(60 * scale)
        assert len(g) == 10
        np.testing.assert_allclose(np.diff(g.values), (56 / 9) * scale)

    def test_single_point(self):
        assert make_grid(3, 3, 1, 0.2, 32).values == pytest.approx((1.5,))

    @pytest.mark.parametrize("args", [(5, 4, 10, 0.2, 100), (0, 4, 10, 0.2, 100), (1, 4, 0, 0.2, 100)])
    def test_invalid(self, args):
        with pytest.raises(InvalidRange):
            make_grid(*args)

    def test_grid_must_increase(self):
        with pytest.raises(InvalidRange):
            BandwidthGrid((2.0, 1.0), {})

    def test_statistic_bandwidths(self):
        hs = statistic_bandwidths(125, 1)
        assert hs[0] == pytest.approx(10 / 5)
        assert hs[-1] == pytest.approx(60 / 5)
        assert len(hs) == 7


def cv_oracle(sample, h, target):
    """Leave-one-out criterion built from the public curve estimators."""
    t, d, z = sample.time, sample.status, sample.column("z")
    ind = d if target == SURVIVAL else 1 - d
    total = 0.0
    for i in range(sample.n):
        rest = sample.take([k for k in range(sample.n) if k != i])
        if target == SURVIVAL:
            curve = beran_survival(rest, z[i], KernelConfig(h))
        else:
            curve = censoring_curve(rest, {"z": z[i]}, {"z": KernelConfig(h)})
        for j in range(sample.n):
            if t[i] <= t[j] and ind[i] == 1:
                total += (1.0 - (1.0 - curve(t[j]))) ** 2
            elif t[i] > t[j]:
                total += (0.0 - (1.0 - curve(t[j]))) ** 2
    return total


class TestCrossValidation:
    @pytest.mark.parametrize("target", [SURVIVAL, CENSORING])
    def test_matches_loop_oracle(self, rng, target):
        s = random_sample(rng, 25)
        grid = [0.6, 1.0, 3.0]
        scores = cv_scores(s.time, s.status, s.column("z")[:, None], [True], grid, target)
        expected = [cv_oracle(s, h, target) for h in grid]
        np.testing.assert_allclose(scores, expected, rtol=1e-10)

    def test_isolated_point_scores_inf(self):
        s = make_sample([1, 2, 3, 4], [1, 1, 0, 1], [0.0, 0.1, 0.2, 5.0])
        scores = cv_scores(s.time, s.status, s.column("z")[:, None], [True], [0.5, 10.0], SURVIVAL)
        assert math.isinf(scores[0]) and math.isfinite(scores[1])

    def test_all_inf_raises(self):
        with pytest.raises(AllWeightsZero):
            select_bandwidth(np.array([np.inf, np.inf]), [1.0, 2.0])

    def test_ties_pick_smallest(self):
        assert select_bandwidth(np.array([3.0, 1.0, 1.0]), [1.0, 2.0, 3.0]) == 2.0

    def test_single_grid_value_passthrough(self, rng):
        s = random_sample(rng, 10)
        assert cv_bandwidth(s, [0.7]) == 0.7

    def test_selected_value_in_grid(self, rng):
        s = random_sample(rng, 60)
        grid = make_grid(0.2, 2.0, 6, 0.0, 60)
        assert cv_bandwidth(s, grid) in grid.values
