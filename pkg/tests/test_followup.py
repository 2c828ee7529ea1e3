import numpy as np
import pytest

from curetest import NoEvents, maller_zhou

from conftest import make_sample


def test_largest_observation_uncensored_gives_one():
    s = make_sample([1, 2, 3, 4], [0, 1, 0, 1])
    r = maller_zhou(s)
    assert r.n_tail == 0 and r.p_value == 1.0


def test_ten_subjects_five_in_tail():
    # t1_max = 10, t_max = 15, tail interval (5, 10]
    time = [1, 2, 3, 4, 6, 7, 8, 9, 10, 15]
    status = [1, 1, 1, 1, 1, 1, 1, 1, 1, 0]
    r = maller_zhou(make_sample(time, status))
    assert r.n_tail == 5
    assert r.p_value == pytest.approx(0.5**10)


def test_interval_open_left_closed_right():
    # lower endpoint 2*4 - 6 = 2 is excluded, 4 is included
    r = maller_zhou(make_sample([2, 3, 4, 6], [1, 1, 1, 0]))
    assert r.n_tail == 2


def test_all_in_tail_gives_zero():
    time = [5, 6, 7, 10]
    r = maller_zhou(make_sample(time, [1, 1, 1, 0]))
    # lower endpoint 4, so 3 events of 4 subjects fall in the tail
    assert r.p_value == pytest.approx(0.25**4)


def test_no_events():
    with pytest.raises(NoEvents):
        maller_zhou(make_sample([1, 2], [0, 0]))


def test_scale_invariance(rng):
    t = rng.exponential(1, 50)
    d = (rng.random(50) < 0.5).astype(int)
    a = maller_zhou(make_sample(t, d))
    b = maller_zhou(make_sample(3.5 * t, d))
    assert a.n_tail == b.n_tail and a.p_value == b.p_value
    assert b.t_max == pytest.approx(3.5 * a.t_max)


def test_p_decreases_with_tail_count():
    ps = [(1 - k / 20) ** 20 for k in range(21)]
    assert all(a >= b for a, b in zip(ps, ps[1:]))
