import numpy as np
import pytest

from curetest import Covariate, CovariateSpec, Observation, Sample, validate
from curetest.sample import DISCRETE, NOMINAL, X_BLOCK, Z_BLOCK, canonical_order, sort_index


def spec_xz():
    return CovariateSpec.build(("age", "continuous", X_BLOCK), ("loc", NOMINAL, Z_BLOCK, ("colon", "rectum")))


class TestCovariateSpec:
    def test_blocks(self):
        spec = spec_xz()
        assert [c.name for c in spec.x_block] == ["age"]
        assert [c.name for c in spec.z_block] == ["loc"]
        assert spec.index("loc") == 1

    def test_duplicate_names(self):
        with pytest.raises(ValueError):
            CovariateSpec.build(("a",), ("a",))

    def test_nominal_needs_levels(self):
        with pytest.raises(ValueError):
            Covariate("loc", NOMINAL)

    def test_nominal_labels_stripped(self):
        c = Covariate("loc", NOMINAL, levels=(" colon", "rectum "))
        assert c.levels == ("colon", "rectum")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Covariate("a", "ordinal")


class TestSample:
    def test_from_arrays_roundtrip(self):
        s = Sample.from_arrays([3.0, 1.0], [1, 0], {"age": [50, 60], "loc": ["colon", "rectum"]}, spec_xz())
        assert s.n == 2
        np.testing.assert_array_equal(s.time, [3.0, 1.0])
        np.testing.assert_array_equal(s.column("age"), [50.0, 60.0])
        np.testing.assert_array_equal(s.codes("loc"), [0.0, 1.0])
        assert s.observations[0] == Observation(3.0, 1, (50, "colon"))

    def test_take(self):
        s = Sample.from_arrays([1, 2, 3], [1, 0, 1], [[0.1, 0.2, 0.3]])
        np.testing.assert_array_equal(s.take([2, 0]).time, [3.0, 1.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Sample.from_arrays([1, 2], [1], [[0, 1]])


class TestValidate:
    def test_clean(self):
        s = Sample.from_arrays([1, 2], [1, 0], [[0.5, 0.6]])
        assert validate(s) == []

    @pytest.mark.parametrize(
        "time,status,field",
        [([-1.0], [1], "time"), ([np.inf], [1], "time"), ([1.0], [2], "status")],
    )
    def test_domain_violations(self, time, status, field):
        s = Sample(tuple(Observation(t, d, (0.0,)) for t, d in zip(time, status)), CovariateSpec.build(("z",)))
        problems = validate(s)
        assert problems and problems[0].field == field and problems[0].row == 0

    def test_unknown_nominal_label(self):
        s = Sample((Observation(1.0, 1, (50.0, "caecum")),), spec_xz())
        assert any(p.field == "loc" for p in validate(s))

    def test_arity(self):
        s = Sample((Observation(1.0, 1, (50.0,)),), spec_xz())
        assert validate(s)

    def test_empty(self):
        assert validate(Sample((), CovariateSpec.build(("z",))))


def test_sort_index_events_before_censorings():
    time = np.array([2.0, 1.0, 2.0, 2.0])
    status = np.array([0, 1, 1, 0])
    order = sort_index(time, status)
    assert list(order) == [1, 2, 0, 3]


def test_canonical_order_is_stable(rng):
    n = 30
    t = np.round(rng.exponential(1, n), 1)
    d = rng.integers(0, 2, n)
    s = Sample.from_arrays(t, d, [rng.integers(0, 3, n).astype(float)], CovariateSpec.build(("z", DISCRETE)))
    c = canonical_order(s)
    assert np.all(np.diff(c.time) >= 0)
    tied = np.diff(c.time) == 0
    # within ties, events (1) precede censorings (0)
    assert np.all(np.diff(c.status)[tied] <= 0)
