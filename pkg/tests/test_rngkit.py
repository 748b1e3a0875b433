import math

import numpy as np
import pytest
from scipy import stats

from edgeworth_lab.errors import ParameterError
from edgeworth_lab.rngkit import DistSpec, StreamKey, derive_stream, sample

from conftest import assert_within_se


def test_same_key_same_draws():
    key = StreamKey(123, (7, 9))
    a = derive_stream(key).standard_normal(1000)
    b = derive_stream(key).standard_normal(1000)
    assert np.array_equal(a, b)


def test_sibling_keys_differ():
    base = StreamKey(123, (7,))
    a = derive_stream(base.child(0)).standard_normal(1000)
    b = derive_stream(base.child(1)).standard_normal(1000)
    assert np.any(a != b)


def test_derivation_is_pure_function_of_key():
    # interleaving other derivations must not affect a key's stream
    key = StreamKey(5, (1, 2, 3))
    first = derive_stream(key).standard_normal(100)
    for i in range(50):
        derive_stream(StreamKey(5, (9, i))).standard_normal(10)
    again = derive_stream(key).standard_normal(100)
    assert np.array_equal(first, again)


def test_key_validation():
    with pytest.raises(ParameterError):
        StreamKey(-1)
    with pytest.raises(ParameterError):
        StreamKey(0, (1 << 40,))


def test_pretty_path():
    assert StreamKey(42, (3, 0, 17)).pretty() == "42:3/0/17"


def test_two_point_symmetric_mean():
    spec = DistSpec.two_point(0.5, -1.0, 1.0)
    x = sample(derive_stream(StreamKey(1)), spec, 10 ** 6)
    assert abs(x.mean()) < 4e-3


def test_centered_exponential_third_moment():
    spec = DistSpec.centered_exponential(1.0)
    x = sample(derive_stream(StreamKey(2)), spec, 10 ** 6)
    m3 = (x ** 3).mean()
    se = (x ** 3).std(ddof=1) / math.sqrt(x.size)
    assert_within_se(m3, 2.0, se)


def test_gamma_mean_variance():
    spec = DistSpec.gamma(10.0, 10.0)
    x = sample(derive_stream(StreamKey(3)), spec, 10 ** 6)
    se_mean = x.std(ddof=1) / math.sqrt(x.size)
    assert_within_se(x.mean(), 1.0, se_mean)
    v = (x - x.mean()) ** 2
    assert_within_se(x.var(ddof=1), 0.1, v.std(ddof=1) / math.sqrt(x.size))


def test_gamma_sampler_matches_analytic_cdf():
    # Kolmogorov distance below the 1% KS critical value at 1e5 draws
    spec = DistSpec.gamma(2.5, 1.7)
    x = np.sort(sample(derive_stream(StreamKey(4)), spec, 10 ** 5))
    n = x.size
    f = stats.gamma.cdf(x, a=2.5, scale=1.0 / 1.7)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    d = np.max(np.maximum(np.abs(hi - f), np.abs(lo - f)))
    assert d < 1.628 / math.sqrt(n)


def test_invalid_spec_parameters():
    with pytest.raises(ParameterError):
        DistSpec.two_point(1.5, -1.0, 1.0)
    with pytest.raises(ParameterError):
        DistSpec.gamma(-1.0, 1.0)
    with pytest.raises(ParameterError):
        DistSpec.uniform(2.0, 1.0)
    with pytest.raises(ParameterError):
        DistSpec.three_point(0.7, 0.7, 0.0, 1.0, 2.0)


def test_analytic_moments():
    assert DistSpec.standard_normal().raw_moment(4) == 3.0
    assert DistSpec.centered_exponential(1.0).raw_moment(3) == pytest.approx(2.0)
    assert DistSpec.centered_exponential(1.0).raw_moment(4) == pytest.approx(9.0)
    tp = DistSpec.two_point(1 / 3, -1.0, 2.0)
    assert tp.raw_moment(2) == pytest.approx(2.0)
    assert tp.raw_moment(3) == pytest.approx(2.0)
    assert DistSpec.uniform(-1.0, 1.0).raw_moment(2) == pytest.approx(1 / 3)
    assert DistSpec.gamma(10.0, 10.0).mean() == pytest.approx(1.0)
    assert DistSpec.gamma(10.0, 10.0).variance() == pytest.approx(0.1)


def test_abs_moments():
    assert DistSpec.standard_normal().abs_moment(1) == pytest.approx(
        math.sqrt(2 / math.pi))
    assert DistSpec.uniform(-1.0, 1.0).abs_moment(1) == pytest.approx(0.5)
    assert DistSpec.centered_exponential(1.0).abs_moment(1) == pytest.approx(
        2.0 / math.e)
    # quadrature fallback agrees with the closed second moment
    assert DistSpec.centered_exponential(2.0).abs_moment(1.5) == pytest.approx(
        np.mean(np.abs(sample(derive_stream(StreamKey(6)),
                              DistSpec.centered_exponential(2.0),
                              10 ** 6)) ** 1.5), rel=5e-3)


def test_cf_values():
    assert DistSpec.standard_normal().cf(1.0) == pytest.approx(math.exp(-0.5))
    tp = DistSpec.two_point(0.5, -1.0, 1.0)
    assert abs(tp.cf(math.pi)) == pytest.approx(1.0)
    spec = DistSpec.centered_exponential(1.0)
    x = sample(derive_stream(StreamKey(7)), spec, 10 ** 6)
    emp = np.exp(1j * 0.7 * x).mean()
    assert abs(spec.cf(0.7) - emp) < 5e-3


def test_mass_near_zero():
    assert DistSpec.standard_normal().mass_near_zero()
    assert DistSpec.uniform(-1.0, 1.0).mass_near_zero()
    assert DistSpec.centered_exponential(1.0).mass_near_zero()
    assert DistSpec.gamma(2.0, 1.0).mass_near_zero()
    assert not DistSpec.two_point(0.5, -1.0, 1.0).mass_near_zero()
    assert DistSpec.three_point(0.25, 0.5, -1.0, 0.0, 1.0).mass_near_zero()


def test_serialization_round_trip():
    specs = [DistSpec.standard_normal(), DistSpec.uniform(-2.0, 3.0),
             DistSpec.centered_exponential(0.7),
             DistSpec.two_point(0.3, -1.0, 2.0),
             DistSpec.three_point(0.2, 0.3, -1.0, 0.0, 2.0),
             DistSpec.gamma(4.0, 2.0)]
    for spec in specs:
        assert DistSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ParameterError):
        DistSpec.from_dict({"kind": "uniform", "a": 0.0})
