import numpy as np
import pytest

from fedgsp.rng import dirichlet_proportions, gamma_variate, generator, stream_id


def test_stream_id_is_stable():
    assert stream_id(7, "features", 3) == stream_id(7, "features", 3)
    # Frozen value: guards against accidental changes to the derivation rule,
    # which would silently re-randomize every experiment.
    assert stream_id(0, "task") == 14505579101146588355


def test_streams_differ_by_purpose_and_id():
    ids = {
        stream_id(7, "features", 3),
        stream_id(7, "features", 4),
        stream_id(7, "labels", 3),
        stream_id(8, "features", 3),
    }
    assert len(ids) == 4


def test_generator_reproduces_sequence():
    a = generator(123, "noise", 5).standard_normal(16)
    b = generator(123, "noise", 5).standard_normal(16)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("shape", [0.3, 0.5, 1.0, 2.5, 9.0])
def test_gamma_moments(shape):
    rng = generator(42, "gamma-test")
    draws = np.array([gamma_variate(rng, shape) for _ in range(20000)])
    assert np.all(draws > 0)
    assert draws.mean() == pytest.approx(shape, rel=0.05)
    assert draws.var() == pytest.approx(shape, rel=0.12)


def test_gamma_rejects_nonpositive_shape():
    with pytest.raises(ValueError):
        gamma_variate(generator(0, "x"), 0.0)


def test_dirichlet_basicproperties():
    rng = generator(9, "dirichlet-test")
    p = dirichlet_proportions(rng, 0.3, 6)
    assert p.shape == (6,)
    assert p.sum() == pytest.approx(1.0)
    assert np.all(p >= 0)


def test_dirichlet_concentrates_at_uniform():
    rng = generator(11, "dirichlet-test")
    p = dirichlet_proportions(rng, 1e6, 5)
    assert np.max(np.abs(p - 0.2)) < 0.01
