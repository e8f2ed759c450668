import numpy as np
import pytest
from scipy import stats

from csvm import datagen
from csvm.datagen import gen_example1, gen_example2, gen_example3, generate, make_rng
from csvm.errors import InvalidArgumentError


def test_example1_class_means_and_noise_variance():
    d = gen_example1(100_000, 10, seed=1)
    neg = d.features[d.labels == -1, :2].mean(axis=0)
    np.testing.assert_allclose(neg, [-2.0, 1.0], atol=0.02)
    pos = d.features[d.labels == 1, :2].mean(axis=0)
    np.testing.assert_allclose(pos, [1.0, 0.0], atol=0.02)
    var = d.features[:, 2:].var(axis=0)
    np.testing.assert_allclose(var, 0.1, rtol=0.05)


def test_example1_class_variances():
    d = gen_example1(100_000, 2, seed=2)
    np.testing.assert_allclose(d.features[d.labels == -1].var(axis=0), [2.0, 0.5], rtol=0.03)
    np.testing.assert_allclose(d.features[d.labels == 1].var(axis=0), [0.5, 2.0], rtol=0.03)


@pytest.mark.parametrize("gen", [gen_example1, gen_example2, gen_example3])
def test_deterministic_by_seed(gen):
    a = gen(300, 5, 11)
    b = gen(300, 5, 11)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    c = gen(300, 5, 12)
    assert a.features.tobytes() != c.features.tobytes()


def test_streams_are_independent():
    a = generate("example1", 50, 3, 0, 0, 0)
    b = generate("example1", 50, 3, 0, 0, 1)
    assert not np.array_equal(a.features, b.features)


def test_default_dimensions():
    assert gen_example1(5).p == 10
    assert gen_example2(5).p == 100
    assert gen_example3(5).p == 500


def test_example2_label_frequencies():
    d = gen_example2(200_000, 2, seed=3)
    g = datagen.logistic_margin(d.features[:, 0], d.features[:, 1])
    assert np.mean(d.labels[g > 1] == 1) > 0.7
    shell = np.abs(g) < 0.05
    se = np.sqrt(0.25 / shell.sum())
    assert abs(np.mean(d.labels[shell] == 1) - 0.5) < 4 * se
    assert np.all(np.abs(d.features) <= 1)


def test_example3_supports_and_angles():
    d = gen_example3(100_000, 2, seed=4)
    r = np.hypot(d.features[:, 0], d.features[:, 1])
    assert r[d.labels == -1].max() <= 1.2
    assert r[d.labels == 1].min() >= 0.8 and r[d.labels == 1].max() <= 2.0
    angle = np.mod(np.arctan2(d.features[:, 1], d.features[:, 0]), 2 * np.pi)
    counts, _ = np.histogram(angle, bins=12, range=(0, 2 * np.pi))
    assert stats.chisquare(counts).pvalue > 0.01


@pytest.mark.parametrize("gen", [gen_example1, gen_example3])
def test_balanced_priors(gen):
    d = gen(20_000, 2, 5)
    assert stats.binomtest(d.n_pos, d.n, 0.5).pvalue > 0.001


def test_invalid_arguments():
    with pytest.raises(InvalidArgumentError):
        generate("example9", 10, 3, 0)
    with pytest.raises(InvalidArgumentError):
        gen_example1(10, 1)
    with pytest.raises(InvalidArgumentError):
        gen_example1(-1, 3)
    with pytest.raises(InvalidArgumentError):
        make_rng(-3)
    with pytest.raises(InvalidArgumentError):
        make_rng(np.random.default_rng(0), 1)


def test_prng_id_names_algorithm():
    assert "PCG64" in datagen.PRNG_ID and np.__version__ in datagen.PRNG_ID
