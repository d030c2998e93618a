import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from epig.acquisition import TargetMode
from epig.errors import UnsupportedClassError
from epig.target_dist import TargetSampler, compute_weights, sample_targets


def test_weights_half_and_half_example():
    probs = np.array([[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 3)
    assert compute_weights(probs, [1.0, 0.0]) == pytest.approx([2, 2, 2, 0, 0, 0], abs=1e-12)


def test_weights_are_one_when_target_matches_pool():
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(4), size=50)
    assert compute_weights(probs, probs.mean(0)) == pytest.approx(np.ones(50), abs=1e-9)
    single = np.tile([0.0, 1.0, 0.0], (7, 1))
    assert compute_weights(single, [0.0, 1.0, 0.0]) == pytest.approx(np.ones(7), abs=1e-12)


def test_unsupported_class():
    with pytest.raises(UnsupportedClassError):
        compute_weights(np.tile([1.0, 0.0], (4, 1)), [0.5, 0.5])


@given(
    st.integers(1, 40),
    st.integers(2, 5),
    st.integers(0, 2**31 - 1),
)
def test_weights_mean_one(n, c, seed):
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.full(c, 0.5), size=n)
    target = rng.dirichlet(np.ones(c))
    w = compute_weights(probs, target)
    assert np.all(w >= 0)
    assert abs(w.mean() - 1.0) < 1e-9


@given(hnp.arrays(np.float64, (12, 3), elements=st.floats(0.01, 1.0)))
def test_weights_mean_one_arbitrary_predictions(raw):
    probs = raw / raw.sum(1, keepdims=True)
    assert abs(compute_weights(probs, [0.2, 0.3, 0.5]).mean() - 1.0) < 1e-9


class _PureModel:
    """Predicts the class stored in the first input column, almost deterministically."""

    def __init__(self, c):
        self.c = c

    def predict_proba(self, inputs, seed=None):
        labels = np.asarray(inputs)[:, 0].astype(int)
        out = np.full((labels.size, self.c), 1e-4)
        out[np.arange(labels.size), labels] = 1.0
        return out / out.sum(1, keepdims=True)


def test_reweighted_sampling_matches_target_class_mix():
    c = 4
    labels = np.repeat(np.arange(c), [500, 100, 300, 100])
    pool = np.column_stack([labels, np.arange(labels.size)]).astype(float)
    target = np.array([0.1, 0.4, 0.2, 0.3])
    sampler = TargetSampler.with_model(pool, target, _PureModel(c))
    drawn = sample_targets(sampler, 100_000, seed=0)
    freq = np.bincount(drawn[:, 0].astype(int), minlength=c) / drawn.shape[0]
    assert np.max(np.abs(freq - target)) < 0.02


@pytest.mark.parametrize("mode", list(TargetMode))
def test_pool_of_one(mode):
    extra = {}
    if mode is TargetMode.REWEIGHTED:
        extra = dict(target_class_probs=np.array([1.0]), weights=np.array([1.0]))
    sampler = TargetSampler(mode, [[3.0, -1.0]], **extra)
    assert np.array_equal(sample_targets(sampler, 5, seed=1), np.tile([3.0, -1.0], (5, 1)))


def test_determinism_and_mode_agreement():
    src = np.random.default_rng(0).standard_normal((30, 2))
    exact = TargetSampler(TargetMode.EXACT, src)
    proxy = TargetSampler(TargetMode.POOL, src)
    a = sample_targets(exact, 20, seed=7)
    assert np.array_equal(a, sample_targets(exact, 20, seed=7))
    assert np.array_equal(a, sample_targets(proxy, 20, seed=7))
    idx = exact.sample_indices(1000, seed=3)
    assert idx.min() >= 0 and idx.max() < 30


def test_callable_source_exact_only():
    draw = lambda n, rng: rng.standard_normal((n, 2))  # noqa: E731
    assert sample_targets(TargetSampler("exact-target", draw), 4, seed=0).shape == (4, 2)
    with pytest.raises(ValueError):
        TargetSampler("pool-proxy", draw)


def test_reweighted_requires_target_probs():
    with pytest.raises(ValueError, match="target class distribution"):
        TargetSampler(TargetMode.REWEIGHTED, np.zeros((3, 1)), weights=np.ones(3))
    with pytest.raises(ValueError):
        sample_targets(TargetSampler(TargetMode.POOL, np.zeros((3, 1))), 0, seed=0)
