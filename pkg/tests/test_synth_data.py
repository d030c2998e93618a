import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epig.errors import SchemaError
from epig.synth_data import (
    P1,
    CsvSchema,
    LabeledSet,
    SplitRecipe,
    StudentTInput,
    build_splits,
    load_csv,
    make_gaussian_classes,
    proportional_counts,
    resample_to_proportions,
    sample_initial_per_class,
    sample_labels,
    sample_student_t,
    true_label_prob,
    unbalanced_proportions,
    write_csv,
)


def test_student_t_gaussian_limit():
    x = sample_student_t(StudentTInput(1e6, (0.0, 0.0), ((1.0, 0.0), (0.0, 1.0))), 100_000, seed=0)
    assert np.all(np.abs(x.mean(0)) < 0.02)
    assert np.allclose(np.cov(x.T), np.eye(2), atol=0.05)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_student_t_covariance(seed):
    # heavy tails make the sample covariance noisy, so check a few fixed seeds
    x = sample_student_t(P1, 100_000, seed=seed)
    expected = 5 / 3 * 0.8
    cov = np.cov(x.T)
    assert np.allclose(np.diag(cov), expected, rtol=0.05)
    assert abs(cov[0, 1]) < 0.05 * expected


def test_student_t_deterministic_and_validated():
    assert np.array_equal(sample_student_t(P1, 10, seed=3), sample_student_t(P1, 10, seed=3))
    with pytest.raises(ValueError):
        StudentTInput(0.0)
    with pytest.raises(ValueError):
        StudentTInput(5.0, (0.0, 0.0), ((1.0, 2.0), (2.0, 1.0)))


def test_true_label_prob_examples():
    assert true_label_prob([0.0, 0.0]) == 0.5
    assert true_label_prob([0.0, 10.0]) < 1e-30
    assert true_label_prob([1.0, 0.0]) == 1.0


@given(st.floats(-5, 5))
def test_boundary_gives_half(x1):
    assert abs(true_label_prob([x1, np.tanh(2 * x1)]) - 0.5) < 1e-12


def test_sample_labels_frequencies():
    sure = sample_labels(np.tile([1.0, 0.0], (10_000, 1)), seed=0)
    assert sure.labels.mean() > 0.999
    coin = sample_labels(np.zeros((10_000, 2)), seed=1)
    assert abs(coin.labels.mean() - 0.5) < 0.02
    assert np.array_equal(coin.labels, sample_labels(np.zeros((10_000, 2)), seed=1).labels)


def test_initial_set_has_requested_counts():
    init = sample_initial_per_class(P1, 2, seed=4)
    assert np.array_equal(init.class_counts(), [2, 2])


def test_labeled_set_invariants():
    with pytest.raises(ValueError):
        LabeledSet(np.zeros((3, 2)), [0, 1], 2)
    with pytest.raises(ValueError):
        LabeledSet(np.zeros((2, 2)), [0, 2], 2)


# --------------------------------------------------------------------- splits


@pytest.fixture(scope="module")
def base10():
    return make_gaussian_classes(10, 300, 3, spread=3.0, seed=0)


def test_whole_base_as_pool(base10):
    recipe = SplitRecipe(pool={c: 300 for c in range(10)})
    out = build_splits(base10, recipe, seed=0)
    assert np.array_equal(out["pool"], np.arange(3000))
    assert all(out[k].size == 0 for k in ("init_train", "validation", "target", "test"))


def test_unbalanced_recipe_ratio(base10):
    p = unbalanced_proportions()
    assert p[:5] == pytest.approx(1 / 55) and p[5:] == pytest.approx(10 / 55)
    recipe = SplitRecipe.from_proportions(10, 1100, p, test_size=500)
    out = build_splits(base10, recipe, seed=1)
    counts = np.bincount(base10.labels[out["pool"]], minlength=10)
    assert np.array_equal(counts, [20] * 5 + [200] * 5)


@given(st.integers(0, 2**31 - 1))
def test_splits_disjoint_and_reproducible(seed):
    base = make_gaussian_classes(4, 60, 2, spread=2.0, seed=1)
    recipe = SplitRecipe.from_proportions(
        4, 100, [0.1, 0.2, 0.3, 0.4], init_per_class=2, validation_size=8, target_size=12, test_size=40
    )
    out = build_splits(base, recipe, seed)
    names = list(out)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            assert np.intersect1d(out[a], out[b]).size == 0
        expected = getattr(recipe, a)
        got = np.bincount(base.labels[out[a]], minlength=4)
        assert all(got[c] == expected.get(c, 0) for c in range(4))
    again = build_splits(base, recipe, seed)
    assert all(np.array_equal(out[k], again[k]) for k in out)


def test_target_set_follows_test_proportions():
    recipe = SplitRecipe.from_proportions(2, 10, None, target_size=40, test_size=100, test_proportions=[0.25, 0.75])
    assert recipe.target == {0: 10, 1: 30}


def test_insufficient_counts(base10):
    with pytest.raises(ValueError, match="insufficient class counts"):
        build_splits(base10, SplitRecipe(pool={0: 301}), seed=0)


def test_proportional_counts_and_resampling():
    assert proportional_counts(10, [1, 1, 1]).sum() == 10
    labels = np.array([0] * 50 + [1] * 50)
    keep = resample_to_proportions(labels, [0.25, 0.75], seed=0)
    counts = np.bincount(labels[keep])
    assert counts.sum() == 66  # floor(50 / 0.75)
    assert np.all(np.abs(counts / counts.sum() - [0.25, 0.75]) < 1 / counts.sum())


# ------------------------------------------------------------------------ CSV

SCHEMA = CsvSchema(("a", "b"), "y", 3)


def test_csv_round_trip(tmp_path):
    data = LabeledSet(np.array([[0.5, 1.0], [2.0, -1.0], [0.1, 0.2]]), [0, 2, 1], 3)
    write_csv(tmp_path / "d.csv", data, ["a", "b"], "y")
    back = load_csv(tmp_path / "d.csv", SCHEMA)
    assert len(back) == 3
    assert np.array_equal(back.inputs, data.inputs) and np.array_equal(back.labels, data.labels)


def test_csv_header_only_is_empty(tmp_path):
    (tmp_path / "h.csv").write_text("a,b,y\n")
    empty = load_csv(tmp_path / "h.csv", SCHEMA)
    assert len(empty) == 0
    with pytest.raises(ValueError, match="insufficient"):
        build_splits(empty, SplitRecipe(pool={0: 1}), seed=0)


@pytest.mark.parametrize(
    "body, message",
    [
        ("1,2,0\n3,4,3\n", "row 3 label 3"),
        ("1,2,0\nx,4,1\n", "row 3 has a non-numeric"),
        ("1,2\n", "row 2 has 2 fields"),
        ("1,2,one\n", "row 2 label 'one'"),
    ],
)
def test_csv_errors_name_the_row(tmp_path, body, message):
    (tmp_path / "bad.csv").write_text("a,b,y\n" + body)
    with pytest.raises(SchemaError, match=message):
        load_csv(tmp_path / "bad.csv", SCHEMA)


def test_csv_missing_column(tmp_path):
    (tmp_path / "m.csv").write_text("a,y\n1,0\n")
    with pytest.raises(SchemaError, match="missing columns"):
        load_csv(tmp_path / "m.csv", SCHEMA)
