import numpy as np
import pytest

from epig import al_loop
from epig.al_loop import (
    LearningCurve,
    RunFailedError,
    StepRecord,
    aggregate,
    build_task,
    evaluate,
    mean_and_se,
    run_active_learning,
    run_pool_size_sweep,
    run_replicated,
)
from epig.config import resolve_config
from epig.errors import PoolExhaustedError, TrainingError
from epig.synth_data import LabeledSet


def forest_config(**top):
    raw = {
        "model": {"kind": "forest", "n_trees": 10},
        "task": {"kind": "synthetic-2d", "pool_size": 200, "test_size": 500},
        "acquisition": ["random"],
        "budget": 5,
        "num_targets": 20,
    }
    task = top.pop("task", {})
    raw["task"].update(task)
    raw.update(top)
    return resolve_config(raw, ".")


def discrete_config(**top):
    raw = {"model": {"kind": "discrete"}, "task": {"kind": "discrete"}, "budget": 4, "num_targets": 10}
    raw.update(top)
    return resolve_config(raw, ".")


class _Fixed:
    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def predict_proba(self, inputs, seed=None):
        return self.probs


def test_evaluate_examples():
    test = LabeledSet(np.zeros((3, 1)), [0, 1, 1], 2)
    perfect = _Fixed([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    assert evaluate(perfect, test) == {"accuracy": 1.0, "nll": 0.0}
    uniform = evaluate(_Fixed(np.full((3, 2), 0.5)), test)
    assert uniform["accuracy"] == pytest.approx(1 / 3)  # ties go to class 0
    assert uniform["nll"] == pytest.approx(np.log(2))
    hand = evaluate(_Fixed([[0.7, 0.3], [0.4, 0.6], [0.8, 0.2]]), test)
    assert hand["accuracy"] == pytest.approx(2 / 3)
    assert hand["nll"] == pytest.approx(-(np.log(0.7) + np.log(0.6) + np.log(0.2)) / 3)
    with pytest.raises(ValueError):
        evaluate(perfect, LabeledSet.empty(1, 2))


def test_budget_zero_has_only_initial_row():
    result = run_active_learning(forest_config(budget=0), seed=0)
    assert len(result.curve) == 1
    assert result.rows()[0]["step"] == 0 and result.rows()[0]["acquired_index"] == ""


def test_pool_of_one():
    result = run_active_learning(forest_config(budget=1, task={"pool_size": 1}), seed=0)
    assert result.curve.acquired == [0]
    with pytest.raises(PoolExhaustedError):
        run_active_learning(forest_config(budget=2, task={"pool_size": 1}), seed=0)


@pytest.mark.parametrize("method", ["random", "bald", "epig"])
def test_determinism(method):
    cfg = forest_config(acquisition=[method])
    a = run_active_learning(cfg, seed=3)
    b = run_active_learning(cfg, seed=3)
    assert a.curve.acquired == b.curve.acquired
    assert a.rows() == b.rows()


def test_no_duplicate_acquisitions_until_exhaustion():
    cfg = forest_config(budget=30, task={"pool_size": 30}, acquisition=["bald"])
    result = run_active_learning(cfg, seed=1)
    assert sorted(result.curve.acquired) == list(range(30))
    assert [r.labels_used for r in result.curve.records] == list(range(4, 35))


@pytest.mark.parametrize("method", ["entropy", "bald", "epig", "epig-mc", "random"])
def test_discrete_task_runs(method):
    result = run_active_learning(discrete_config(acquisition=[method]), seed=2)
    assert len(result.curve) == 5
    assert np.all((result.curve.accuracy >= 0) & (result.curve.accuracy <= 1))


def test_targets_fresh_per_step_and_reproducible():
    cfg = forest_config(acquisition=["epig"])
    task = build_task(cfg, 0)
    remaining = task.pool.remaining()
    spec = cfg.acquisitions[0]
    t1 = al_loop._target_inputs(spec, cfg, task, None, remaining, 0, 1)
    t1_again = al_loop._target_inputs(spec, cfg, task, None, remaining, 0, 1)
    t2 = al_loop._target_inputs(spec, cfg, task, None, remaining, 0, 2)
    assert np.array_equal(t1, t1_again) and not np.array_equal(t1, t2)


def test_replicated_standard_errors():
    cfg = forest_config(budget=3)
    single = run_replicated(cfg, [4])
    assert np.array_equal(single.aggregate.mean_accuracy, single.runs[0].curve.accuracy)
    assert np.all(single.aggregate.se_accuracy == 0)
    twice = run_replicated(cfg, [4, 4])
    assert np.all(twice.aggregate.se_accuracy == 0) and np.all(twice.aggregate.se_nll == 0)


def test_mean_and_se_oracle():
    values = np.array([[1.0, 2.0], [3.0, 6.0], [5.0, 7.0]])
    mean, se = mean_and_se(values)
    assert mean == pytest.approx([3.0, 5.0])
    assert se == pytest.approx([2.0 / np.sqrt(3), np.sqrt(7.0) / np.sqrt(3)])


def test_parallel_matches_serial():
    cfg = forest_config(budget=2)
    serial = run_replicated(cfg, [0, 1])
    parallel = run_replicated(cfg, [0, 1], jobs=2)
    assert [r.rows() for r in serial.runs] == [r.rows() for r in parallel.runs]


def test_failed_run_names_seed():
    cfg = forest_config(budget=3, task={"pool_size": 2})
    with pytest.raises(RunFailedError, match="seed 7") as info:
        run_replicated(cfg, [7])
    assert info.value.seed == 7


def test_training_failure_carries_step(monkeypatch):
    from epig.errors import EpigError

    real = al_loop.build_model
    calls = {"n": 0}

    class Failing:
        def __init__(self, inner):
            self.inner = inner

        def fit(self, train, seed=None, validation=None):
            calls["n"] += 1
            if calls["n"] == 3:
                raise EpigError("boom")
            return self.inner.fit(train, seed=seed, validation=validation)

    monkeypatch.setattr(al_loop, "build_model", lambda c, t: Failing(real(c, t)))
    with pytest.raises(TrainingError, match="step 2"):
        run_active_learning(forest_config(budget=4), seed=0)


def test_learning_curve_invariant():
    curve = LearningCurve()
    curve.append(StepRecord(0, 4, 0.5, 0.7))
    with pytest.raises(ValueError):
        curve.append(StepRecord(1, 6, 0.5, 0.7, 3, 0.1))


def test_pool_size_sweep_single_size():
    cfg = forest_config(budget=2)
    sweep = run_pool_size_sweep(cfg, [50], [0, 1])
    direct = run_replicated(cfg, [0, 1], pool_size=50)
    assert list(sweep) == [50]
    assert np.array_equal(sweep[50].aggregate.mean_accuracy, direct.aggregate.mean_accuracy)
    assert all(r.pool_size == 50 for r in sweep[50].runs)


@pytest.mark.slow
def test_random_acquisition_improves_over_twenty_seeds():
    cfg = forest_config(budget=50, task={"pool_size": 1000, "test_size": 2000})
    agg = run_replicated(cfg, range(20)).aggregate
    assert agg.mean_accuracy[-1] - agg.mean_accuracy[0] >= 0.05


def test_gp_end_to_end_short_run():
    cfg = resolve_config(
        {
            "model": {"kind": "gp", "steps": 500},
            "task": {"kind": "synthetic-2d", "pool_size": 300, "test_size": 500},
            "acquisition": ["epig"],
            "budget": 2,
            "num_posterior_samples": 64,
            "num_targets": 16,
        },
        ".",
    )
    result = run_active_learning(cfg, seed=0)
    assert len(result.curve) == 3 and len(set(result.curve.acquired)) == 2


def test_aggregate_requires_runs():
    with pytest.raises(ValueError):
        aggregate([])


def test_mlp_end_to_end_short_run():
    cfg = resolve_config(
        {
            "model": {"kind": "mlp", "hidden": [16, 16, 16], "max_steps": 200, "patience": 50},
            "task": {"kind": "synthetic-2d", "pool_size": 100, "test_size": 200},
            "acquisition": ["bald", "epig"],
            "budget": 2,
            "num_posterior_samples": 20,
            "num_targets": 10,
        },
        ".",
    )
    assert len(build_task(cfg, 0).validation) == 1
    for spec in cfg.acquisitions:
        result = run_active_learning(cfg, seed=0, acquisition=spec)
        assert len(result.curve) == 3
