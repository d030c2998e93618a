"""Pool-based active learning: score the pool, acquire one label, retrain from
scratch, evaluate, repeat.

Every source of randomness draws from its own stream, derived from the run's
master seed, a stream id and a counter (usually the step), so that changing
one component never shifts the random numbers another component sees.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import synth_data
from .acquisition import Method, TargetMode, binary_pool_scores, pool_scores, select_argmax
from .config import AcquisitionSpec, ExperimentConfig
from .errors import EpigError, PoolExhaustedError, TrainingError
from .models import DiscreteBayesClassifier, DropoutMLP, GPProbitClassifier, RandomForestClassifier, random_discrete_model
from .prob_core import EPS
from .synth_data import LabeledSet
from .target_dist import TargetSampler, compute_weights, sample_targets

STREAMS = {
    "data": 0,
    "labels": 1,
    "model": 2,
    "draws": 3,
    "targets": 4,
    "tiebreak": 5,
    "random_acq": 6,
    "eval": 7,
}

# cap on floats held by one chunk of pool predictions (N_chunk * K * C)
_PRED_BUDGET = 4_000_000
_BINARY_METHODS = (Method.ENTROPY, Method.BALD, Method.EPIG)


def stream(seed: int, name: str, *counters: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), STREAMS[name], *(int(c) for c in counters)])


class RunFailedError(EpigError, RuntimeError):
    def __init__(self, seed, cause):
        self.seed = seed
        super().__init__(f"run with seed {seed} failed: {cause}")


# ----------------------------------------------------------------------- data


@dataclass
class Pool:
    inputs: np.ndarray
    labels: np.ndarray
    acquired: np.ndarray = field(init=False)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.acquired = np.zeros(len(self.labels), dtype=bool)

    def __len__(self) -> int:
        return len(self.labels)

    def remaining(self) -> np.ndarray:
        return np.flatnonzero(~self.acquired)

    def acquire(self, index: int) -> tuple[np.ndarray, int]:
        """Mark ``index`` acquired and return its input and oracle label."""
        if self.acquired[index]:
            raise ValueError(f"pool index {index} was already acquired")
        self.acquired[index] = True
        return self.inputs[index], int(self.labels[index])


@dataclass
class Task:
    pool: Pool
    init_train: LabeledSet
    test: LabeledSet
    validation: LabeledSet | None
    num_classes: int
    # exact target inputs: a fixed set or a sampler of the target distribution
    target_source: np.ndarray | Callable | None
    discrete_table: np.ndarray | None = None
    discrete_prior: np.ndarray | None = None


def _rng(seed, name, *counters):
    return np.random.default_rng(stream(seed, name, *counters))


def _synthetic_task(task_cfg: dict, seed: int, pool_size: int) -> Task:
    p1 = synth_data.P1
    pool_x = synth_data.sample_student_t(p1, pool_size, _rng(seed, "data", 0))
    pool = synth_data.sample_labels(pool_x, _rng(seed, "labels", 0))
    test_x = synth_data.sample_student_t(p1, task_cfg["test_size"], _rng(seed, "data", 1))
    test = synth_data.sample_labels(test_x, _rng(seed, "labels", 1))
    init = synth_data.sample_initial_per_class(p1, task_cfg["init_per_class"], _rng(seed, "data", 2))
    validation = None
    if task_cfg["validation_size"]:
        vx = synth_data.sample_student_t(p1, task_cfg["validation_size"], _rng(seed, "data", 3))
        validation = synth_data.sample_labels(vx, _rng(seed, "labels", 3))

    def sample_p1(n, rng):
        return synth_data.sample_student_t(p1, n, rng)

    return Task(Pool(pool.inputs, pool.labels), init, test, validation, 2, sample_p1)


def _csv_task(task_cfg: dict, seed: int) -> Task:
    schema = synth_data.CsvSchema(tuple(task_cfg["features"]), task_cfg["label"], task_cfg["num_classes"])
    base = synth_data.load_csv(task_cfg["path"], schema)
    if len(base) == 0:
        raise ValueError(f"{task_cfg['path']} contains no data rows")
    c = schema.num_classes
    base_p = np.bincount(base.labels, minlength=c) / len(base)
    pool_p = base_p if task_cfg["pool_proportions"] is None else task_cfg["pool_proportions"]
    test_p = base_p if task_cfg["test_proportions"] is None else task_cfg["test_proportions"]
    recipe = synth_data.SplitRecipe.from_proportions(
        c,
        pool_size=task_cfg["pool_size"],
        pool_proportions=pool_p,
        init_per_class=task_cfg["init_per_class"],
        validation_size=task_cfg["validation_size"],
        target_size=task_cfg["target_size"],
        target_proportions=task_cfg["target_proportions"] or test_p,
        test_size=task_cfg["test_size"],
        test_proportions=test_p,
    )
    splits = synth_data.build_splits(base, recipe, stream(seed, "data", 0))
    pool = base.subset(splits["pool"])
    validation = base.subset(splits["validation"]) if splits["validation"].size else None
    target = base.inputs[splits["target"]] if splits["target"].size else None
    return Task(
        Pool(pool.inputs, pool.labels),
        base.subset(splits["init_train"]),
        base.subset(splits["test"]),
        validation,
        c,
        target,
    )


def _discrete_task(task_cfg: dict, seed: int) -> Task:
    model = random_discrete_model(task_cfg["num_hypotheses"], task_cfg["num_inputs"], task_cfg["num_classes"], task_cfg["table_seed"])
    rng = _rng(seed, "labels", 0)
    truth = rng.choice(model.num_hypotheses, p=model.weights)
    x = np.arange(task_cfg["num_inputs"])

    def labels_for(inputs, rng):
        rows = model.table[truth, inputs]
        return np.array([rng.choice(rows.shape[1], p=r) for r in rows], dtype=np.int64)

    pool = Pool(x[:, None].astype(np.float64), labels_for(x, rng))
    test_x = np.repeat(x, task_cfg["test_repeats"])
    test = LabeledSet(test_x[:, None], labels_for(test_x, _rng(seed, "labels", 1)), model.num_classes)
    return Task(
        pool,
        LabeledSet.empty(1, model.num_classes),
        test,
        None,
        model.num_classes,
        x[:, None].astype(np.float64),
        discrete_table=model.table,
        discrete_prior=model.weights,
    )


def build_task(config: ExperimentConfig, seed: int, pool_size: int | None = None) -> Task:
    """All data for one seeded run; identical across acquisition methods."""
    kind = config.task["kind"]
    if kind == "synthetic-2d":
        return _synthetic_task(config.task, seed, pool_size or config.task["pool_size"])
    if kind == "csv":
        return _csv_task(config.task, seed)
    return _discrete_task(config.task, seed)


def build_model(config: ExperimentConfig, task: Task):
    params = {k: v for k, v in config.model.items() if k != "kind"}
    kind = config.model["kind"]
    k = config.num_posterior_samples
    if kind == "gp":
        return GPProbitClassifier(**params, **({"default_k": k} if k else {}))
    if kind == "forest":
        return RandomForestClassifier(task.num_classes, **params)
    if kind == "mlp":
        params["hidden"] = tuple(params["hidden"])
        return DropoutMLP(task.num_classes, **params, **({"default_k": k} if k else {}))
    return DiscreteBayesClassifier(task.discrete_table, task.discrete_prior, **({"default_k": k} if k else {}))


# ----------------------------------------------------------------- evaluation


def evaluate(model, test: LabeledSet, seed=0) -> dict:
    """Accuracy of the argmax of the marginal predictive (ties to the lowest class) and mean NLL."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    probs = np.asarray(model.predict_proba(test.inputs, seed), dtype=np.float64)
    rows = np.arange(len(test))
    accuracy = float(np.mean(np.argmax(probs, axis=1) == test.labels))
    nll = float(np.mean(-np.log(np.maximum(probs[rows, test.labels], EPS))))
    return {"accuracy": accuracy, "nll": nll}


# ------------------------------------------------------------------- the loop


@dataclass(frozen=True)
class StepRecord:
    step: int
    labels_used: int
    accuracy: float
    nll: float
    acquired_index: int | None = None
    score: float | None = None


@dataclass
class LearningCurve:
    records: list[StepRecord] = field(default_factory=list)

    def append(self, record: StepRecord) -> None:
        if self.records and record.labels_used != self.records[-1].labels_used + 1:
            raise ValueError("labels_used must grow by one per step")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def accuracy(self) -> np.ndarray:
        return np.array([r.accuracy for r in self.records])

    @property
    def nll(self) -> np.ndarray:
        return np.array([r.nll for r in self.records])

    @property
    def acquired(self) -> list[int]:
        return [r.acquired_index for r in self.records if r.acquired_index is not None]


@dataclass
class RunResult:
    seed: int
    config_digest: str
    acquisition: str
    curve: LearningCurve
    wall_time: float
    pool_size: int = 0

    def rows(self) -> list[dict]:
        return [
            {
                "seed": self.seed,
                "step": r.step,
                "labels_used": r.labels_used,
                "acquisition": self.acquisition,
                "acquired_index": "" if r.acquired_index is None else r.acquired_index,
                "score": "" if r.score is None else repr(float(r.score)),
                "accuracy": repr(r.accuracy),
                "nll": repr(r.nll),
            }
            for r in self.curve.records
        ]


def _fit(config, task, train, seed, step):
    model = build_model(config, task)
    try:
        return model.fit(train, seed=stream(seed, "model", step), validation=task.validation)
    except EpigError as exc:
        raise TrainingError(f"model training failed at step {step}: {exc}") from exc


def _target_inputs(spec: AcquisitionSpec, config, task, model, remaining, seed, step) -> np.ndarray:
    m = config.num_targets
    tseed = stream(seed, "targets", step)
    pool_x = task.pool.inputs[remaining]
    if spec.target_mode is TargetMode.EXACT:
        if task.target_source is None:
            raise ValueError("exact-target mode needs a target set for this task")
        sampler = TargetSampler(TargetMode.EXACT, task.target_source)
    elif spec.target_mode is TargetMode.POOL:
        sampler = TargetSampler(TargetMode.POOL, pool_x)
    else:
        probs = model.predict_proba(pool_x, stream(seed, "eval", step, 1))
        weights = compute_weights(probs, config.target_class_probs)
        sampler = TargetSampler(TargetMode.REWEIGHTED, pool_x, np.asarray(config.target_class_probs), weights)
    return sample_targets(sampler, m, tseed)


def score_remaining(spec: AcquisitionSpec, config, task, model, remaining, seed, step) -> np.ndarray:
    """One score per unacquired pool index, computed chunk by chunk."""
    if spec.method is Method.RANDOM:
        return pool_scores(np.zeros((remaining.size, 1, 1)), method=Method.RANDOM, seed=stream(seed, "random_acq", step))
    targets = None
    if spec.method.needs_targets:
        targets = _target_inputs(spec, config, task, model, remaining, seed, step)
    draws = model.posterior_draws(config.num_posterior_samples, stream(seed, "draws", step), anchors=targets)
    binary = hasattr(draws, "predict_positive") and spec.method in _BINARY_METHODS
    predict = draws.predict_positive if binary else draws.predict
    q = predict(targets) if targets is not None else None
    chunk = max(1, _PRED_BUDGET // (draws.num_samples * task.num_classes))
    out = np.empty(remaining.size)
    for lo in range(0, remaining.size, chunk):
        p = predict(task.pool.inputs[remaining[lo:lo + chunk]])
        if binary:
            out[lo:lo + chunk] = binary_pool_scores(p, q, spec.method)
        else:
            out[lo:lo + chunk] = pool_scores(p, q, spec.method, seed=stream(seed, "random_acq", step, lo))
    return out


def run_active_learning(config: ExperimentConfig, seed: int, acquisition: AcquisitionSpec | None = None,
                        pool_size: int | None = None, task: Task | None = None) -> RunResult:
    """One run of ``config.budget`` acquisitions with a single acquisition method."""
    spec = acquisition or config.acquisitions[0]
    start = time.perf_counter()
    task = task or build_task(config, seed, pool_size)
    pool = Pool(task.pool.inputs, task.pool.labels)
    task = Task(pool, task.init_train, task.test, task.validation, task.num_classes, task.target_source,
                task.discrete_table, task.discrete_prior)
    train = task.init_train
    model = _fit(config, task, train, seed, 0)
    curve = LearningCurve()
    curve.append(StepRecord(0, len(train), **evaluate(model, task.test, stream(seed, "eval", 0))))
    for step in range(1, config.budget + 1):
        remaining = pool.remaining()
        if remaining.size == 0:
            raise PoolExhaustedError(f"pool exhausted at step {step} of {config.budget}")
        scores = score_remaining(spec, config, task, model, remaining, seed, step)
        pick = select_argmax(scores, stream(seed, "tiebreak", step))
        index = int(remaining[pick])
        x, y = pool.acquire(index)
        train = train.append(x, y)
        model = _fit(config, task, train, seed, step)
        metrics = evaluate(model, task.test, stream(seed, "eval", step))
        curve.append(StepRecord(step, len(train), metrics["accuracy"], metrics["nll"], index, float(scores[pick])))
    return RunResult(int(seed), config.digest, spec.label, curve, time.perf_counter() - start, len(pool))


# ---------------------------------------------------------------- replication


@dataclass
class Aggregate:
    steps: np.ndarray
    mean_accuracy: np.ndarray
    se_accuracy: np.ndarray
    mean_nll: np.ndarray
    se_nll: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {
                "step": int(s),
                "mean_accuracy": repr(float(a)),
                "se_accuracy": repr(float(sa)),
                "mean_nll": repr(float(n)),
                "se_nll": repr(float(sn)),
            }
            for s, a, sa, n, sn in zip(self.steps, self.mean_accuracy, self.se_accuracy, self.mean_nll, self.se_nll)
        ]

    @property
    def final(self) -> tuple[float, float]:
        return float(self.mean_accuracy[-1]), float(self.se_accuracy[-1])


def mean_and_se(values: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[axis]
    mean = values.mean(axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=axis, ddof=1) / np.sqrt(n)


def aggregate(runs: list[RunResult]) -> Aggregate:
    if not runs:
        raise ValueError("nothing to aggregate")
    acc = np.stack([r.curve.accuracy for r in runs])
    nll = np.stack([r.curve.nll for r in runs])
    ma, sa = mean_and_se(acc)
    mn, sn = mean_and_se(nll)
    steps = np.array([rec.step for rec in runs[0].curve.records])
    return Aggregate(steps, ma, sa, mn, sn)


@dataclass
class ReplicatedResult:
    acquisition: str
    runs: list[RunResult]
    aggregate: Aggregate


def _run_one(args):
    config, seed, spec, pool_size = args
    try:
        return run_active_learning(config, seed, spec, pool_size)
    except Exception as exc:  # noqa: BLE001 - re-raised with the seed attached
        raise RunFailedError(seed, exc) from exc


def run_replicated(config: ExperimentConfig, seeds, acquisition: AcquisitionSpec | None = None,
                   pool_size: int | None = None, jobs: int = 1) -> ReplicatedResult:
    """Independent runs over ``seeds``; per-step mean and standard error of the metrics."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    spec = acquisition or config.acquisitions[0]
    work = [(config, s, spec, pool_size) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(_run_one, work))
    else:
        runs = [_run_one(w) for w in work]
    return ReplicatedResult(spec.label, runs, aggregate(runs))


def run_pool_size_sweep(config: ExperimentConfig, pool_sizes, seeds, acquisition: AcquisitionSpec | None = None,
                        jobs: int = 1) -> dict[int, ReplicatedResult]:
    """``run_replicated`` at each pool size; read final accuracy from ``result.aggregate.final``."""
    return {int(n): run_replicated(config, seeds, acquisition, int(n), jobs) for n in pool_sizes}
