"""JSON experiment configuration: defaults, overrides, validation and digest.

Validation collects every problem it finds and raises them together in a
``ConfigError``; each message starts with the dotted path of the offending key.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import Method, TargetMode
from .errors import ConfigError

MODEL_DEFAULTS = {
    "gp": {"amplitude": 10.0, "lengthscale": 1.0, "steps": 10_000, "lr": 0.005, "momentum": 0.95, "n_quadrature": 32},
    "forest": {"n_trees": 100, "smoothing": 1e-3, "max_features": None},
    "mlp": {
        "hidden": [128, 128, 128],
        "dropout": 0.1,
        "lr": 0.1,
        "l2": 1e-4,
        "max_steps": 50_000,
        "patience": 10_000,
    },
    "discrete": {},
}

TASK_DEFAULTS = {
    "synthetic-2d": {"pool_size": 100_000, "test_size": 10_000, "init_per_class": 2, "validation_size": 0},
    "csv": {
        "path": None,
        "features": None,
        "label": None,
        "num_classes": None,
        "pool_size": None,
        "pool_proportions": None,
        "test_size": None,
        "test_proportions": None,
        "target_size": 0,
        "target_proportions": None,
        "validation_size": 0,
        "init_per_class": 2,
    },
    "discrete": {"num_hypotheses": 5, "num_inputs": 10, "num_classes": 3, "table_seed": 0, "test_repeats": 20},
}

TOP_DEFAULTS = {
    "acquisition": ["epig"],
    "target_mode": TargetMode.EXACT.value,
    "target_class_probs": None,
    "budget": 50,
    "num_posterior_samples": None,
    "num_targets": 100,
    "seeds": [0],
    "pool_sizes": None,
    "out_dir": "results",
    "jobs": 1,
}

# keys that change where or how many times an experiment runs, not what it computes
_DIGEST_EXCLUDED = ("seeds", "out_dir", "jobs")

_REQUIRED_CSV = ("path", "features", "label", "num_classes", "pool_size", "test_size")


@dataclass(frozen=True)
class AcquisitionSpec:
    method: Method
    target_mode: TargetMode
    label: str

    def to_dict(self) -> dict:
        return {"method": self.method.value, "target_mode": self.target_mode.value, "label": self.label}


@dataclass
class ExperimentConfig:
    task: dict
    model: dict
    acquisitions: list[AcquisitionSpec]
    target_mode: TargetMode = TargetMode.EXACT
    target_class_probs: list[float] | None = None
    budget: int = 50
    num_posterior_samples: int | None = None
    num_targets: int = 100
    seeds: list[int] = field(default_factory=lambda: [0])
    pool_sizes: list[int] | None = None
    out_dir: str = "results"
    jobs: int = 1

    @property
    def num_classes(self) -> int:
        kind = self.task["kind"]
        return 2 if kind == "synthetic-2d" else int(self.task["num_classes"])

    def to_dict(self) -> dict:
        return {
            "task": copy.deepcopy(self.task),
            "model": copy.deepcopy(self.model),
            "acquisition": [a.to_dict() for a in self.acquisitions],
            "target_mode": self.target_mode.value,
            "target_class_probs": self.target_class_probs,
            "budget": self.budget,
            "num_posterior_samples": self.num_posterior_samples,
            "num_targets": self.num_targets,
            "seeds": list(self.seeds),
            "pool_sizes": self.pool_sizes,
            "out_dir": self.out_dir,
            "jobs": self.jobs,
        }

    @property
    def digest(self) -> str:
        return config_digest(self.to_dict())

    def replace(self, **changes) -> "ExperimentConfig":
        out = copy.deepcopy(self)
        for k, v in changes.items():
            setattr(out, k, v)
        return out


def config_digest(resolved: dict) -> str:
    """sha256 of the canonical JSON of a resolved config, ignoring seeds, output dir and jobs."""
    payload = {k: v for k, v in resolved.items() if k not in _DIGEST_EXCLUDED}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------------ overrides


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as JSON when possible."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError([f"override {item!r}: expected KEY=VALUE"])
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = node[part] = {} if nxt is None else nxt
            if not isinstance(nxt, dict):
                raise ConfigError([f"override {item!r}: {part} is not an object"])
            node = nxt
        node[parts[-1]] = _parse_value(value)
    return out


# ----------------------------------------------------------------- validation


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and np.isfinite(v)


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, msg: str):
        self.errors.append(f"{path}: {msg}")

    def int_at_least(self, d: dict, key: str, path: str, low: int) -> None:
        v = d.get(key)
        if not _is_int(v):
            self.add(f"{path}.{key}" if path else key, f"expected an integer, got {v!r}")
        elif v < low:
            self.add(f"{path}.{key}" if path else key, f"must be >= {low}, got {v}")

    def positive_num(self, d: dict, key: str, path: str) -> None:
        v = d.get(key)
        if not _is_num(v) or v <= 0:
            self.add(f"{path}.{key}", f"expected a positive number, got {v!r}")

    def prob_vector(self, v, path: str, size: int | None) -> None:
        if not isinstance(v, list) or not all(_is_num(x) for x in v):
            self.add(path, f"expected a list of numbers, got {v!r}")
            return
        if size is not None and len(v) != size:
            self.add(path, f"expected {size} entries, got {len(v)}")
        if any(x < 0 for x in v) or not v or abs(sum(v) - 1.0) > 1e-9:
            self.add(path, "entries must be non-negative and sum to 1")


def _merge_defaults(raw: dict, chk: _Checker, base_dir: Path | None) -> dict:
    cfg = {}
    unknown = set(raw) - set(TOP_DEFAULTS) - {"task", "model"}
    for key in sorted(unknown):
        chk.add(key, "unknown key")
    for key, default in TOP_DEFAULTS.items():
        cfg[key] = copy.deepcopy(raw.get(key, default))

    for section, table in (("task", TASK_DEFAULTS), ("model", MODEL_DEFAULTS)):
        given = raw.get(section, {})
        if isinstance(given, str):
            given = {"kind": given}
        if not isinstance(given, dict):
            chk.add(section, f"expected an object, got {given!r}")
            given = {}
        kind = given.get("kind", "synthetic-2d" if section == "task" else "gp")
        if kind not in table:
            chk.add(f"{section}.kind", f"unknown value {kind!r}; allowed: {', '.join(table)}")
            cfg[section] = {"kind": kind, **given}
            continue
        merged = {"kind": kind, **copy.deepcopy(table[kind])}
        for k, v in given.items():
            if k != "kind" and k not in table[kind]:
                chk.add(f"{section}.{k}", f"unknown key for kind {kind!r}")
            merged[k] = v
        cfg[section] = merged

    task = cfg["task"]
    given_task = raw.get("task") if isinstance(raw.get("task"), dict) else {}
    if (
        cfg["model"].get("kind") == "mlp"
        and task.get("kind") in ("synthetic-2d", "csv")
        and "validation_size" not in given_task
        and _is_int(cfg["budget"])
    ):
        # the MLP early-stops on a held-out set of about a fifth of the label budget
        task["validation_size"] = max(1, math.ceil(0.2 * cfg["budget"]))
    if task.get("kind") == "csv" and isinstance(task.get("path"), str) and base_dir is not None:
        p = Path(task["path"])
        if not p.is_absolute():
            task["path"] = str((base_dir / p).resolve())
    return cfg


def _check_task(task: dict, chk: _Checker) -> None:
    kind = task["kind"]
    if kind == "synthetic-2d":
        chk.int_at_least(task, "pool_size", "task", 1)
        chk.int_at_least(task, "test_size", "task", 1)
        chk.int_at_least(task, "init_per_class", "task", 0)
        chk.int_at_least(task, "validation_size", "task", 0)
    elif kind == "csv":
        for key in _REQUIRED_CSV:
            if task.get(key) is None:
                chk.add(f"task.{key}", "required for csv tasks")
        if task.get("path") is not None:
            if not isinstance(task["path"], str):
                chk.add("task.path", "expected a string")
            elif not Path(task["path"]).is_file():
                chk.add("task.path", f"file not found: {task['path']}")
        feats = task.get("features")
        if feats is not None and (not isinstance(feats, list) or not feats or not all(isinstance(f, str) for f in feats)):
            chk.add("task.features", "expected a non-empty list of column names")
        if task.get("label") is not None and not isinstance(task["label"], str):
            chk.add("task.label", "expected a column name")
        for key, low in (("num_classes", 2), ("pool_size", 1), ("test_size", 1)):
            if task.get(key) is not None:
                chk.int_at_least(task, key, "task", low)
        for key in ("target_size", "validation_size", "init_per_class"):
            chk.int_at_least(task, key, "task", 0)
        c = task.get("num_classes") if _is_int(task.get("num_classes")) else None
        for key in ("pool_proportions", "test_proportions", "target_proportions"):
            if task.get(key) is not None:
                vec = task[key]
                if isinstance(vec, list) and all(_is_num(x) for x in vec) and sum(vec) > 0:
                    # proportions need only be non-negative; they are normalised on use
                    if any(x < 0 for x in vec) or (c is not None and len(vec) != c):
                        chk.add(f"task.{key}", f"expected {c} non-negative numbers")
                else:
                    chk.add(f"task.{key}", "expected a list of non-negative numbers with positive sum")
    elif kind == "discrete":
        chk.int_at_least(task, "num_hypotheses", "task", 1)
        chk.int_at_least(task, "num_inputs", "task", 1)
        chk.int_at_least(task, "num_classes", "task", 2)
        chk.int_at_least(task, "table_seed", "task", 0)
        chk.int_at_least(task, "test_repeats", "task", 1)


def _check_model(model: dict, chk: _Checker) -> None:
    kind = model["kind"]
    if kind == "gp":
        for key in ("amplitude", "lengthscale", "lr"):
            chk.positive_num(model, key, "model")
        chk.int_at_least(model, "steps", "model", 0)
        chk.int_at_least(model, "n_quadrature", "model", 1)
        m = model.get("momentum")
        if not _is_num(m) or not 0 <= m < 1:
            chk.add("model.momentum", f"expected a number in [0, 1), got {m!r}")
    elif kind == "forest":
        chk.int_at_least(model, "n_trees", "model", 1)
        s = model.get("smoothing")
        if not _is_num(s) or s < 0:
            chk.add("model.smoothing", f"expected a non-negative number, got {s!r}")
        if model.get("max_features") is not None:
            chk.int_at_least(model, "max_features", "model", 1)
    elif kind == "mlp":
        h = model.get("hidden")
        if not isinstance(h, list) or not h or not all(_is_int(w) and w >= 1 for w in h):
            chk.add("model.hidden", f"expected a non-empty list of positive integers, got {h!r}")
        r = model.get("dropout")
        if not _is_num(r) or not 0 <= r < 1:
            chk.add("model.dropout", f"expected a number in [0, 1), got {r!r}")
        chk.positive_num(model, "lr", "model")
        l2 = model.get("l2")
        if not _is_num(l2) or l2 < 0:
            chk.add("model.l2", f"expected a non-negative number, got {l2!r}")
        chk.int_at_least(model, "max_steps", "model", 0)
        chk.int_at_least(model, "patience", "model", 0)


def _acquisitions(cfg: dict, chk: _Checker) -> list[AcquisitionSpec]:
    entries = cfg["acquisition"]
    if isinstance(entries, (str, dict)):
        entries = [entries]
    if not isinstance(entries, list) or not entries:
        chk.add("acquisition", "expected a method name or a non-empty list of them")
        return []
    allowed = ", ".join(m.value for m in Method)
    modes = ", ".join(m.value for m in TargetMode)
    default_mode = cfg["target_mode"]
    specs = []
    for i, entry in enumerate(entries):
        path = f"acquisition[{i}]"
        if isinstance(entry, str):
            entry = {"method": entry}
        if not isinstance(entry, dict):
            chk.add(path, "expected a method name or an object")
            continue
        for k in set(entry) - {"method", "target_mode", "label"}:
            chk.add(f"{path}.{k}", "unknown key")
        try:
            method = Method(entry.get("method"))
        except ValueError:
            chk.add(f"{path}.method", f"unknown value {entry.get('method')!r}; allowed: {allowed}")
            continue
        mode_value = entry.get("target_mode", default_mode)
        try:
            mode = TargetMode(mode_value)
        except ValueError:
            chk.add(f"{path}.target_mode", f"unknown value {mode_value!r}; allowed: {modes}")
            continue
        if "label" in entry:
            label = entry["label"]
        elif method.needs_targets and "target_mode" in entry:
            label = f"{method.value}-{mode.value}"
        else:
            label = method.value
        if not isinstance(label, str) or not label or any(ch in label for ch in "/\\") or label.startswith("."):
            chk.add(f"{path}.label", f"invalid label {label!r}")
            continue
        specs.append(AcquisitionSpec(method, mode, label))
    labels = [s.label for s in specs]
    for dup in sorted({x for x in labels if labels.count(x) > 1}):
        chk.add("acquisition", f"duplicate label {dup!r}; give each entry a distinct 'label'")
    return specs


def resolve_config(raw: dict, base_dir=None) -> ExperimentConfig:
    """Fill in defaults and validate; raises ``ConfigError`` listing every problem."""
    chk = _Checker()
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    cfg = _merge_defaults(raw, chk, None if base_dir is None else Path(base_dir))
    task, model = cfg["task"], cfg["model"]
    if task["kind"] in TASK_DEFAULTS:
        _check_task(task, chk)
    if model["kind"] in MODEL_DEFAULTS:
        _check_model(model, chk)

    try:
        TargetMode(cfg["target_mode"])
    except ValueError:
        chk.add("target_mode", f"unknown value {cfg['target_mode']!r}; allowed: {', '.join(m.value for m in TargetMode)}")
        cfg["target_mode"] = TargetMode.EXACT.value
    specs = _acquisitions(cfg, chk)

    chk.int_at_least(cfg, "budget", "", 0)
    chk.int_at_least(cfg, "num_targets", "", 1)
    chk.int_at_least(cfg, "jobs", "", 1)
    if cfg["num_posterior_samples"] is not None:
        chk.int_at_least(cfg, "num_posterior_samples", "", 1)
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        chk.add("seeds", f"expected a non-empty list of non-negative integers, got {seeds!r}")
    sizes = cfg["pool_sizes"]
    if sizes is not None:
        if task["kind"] != "synthetic-2d":
            chk.add("pool_sizes", "pool-size sweeps are only supported for the synthetic-2d task")
        elif not isinstance(sizes, list) or not sizes or not all(_is_int(s) and s >= 1 for s in sizes):
            chk.add("pool_sizes", f"expected a non-empty list of positive integers, got {sizes!r}")
    if not isinstance(cfg["out_dir"], str) or not cfg["out_dir"]:
        chk.add("out_dir", "expected a directory path")

    # cross-field checks
    kind_t, kind_m = task["kind"], model["kind"]
    num_classes = 2 if kind_t == "synthetic-2d" else task.get("num_classes")
    if (kind_m == "discrete") != (kind_t == "discrete") and kind_t in TASK_DEFAULTS and kind_m in MODEL_DEFAULTS:
        chk.add("model.kind", "the discrete model and the discrete task must be used together")
    if kind_m == "gp" and _is_int(num_classes) and num_classes != 2:
        chk.add("model.kind", "the GP classifier is binary but the task has more than two classes")
    if kind_m == "mlp" and kind_t in ("synthetic-2d", "csv") and _is_int(task.get("validation_size")) and task["validation_size"] < 1:
        chk.add("task.validation_size", "the MLP needs a validation set (validation_size >= 1)")
    tcp = cfg["target_class_probs"]
    if any(s.target_mode is TargetMode.REWEIGHTED and s.method.needs_targets for s in specs):
        if tcp is None:
            chk.add("target_class_probs", "required when an EPIG acquisition uses class-reweighted targets")
    if tcp is not None:
        chk.prob_vector(tcp, "target_class_probs", num_classes if _is_int(num_classes) else None)
    if kind_t == "csv" and any(s.target_mode is TargetMode.EXACT and s.method.needs_targets for s in specs):
        if _is_int(task.get("target_size")) and task["target_size"] < 1:
            chk.add("task.target_size", "exact-target EPIG on a csv task needs a target set (target_size >= 1)")

    if chk.errors:
        raise ConfigError(chk.errors)
    return ExperimentConfig(
        task=task,
        model=model,
        acquisitions=specs,
        target_mode=TargetMode(cfg["target_mode"]),
        target_class_probs=tcp,
        budget=cfg["budget"],
        num_posterior_samples=cfg["num_posterior_samples"],
        num_targets=cfg["num_targets"],
        seeds=list(seeds),
        pool_sizes=sizes,
        out_dir=cfg["out_dir"],
        jobs=cfg["jobs"],
    )


def parse_config(path, overrides=()) -> ExperimentConfig:
    """Read a JSON config file, apply overrides, validate and fill defaults.

    Relative csv paths are resolved against the config file's directory.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    return resolve_config(apply_overrides(raw, overrides), base_dir=path.parent)
