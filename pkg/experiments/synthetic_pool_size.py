"""Pool-size experiment on the 2D synthetic task with the probit GP.

Runs random, BALD and EPIG (exact targets) on a 100,000-input pool and BALD
and EPIG on a 100-input pool, 20 seeds each, and appends one JSON line per
finished run to ``results/synthetic_pool_size.jsonl``.  Re-running skips runs
already recorded, so the script can be interrupted and resumed.

Takes several hours on one core; ``--quick`` runs a tiny version for smoke
testing into a separate file.
"""

import argparse
import json
import time
from pathlib import Path

from epig.al_loop import run_active_learning
from epig.config import resolve_config

HERE = Path(__file__).resolve().parent

PLAN = [
    (100, "bald"),
    (100, "epig"),
    (100_000, "random"),
    (100_000, "epig"),
    (100_000, "bald"),
]


RESULTS = HERE / "results" / "synthetic_pool_size.jsonl"


def make_config(quick=False):
    raw = {
        "task": {"kind": "synthetic-2d", "pool_size": 100_000, "test_size": 10_000, "init_per_class": 2},
        "model": {"kind": "gp"},
        "acquisition": ["random", "bald", "epig"],
        "target_mode": "exact-target",
        "budget": 50,
        "num_posterior_samples": 1000,
        "num_targets": 100,
    }
    if quick:
        raw["task"].update(test_size=500)
        raw["model"]["steps"] = 300
        raw.update(budget=3, num_posterior_samples=100)
    return resolve_config(raw)


def load_results(path=RESULTS, digest=None):
    """``{(pool_size, acquisition): [final accuracy per seed]}`` from the JSON lines file."""
    finals = {}
    for line in Path(path).read_text().splitlines():
        rec = json.loads(line)
        if digest is not None and rec["config_digest"] != digest:
            continue
        finals.setdefault((rec["pool_size"], rec["acquisition"]), {})[rec["seed"]] = rec["accuracy"][-1]
    return {key: [v[s] for s in sorted(v)] for key, v in finals.items()}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)

    config = make_config(args.quick)
    plan = PLAN
    out = RESULTS
    if args.quick:
        plan = [(100, m) for _, m in PLAN[:2]] + [(2000, m) for _, m in PLAN[2:]]
        out = HERE / "results" / "synthetic_pool_size_quick.jsonl"
    specs = {a.label: a for a in config.acquisitions}

    done = set()
    if out.exists():
        for line in out.read_text().splitlines():
            rec = json.loads(line)
            done.add((rec["pool_size"], rec["acquisition"], rec["seed"]))
    out.parent.mkdir(parents=True, exist_ok=True)
    for pool_size, label in plan:
        for seed in range(args.seeds):
            if (pool_size, label, seed) in done:
                continue
            t0 = time.perf_counter()
            result = run_active_learning(config, seed, specs[label], pool_size=pool_size)
            rec = {
                "pool_size": pool_size,
                "acquisition": label,
                "seed": seed,
                "config_digest": result.config_digest,
                "accuracy": result.curve.accuracy.tolist(),
                "nll": result.curve.nll.tolist(),
                "acquired": result.curve.acquired,
                "wall_time": time.perf_counter() - t0,
            }
            with out.open("a") as fh:
                fh.write(json.dumps(rec) + "\n")
            print(f"{pool_size:>6} {label:>6} seed {seed:>2}: final acc {rec['accuracy'][-1]:.4f} ({rec['wall_time']:.0f}s)", flush=True)


if __name__ == "__main__":
    main()
