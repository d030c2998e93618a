"""One printed PASS/FAIL line per acceptance criterion.

Criteria 4 and 5 need hours of single-core compute, so they are judged from
the artifacts that ``experiments/synthetic_pool_size.py`` and
``experiments/target_ablation.py`` write under ``experiments/results``.  Set
``EPIG_RUN_EXPERIMENTS=1`` to (re)run those scripts first; the pool-size
script resumes from whatever runs are already recorded.
"""

import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from epig.acquisition import bald_categorical, bald_nested_mc, epig_categorical, epig_nested_mc
from epig.cli import main as cli_main
from epig.gaussian_info import PathologyDesign, pathology_bald, pathology_eig_target
from epig.kernels import gp as gp_kernel
from epig.models import random_discrete_model
from epig.models.mlp import init_params, loss_and_grad
from epig.target_dist import compute_weights

import oracles

ROOT = Path(__file__).resolve().parents[1]
EXPERIMENTS = ROOT / "experiments"
RERUN = os.environ.get("EPIG_RUN_EXPERIMENTS") == "1"


def report(capsys, number, passed, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if passed else 'FAIL'} | {detail}")
    assert passed, detail


def _experiment(name):
    sys.path.insert(0, str(EXPERIMENTS))
    try:
        return __import__(name)
    finally:
        sys.path.remove(str(EXPERIMENTS))


# ---------------------------------------------------------------------------


def test_criterion_1_growing_design(capsys):
    t0 = time.perf_counter()
    ratios = [pathology_bald(PathologyDesign(m)) / (0.5 * m * math.log(2)) for m in range(4, 31)]
    eig = [(m, pathology_eig_target(PathologyDesign(m))) for m in range(2, 31)]
    elapsed = time.perf_counter() - t0
    worst_ratio = max(abs(r - 1) for r in ratios)
    bound_ok = all(v <= m**2 * math.exp(-((m - 1) ** 2)) for m, v in eig)
    passed = worst_ratio <= 1e-6 and bound_ok and elapsed < 1.0
    report(capsys, 1, passed, f"max |ratio-1| = {worst_ratio:.1e}, eig bound holds = {bound_ok}, {elapsed:.3f}s")


def test_criterion_2_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240)
    worst_epig = worst_bald = 0.0
    n_instances = 150
    for i in range(n_instances):
        h, x_count, c = int(rng.integers(2, 6)), int(rng.integers(1, 5)), int(rng.integers(2, 4))
        model = random_discrete_model(h, x_count, c, seed=int(rng.integers(2**31)), concentration=float(rng.choice([0.3, 1.0, 3.0])))
        w, table = model.weights, model.table
        for x in range(x_count):
            t_x = table[:, x, :]
            targets = np.stack([table[:, xs, :] for xs in range(x_count)])
            ours_e = epig_categorical(t_x, targets, w)
            ref_e = oracles.epig_by_updates(w.tolist(), table.tolist(), x, list(range(x_count)))
            ours_b = bald_categorical(t_x, w)
            ref_b = oracles.bald_by_updates(w.tolist(), table.tolist(), x)
            worst_epig = max(worst_epig, abs(ours_e - ref_e))
            worst_bald = max(worst_bald, abs(ours_b - ref_b))
    elapsed = time.perf_counter() - t0
    passed = worst_epig <= 1e-9 and worst_bald <= 1e-9 and elapsed < 10
    report(capsys, 2, passed, f"{n_instances} instances, max |EPIG err| = {worst_epig:.1e}, max |BALD err| = {worst_bald:.1e}, {elapsed:.2f}s")


def test_criterion_3_nested_mc(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    worst = 0.0
    n_instances = 25
    for i in range(n_instances):
        k, c, m = int(rng.integers(2, 9)), int(rng.integers(2, 5)), int(rng.integers(1, 6))
        w = rng.dirichlet(np.ones(k))
        t_x = rng.dirichlet(np.full(c, 0.7), size=k)
        targets = rng.dirichlet(np.full(c, 0.7), size=(m, k))
        b = bald_nested_mc(t_x, 100_000, seed=1000 + i, weights=w)
        e = epig_nested_mc(t_x, targets, 100_000, seed=2000 + i, weights=w)
        worst = max(
            worst,
            abs(b.value - bald_categorical(t_x, w)) / b.stderr,
            abs(e.value - epig_categorical(t_x, targets, w)) / e.stderr,
        )
    elapsed = time.perf_counter() - t0
    passed = worst <= 3.0 and elapsed < 60
    report(capsys, 3, passed, f"{n_instances} instances at 1e5 outer samples, worst deviation {worst:.2f} SE, {elapsed:.1f}s")


def _band(values):
    v = np.asarray(values, dtype=float)
    return v.mean(), v.std(ddof=1) / math.sqrt(v.size)


def test_criterion_4_pool_size(capsys):
    mod = _experiment("synthetic_pool_size")
    if RERUN:
        mod.main([])
    digest = mod.make_config().digest
    finals = mod.load_results(digest=digest) if mod.RESULTS.exists() else {}
    cells = [(100, "bald"), (100, "epig"), (100_000, "random"), (100_000, "epig"), (100_000, "bald")]
    counts = {cell: len(finals.get(cell, [])) for cell in cells}
    if min(counts.values()) < 20:
        report(capsys, 4, False, f"artifact incomplete, seeds per (pool, method): {counts}")
    b = {cell: _band(finals[cell]) for cell in cells}
    (e5, se_e5), (r5, _), (b5, se_b5) = b[(100_000, "epig")], b[(100_000, "random")], b[(100_000, "bald")]
    (b2, se_b2), (e2, se_e2) = b[(100, "bald")], b[(100, "epig")]
    part_a = e5 > r5 > b5 and e5 - se_e5 > b5 + se_b5
    part_b = b5 + se_b5 < b2 - se_b2
    part_c = e5 + se_e5 >= e2 - se_e2
    detail = (
        f"pool 1e5: epig {e5:.4f}+-{se_e5:.4f}, random {r5:.4f}, bald {b5:.4f}+-{se_b5:.4f} (a={part_a}); "
        f"bald 1e2 {b2:.4f}+-{se_b2:.4f} (b={part_b}); epig 1e2 {e2:.4f}+-{se_e2:.4f} (c={part_c}); "
        f"{min(counts.values())} seeds"
    )
    report(capsys, 4, part_a and part_b and part_c, detail)


def test_criterion_5_target_modes(capsys):
    mod = _experiment("target_ablation")
    path = EXPERIMENTS / "results" / "target_ablation.json"
    if RERUN or not path.exists():
        mod.main([])
    data = json.loads(path.read_text())
    digest_ok = data["config_digest"] == mod.make_config(data["budget"]).digest
    res = data["results"]
    bald_mean, bald_se = res["bald"]["final_mean_accuracy"], res["bald"]["final_se_accuracy"]
    parts, ok = [], digest_ok and len(data["seeds"]) >= 10
    for label in ("epig-exact-target", "epig-class-reweighted", "epig-pool-proxy"):
        m, se = res[label]["final_mean_accuracy"], res[label]["final_se_accuracy"]
        ok = ok and m + se >= bald_mean - bald_se
        parts.append(f"{label} {m:.4f}+-{se:.4f}")
    detail = f"bald {bald_mean:.4f}+-{bald_se:.4f}; " + ", ".join(parts) + f"; {len(data['seeds'])} seeds, digest ok = {digest_ok}"
    report(capsys, 5, ok, detail)


def test_criterion_6_weight_identity(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        n, c = int(rng.integers(1, 60)), int(rng.integers(2, 8))
        probs = rng.dirichlet(np.full(c, rng.choice([0.2, 1.0, 5.0])), size=n)
        w = compute_weights(probs, rng.dirichlet(np.ones(c)))
        worst = max(worst, abs(w.mean() - 1.0))
    elapsed = time.perf_counter() - t0
    report(capsys, 6, worst <= 1e-9 and elapsed < 1.0, f"1000 pairs, max |mean(w)-1| = {worst:.1e}, {elapsed:.3f}s")


def _fd_rel_error(f, params, h):
    """Relative error of the analytic gradient against central differences over all flat entries."""
    value, analytic = f(params)
    numeric = np.empty_like(params)
    for i in range(params.size):
        d = np.zeros_like(params)
        d[i] = h
        numeric[i] = (f(params + d)[0] - f(params - d)[0]) / (2 * h)
    return np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)


def test_criterion_7_gradients(capsys):
    t0 = time.perf_counter()
    gx, gw = gp_kernel.gauss_hermite(32)
    gp_errors = []
    for seed in range(10):
        rng = np.random.default_rng(700 + seed)
        n = 6
        x = rng.standard_normal((n, 2))
        k = 10.0 * np.exp(-0.5 * ((x[:, None] - x[None]) ** 2).sum(-1)) + 1e-4 * np.eye(n)
        chol = np.linalg.cholesky(k)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        tril = np.tril_indices(n)

        def gp_f(flat):
            mu, raw = flat[:n], np.zeros((n, n))
            raw[tril] = flat[n:]
            value, g_mu, g_raw = gp_kernel.elbo_grad(mu, raw, chol, signs, gx, gw)
            return value, np.concatenate([g_mu, g_raw[tril]])

        start = np.concatenate([rng.standard_normal(n), 0.3 * rng.standard_normal(len(tril[0]))])
        gp_errors.append(_fd_rel_error(gp_f, start, 1e-5))

    mlp_errors = []
    for seed in range(10):
        rng = np.random.default_rng(800 + seed)
        sizes = (3, 6, 5, 4, 3)
        params = init_params(sizes, rng)
        shapes = [p.shape for p in params]
        xb, yb = rng.standard_normal((8, 3)), rng.integers(0, 3, size=8)
        masks = [rng.random((8, s)) >= 0.25 for s in sizes[1:-1]]

        def mlp_f(flat):
            ps, pos = [], 0
            for s in shapes:
                size = int(np.prod(s))
                ps.append(flat[pos:pos + size].reshape(s))
                pos += size
            loss, grads = loss_and_grad(ps, xb, yb, masks, 0.25, 1e-3)
            return loss, np.concatenate([g.ravel() for g in grads])

        mlp_errors.append(_fd_rel_error(mlp_f, np.concatenate([p.ravel() for p in params]), 1e-6))
    elapsed = time.perf_counter() - t0
    passed = max(gp_errors) < 1e-4 and max(mlp_errors) < 1e-4 and elapsed < 30
    report(capsys, 7, passed, f"max rel err GP ELBO {max(gp_errors):.1e}, MLP {max(mlp_errors):.1e}, {elapsed:.1f}s")


CONFIGS = {
    "forest-synthetic": {
        "model": {"kind": "forest", "n_trees": 10},
        "task": {"kind": "synthetic-2d", "pool_size": 300, "test_size": 300},
        "acquisition": ["random", "entropy", "bald", "epig", "epig-mc"],
        "budget": 3,
        "num_targets": 20,
        "seeds": [0, 1],
    },
    "gp-synthetic": {
        "model": {"kind": "gp", "steps": 300},
        "task": {"kind": "synthetic-2d", "pool_size": 200, "test_size": 300},
        "acquisition": ["bald", "epig"],
        "budget": 2,
        "num_posterior_samples": 50,
        "num_targets": 10,
        "seeds": [0],
    },
    "discrete": {
        "model": {"kind": "discrete"},
        "task": {"kind": "discrete"},
        "acquisition": ["bald", "epig", "epig-mc"],
        "budget": 3,
        "seeds": [0, 4],
    },
}


def test_criterion_8_determinism(capsys, tmp_path):
    configs = CONFIGS
    mismatched, compared = [], 0
    for name, raw in configs.items():
        cfg_path = tmp_path / f"{name}.json"
        cfg_path.write_text(json.dumps(raw))
        for rep in ("a", "b"):
            assert cli_main(["run", "--config", str(cfg_path), "--out", str(tmp_path / name / rep)]) == 0
        for first in sorted((tmp_path / name / "a").rglob("run_seed*.csv")):
            second = tmp_path / name / "b" / first.relative_to(tmp_path / name / "a")
            compared += 1
            if first.read_bytes() != second.read_bytes():
                mismatched.append(str(first.relative_to(tmp_path)))
    report(capsys, 8, compared > 0 and not mismatched, f"{compared} per-run CSVs compared across {len(configs)} configs, mismatches: {mismatched or 'none'}")


def test_criterion_9_out_of_scope(capsys):
    readme = (ROOT / "README.md").read_text() if (ROOT / "README.md").exists() else ""
    documented = "Not reproduced" in readme
    report(
        capsys,
        9,
        documented,
        "MNIST CNN curves, 100-seed full-fidelity UCI curves and the BADGE comparison are out of scope; "
        f"documented in README = {documented}",
    )
