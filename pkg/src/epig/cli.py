"""``epig`` command line: run experiments, sweep the Gaussian example, emit plot data.

Exit codes: 0 success, 1 invalid configuration or input, 2 failure while running.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import USE_NUMBA
from .al_loop import ReplicatedResult, run_pool_size_sweep, run_replicated
from .config import ExperimentConfig, parse_config
from .errors import ConfigError
from .gaussian_info import pathology_sweep

RUN_COLUMNS = ["seed", "step", "labels_used", "acquisition", "acquired_index", "score", "accuracy", "nll"]
AGG_COLUMNS = ["step", "mean_accuracy", "se_accuracy", "mean_nll", "se_nll"]
TIDY_COLUMNS = ["acquisition", "step", "mean", "se"]


class InputError(Exception):
    """Bad user input that is not a config problem (maps to exit code 1)."""


def parse_seeds(text: str) -> list[int]:
    """``"0,3,5-9"`` -> ``[0, 3, 5, 6, 7, 8, 9]``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, dash, hi = part.partition("-")
        try:
            if dash:
                a, b = int(lo), int(hi)
                if b < a:
                    raise ValueError
                seeds.extend(range(a, b + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise InputError(f"--seeds: cannot parse {part!r}") from None
    if not seeds or min(seeds) < 0:
        raise InputError("--seeds: need at least one non-negative seed")
    return seeds


def _write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _versions() -> dict:
    import numba
    import scipy

    return {
        "epig": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "numba_kernels": USE_NUMBA,
    }


def _write_manifest(out: Path, payload: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------- run


def _write_replicated(out: Path, result: ReplicatedResult, suffix: str = "") -> dict:
    run_dir = out / (result.acquisition + suffix)
    files = []
    for run in result.runs:
        path = run_dir / f"run_seed{run.seed}.csv"
        _write_csv(path, RUN_COLUMNS, run.rows())
        files.append(str(path.relative_to(out)))
    agg_path = out / f"aggregate_{result.acquisition}{suffix}.csv"
    _write_csv(agg_path, AGG_COLUMNS, result.aggregate.rows())
    return {"runs": files, "aggregate": str(agg_path.relative_to(out))}


def cmd_run(config: ExperimentConfig, out: Path) -> int:
    outputs = {}
    summary = []
    for spec in config.acquisitions:
        if config.pool_sizes:
            sweep = run_pool_size_sweep(config, config.pool_sizes, config.seeds, spec, jobs=config.jobs)
            for size, result in sweep.items():
                outputs[f"{spec.label}@{size}"] = _write_replicated(out, result, f"_pool{size}")
                mean, se = result.aggregate.final
                summary.append({"acquisition": spec.label, "pool_size": size, "mean_final_accuracy": repr(mean), "se_final_accuracy": repr(se)})
        else:
            result = run_replicated(config, config.seeds, spec, jobs=config.jobs)
            outputs[spec.label] = _write_replicated(out, result)
        print(f"finished {spec.label}", file=sys.stderr)
    if summary:
        _write_csv(out / "pool_size_summary.csv", list(summary[0]), summary)
    _write_manifest(
        out,
        {
            "command": "run",
            "config": config.to_dict(),
            "config_digest": config.digest,
            "seeds": config.seeds,
            "versions": _versions(),
            "outputs": outputs,
        },
    )
    return 0


# ---------------------------------------------------------------- pathology


def cmd_pathology(m_max: int, x_star: float, out: Path) -> int:
    if m_max < 1:
        raise InputError("--m-max must be at least 1")
    if not math.isfinite(x_star):
        raise InputError("--x-star must be finite")
    rows = pathology_sweep(m_max, x_star)
    _write_csv(out / "pathology.csv", list(rows[0]), [{k: repr(v) if isinstance(v, float) else v for k, v in r.items()} for r in rows])
    _write_manifest(
        out,
        {"command": "pathology", "m_max": m_max, "m_used": len(rows), "x_star": x_star, "versions": _versions(), "outputs": ["pathology.csv"]},
    )
    return 0


# ----------------------------------------------------------------- plotdata


def _read_aggregate(path: Path, metric: str) -> list[dict]:
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(AGG_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise InputError(f"{path}: not an aggregate CSV (missing columns {sorted(missing)})")
            rows = []
            for i, row in enumerate(reader, start=2):
                try:
                    rows.append({"step": int(row["step"]), "mean": float(row[f"mean_{metric}"]), "se": float(row[f"se_{metric}"])})
                except ValueError:
                    raise InputError(f"{path}: row {i} is not numeric") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def _series_name(path: Path) -> str:
    stem = path.stem
    return stem[len("aggregate_"):] if stem.startswith("aggregate_") else stem


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def render_svg(series: dict[str, list[dict]], ylabel: str, width: int = 640, height: int = 400) -> str:
    """Line per series with a translucent +-1 SE band; no plotting library needed."""
    left, right, top, bottom = 60, 130, 20, 40
    steps = [r["step"] for rows in series.values() for r in rows]
    lows = [r["mean"] - r["se"] for rows in series.values() for r in rows]
    highs = [r["mean"] + r["se"] for rows in series.values() for r in rows]
    x0, x1 = min(steps), max(steps)
    y0, y1 = min(lows), max(highs)
    if x1 == x0:
        x1 = x0 + 1
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return left + (v - x0) / (x1 - x0) * (width - left - right)

    def sy(v):
        return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 8}" text-anchor="middle">step</text>',
        f'<text x="14" y="{(top + height - bottom) / 2:.1f}" transform="rotate(-90 14 {(top + height - bottom) / 2:.1f})" text-anchor="middle">{ylabel}</text>',
    ]
    for v in np.linspace(y0, y1, 5):
        parts.append(f'<text x="{left - 4}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    for v in np.linspace(x0, x1, 5):
        parts.append(f'<text x="{sx(v):.1f}" y="{height - bottom + 14}" text-anchor="middle">{v:.0f}</text>')
    for i, (name, rows) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        upper = " ".join(f"{sx(r['step']):.2f},{sy(r['mean'] + r['se']):.2f}" for r in rows)
        lower = " ".join(f"{sx(r['step']):.2f},{sy(r['mean'] - r['se']):.2f}" for r in reversed(rows))
        line = " ".join(f"{sx(r['step']):.2f},{sy(r['mean']):.2f}" for r in rows)
        parts.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 * (i + 1)
        parts.append(f'<line x1="{width - right + 10}" y1="{ly - 4}" x2="{width - right + 28}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{width - right + 32}" y="{ly}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plotdata(paths: list[Path], out: Path, metric: str = "accuracy", svg: bool = True) -> int:
    if not paths:
        raise InputError("plotdata needs at least one aggregate CSV")
    series: dict[str, list[dict]] = {}
    for path in paths:
        name = _series_name(path)
        if name in series:
            raise InputError(f"two inputs map to the same series name {name!r}")
        series[name] = _read_aggregate(path, metric)
    rows = [{"acquisition": name, "step": r["step"], "mean": repr(r["mean"]), "se": repr(r["se"])} for name, rs in series.items() for r in rs]
    _write_csv(out / f"plotdata_{metric}.csv", TIDY_COLUMNS, rows)
    if svg:
        (out / f"plot_{metric}.svg").write_text(render_svg(series, metric))
    return 0


# --------------------------------------------------------------------- main


def _config_from_args(args) -> ExperimentConfig:
    config = parse_config(args.config, args.override)
    if args.seeds is not None:
        config.seeds = parse_seeds(args.seeds)
    if args.jobs is not None:
        if args.jobs < 1:
            raise InputError("--jobs must be at least 1")
        config.jobs = args.jobs
    if args.out is not None:
        config.out_dir = args.out
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epig", description="Active learning experiments with BALD and EPIG acquisition.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", required=True, type=Path, help="JSON experiment config")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a (dotted) config key; VALUE is parsed as JSON when possible")
        p.add_argument("--seeds", help="e.g. 0,1,2 or 0-19; replaces the config's seeds")
        p.add_argument("--jobs", type=int, help="parallel seeded runs")
        p.add_argument("--out", help="output directory; replaces the config's out_dir")

    add_config_args(sub.add_parser("run", help="run active-learning experiments"))
    add_config_args(sub.add_parser("validate", help="check a config and print it with defaults filled in"))

    p = sub.add_parser("pathology", help="sweep the growing-design Gaussian example")
    p.add_argument("--m-max", type=int, default=30)
    p.add_argument("--x-star", type=float, default=0.5)
    p.add_argument("--out", default="results")

    p = sub.add_parser("plotdata", help="merge aggregate CSVs into tidy plot data (+ SVG)")
    p.add_argument("aggregates", nargs="*", type=Path)
    p.add_argument("--metric", choices=["accuracy", "nll"], default="accuracy")
    p.add_argument("--no-svg", action="store_true")
    p.add_argument("--out", default="results")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            config = _config_from_args(args)
            print(json.dumps({"config": config.to_dict(), "config_digest": config.digest}, indent=2, sort_keys=True))
            return 0
        if args.command == "run":
            config = _config_from_args(args)
            return cmd_run(config, Path(config.out_dir))
        if args.command == "pathology":
            return cmd_pathology(args.m_max, args.x_star, Path(args.out))
        return cmd_plotdata(args.aggregates, Path(args.out), args.metric, not args.no_svg)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for err in exc.errors:
            print(f"  {err}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every runtime failure becomes exit code 2
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
