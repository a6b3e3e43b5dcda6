"""Command-line front end.

Subcommands: ``tfr`` (raw -> time-frequency dataset), ``run`` (the
hierarchical pipeline), ``cluster`` (cluster-based permutation test),
``correct`` (p-value correction on a CSV), ``simulate`` (ground-truth
dataset generation), ``compare`` (Monte-Carlo procedure comparison).

Every invocation writes a ``manifest.json`` with the tool version, the
full argument vector, the seed, and a dataset hash, which is enough to
re-execute the run bit-identically. Timings live only in the manifest,
so all result files are byte-stable across reruns. Exit codes: 0 on
success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import ClusterTestConfig, cluster_permutation_test
from .data import (
    SensorLayout,
    TFRTensor,
    TrialSet,
    load_csv_dataset,
    load_dataset,
    load_layout,
    save_dataset,
)
from .mcp import bh, bky, bonferroni, by, holm
from .pipeline import PipelineConfig, run_pipeline
from .report import emit_topomap
from .simulate import (
    EffectSpec,
    compare_procedures,
    default_broad_effect,
    default_narrow_effect,
    gen_dataset,
    grid_layout,
    scenario_from_dict,
    write_metrics_csv,
)
from .tfr import MorletConfig, morlet_power

CORRECTION_METHODS = {
    "bonferroni": bonferroni,
    "holm": holm,
    "bh": bh,
    "by": by,
    "bky": bky,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _default_threads() -> int:
    env = os.environ.get("MASSTEST_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    common.add_argument(
        "--threads",
        type=int,
        default=_default_threads(),
        help="worker threads (default: MASSTEST_THREADS or 1)",
    )
    common.add_argument("--out-dir", default=".", help="output directory (default .)")
    return common


def _sha256_paths(*paths: Path) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def _dataset_hash(path: Path) -> str:
    path = Path(path)
    if path.is_dir():
        return _sha256_paths(path / "meta.json", path / "data.bin")
    return _sha256_paths(path)


def _announce(path: Path) -> None:
    print(f"wrote {path}")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _announce(path)


def _write_manifest(args, subcommand: str, config: dict, dataset_hash: str | None,
                    timings: dict, outputs: list) -> None:
    out = _out_dir(args)
    manifest = {
        "tool": "masstest",
        "version": __version__,
        "subcommand": subcommand,
        "argv": list(getattr(args, "_argv", [])),
        "seed": args.seed,
        "threads": args.threads,
        "config": config,
        "dataset_sha256": dataset_hash,
        "timings_s": timings,
        "outputs": [str(p) for p in outputs],
    }
    _write_json(manifest, out / "manifest.json")


def _load_tfr(path: str) -> TFRTensor:
    p = Path(path)
    if p.suffix == ".csv":
        return load_csv_dataset(p)
    obj = load_dataset(p)
    if isinstance(obj, TrialSet):
        raise ValueError(
            f"{path} holds a raw time-series dataset; run the 'tfr' subcommand first"
        )
    return obj


def _maybe_layout(path: str, want_grid: bool, n_channels: int) -> SensorLayout | None:
    if want_grid:
        return grid_layout(n_channels)
    p = Path(path)
    if p.is_dir():
        return load_layout(p)
    return None


def cmd_run(args) -> int:
    out = _out_dir(args)
    t0 = time.perf_counter()
    tensor = _load_tfr(args.dataset)
    layout = _maybe_layout(args.dataset, args.grid_layout, tensor.n_channels)
    load_s = time.perf_counter() - t0
    cfg = PipelineConfig(
        alpha=args.alpha,
        k=args.k,
        u=args.u,
        v=args.v,
        metric=args.metric,
        mu=args.mu,
        seed=args.seed,
        lam=args.ridge,
    )
    t0 = time.perf_counter()
    result = run_pipeline(tensor, cfg, threads=args.threads)
    run_s = time.perf_counter() - t0
    outputs = []
    payload = {
        "config": asdict(cfg),
        "dataset": {
            "path": str(args.dataset),
            "sha256": _dataset_hash(Path(args.dataset)),
            "dims": list(tensor.power.shape),
        },
        "outcome": result.outcome,
        "stop_stage": result.stop_stage,
        "sc": [int(v) for v in result.sc],
        "scf": [list(pair) for pair in result.scf],
        "scft": [list(tr) for tr in result.scft],
        "steps": [
            {
                "name": rec.name,
                "n_tests": rec.n_tests,
                "test_ids": [list(np.atleast_1d(tid)) if isinstance(tid, tuple) else int(tid)
                             for tid in rec.test_ids],
                "p_values": [float(v) for v in rec.p_values],
                "acc_mean": [float(v) for v in rec.acc_mean],
                "rejected": [bool(v) for v in rec.rejected],
            }
            for rec in result.steps
        ],
    }
    result_path = out / "result.json"
    _write_json(payload, result_path)
    outputs.append(result_path)
    if args.flat_csv:
        flat_path = out / "tests.csv"
        with open(flat_path, "w", newline="") as fh:
            fh.write("step,channel,freq,time,p_value,acc_mean,rejected\n")
            for rec in result.steps:
                for tid, p, acc, rej in zip(rec.test_ids, rec.p_values, rec.acc_mean, rec.rejected):
                    parts = tid if isinstance(tid, tuple) else (tid,)
                    cells = list(parts) + [""] * (3 - len(parts))
                    fh.write(
                        f"{rec.name},{cells[0]},{cells[1]},{cells[2]},"
                        f"{float(p)!r},{float(acc)!r},{int(rej)}\n"
                    )
        _announce(flat_path)
        outputs.append(flat_path)
    if layout is not None:
        fig_path, csv_path = emit_topomap(
            result, layout, out / "topomap.svg", tensor.freq_axis, tensor.time_axis
        )
        _announce(fig_path)
        _announce(csv_path)
        outputs.extend([fig_path, csv_path])
    else:
        print("no sensor layout in dataset metadata; skipping topographic map")
    _write_manifest(
        args, "run", asdict(cfg), payload["dataset"]["sha256"],
        {"load": load_s, "pipeline": run_s}, outputs,
    )
    return 0


def cmd_cluster(args) -> int:
    out = _out_dir(args)
    tensor = _load_tfr(args.dataset)
    layout = _maybe_layout(args.dataset, args.grid_layout, tensor.n_channels)
    if layout is None:
        raise ValueError(
            "cluster test needs a sensor layout (dataset metadata or --grid-layout)"
        )
    cfg = ClusterTestConfig(
        sample_alpha=args.sample_alpha,
        test_alpha=args.test_alpha,
        min_neighbors=args.min_neighbors,
        n_perm=args.n_perm,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    p_field, clusters = cluster_permutation_test(
        tensor, tensor.labels, layout, cfg, radius=args.radius, threads=args.threads
    )
    test_s = time.perf_counter() - t0
    outputs = []
    payload = {
        "config": asdict(cfg),
        "radius": args.radius,
        "n_clusters": len(clusters),
        "clusters": [
            {
                "sign": cl.sign,
                "mass": cl.mass,
                "p": cl.p,
                "significant": bool(cl.p is not None and cl.p <= cfg.test_alpha),
                "size": cl.size,
                "members": sorted(list(tr) for tr in cl.members),
            }
            for cl in clusters
        ],
    }
    clusters_path = out / "clusters.json"
    _write_json(payload, clusters_path)
    outputs.append(clusters_path)
    p_path = out / "pvalues.csv"
    with open(p_path, "w", newline="") as fh:
        fh.write("channel,freq,time,p_value\n")
        nc, m, n = p_field.shape
        for c in range(nc):
            for i in range(m):
                for j in range(n):
                    fh.write(f"{c},{i},{j},{float(p_field[c, i, j])!r}\n")
    _announce(p_path)
    outputs.append(p_path)
    _write_manifest(
        args, "cluster", asdict(cfg), _dataset_hash(Path(args.dataset)),
        {"test": test_s}, outputs,
    )
    return 0


def read_pvalues_csv(path) -> np.ndarray:
    """All numeric cells of a CSV in row-major order (header row optional)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path} is empty")
    values: list[float] = []
    for ri, row in enumerate(rows):
        try:
            parsed = [float(c) for c in row if c.strip() != ""]
        except ValueError:
            if ri == 0:
                continue  # header row
            raise ValueError(f"non-numeric value on line {ri + 1} of {path}")
        values.extend(parsed)
    if not values:
        raise ValueError(f"no numeric p-values found in {path}")
    return np.asarray(values)


def cmd_correct(args) -> int:
    out = _out_dir(args)
    p = read_pvalues_csv(args.pvalues)
    result = CORRECTION_METHODS[args.method](p, args.alpha)
    path = out / "rejections.csv"
    with open(path, "w", newline="") as fh:
        fh.write("p,rejected\n")
        for value, rej in zip(p, result.rejected):
            fh.write(f"{float(value)!r},{int(rej)}\n")
    _announce(path)
    _write_manifest(
        args, "correct", {"method": args.method, "alpha": args.alpha},
        _dataset_hash(Path(args.pvalues)), {}, [path],
    )
    return 0


def cmd_tfr(args) -> int:
    out = _out_dir(args)
    obj = load_dataset(args.dataset)
    if isinstance(obj, TFRTensor):
        raise ValueError(f"{args.dataset} already holds a time-frequency dataset")
    freqs = np.linspace(args.fmin, args.fmax, args.n_freqs)
    times = np.arange(args.tmin, args.tmax + args.t_step / 2, args.t_step)
    cfg = MorletConfig(
        freq_axis=freqs, time_axis=times, width_lo=args.width_lo, width_hi=args.width_hi
    )
    t0 = time.perf_counter()
    tensor = morlet_power(obj, cfg)
    tfr_s = time.perf_counter() - t0
    target = out / "tfr_dataset"
    save_dataset(tensor, target)
    _announce(target / "meta.json")
    _announce(target / "data.bin")
    _write_manifest(
        args, "tfr",
        {
            "fmin": args.fmin, "fmax": args.fmax, "n_freqs": args.n_freqs,
            "tmin": args.tmin, "tmax": args.tmax, "t_step": args.t_step,
            "width_lo": args.width_lo, "width_hi": args.width_hi,
        },
        _dataset_hash(Path(args.dataset)), {"tfr": tfr_s},
        [target / "meta.json", target / "data.bin"],
    )
    return 0


def _effect_from_args(args, dims) -> EffectSpec | None:
    if args.effect == "null":
        return None
    if args.effect == "broad":
        return default_broad_effect(dims, args.amplitude)
    return default_narrow_effect(dims, args.amplitude)


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    dims = tuple(args.dims)
    effect = _effect_from_args(args, dims)
    tensor = gen_dataset(
        dims,
        args.trials_per_cond,
        effect=effect,
        noise_sigma=args.noise_sigma,
        trial_corr=args.smooth,
        channel_corr=args.channel_corr,
        seed=args.seed,
    )
    target = out / "dataset"
    save_dataset(tensor, target, layout=grid_layout(dims[0]))
    _announce(target / "meta.json")
    _announce(target / "data.bin")
    truth = {
        "effect": None
        if effect is None
        else {
            "shape": effect.shape,
            "amplitude": effect.amplitude,
            "triples": [list(tr) for tr in effect.triples],
        }
    }
    truth_path = out / "effect.json"
    _write_json(truth, truth_path)
    _write_manifest(
        args, "simulate",
        {
            "dims": list(dims), "trials_per_cond": args.trials_per_cond,
            "effect": args.effect, "amplitude": args.amplitude,
            "noise_sigma": args.noise_sigma, "smooth": args.smooth,
            "channel_corr": args.channel_corr,
        },
        _dataset_hash(target), {},
        [target / "meta.json", target / "data.bin", truth_path],
    )
    return 0


def _builtin_scenarios(args) -> list:
    dims = tuple(args.dims)
    out = []
    for name in args.scenarios:
        if name == "null":
            effect = None
        elif name == "broad":
            effect = default_broad_effect(dims, args.amplitude_broad)
        else:
            effect = default_narrow_effect(dims, args.amplitude_narrow)
        out.append(
            scenario_from_dict(
                {
                    "name": name,
                    "dims": list(dims),
                    "n_trials_per_cond": args.trials_per_cond,
                    "noise_sigma": args.noise_sigma,
                    "trial_corr": args.smooth,
                    "channel_corr": args.channel_corr,
                },
                effect_override=effect,
            )
        )
    return out


def cmd_compare(args) -> int:
    out = _out_dir(args)
    if args.scenario_json:
        with open(args.scenario_json) as fh:
            raw = json.load(fh)
        if not isinstance(raw, list):
            raise ValueError("scenario JSON must be a list of scenario objects")
        scenarios = [scenario_from_dict(d) for d in raw]
    else:
        scenarios = _builtin_scenarios(args)
    t0 = time.perf_counter()
    rows = compare_procedures(
        scenarios,
        args.procedures,
        n_sims=args.n_sims,
        seed=args.seed,
        alpha=args.alpha,
        perm_n=args.perm_n,
        ktms_u=args.ktms_u,
        threads=args.threads,
    )
    compare_s = time.perf_counter() - t0
    csv_path = out / "metrics.csv"
    write_metrics_csv(rows, csv_path)
    _announce(csv_path)
    summary_path = out / "summary.json"
    _write_json({"rows": rows}, summary_path)
    _write_manifest(
        args, "compare",
        {
            "procedures": list(args.procedures), "n_sims": args.n_sims,
            "alpha": args.alpha, "perm_n": args.perm_n, "ktms_u": args.ktms_u,
        },
        None, {"compare": compare_s}, [csv_path, summary_path],
    )
    return 0


def build_parser() -> _Parser:
    common = _common_parser()
    parser = _Parser(prog="masstest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"masstest {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_run = sub.add_parser("run", parents=[common], help="hierarchical CV pipeline")
    p_run.add_argument("dataset", help="TFR dataset directory or toy CSV")
    p_run.add_argument("--alpha", type=float, default=0.05)
    p_run.add_argument("--k", type=int, default=15, help="CV folds (default 15)")
    p_run.add_argument("--u", type=int, default=5, help="retained DCT rows (default 5)")
    p_run.add_argument("--v", type=int, default=5, help="retained DCT cols (default 5)")
    p_run.add_argument("--metric", choices=["accuracy", "f1"], default="accuracy")
    p_run.add_argument("--mu", type=float, default=0.5, help="chance level (default 0.5)")
    p_run.add_argument("--ridge", type=float, default=1.0, help="L2 penalty (default 1.0)")
    p_run.add_argument("--flat-csv", action="store_true", help="also write tests.csv")
    p_run.add_argument("--grid-layout", action="store_true",
                       help="use a synthetic grid layout instead of dataset metadata")
    p_run.set_defaults(func=cmd_run)

    p_cl = sub.add_parser("cluster", parents=[common], help="cluster permutation test")
    p_cl.add_argument("dataset")
    p_cl.add_argument("--sample-alpha", type=float, default=0.05)
    p_cl.add_argument("--test-alpha", type=float, default=0.025)
    p_cl.add_argument("--min-neighbors", type=int, default=2)
    p_cl.add_argument("--n-perm", type=int, default=500)
    p_cl.add_argument("--radius", type=float, default=None,
                      help="adjacency radius (default: 1.3 x median NN distance)")
    p_cl.add_argument("--grid-layout", action="store_true")
    p_cl.set_defaults(func=cmd_cluster)

    p_co = sub.add_parser("correct", parents=[common], help="p-value correction")
    p_co.add_argument("pvalues", help="CSV of p-values")
    p_co.add_argument("--method", choices=sorted(CORRECTION_METHODS), required=True)
    p_co.add_argument("--alpha", type=float, default=0.05)
    p_co.set_defaults(func=cmd_correct)

    p_tfr = sub.add_parser("tfr", parents=[common], help="Morlet time-frequency transform")
    p_tfr.add_argument("dataset", help="raw dataset directory")
    p_tfr.add_argument("--fmin", type=float, default=1.0)
    p_tfr.add_argument("--fmax", type=float, default=45.0)
    p_tfr.add_argument("--n-freqs", type=int, default=45)
    p_tfr.add_argument("--tmin", type=float, required=True, help="first analysis time (s)")
    p_tfr.add_argument("--tmax", type=float, required=True, help="last analysis time (s)")
    p_tfr.add_argument("--t-step", type=float, default=0.05, help="time step (s, default 0.05)")
    p_tfr.add_argument("--width-lo", type=float, default=4.0)
    p_tfr.add_argument("--width-hi", type=float, default=8.0)
    p_tfr.set_defaults(func=cmd_tfr)

    p_sim = sub.add_parser("simulate", parents=[common], help="generate a synthetic dataset")
    p_sim.add_argument("--dims", type=int, nargs=3, default=[10, 12, 20],
                       metavar=("CHANNELS", "FREQS", "TIMES"))
    p_sim.add_argument("--trials-per-cond", type=int, default=75)
    p_sim.add_argument("--effect", choices=["null", "broad", "narrow"], default="null")
    p_sim.add_argument("--amplitude", type=float, default=1.0)
    p_sim.add_argument("--noise-sigma", type=float, default=1.0)
    p_sim.add_argument("--smooth", type=float, default=2.0,
                       help="freq/time smoothing width in grid cells (default 2)")
    p_sim.add_argument("--channel-corr", type=float, default=0.3)
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", parents=[common], help="compare procedures by simulation")
    p_cmp.add_argument("--scenario-json", default=None,
                       help="JSON list of scenario specs (overrides builtin flags)")
    p_cmp.add_argument("--scenarios", nargs="+", choices=["null", "broad", "narrow"],
                       default=["null"])
    p_cmp.add_argument("--procedures", nargs="+",
                       choices=["pipeline", "cluster", "bh", "tmax", "ktms"],
                       default=["pipeline", "bh"])
    p_cmp.add_argument("--n-sims", type=int, default=20)
    p_cmp.add_argument("--dims", type=int, nargs=3, default=[10, 12, 20])
    p_cmp.add_argument("--trials-per-cond", type=int, default=75)
    p_cmp.add_argument("--amplitude-broad", type=float, default=1.0)
    p_cmp.add_argument("--amplitude-narrow", type=float, default=6.0)
    p_cmp.add_argument("--noise-sigma", type=float, default=1.0)
    p_cmp.add_argument("--smooth", type=float, default=2.0)
    p_cmp.add_argument("--channel-corr", type=float, default=0.3)
    p_cmp.add_argument("--alpha", type=float, default=0.05)
    p_cmp.add_argument("--perm-n", type=int, default=500)
    p_cmp.add_argument("--ktms-u", type=int, default=1)
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    args._argv = argv
    try:
        return args.func(args)
    except (ValueError, IndexError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
