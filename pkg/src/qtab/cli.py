"""Command-line interface binding the toolkit into reproducible experiments.

Subcommands: compress, tune, report, gen-corpus, evaluate. Every command
prints its effective configuration (all defaults materialized) as a JSON
header line so a run can be reproduced from its output alone. Plot
rendering is out of scope; reports emit CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import Dataset, SyntheticCorpusSpec, generate_synthetic, load_manifest
from .evaluation import DatasetEvaluator, EvalPoint, EvaluatorSpec
from .jpeg import encode
from .qtable import Bounds, QTable, compute_bounds, default_bands, scale_by_quality, standard_table
from .search import (
    BayesOptConfig,
    BoundedRandomConfig,
    CompositeConfig,
    ParetoFrontier,
    SortedRandomConfig,
    fit_fitness,
    read_trial_log,
    run_bayesopt,
    run_bounded_random,
    run_composite,
    run_sorted_random,
    write_timings,
    write_trial_log,
)
from .stats import (
    DegenerateSamplesError,
    ResamplePlan,
    profile_strategy,
    resample_accuracies,
    two_sample_t,
)
from .search.base import StrategyRun

_STRATEGIES = ("sorted-random", "uniform-random", "bounded-random", "bayesopt", "composite")


def _print_config(command: str, args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(json.dumps({"command": command, "version": __version__, "config": cfg},
                     sort_keys=True, default=str))


def _cache_dir(args) -> str | None:
    return args.cache_dir or os.environ.get("QTAB_CACHE_DIR") or None


def _evaluator_spec(args) -> EvaluatorSpec:
    kind = args.evaluator
    config = json.loads(args.evaluator_config) if args.evaluator_config else {}
    if kind == "proxy":
        return EvaluatorSpec("proxy_classifier", config)
    if kind == "oracle":
        return EvaluatorSpec("oracle", config)
    if kind.startswith("psnr:"):
        return EvaluatorSpec("psnr_threshold", {"threshold_db": float(kind[5:]), **config})
    if kind == "external":
        return EvaluatorSpec("external_classifier", config)
    raise SystemExit(f"unknown evaluator {kind!r}")


def _make_evaluator(args, dataset: Dataset) -> DatasetEvaluator:
    return DatasetEvaluator(
        dataset,
        _evaluator_spec(args),
        chroma_policy=args.chroma_policy,
        subsampling=args.subsampling,
        with_psnr=getattr(args, "psnr", False),
        cache_dir=_cache_dir(args),
    )


def _load_qtable(args) -> QTable:
    if args.qtable is not None:
        return QTable.load(args.qtable)
    return scale_by_quality(standard_table("luma"), args.quality)


def _frontier_from_log(path) -> ParetoFrontier:
    _, points, _ = read_trial_log(path)
    return ParetoFrontier(points)


def _write_frontier_csv(frontier: ParetoFrontier, out_dir: Path, name: str = "frontier") -> Path:
    csv_path = out_dir / f"{name}.csv"
    with open(csv_path, "w") as fh:
        fh.write("rate,accuracy,qtable_file\n")
        for i, p in enumerate(frontier.points):
            qfile = f"qtable_{i:03d}.txt"
            p.qtable.save(out_dir / qfile)
            fh.write(f"{p.compression_rate!r},{p.accuracy!r},{qfile}\n")
    return csv_path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen_corpus(args) -> int:
    _print_config("gen-corpus", args)
    spec = SyntheticCorpusSpec(
        n_classes=args.classes,
        images_per_class=args.images_per_class,
        width=args.size,
        height=args.size,
        seed=args.seed,
    )
    manifest = generate_synthetic(spec, args.out)
    print(f"wrote {spec.n_classes * spec.images_per_class} images; manifest: {manifest}")
    return 0


def cmd_compress(args) -> int:
    _print_config("compress", args)
    dataset = load_manifest(args.manifest)
    qtable = _load_qtable(args)
    luma_q = qtable
    chroma_q = qtable if args.chroma_policy == "tuned" else standard_table("chroma")
    if args.quality is not None and args.qtable is None:
        chroma_q = scale_by_quality(standard_table("chroma"), args.quality)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    for i, image in enumerate(dataset.images):
        stream = encode(image, luma_q, chroma_q, subsampling=args.subsampling)
        (out_dir / f"{i:06d}.jpg").write_bytes(stream.data)
        total += stream.size_bytes
    rate = dataset.raw_bytes / total
    print(f"images: {len(dataset)}  raw_bytes: {dataset.raw_bytes}  "
          f"compressed_bytes: {total}  compression_rate: {rate!r}")
    return 0


def cmd_tune(args) -> int:
    _print_config("tune", args)
    dataset = load_manifest(args.manifest)
    evaluator = _make_evaluator(args, dataset)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    bounds = None
    if args.strategy in ("bounded-random", "bayesopt", "composite"):
        if args.strategy == "bounded-random" and args.bounds_from is None:
            bounds = Bounds.full_box()
        else:
            if args.bounds_from is None:
                raise SystemExit(f"--bounds-from is required for {args.strategy}")
            frontier = _frontier_from_log(args.bounds_from)
            bounds = compute_bounds(frontier.points, args.cr_window)
    fitness = None
    if args.fitness_from is not None:
        fitness = fit_fitness(_frontier_from_log(args.fitness_from))

    if args.strategy == "sorted-random":
        run = run_sorted_random(
            SortedRandomConfig(n_trials=args.trials, seed=args.seed,
                               descending=args.descending),
            evaluator.evaluate,
        )
    elif args.strategy == "uniform-random":
        run = run_bounded_random(
            Bounds.full_box(),
            BoundedRandomConfig(n_trials=args.trials, seed=args.seed),
            evaluator.evaluate,
        )
        run.strategy = "uniform_random"
    elif args.strategy == "bounded-random":
        run = run_bounded_random(
            bounds,
            BoundedRandomConfig(n_trials=args.trials, seed=args.seed),
            evaluator.evaluate,
        )
    elif args.strategy == "bayesopt":
        if fitness is None:
            raise SystemExit("--fitness-from is required for bayesopt")
        run = run_bayesopt(
            bounds, default_bands(), fitness,
            BayesOptConfig(
                n_trials=args.trials, seed=args.seed,
                n_init_candidates=args.bo_candidates,
                n_rounds=args.bo_rounds,
                grid_levels=args.bo_grid_levels,
                use_local_grid=not args.bo_no_grid,
            ),
            evaluator.evaluate,
        )
    else:  # composite
        run = run_composite(
            bounds,
            CompositeConfig(n_trials=args.trials, seed=args.seed,
                            window=args.bandit_window),
            evaluator.evaluate,
            fitness=fitness,
        )

    run.dataset_hash = dataset.content_hash
    log_path = out_dir / "trials.jsonl"
    write_trial_log(log_path, run)
    write_timings(out_dir / "trials.times.jsonl", run)
    _write_frontier_csv(run.frontier, out_dir)
    best = max(run.records, key=lambda p: p.accuracy)
    print(f"trials: {len(run.records)}  frontier: {len(run.frontier)}  "
          f"best accuracy: {best.accuracy!r} at rate {best.compression_rate!r}")
    print(f"log: {log_path}")
    return 0


def cmd_evaluate(args) -> int:
    _print_config("evaluate", args)
    dataset = load_manifest(args.manifest)
    evaluator = _make_evaluator(args, dataset)
    tables: list[tuple[str, QTable]] = []
    if args.qtable is not None:
        tables.append((str(args.qtable), QTable.load(args.qtable)))
    if args.quality is not None:
        tables.append((f"quality-{args.quality}",
                       scale_by_quality(standard_table("luma"), args.quality)))
    if args.from_log is not None:
        frontier = _frontier_from_log(args.from_log)
        for i, p in enumerate(frontier.points):
            tables.append((f"{args.from_log}#frontier{i}", p.qtable))
    if not tables:
        raise SystemExit("nothing to evaluate: pass --qtable, --quality, or --from-log")
    for name, table in tables:
        point = evaluator.evaluate(table)
        print(json.dumps({"source": name, **point.to_json_dict()}, sort_keys=True))
    return 0


def _check_same_dataset(headers, dataset=None):
    hashes = {h.get("dataset_hash", "") for h in headers}
    if dataset is not None:
        hashes.add(dataset.content_hash)
    hashes.discard("")
    if len(hashes) > 1:
        raise SystemExit(
            "refusing to mix logs from different datasets "
            f"(hashes: {sorted(h[:12] for h in hashes)})"
        )


def cmd_report(args) -> int:
    _print_config("report", args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = [(Path(p), *read_trial_log(p)) for p in args.logs]

    if args.mode in ("pareto", "significance") and args.manifest is None:
        raise SystemExit(f"--manifest is required for {args.mode} reports")

    if args.mode == "pareto":
        dataset = load_manifest(args.manifest)
        _check_same_dataset([h for _, h, _, _ in logs], dataset)
        for path, header, points, _ in logs:
            frontier = ParetoFrontier(points)
            name = f"pareto_{path.stem}_{header['strategy']}"
            sub = out_dir / name
            sub.mkdir(exist_ok=True)
            _write_frontier_csv(frontier, sub)
            print(f"{name}: {len(frontier)} frontier points")
        evaluator = _make_evaluator(args, dataset)
        qualities = list(range(10, 101, 5))

        def sweep_point(q):
            lq = scale_by_quality(standard_table("luma"), q)
            ev = DatasetEvaluator(
                dataset, _evaluator_spec(args),
                chroma_policy="standard", subsampling=args.subsampling,
                cache_dir=_cache_dir(args),
            )
            p = ev.evaluate(lq)
            return q, p
        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                rows = list(pool.map(sweep_point, qualities))
        else:
            rows = [sweep_point(q) for q in qualities]
        sweep_csv = out_dir / "standard_sweep.csv"
        with open(sweep_csv, "w") as fh:
            fh.write("quality,rate,accuracy\n")
            for q, p in rows:
                fh.write(f"{q},{p.compression_rate!r},{p.accuracy!r}\n")
        print(f"standard sweep ({len(rows)} points): {sweep_csv}")
        return 0

    if args.mode == "significance":
        dataset = load_manifest(args.manifest)
        _check_same_dataset([h for _, h, _, _ in logs], dataset)
        evaluator = _make_evaluator(args, dataset)
        baseline_q = scale_by_quality(standard_table("luma"), 50)
        base_eval = DatasetEvaluator(
            dataset, _evaluator_spec(args), chroma_policy="standard",
            subsampling=args.subsampling, cache_dir=_cache_dir(args),
        )
        base_point = base_eval.evaluate(baseline_q)
        plan = ResamplePlan(
            n_resamples=args.resamples,
            classes_per_sample=args.classes_per_sample,
            images_per_class=args.images_per_class,
            seed=args.seed,
        )
        base_acc = resample_accuracies(base_eval, baseline_q, plan)
        csv_path = out_dir / "significance.csv"
        with open(csv_path, "w") as fh:
            fh.write("method,rate,baseline_rate,mean_diff,t,p,stars\n")
            for path, header, points, _ in logs:
                frontier = ParetoFrontier(points)
                # Closest compression rate that is larger than the baseline's,
                # so accuracy is allowed to be a little worse.
                candidates = [p for p in frontier.points
                              if p.compression_rate > base_point.compression_rate]
                if not candidates:
                    print(f"{header['strategy']}: no frontier point beyond the "
                          f"baseline rate {base_point.compression_rate:.2f}; skipped")
                    continue
                chosen = min(candidates, key=lambda p: p.compression_rate)
                acc = resample_accuracies(evaluator, chosen.qtable, plan)
                try:
                    res = two_sample_t(acc, base_acc)
                except DegenerateSamplesError:
                    print(f"{header['strategy']}: resampled accuracies have zero "
                          "variance; no t-test possible")
                    continue
                stars = "**" if res.p_value < 1e-11 else ("*" if res.p_value < 1e-5 else "")
                fh.write(
                    f"{header['strategy']},{chosen.compression_rate!r},"
                    f"{base_point.compression_rate!r},{res.mean_diff!r},"
                    f"{res.t_statistic!r},{res.p_value!r},{stars}\n"
                )
        print(f"significance table: {csv_path}")
        return 0

    if args.mode == "efficiency":
        if args.fitness_from is None:
            raise SystemExit("--fitness-from is required for efficiency reports")
        fitness = fit_fitness(_frontier_from_log(args.fitness_from))
        csv_path = out_dir / "efficiency.csv"
        with open(csv_path, "w") as fh:
            fh.write("method,mean_decision_time_s,trials_to_10_good\n")
            for path, header, points, _ in logs:
                run = StrategyRun(header["strategy"], header.get("seed", 0),
                                  header.get("config", {}), records=points)
                times_path = path.with_suffix(".times.jsonl")
                if times_path.exists():
                    with open(times_path) as tf:
                        run.decision_times = [
                            json.loads(line)["decision_time"] for line in tf if line.strip()
                        ]
                report = profile_strategy(run, fitness, k=args.k_good)
                reached = report.trials_to_k_good if report.trials_to_k_good else "not_reached"
                fh.write(f"{header['strategy']},{report.mean_decision_time!r},{reached}\n")
        print(f"efficiency table: {csv_path}")
        return 0

    # psnr mode
    csv_path = out_dir / "psnr.csv"
    with open(csv_path, "w") as fh:
        fh.write("rate,accuracy,psnr\n")
        n = 0
        for path, header, points, _ in logs:
            for p in points:
                if p.mean_psnr is not None:
                    fh.write(f"{p.compression_rate!r},{p.accuracy!r},{p.mean_psnr!r}\n")
                    n += 1
    if n == 0:
        raise SystemExit("no PSNR data in the given logs (tune with --psnr)")
    print(f"psnr triplets ({n}): {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, evaluator: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache-dir", default=None,
                   help="evaluation cache directory (or env QTAB_CACHE_DIR)")
    p.add_argument("--subsampling", choices=("4:2:0", "4:4:4"), default="4:2:0")
    p.add_argument("--chroma-policy", choices=("tuned", "standard"), default="tuned")
    if evaluator:
        p.add_argument("--evaluator", default="proxy",
                       help="proxy | oracle | psnr:<db> | external")
        p.add_argument("--evaluator-config", default=None,
                       help="JSON object with evaluator-specific settings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtab",
        description="JPEG quantization-table autotuning toolkit",
    )
    parser.add_argument("--version", action="version", version=f"qtab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate the synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--images-per-class", type=int, default=10)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("compress", help="compress a dataset with one table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--qtable", default=None, help="table file (text or JSON)")
    p.add_argument("--quality", type=int, default=None,
                   help="standard table scaled to this quality factor")
    p.add_argument("--out", required=True)
    _add_common(p, evaluator=False)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("tune", help="run a search strategy")
    p.add_argument("--strategy", choices=_STRATEGIES, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--descending", action="store_true",
                   help="sorted-random: large quantizers at low frequencies")
    p.add_argument("--bounds-from", default=None, help="trial log for compute_bounds")
    p.add_argument("--cr-window", type=float, nargs=2, default=(21.0, 23.0),
                   metavar=("LO", "HI"))
    p.add_argument("--fitness-from", default=None,
                   help="trial log whose frontier fits the parabola")
    p.add_argument("--bandit-window", type=int, default=50)
    p.add_argument("--bo-candidates", type=int, default=100_000)
    p.add_argument("--bo-rounds", type=int, default=20)
    p.add_argument("--bo-grid-levels", type=int, default=9)
    p.add_argument("--bo-no-grid", action="store_true")
    p.add_argument("--psnr", action="store_true", help="record mean PSNR per trial")
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="evaluate tables on a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--qtable", default=None)
    p.add_argument("--quality", type=int, default=None)
    p.add_argument("--from-log", default=None,
                   help="re-evaluate every frontier table of this log")
    p.add_argument("--psnr", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="emit CSV reports from trial logs")
    p.add_argument("--mode", choices=("pareto", "significance", "efficiency", "psnr"),
                   required=True)
    p.add_argument("--logs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--fitness-from", default=None)
    p.add_argument("--k-good", type=int, default=10)
    p.add_argument("--resamples", type=int, default=100)
    p.add_argument("--classes-per-sample", type=int, default=10)
    p.add_argument("--images-per-class", type=int, default=4)
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
