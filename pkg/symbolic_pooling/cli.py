#!/usr/bin/env python3
"""
Symbolic Temporal Pooling command-line tool

Pools tracklet feature files into distribution-valued representations,
computes Wasserstein distance matrices, ranks galleries and evaluates CMC/mAP.

Usage:
    python -m symbolic_pooling.cli synth --scheme variance-sep --out data/synth
    python -m symbolic_pooling.cli pool --manifest data/synth/manifest.csv --out data/reps
    python -m symbolic_pooling.cli eval --query data/reps/query --gallery data/reps/gallery
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import (
    DEFAULT_CMC_RANKS,
    DEFAULT_MARGIN,
    DEFAULT_T_SAMPLES,
    EvalProtocol,
    PoolingConfig,
    default_log_level,
    default_threads,
)
from .core_types import FrameFeatureMatrix, Tracklet
from .errors import SymbolicPoolingError
from .experiment import compare_pipelines, score_shift, summary_table
from .feature_io import (
    load_entry_tracklet,
    load_manifest,
    load_representation_dir,
    save_distance_matrix,
    save_report,
    save_representation_dir,
)
from .loss import batch_hard_mine, mean_loss
from .metric import distance_matrix
from .retrieval import EvalReport, evaluate
from .symbolic import pool_tracklet
from .synthesis import generate_dataset

logger = logging.getLogger("symbolic_pooling")

RULE = "=" * 50


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got '{value}'")
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def non_negative_float(value: str) -> float:
    number = float(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {number}")
    return number


def bin_policy(value: str) -> str:
    value = value.strip().lower()
    if value != "sqrt":
        positive_int(value)
    return value


def rank_list(value: str) -> List[int]:
    ranks = [positive_int(token.strip()) for token in value.split(",") if token.strip()]
    if not ranks:
        raise argparse.ArgumentTypeError("expected a comma-separated list of ranks")
    return ranks


def print_block(title: str, lines: Sequence[str]) -> None:
    print("\n" + RULE)
    print(title)
    print(RULE)
    for line in lines:
        print(line)
    print(RULE)


def protocol_from_args(args: argparse.Namespace) -> EvalProtocol:
    compute_map = args.protocol == "multi-shot"
    if getattr(args, "map", None) is not None:
        compute_map = args.map
    return EvalProtocol(
        compute_map=compute_map,
        exclude_same_camera=args.exclude_same_camera,
        cmc_ranks=tuple(args.cmc_ranks),
        mode=args.mode,
        workers=args.threads,
    )


def report_lines(report: EvalReport) -> List[str]:
    lines = [f"Rank-{k:<4} {rate:8.2%}" for k, rate in report.cmc]
    if report.map is not None:
        lines.append(f"mAP       {report.map:8.2%}")
    lines.append(f"Queries evaluated: {len(report.per_query)}")
    if report.skipped_queries:
        lines.append(f"Queries without relevant gallery items: {report.skipped_queries}")
    return lines


def rank_frame(report: EvalReport, top: int) -> pd.DataFrame:
    rows = []
    for q, result in enumerate(report.per_query):
        for position, item in enumerate(result.ranked_gallery[:top], start=1):
            rows.append(
                {
                    "query": q,
                    "query_id": result.query_id,
                    "rank": position,
                    "gallery": item.index,
                    "gallery_id": item.identity,
                    "distance": item.distance,
                    "match": item.identity == result.query_id,
                }
            )
    return pd.DataFrame(rows)


# Subcommands

def cmd_pool(args: argparse.Namespace) -> int:
    cfg = PoolingConfig.from_policy(args.bins, args.t_samples)
    manifest = load_manifest(args.manifest)
    out = Path(args.out)

    by_split = {}
    for entry in manifest.entries:
        if args.split and entry.split != args.split:
            continue
        rep = pool_tracklet(load_entry_tracklet(manifest, entry), cfg)
        by_split.setdefault(entry.split, []).append(rep)

    written = sum(len(save_representation_dir(out / split, reps)) for split, reps in by_split.items())

    print_block(
        "POOLING SUMMARY",
        [
            f"Entries pooled: {written}",
            f"Features (M): {manifest.feature_dim}",
            f"Bin policy: {cfg.describe()}",
            f"Quantile samples (T): {cfg.t_samples}",
            f"Output: {out}",
        ],
    )
    return 0


def cmd_dist(args: argparse.Namespace) -> int:
    queries = load_representation_dir(args.query)
    gallery = load_representation_dir(args.gallery)
    matrix = distance_matrix(queries, gallery, args.mode, args.threads)
    save_distance_matrix(args.out, matrix)
    print_block(
        "DISTANCE SUMMARY",
        [f"Matrix: {matrix.rows} x {matrix.cols} ({args.mode})", f"Workers: {args.threads}", f"Output: {args.out}"],
    )
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    report = evaluate(load_representation_dir(args.query), load_representation_dir(args.gallery), protocol_from_args(args))
    frame = rank_frame(report, args.top)
    if args.out:
        frame.to_csv(args.out, index=False)
        logger.info(f"Wrote rank lists to {args.out}")
    else:
        print(frame.to_string(index=False))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    report = evaluate(load_representation_dir(args.query), load_representation_dir(args.gallery), protocol_from_args(args))
    print_block("EVALUATION REPORT", report_lines(report))
    if args.ranklist:
        print(rank_frame(report, args.top).to_string(index=False))
    if args.out:
        save_report(args.out, report)
        logger.info(f"Wrote report to {args.out}")
    return 0


def cmd_loss(args: argparse.Namespace) -> int:
    reps = load_representation_dir(args.reps)
    labels = [rep.identity for rep in reps]
    if args.labels:
        table = pd.read_csv(args.labels, dtype=str, keep_default_na=False)
        lookup = dict(zip(table["tracklet_id"], table["identity"]))
        labels = [lookup.get(rep.name or "", label) for rep, label in zip(reps, labels)]

    triplets = batch_hard_mine(reps, labels, args.margin, args.mode, args.threads)
    frame = pd.DataFrame(
        [
            {
                "anchor": reps[t.anchor].name,
                "positive": reps[t.positive].name,
                "negative": reps[t.negative].name,
                "d_ap": t.d_ap,
                "d_an": t.d_an,
                "loss": t.loss,
            }
            for t in triplets
        ]
    )
    print(frame.to_string(index=False))
    print_block("LOSS SUMMARY", [f"Anchors: {len(triplets)}", f"Margin: {args.margin}", f"Mean loss: {mean_loss(triplets):.6f}"])
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    manifest = generate_dataset(
        args.out,
        classes=args.classes,
        tracklets_per_class=args.tracklets_per_class,
        frames=args.frames,
        features=args.features,
        scheme=args.scheme,
        noise=args.noise,
        seed=args.seed,
        file_format=args.format,
    )
    print_block(
        "SYNTHESIS SUMMARY",
        [
            f"Scheme: {args.scheme}",
            f"Tracklets: {len(manifest.entries)} ({args.classes} classes x {args.tracklets_per_class})",
            f"Query/gallery: {len(manifest.split('query'))}/{len(manifest.split('gallery'))}",
            f"Manifest: {Path(args.out) / 'manifest.csv'}",
        ],
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    cfg = PoolingConfig(bins="sqrt", t_samples=args.t)

    def random_reps(count: int):
        return [
            pool_tracklet(
                Tracklet(id=str(i), features=FrameFeatureMatrix.from_array(rng.standard_normal((args.frames, args.m)))),
                cfg,
            )
            for i in range(count)
        ]

    queries, gallery = random_reps(args.q), random_reps(args.g)
    # quantile samples are cached outside the timed section
    for rep in queries + gallery:
        rep.sampled

    start = time.perf_counter()
    serial = distance_matrix(queries, gallery, "sampled", 1)
    serial_time = time.perf_counter() - start

    start = time.perf_counter()
    parallel = distance_matrix(queries, gallery, "sampled", args.threads)
    parallel_time = time.perf_counter() - start

    identical = np.array_equal(serial.data, parallel.data)
    pairs = args.q * args.g
    print_block(
        "BENCHMARK",
        [
            f"Pairs: {pairs} (M={args.m}, T={args.t})",
            f"1 worker:  {serial_time:.3f} s ({pairs / serial_time:,.0f} pairs/s)",
            f"{args.threads} workers: {parallel_time:.3f} s ({pairs / parallel_time:,.0f} pairs/s)",
            f"Speedup: {serial_time / parallel_time:.2f}x",
            f"Parallel output identical: {identical}",
        ],
    )
    if not identical:
        logger.error("Parallel distance matrix differs from the serial one")
        return 1
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = PoolingConfig.from_policy(args.bins, args.t_samples)
    runs = compare_pipelines(load_manifest(args.manifest), cfg, protocol_from_args(args), [(args.baseline, args.metric)])
    print(summary_table(list(runs.values())).to_string(float_format=lambda v: f"{v:.4f}"))

    baseline = runs[f"{args.baseline}+{args.metric}"]
    if args.shifts:
        print("\nLargest score shifts (symbolic vs baseline):")
        print(score_shift(runs["symbolic"], baseline, args.shifts).to_string(index=False))
    if args.plot:
        from .plots import cmc_figure

        cmc_figure({name: run.report for name, run in runs.items()}).write_html(args.plot)
        logger.info(f"Wrote CMC plot to {args.plot}")
    return 0


# Parser

def add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=["exact", "sampled"], default="sampled", help="Distance mode")
    parser.add_argument("--threads", type=positive_int, default=default_threads(), help="Distance kernel workers")
    parser.add_argument(
        "--protocol",
        choices=["multi-shot", "single-shot"],
        default="multi-shot",
        help="multi-shot reports CMC and mAP, single-shot CMC only",
    )
    parser.add_argument("--map", action=argparse.BooleanOptionalAction, default=None, help="Override the protocol's mAP switch")
    parser.add_argument("--exclude-same-camera", action="store_true", help="Drop gallery items from the query's camera")
    parser.add_argument(
        "--cmc-ranks", type=rank_list, default=list(DEFAULT_CMC_RANKS), help="Comma-separated CMC ranks"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Symbolic temporal pooling for tracklet retrieval")
    parser.add_argument("--log-level", default=default_log_level(), help="Logging level (default from SYMPOOL_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    pool = sub.add_parser("pool", help="Pool manifest tracklets into representation files")
    pool.add_argument("--manifest", required=True)
    pool.add_argument("--bins", type=bin_policy, default="sqrt", help="'sqrt' or a fixed bin count")
    pool.add_argument("--t-samples", type=positive_int, default=DEFAULT_T_SAMPLES)
    pool.add_argument("--split", choices=["query", "gallery", "train"], help="Only pool one split")
    pool.add_argument("--out", required=True, help="Output directory (one subdirectory per split)")
    pool.set_defaults(func=cmd_pool)

    dist = sub.add_parser("dist", help="Distance matrix between two representation directories")
    dist.add_argument("--query", required=True)
    dist.add_argument("--gallery", required=True)
    dist.add_argument("--mode", choices=["exact", "sampled"], default="sampled")
    dist.add_argument("--threads", type=positive_int, default=default_threads())
    dist.add_argument("--out", required=True)
    dist.set_defaults(func=cmd_dist)

    rank = sub.add_parser("rank", help="Per-query ranked gallery lists")
    rank.add_argument("--query", required=True)
    rank.add_argument("--gallery", required=True)
    rank.add_argument("--top", type=positive_int, default=10)
    rank.add_argument("--out", help="CSV output (default: print)")
    add_eval_flags(rank)
    rank.set_defaults(func=cmd_rank)

    ev = sub.add_parser("eval", help="CMC/mAP evaluation")
    ev.add_argument("--query", required=True)
    ev.add_argument("--gallery", required=True)
    ev.add_argument("--out", help="JSON report output")
    ev.add_argument("--ranklist", action="store_true", help="Also print per-query rank lists")
    ev.add_argument("--top", type=positive_int, default=10)
    add_eval_flags(ev)
    ev.set_defaults(func=cmd_eval)

    loss = sub.add_parser("loss", help="Batch-hard symbolic triplet loss")
    loss.add_argument("--reps", required=True)
    loss.add_argument("--labels", help="CSV with tracklet_id,identity (default: labels stored in the files)")
    loss.add_argument("--margin", type=non_negative_float, default=DEFAULT_MARGIN)
    loss.add_argument("--mine", choices=["batch-hard"], default="batch-hard")
    loss.add_argument("--mode", choices=["exact", "sampled"], default="sampled")
    loss.add_argument("--threads", type=positive_int, default=default_threads())
    loss.set_defaults(func=cmd_loss)

    synth = sub.add_parser("synth", help="Write a seeded synthetic dataset")
    synth.add_argument("--classes", type=positive_int, default=5)
    synth.add_argument("--tracklets-per-class", type=positive_int, default=4)
    synth.add_argument("--frames", type=positive_int, default=64)
    synth.add_argument("--features", type=positive_int, default=16)
    synth.add_argument("--scheme", choices=["mean-sep", "variance-sep"], default="variance-sep")
    synth.add_argument("--noise", type=non_negative_float, default=0.05)
    synth.add_argument("--seed", type=int, default=73)
    synth.add_argument("--format", choices=["bin", "csv"], default="bin")
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    bench = sub.add_parser("bench", help="Time the sampled distance kernel")
    bench.add_argument("--q", type=positive_int, default=1000)
    bench.add_argument("--g", type=positive_int, default=1000)
    bench.add_argument("--m", type=positive_int, default=128)
    bench.add_argument("--t", type=positive_int, default=DEFAULT_T_SAMPLES)
    bench.add_argument("--frames", type=positive_int, default=32)
    bench.add_argument("--threads", type=positive_int, default=max(4, default_threads()))
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(func=cmd_bench)

    compare = sub.add_parser("compare", help="Symbolic pipeline against a crisp pooling baseline")
    compare.add_argument("--manifest", required=True)
    compare.add_argument("--bins", type=bin_policy, default="sqrt")
    compare.add_argument("--t-samples", type=positive_int, default=DEFAULT_T_SAMPLES)
    compare.add_argument("--baseline", choices=["avg", "max"], default="avg")
    compare.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    compare.add_argument("--shifts", type=int, default=0, help="Print the N largest score-CDF shifts")
    compare.add_argument("--plot", help="Write CMC curves to this HTML file")
    add_eval_flags(compare)
    compare.set_defaults(func=cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function for command-line execution"""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        # importing the Dagster asset module already configured the root logger
        force=True,
    )

    try:
        return args.func(args)
    except SymbolicPoolingError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return 1
    except (OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
