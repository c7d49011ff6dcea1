"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error (unreadable or
inconsistent inputs), 4 numeric degeneracy aborted the computation.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augeval import (
    AugGroup,
    AugScoreRow,
    evaluate_bundle,
    pearson_correlation,
    score_augmentation,
    score_augmentation_multilevel,
    select_anchor_augmentation,
)
from .bench import bench_latency
from .bundle import check_manifest_bundles, read_bundle, read_manifest, write_bundle
from .core import AgcConfig
from .errors import (
    AgcError,
    BadLabel,
    BundleFormatError,
    DegenerateVariance,
    DimMismatch,
    ManifestError,
)
from .report import EvalReport, dumps_stable, mode_stats, render_columns, render_table, timing_stats
from .sweeps import parse_grid, sweep_beta_grid, sweep_fixed_step, sweep_view_counts
from .synth import SynthConfig, build_world

_DATA_ERRORS = (BundleFormatError, ManifestError, DimMismatch, BadLabel, OSError)

_LATENCY_CONTEXT = (
    "reference end-to-end latency with encoder forward passes included, on an A100: "
    "0.0091 s per sample (context only, not measured here)"
)


def _add_output_flags(p: argparse.ArgumentParser, plot: bool = True) -> None:
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit the report as JSON")
    fmt.add_argument("--table", action="store_true", help="emit the report as an aligned table (default)")
    p.add_argument("--out", type=Path, help="write the report to this path instead of stdout")
    if plot:
        p.add_argument("--plot", type=Path, help="render the report figure to this file")


def _add_correction_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta-clean", type=float, default=0.45, help="conservative step size")
    p.add_argument("--beta-adv", type=float, default=2.25, help="aggressive step size")
    p.add_argument("--gamma", type=float, default=0.9, help="deviation exponent in the correction score")


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("AGC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _emit(args, report: dict, table_text: str) -> None:
    text = dumps_stable(report) + "\n" if args.json else table_text.rstrip("\n") + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"report written to {args.out}")
    else:
        sys.stdout.write(text)


def _diag_row(diag) -> dict:
    return {
        "dev": diag.dev,
        "rel_raw": diag.rel_raw,
        "rel_rescaled": diag.rel_rescaled,
        "s_corr": diag.s_corr,
        "beta": diag.beta,
        "theta_star": diag.theta_star,
        "rotation_applied": diag.rotation_applied,
        "fallback": diag.fallback,
    }


def _cmd_eval(args) -> int:
    cfg = AgcConfig(beta_clean=args.beta_clean, beta_adv=args.beta_adv, gamma_exp=args.gamma)
    threads = _resolve_threads(args)
    if args.plot and args.mode != "agc":
        print("error: --plot on eval needs --mode agc (diagnostics histograms)", file=sys.stderr)
        return 2
    clean = read_bundle(args.clean)
    bank = clean.text_bank()
    bundles = [("clean", args.clean, clean)]
    if args.adv:
        adv = read_bundle(args.adv)
        if adv.dim != clean.dim or adv.n_classes != clean.n_classes:
            raise DimMismatch(
                f"--adv bundle (d={adv.dim}, C={adv.n_classes}) does not match "
                f"--clean (d={clean.dim}, C={clean.n_classes})"
            )
        bundles.append(("adv", args.adv, adv))

    results: dict[str, dict] = {}
    timing: dict[str, dict] = {}
    per_sample: dict[str, list] = {}
    diag_by_condition = {}
    for key, _path, bundle in bundles:
        ev = evaluate_bundle(
            bundle,
            bank,
            cfg,
            args.mode,
            include_original=args.ensemble_include_original,
            threads=threads,
            collect_timing=args.timing,
        )
        results[key] = {args.mode: mode_stats(ev)}
        diag_by_condition[key] = ev.diagnostics
        if args.timing:
            timing[key] = timing_stats(ev.timings)
        if args.verbose:
            rows = []
            for i in range(ev.n_samples):
                row = {"label": int(bundle.labels[i]), "predicted": int(ev.predictions[i])}
                if ev.diagnostics:
                    row.update(_diag_row(ev.diagnostics[i]))
                rows.append(row)
            per_sample[key] = rows

    report = EvalReport(
        config={
            "mode": args.mode,
            "beta_clean": args.beta_clean,
            "beta_adv": args.beta_adv,
            "gamma": args.gamma,
            "ensemble_include_original": bool(args.ensemble_include_original),
        },
        provenance={
            "tool": "agc",
            "version": __version__,
            "bundles": {key: str(path) for key, path, _ in bundles},
            "conditions": {key: b.condition for key, _, b in bundles},
            "n_views": {key: b.n_views for key, _, b in bundles},
        },
        results=results,
        timing=timing or None,
        per_sample=per_sample or None,
    ).to_dict()

    if args.plot:
        from . import plots

        plots.save_diagnostic_histograms(diag_by_condition, args.plot)
    _emit(args, report, render_table(report))
    return 0


def _load_manifest_groups(manifest_path):
    entries = read_manifest(manifest_path)
    loaded = [(e, read_bundle(e.path)) for e in entries]
    check_manifest_bundles([b for _, b in loaded])
    return loaded


def _score_rows(loaded, cfg: AgcConfig, robust_mode: str | None, threads: int):
    """Score every manifest entry and aggregate per augmentation name."""
    bank = loaded[0][1].text_bank()
    by_name: dict[str, list] = {}
    for entry, bundle in loaded:
        group = AugGroup(
            name=entry.name,
            intensity=entry.intensity,
            views=[bundle.views_unit(i) for i in range(bundle.n_samples)],
        )
        score = score_augmentation(bundle.all_originals_unit(), bundle.labels, group, bank)
        robust = (
            evaluate_bundle(bundle, bank, cfg, robust_mode, threads=threads).accuracy
            if robust_mode
            else 0.0
        )
        by_name.setdefault(entry.name, []).append((entry.intensity, score, robust))
    rows = []
    for name in sorted(by_name):
        levels = by_name[name]
        rows.append(
            AugScoreRow(
                name=name,
                mean_score=score_augmentation_multilevel([s for _, s, _ in levels]),
                robust_accuracy=float(np.mean([r for _, _, r in levels])),
                n_samples=sum(s.n_samples_used for _, s, _ in levels),
            )
        )
    return rows, {name: len(levels) for name, levels in by_name.items()}


def _rows_payload(rows, levels):
    return [
        {
            "name": r.name,
            "mean_score": r.mean_score,
            "robust_accuracy": r.robust_accuracy,
            "n_samples": r.n_samples,
            "intensity_levels": levels[r.name],
        }
        for r in rows
    ]


def _cmd_score_augs(args) -> int:
    cfg = AgcConfig(beta_clean=args.beta_clean, beta_adv=args.beta_adv, gamma_exp=args.gamma)
    loaded = _load_manifest_groups(args.manifest)
    rows, levels = _score_rows(loaded, cfg, args.robust_mode, _resolve_threads(args))
    try:
        r_value = pearson_correlation(
            [r.mean_score for r in rows], [r.robust_accuracy for r in rows]
        )
    except (ValueError, DegenerateVariance):
        r_value = None
    report = {
        "manifest": str(args.manifest),
        "robust_mode": args.robust_mode,
        "rows": _rows_payload(rows, levels),
        "pearson_r": r_value,
    }
    table = render_columns(
        ["name", "levels", "mean_score", "robust_accuracy", "n_samples"],
        [[r.name, levels[r.name], r.mean_score, r.robust_accuracy, r.n_samples] for r in rows],
    )
    table += f"\npearson_r  {r_value:.6g}" if r_value is not None else "\npearson_r  n/a"
    if args.plot:
        from . import plots

        plots.save_score_scatter(rows, r_value, args.plot)
    _emit(args, report, table)
    return 0


def _cmd_select_anchor(args) -> int:
    loaded = _load_manifest_groups(args.manifest)
    rows, levels = _score_rows(loaded, AgcConfig(), robust_mode=None, threads=1)
    selected = select_anchor_augmentation(rows)
    report = {
        "manifest": str(args.manifest),
        "selected": selected,
        "rows": [
            {
                "name": r.name,
                "mean_score": r.mean_score,
                "n_samples": r.n_samples,
                "intensity_levels": levels[r.name],
            }
            for r in rows
        ],
    }
    table = render_columns(
        ["name", "levels", "mean_score", "n_samples"],
        [[r.name, levels[r.name], r.mean_score, r.n_samples] for r in rows],
    )
    table += f"\nselected  {selected}"
    _emit(args, report, table)
    return 0


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        d=args.d,
        n_classes=args.classes,
        n_samples=args.samples,
        n_views=args.views,
        sigma_clean=args.sigma_clean,
        sigma_view=args.sigma_view,
        delta=args.delta,
        view_mode=args.view_mode,
        mix_lambda=args.mix_lambda,
        seed=args.seed,
    )
    world = build_world(cfg)
    write_bundle(world.clean_bundle, args.out_clean)
    write_bundle(world.adv_bundle, args.out_adv)
    report = {
        "config": {
            "d": cfg.d,
            "classes": cfg.n_classes,
            "samples": cfg.n_samples,
            "views": cfg.n_views,
            "sigma_clean": cfg.sigma_clean,
            "sigma_view": cfg.sigma_view,
            "delta": cfg.delta,
            "view_mode": cfg.view_mode,
            "mix_lambda": cfg.mix_lambda,
            "seed": cfg.seed,
        },
        "out_clean": str(args.out_clean),
        "out_adv": str(args.out_adv),
    }
    _emit(args, report, render_table(report))
    return 0


def _read_pair(args):
    clean = read_bundle(args.clean)
    adv = read_bundle(args.adv)
    check_manifest_bundles([clean, adv])
    return clean, adv, clean.text_bank()


def _cmd_sweep_beta(args) -> int:
    clean, adv, bank = _read_pair(args)
    grid = parse_grid(args.grid)
    rows = sweep_beta_grid(clean, adv, bank, grid, args.gamma)
    best = max(rows, key=lambda r: r["combined"])
    report = {
        "grid": grid,
        "gamma": args.gamma,
        "cells": rows,
        "best": best,
        "n_cells": len(rows),
    }
    table = render_columns(
        ["beta_clean", "beta_adv", "clean_accuracy", "robust_accuracy", "combined"],
        [[r["beta_clean"], r["beta_adv"], r["clean_accuracy"], r["robust_accuracy"], r["combined"]] for r in rows],
    )
    table += (
        f"\nbest  beta_clean={best['beta_clean']:.6g} beta_adv={best['beta_adv']:.6g} "
        f"combined={best['combined']:.6g}"
    )
    if args.plot:
        from . import plots

        plots.save_beta_heatmap(grid, rows, args.plot)
    _emit(args, report, table)
    return 0


def _cmd_sweep_step(args) -> int:
    clean, adv, bank = _read_pair(args)
    betas = parse_grid(args.fixed_beta)
    result = sweep_fixed_step(clean, adv, bank, betas, AgcConfig(gamma_exp=args.gamma))
    table = render_columns(
        ["beta", "clean_accuracy", "robust_accuracy"],
        [[r["beta"], r["clean_accuracy"], r["robust_accuracy"]] for r in result["rows"]],
    )
    table += (
        f"\nargmax_clean_beta  {result['argmax_clean_beta']:.6g}"
        f"\nargmax_robust_beta  {result['argmax_robust_beta']:.6g}"
    )
    if args.plot:
        from . import plots

        plots.save_step_sweep(result["rows"], args.plot)
    _emit(args, result, table)
    return 0


def _cmd_sweep_views(args) -> int:
    clean, adv, bank = _read_pair(args)
    counts = [int(v) for v in parse_grid(args.n)]
    cfg = AgcConfig(beta_clean=args.beta_clean, beta_adv=args.beta_adv, gamma_exp=args.gamma)
    rows = sweep_view_counts(clean, adv, bank, counts, cfg, mode=args.mode)
    report = {"mode": args.mode, "rows": rows}
    table = render_columns(
        ["n_views", "clean_accuracy", "robust_accuracy"],
        [[r["n_views"], r["clean_accuracy"], r["robust_accuracy"]] for r in rows],
    )
    if args.plot:
        from . import plots

        plots.save_views_sweep(rows, args.plot)
    _emit(args, report, table)
    return 0


def _cmd_bench_latency(args) -> int:
    stats = bench_latency(
        d=args.d, n_views=args.views, iters=args.iters, n_classes=args.classes, seed=args.seed
    )
    report = dict(stats)
    report["context"] = _LATENCY_CONTEXT
    _emit(args, report, render_table(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agc",
        description="Geodesic feature correction for normalized embedding classifiers",
    )
    parser.add_argument("--version", action="version", version=f"agc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate bundles under one inference mode")
    p.add_argument("--clean", type=Path, required=True, help="clean-condition bundle")
    p.add_argument("--adv", type=Path, help="adversarial-condition bundle")
    p.add_argument("--mode", choices=("none", "ensemble", "agc"), default="agc")
    _add_correction_flags(p)
    p.add_argument("--ensemble-include-original", action="store_true",
                   help="include the original feature in the ensemble average")
    p.add_argument("--threads", type=int, help="worker threads (default: logical CPUs, or AGC_THREADS)")
    p.add_argument("--timing", action="store_true", help="include per-sample wall-clock stats")
    p.add_argument("--verbose", action="store_true", help="include per-sample diagnostics")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("score-augs", help="score augmentation groups and their robustness")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--robust-mode", choices=("none", "ensemble", "agc"), default="agc")
    _add_correction_flags(p)
    p.add_argument("--threads", type=int)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_score_augs)

    p = sub.add_parser("select-anchor", help="pick the augmentation with the best margin score")
    p.add_argument("--manifest", type=Path, required=True)
    _add_output_flags(p, plot=False)
    p.set_defaults(func=_cmd_select_anchor)

    p = sub.add_parser("synth", help="generate a synthetic clean/adversarial bundle pair")
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--classes", type=int, default=16)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--views", type=int, default=32)
    p.add_argument("--sigma-clean", type=float, default=0.05)
    p.add_argument("--sigma-view", type=float, default=0.10)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--view-mode", choices=("recovering", "adversarial_centered", "mixed"),
                   default="recovering")
    p.add_argument("--mix-lambda", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out-clean", type=Path, required=True)
    p.add_argument("--out-adv", type=Path, required=True)
    _add_output_flags(p, plot=False)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("sweep-beta", help="grid over (beta_clean, beta_adv), scoring (Acc+Rob)/2")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--adv", type=Path, required=True)
    p.add_argument("--grid", default="0:3:0.15", help="start:stop:step or comma list")
    p.add_argument("--gamma", type=float, default=0.9)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_sweep_beta)

    p = sub.add_parser("sweep-step", help="fixed step scales replacing the adaptive step")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--adv", type=Path, required=True)
    p.add_argument("--fixed-beta", required=True, help="start:stop:step or comma list")
    p.add_argument("--gamma", type=float, default=0.9)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_sweep_step)

    p = sub.add_parser("sweep-views", help="accuracy as a function of views used per sample")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--adv", type=Path, required=True)
    p.add_argument("--n", required=True, help="comma list of view counts (or start:stop:step)")
    p.add_argument("--mode", choices=("ensemble", "agc"), default="agc")
    _add_correction_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_sweep_views)

    p = sub.add_parser("bench-latency", help="microbenchmark the per-sample correction path")
    p.add_argument("--d", type=int, default=512)
    p.add_argument("--views", type=int, default=32)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--classes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_output_flags(p, plot=False)
    p.set_defaults(func=_cmd_bench_latency)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse handles --help (0) and usage errors (2) itself.
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AgcError as e:
        print(f"error: numeric degeneracy: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
