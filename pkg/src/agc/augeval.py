"""Margin-based augmentation scoring, accuracy evaluation and anchor selection."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import AgcConfig, CorrectionDiagnostics, apply_correction, prepare_correction
from .errors import (
    DegenerateDirection,
    DegenerateVariance,
    DimMismatch,
    EmptyInput,
    NoValidViews,
)
from .sphere import tangent_direction
from .zeroshot import TextBank, margin_directional_derivative, predict

INTENSITIES = ("weak", "medium", "strong", "unspecified")
MODES = ("none", "ensemble", "agc")


@dataclass
class AugGroup:
    """Views of one augmentation type at one intensity, aligned with a sample set."""

    name: str
    intensity: str
    views: list[np.ndarray]  # per-sample (n_i, d) unit rows

    def __post_init__(self):
        if self.intensity not in INTENSITIES:
            raise ValueError(f"intensity {self.intensity!r} not one of {INTENSITIES}")


@dataclass
class GroupScore:
    """Result of scoring one augmentation group."""

    mean_score: float
    n_samples_used: int
    n_samples_skipped: int
    n_views_skipped: int


@dataclass
class AugScoreRow:
    """One row of the score-vs-robustness analysis."""

    name: str
    mean_score: float
    robust_accuracy: float
    n_samples: int


def score_augmentation(originals, labels, group: AugGroup, bank: TextBank) -> GroupScore:
    """Mean first-order margin change along the tangents toward the group's views.

    Degenerate tangents (view coincident/antipodal with the original) are
    skipped and counted; a sample with no valid view drops out of the mean.
    """
    z_all = np.asarray(originals, dtype=np.float64)
    labels = np.asarray(labels)
    if len(group.views) != z_all.shape[0]:
        raise DimMismatch(
            f"group has views for {len(group.views)} samples, bundle has {z_all.shape[0]}"
        )
    per_sample = []
    views_skipped = 0
    samples_skipped = 0
    for z, y, views in zip(z_all, labels, group.views):
        derivs = []
        for a in views:
            try:
                u = tangent_direction(z, a)
            except DegenerateDirection:
                views_skipped += 1
                continue
            derivs.append(margin_directional_derivative(z, u, bank, int(y)))
        if derivs:
            per_sample.append(float(np.mean(derivs)))
        else:
            samples_skipped += 1
    if not per_sample:
        raise NoValidViews(f"group {group.name!r}: every tangent degenerated")
    return GroupScore(
        mean_score=float(np.mean(per_sample)),
        n_samples_used=len(per_sample),
        n_samples_skipped=samples_skipped,
        n_views_skipped=views_skipped,
    )


def score_augmentation_multilevel(level_scores) -> float:
    """Unweighted mean over the per-intensity scores of one augmentation name."""
    scores = [float(s.mean_score) if isinstance(s, GroupScore) else float(s) for s in level_scores]
    if not 1 <= len(scores) <= 3:
        raise ValueError(f"expected 1-3 intensity levels, got {len(scores)}")
    return float(np.mean(scores))


def pearson_correlation(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise DimMismatch(f"coordinate shapes differ: {xs.shape} vs {ys.shape}")
    if xs.shape[0] < 3:
        raise ValueError("correlation needs at least 3 points")
    if float(np.std(xs)) == 0.0 or float(np.std(ys)) == 0.0:
        raise DegenerateVariance("a coordinate has zero variance")
    return float(np.corrcoef(xs, ys)[0, 1])


def select_anchor_augmentation(rows) -> str:
    """Name with the maximal mean score; ties break lexicographically."""
    rows = list(rows)
    if not rows:
        raise EmptyInput("no augmentation rows to select from")
    top = max(r.mean_score for r in rows)
    return min(r.name for r in rows if r.mean_score == top)


@dataclass
class ModeEvaluation:
    """Per-bundle evaluation result for one inference mode."""

    mode: str
    accuracy: float
    n_samples: int
    predictions: np.ndarray
    diagnostics: list[CorrectionDiagnostics] = field(default_factory=list)
    timings: np.ndarray | None = None

    @property
    def fallback_count(self) -> int:
        return sum(1 for d in self.diagnostics if d.fallback is not None)


def _resolve_views(bundle, i: int, view_limit: int | None) -> np.ndarray:
    v = bundle.views_unit(i)
    if view_limit is not None:
        v = v[:view_limit]
    return v


def evaluate_bundle(
    bundle,
    bank: TextBank,
    cfg: AgcConfig,
    mode: str,
    *,
    include_original: bool = False,
    threads: int = 1,
    view_limit: int | None = None,
    collect_timing: bool = False,
    beta_override: float | None = None,
) -> ModeEvaluation:
    """Evaluate one bundle under `mode`, fanning samples across threads.

    Results are assembled by sample index, so any thread count produces
    bit-identical output. Timing, when collected, covers only the
    per-sample inference call (features are unpacked beforehand).
    """
    if mode not in MODES:
        raise ValueError(f"mode {mode!r} not one of {MODES}")
    n_views = bundle.n_views if view_limit is None else min(view_limit, bundle.n_views)
    if mode != "none" and n_views < 1:
        raise DimMismatch(f"mode {mode!r} needs views; bundle has {bundle.n_views}")
    m = bundle.n_samples
    originals = [bundle.original_unit(i) for i in range(m)]
    views = [None if mode == "none" else _resolve_views(bundle, i, view_limit) for i in range(m)]

    predictions = np.zeros(m, dtype=np.int64)
    diagnostics: list = [None] * m
    timings = np.zeros(m, dtype=np.float64) if collect_timing else None

    def run_one(i: int) -> None:
        z = originals[i]
        t0 = time.perf_counter() if collect_timing else 0.0
        if mode == "none":
            pred = predict(z, bank)
        elif mode == "ensemble":
            v = views[i]
            stack = np.vstack([v, z[None, :]]) if include_original else v
            mean_sims = (stack @ bank.features.T).mean(axis=0)
            predictions[i] = int(np.argmax(mean_sims))
            if collect_timing:
                timings[i] = time.perf_counter() - t0
            return
        else:
            pred, diag = apply_correction(
                prepare_correction(z, views[i]), bank, cfg, beta_override=beta_override
            )
            diagnostics[i] = diag
        predictions[i] = pred.class_index
        if collect_timing:
            timings[i] = time.perf_counter() - t0

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_one, range(m)))
    else:
        for i in range(m):
            run_one(i)

    correct = int(np.sum(predictions == bundle.labels))
    return ModeEvaluation(
        mode=mode,
        accuracy=correct / m,
        n_samples=m,
        predictions=predictions,
        diagnostics=[d for d in diagnostics if d is not None],
        timings=timings,
    )


def evaluate_accuracy(bundle, bank: TextBank, cfg: AgcConfig, mode: str, **kwargs) -> float:
    """Fraction of samples whose prediction under `mode` equals the stored label."""
    return evaluate_bundle(bundle, bank, cfg, mode, **kwargs).accuracy
