"""Hyperparameter sweep protocols over a clean/adversarial bundle pair."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .augeval import evaluate_bundle
from .core import AgcConfig, apply_correction, prepare_correction
from .errors import DimMismatch
from .zeroshot import TextBank


def parse_grid(spec: str) -> list[float]:
    """Parse `start:stop:step` (stop inclusive) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {spec!r}: expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid {spec!r}: need step > 0 and stop >= start")
        n = int(round((stop - start) / step))
        values = [start + k * step for k in range(n + 1)]
        # Guard against a rounding spill past the stop value.
        return [v for v in values if v <= stop + 1e-9]
    return [float(p) for p in spec.split(",") if p.strip()]


@dataclass
class _PreparedBundle:
    preps: list
    labels: np.ndarray


def _prepare_all(bundle) -> _PreparedBundle:
    preps = [
        prepare_correction(bundle.original_unit(i), bundle.views_unit(i))
        for i in range(bundle.n_samples)
    ]
    return _PreparedBundle(preps=preps, labels=bundle.labels)


def _accuracy(prepared: _PreparedBundle, bank: TextBank, cfg: AgcConfig, beta=None) -> float:
    correct = 0
    for prep, y in zip(prepared.preps, prepared.labels):
        pred, _ = apply_correction(prep, bank, cfg, beta_override=beta)
        correct += int(pred.class_index == int(y))
    return correct / len(prepared.preps)


def sweep_beta_grid(clean_bundle, adv_bundle, bank: TextBank, grid, gamma: float) -> list[dict]:
    """Evaluate every (beta_clean, beta_adv) cell; metric is (Acc + Rob) / 2.

    The per-sample geometry does not depend on the step sizes, so it is
    prepared once and reused across all cells.
    """
    clean_prep = _prepare_all(clean_bundle)
    adv_prep = _prepare_all(adv_bundle)
    rows = []
    with warnings.catch_warnings():
        # The grid deliberately visits beta_adv < beta_clean cells.
        warnings.simplefilter("ignore")
        for bc in grid:
            for ba in grid:
                cfg = AgcConfig(beta_clean=bc, beta_adv=ba, gamma_exp=gamma)
                acc = _accuracy(clean_prep, bank, cfg)
                rob = _accuracy(adv_prep, bank, cfg)
                rows.append(
                    {
                        "beta_clean": float(bc),
                        "beta_adv": float(ba),
                        "clean_accuracy": acc,
                        "robust_accuracy": rob,
                        "combined": (acc + rob) / 2.0,
                    }
                )
    return rows


def sweep_fixed_step(clean_bundle, adv_bundle, bank: TextBank, betas, cfg: AgcConfig) -> dict:
    """Replace the adaptive step with each fixed beta and evaluate both bundles.

    Reports the per-beta accuracies plus the argmax steps; ties resolve to
    the smallest beta.
    """
    clean_prep = _prepare_all(clean_bundle)
    adv_prep = _prepare_all(adv_bundle)
    rows = []
    for beta in betas:
        acc = _accuracy(clean_prep, bank, cfg, beta=float(beta))
        rob = _accuracy(adv_prep, bank, cfg, beta=float(beta))
        rows.append({"beta": float(beta), "clean_accuracy": acc, "robust_accuracy": rob})
    clean_best = rows[int(np.argmax([r["clean_accuracy"] for r in rows]))]["beta"]
    robust_best = rows[int(np.argmax([r["robust_accuracy"] for r in rows]))]["beta"]
    return {"rows": rows, "argmax_clean_beta": clean_best, "argmax_robust_beta": robust_best}


def sweep_view_counts(clean_bundle, adv_bundle, bank: TextBank, counts, cfg: AgcConfig, mode="agc") -> list[dict]:
    """Evaluate with only the first n views per sample, for each n in counts."""
    rows = []
    for n in counts:
        n = int(n)
        if n < 1 or n > clean_bundle.n_views or n > adv_bundle.n_views:
            raise DimMismatch(
                f"view count {n} outside [1, {min(clean_bundle.n_views, adv_bundle.n_views)}]"
            )
        acc = evaluate_bundle(clean_bundle, bank, cfg, mode, view_limit=n).accuracy
        rob = evaluate_bundle(adv_bundle, bank, cfg, mode, view_limit=n).accuracy
        rows.append({"n_views": n, "clean_accuracy": acc, "robust_accuracy": rob})
    return rows
