"""Cosine-similarity zero-shot classification, margins and their directional change."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadLabel, DimMismatch, DuplicateName, ZeroNorm
from .sphere import ZERO_NORM_EPS


@dataclass(frozen=True)
class TextBank:
    """Unit-norm class text features with their display names."""

    features: np.ndarray  # (C, d) float64, rows unit norm
    names: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Prediction:
    class_index: int
    similarities: np.ndarray  # (C,) cosine similarities, clipped to [-1, 1]


def build_text_bank(raw_features, names) -> TextBank:
    """Normalize raw class features row by row, keeping their order."""
    feats = np.asarray(raw_features, dtype=np.float64)
    if feats.ndim != 2:
        raise DimMismatch(f"expected a CxD feature matrix, got shape {feats.shape}")
    names = tuple(str(n) for n in names)
    if len(names) != feats.shape[0]:
        raise DimMismatch(f"{feats.shape[0]} feature rows but {len(names)} names")
    if feats.shape[0] < 2:
        raise DimMismatch("a text bank needs at least two classes")
    if feats.shape[1] < 2:
        raise DimMismatch("unit features need dimension >= 2")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateName(f"duplicate class names: {dupes}")
    norms = np.linalg.norm(feats, axis=1)
    bad = np.flatnonzero(norms < ZERO_NORM_EPS)
    if bad.size:
        row = int(bad[0])
        raise ZeroNorm(f"text feature row {row} has zero norm", row=row)
    return TextBank(features=feats / norms[:, None], names=names)


def _check_z(z, bank: TextBank) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] != bank.dim:
        raise DimMismatch(f"feature shape {z.shape} does not match bank dim {bank.dim}")
    return z


def _check_label(y: int, bank: TextBank) -> int:
    y = int(y)
    if not 0 <= y < bank.n_classes:
        raise BadLabel(f"label {y} outside [0, {bank.n_classes})")
    return y


def predict(z, bank: TextBank) -> Prediction:
    """Argmax of cosine similarity over the bank; ties break to the lowest index."""
    z = _check_z(z, bank)
    sims = np.clip(bank.features @ z, -1.0, 1.0)
    return Prediction(class_index=int(np.argmax(sims)), similarities=sims)


def margin(z, bank: TextBank, y: int) -> float:
    """Similarity to class y minus the best wrong-class similarity.

    Positive iff z is classified as y (when the maximum is unique).
    """
    z = _check_z(z, bank)
    y = _check_label(y, bank)
    sims = bank.features @ z
    rival = np.delete(sims, y)
    return float(sims[y] - rival.max())


def runner_up(z, bank: TextBank, y: int) -> int:
    """Index of the best class other than y; ties break to the lowest index."""
    z = _check_z(z, bank)
    y = _check_label(y, bank)
    sims = bank.features @ z
    sims = sims.copy()
    sims[y] = -np.inf
    return int(np.argmax(sims))


def margin_directional_derivative(z, u, bank: TextBank, y: int) -> float:
    """First-order change of the class-y margin when moving from z along u.

    The runner-up j* is computed once at the base point z and frozen: the
    margin is only piecewise smooth, and this is the derivative of the
    active piece.
    """
    z = _check_z(z, bank)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != z.shape:
        raise DimMismatch(f"tangent shape {u.shape} does not match feature shape {z.shape}")
    y = _check_label(y, bank)
    j_star = runner_up(z, bank, y)
    return float(u @ bank.features[y] - u @ bank.features[j_star])
