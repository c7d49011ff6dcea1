"""Adaptive geodesic correction of features toward an augmentation anchor.

The pipeline per sample: aggregate the view features into an anchor,
measure how far the original feature sits from the views (dev) and how
much the views agree with each other (rel), blend the two into a
correction score, map the score to a step size between a conservative and
an aggressive setting, and rotate the feature along the geodesic toward
the anchor by that fraction of the anchor angle. The anchor is a
reference, not a destination: the step may stop short of it, reach it, or
overshoot it on the same great circle.

Degeneracies (cancelling views, antipodal anchor) never abort inference;
they fall back to the uncorrected prediction with a diagnostics flag.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AntipodalAnchor, DegenerateDirection, DimMismatch, NeedTwoViews, ZeroNorm
from .sphere import angle, geodesic_point, tangent_direction
from .zeroshot import Prediction, TextBank, predict

# Beyond this the anchor direction is numerically undefined.
_ANTIPODAL_EPS = 1e-6


@dataclass
class AgcConfig:
    """Correction hyperparameters. Defaults follow the reference configuration."""

    beta_clean: float = 0.45
    beta_adv: float = 2.25
    gamma_exp: float = 0.9
    n_views: int = 32
    angle_epsilon: float = 1e-6
    max_rotation: float = math.pi - 1e-6

    def __post_init__(self):
        if self.beta_clean < 0 or self.beta_adv < 0:
            raise ValueError("step coefficients must be >= 0")
        if self.gamma_exp <= 0:
            raise ValueError("gamma_exp must be > 0")
        if self.n_views < 1:
            raise ValueError("n_views must be >= 1")
        if self.beta_adv < self.beta_clean:
            # The interpolation still evaluates; it just shrinks the step as
            # the correction score grows, which is almost never intended.
            warnings.warn(
                "beta_adv < beta_clean: correction weakens as the correction score rises",
                stacklevel=2,
            )


@dataclass
class CorrectionDiagnostics:
    """Per-sample signals recorded by the correction path.

    On skipped or fallback corrections theta_star and rotation_applied are
    both 0.0 so rotation_applied == min(beta * theta_star, max_rotation)
    holds on every record.
    """

    dev: float
    rel_raw: float
    rel_rescaled: float
    s_corr: float
    beta: float
    theta_star: float
    rotation_applied: float
    fallback: str | None = None


def _views_matrix(views, dim: int | None = None) -> np.ndarray:
    v = np.asarray(views, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1:
        raise DimMismatch(f"expected an NxD view matrix with N >= 1, got shape {v.shape}")
    if dim is not None and v.shape[1] != dim:
        raise DimMismatch(f"view dim {v.shape[1]} does not match feature dim {dim}")
    return v


def aggregate_anchor(views) -> np.ndarray:
    """Normalized sum of the view features."""
    v = _views_matrix(views)
    total = v.sum(axis=0)
    norm = float(np.linalg.norm(total))
    if norm < 1e-9:
        raise ZeroNorm(f"views cancel: aggregate norm {norm:.3e}, no meaningful anchor")
    return total / norm


def deviation_signal(z, views) -> float:
    """Mean of (1 - view . z) over views, clipped to [0, 1] after averaging."""
    z = np.asarray(z, dtype=np.float64)
    v = _views_matrix(views, z.shape[0])
    return float(np.clip(np.mean(1.0 - v @ z), 0.0, 1.0))


def reliability_signal(views) -> tuple[float, float]:
    """Mean pairwise view similarity, raw in [-1, 1] and rescaled to [0, 1].

    Averages over all N(N-1) ordered pairs i != j.
    """
    v = _views_matrix(views)
    n = v.shape[0]
    if n < 2:
        raise NeedTwoViews("pairwise reliability needs at least two views")
    gram = v @ v.T
    raw = (gram.sum() - np.trace(gram)) / (n * (n - 1))
    raw = float(np.clip(raw, -1.0, 1.0))
    return raw, (raw + 1.0) / 2.0


def correction_score(dev: float, rel_rescaled: float, gamma_exp: float) -> float:
    """dev**gamma_exp * rel_rescaled, with 0**gamma_exp = 0."""
    return float(dev**gamma_exp * rel_rescaled)


def adaptive_step(s_corr: float, cfg: AgcConfig) -> float:
    """Interpolate between the conservative and the aggressive step size."""
    return float(cfg.beta_clean + (cfg.beta_adv - cfg.beta_clean) * s_corr)


def correct_feature(z, anchor, beta: float, cfg: AgcConfig) -> tuple[np.ndarray, float]:
    """Rotate z toward the anchor by beta times the anchor angle.

    Returns (corrected feature, rotation actually applied). Rotations are
    capped at cfg.max_rotation so no step can wrap past the antipode.
    Anchor angles below cfg.angle_epsilon skip the correction entirely.
    """
    z = np.asarray(z, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    theta = angle(z, anchor)
    if theta < cfg.angle_epsilon:
        return z, 0.0
    if theta > math.pi - _ANTIPODAL_EPS:
        raise AntipodalAnchor(f"anchor angle {theta:.8f} is numerically antipodal")
    rotation = min(beta * theta, cfg.max_rotation)
    if rotation == 0.0:
        return z, 0.0
    u = tangent_direction(z, anchor)
    return geodesic_point(z, u, rotation), rotation


@dataclass
class PreparedCorrection:
    """Config-independent per-sample geometry, reusable across step settings."""

    feature: np.ndarray
    dev: float
    rel_raw: float
    rel_rescaled: float
    theta_star: float
    tangent: np.ndarray | None
    fallback: str | None = None


def prepare_correction(z, views) -> PreparedCorrection:
    """Compute anchor geometry and signals for one sample.

    Anchor degeneracies are recorded as a fallback reason instead of
    raising; the sample then keeps its uncorrected feature.
    """
    z = np.asarray(z, dtype=np.float64)
    v = _views_matrix(views, z.shape[0])
    dev = deviation_signal(z, v)
    if v.shape[0] == 1:
        # rel is undefined for a single view; maximum distrust.
        rel_raw, rel_rescaled = -1.0, 0.0
    else:
        rel_raw, rel_rescaled = reliability_signal(v)
    try:
        anchor = aggregate_anchor(v)
    except ZeroNorm:
        return PreparedCorrection(z, dev, rel_raw, rel_rescaled, 0.0, None, "anchor_cancelled")
    theta = angle(z, anchor)
    if theta > math.pi - _ANTIPODAL_EPS:
        return PreparedCorrection(z, dev, rel_raw, rel_rescaled, 0.0, None, "antipodal_anchor")
    try:
        tangent = tangent_direction(z, anchor)
    except DegenerateDirection:
        # Coincident with the anchor (arccos overstates tiny angles); nothing
        # to correct.
        return PreparedCorrection(z, dev, rel_raw, rel_rescaled, 0.0, None)
    return PreparedCorrection(z, dev, rel_raw, rel_rescaled, theta, tangent)


def apply_correction(
    prep: PreparedCorrection,
    bank: TextBank,
    cfg: AgcConfig,
    beta_override: float | None = None,
) -> tuple[Prediction, CorrectionDiagnostics]:
    """Finish a prepared correction under a given config and classify.

    `beta_override` replaces the adaptive step with a fixed one (used by
    the fixed-step sweeps); diagnostics then record the overridden value.
    """
    s = correction_score(prep.dev, prep.rel_rescaled, cfg.gamma_exp)
    beta = adaptive_step(s, cfg) if beta_override is None else float(beta_override)
    if prep.tangent is None or prep.theta_star < cfg.angle_epsilon:
        z_corr = prep.feature
        theta_diag = 0.0
        rotation = 0.0
    else:
        theta_diag = prep.theta_star
        rotation = min(beta * prep.theta_star, cfg.max_rotation)
        z_corr = geodesic_point(prep.feature, prep.tangent, rotation) if rotation != 0.0 else prep.feature
    pred = predict(z_corr, bank)
    diag = CorrectionDiagnostics(
        dev=prep.dev,
        rel_raw=prep.rel_raw,
        rel_rescaled=prep.rel_rescaled,
        s_corr=s,
        beta=beta,
        theta_star=theta_diag,
        rotation_applied=rotation,
        fallback=prep.fallback,
    )
    return pred, diag


def agc_infer(z, views, bank: TextBank, cfg: AgcConfig) -> tuple[Prediction, CorrectionDiagnostics]:
    """Correct one feature against its augmented views and classify the result."""
    return apply_correction(prepare_correction(z, views), bank, cfg)
