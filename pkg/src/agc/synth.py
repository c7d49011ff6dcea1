"""Desk-scale synthetic world: prototypes, clean/adversarial features, view sets.

Everything is driven by splittable seed streams so generation is
reproducible sample by sample (and safe to parallelize across samples):

    spawn_key (0, attempt)  prototype draw for a given retry attempt
    spawn_key (1, i)        clean-feature noise of sample i
    spawn_key (2, i)        clean-bundle view noise of sample i (row j = view j)
    spawn_key (3, i)        adversarial-bundle view noise of sample i (row j = view j)

View noise depends only on (stream, sample, row), never on the view mode,
so sweeps across modes compare like against like.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .augeval import evaluate_bundle
from .bundle import EmbeddingBundle, ManifestEntry, make_bundle, write_bundle, write_manifest
from .core import AgcConfig
from .errors import AttackFailure, SeparationFailure
from .report import EvalReport, mode_stats
from .sphere import angle, geodesic_point, normalize, tangent_direction
from .zeroshot import TextBank, build_text_bank, margin, runner_up

VIEW_MODES = ("recovering", "adversarial_centered", "mixed")

_MAX_PROTOTYPE_ATTEMPTS = 100
_BISECTION_STEPS = 80


@dataclass
class SynthConfig:
    """Knobs of the synthetic world.

    `view_mode` controls how well the augmented views of an adversarial
    sample recover its clean feature: `recovering` centers them on the
    clean feature, `adversarial_centered` on the attacked one, and
    `mixed` at `mix_lambda` of the way back from attacked to clean
    (mixed(0) == adversarial_centered, mixed(1) == recovering). Views of
    clean samples always center on the clean feature.
    """

    d: int = 64
    n_classes: int = 16
    n_samples: int = 512
    n_views: int = 32
    sigma_clean: float = 0.05
    sigma_view: float = 0.10
    delta: float = 0.05
    view_mode: str = "recovering"
    mix_lambda: float = 1.0
    seed: int = 7

    def __post_init__(self):
        if self.sigma_clean <= 0 or self.sigma_view <= 0 or self.delta <= 0:
            raise ValueError("noise scales and delta must be positive")
        if self.n_classes < 2 or self.n_samples < 1 or self.n_views < 1 or self.d < 2:
            raise ValueError("need C >= 2, M >= 1, N >= 1, d >= 2")
        if self.view_mode not in VIEW_MODES:
            raise ValueError(f"view_mode {self.view_mode!r} not one of {VIEW_MODES}")
        if not 0.0 <= self.mix_lambda <= 1.0:
            raise ValueError("mix_lambda must lie in [0, 1]")


@dataclass
class SynthWorld:
    """A generated benchmark instance, plus the float64 ground truth."""

    cfg: SynthConfig
    bank: TextBank
    clean_bundle: EmbeddingBundle
    adv_bundle: EmbeddingBundle
    clean_features: np.ndarray  # (M, d) float64, exact pre-quantization values
    adv_features: np.ndarray  # (M, d) float64
    labels: np.ndarray  # (M,)


def _rng(cfg: SynthConfig, *spawn_key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=spawn_key))


def generate_prototypes(cfg: SynthConfig) -> TextBank:
    """Draw C normalized Gaussian prototypes with a minimum pairwise angle.

    Whole banks failing the separation check are redrawn; after 100
    attempts the configuration is declared infeasible.
    """
    min_angle = 2.0 * (cfg.sigma_clean + cfg.delta)
    for attempt in range(_MAX_PROTOTYPE_ATTEMPTS):
        raw = _rng(cfg, 0, attempt).standard_normal((cfg.n_classes, cfg.d))
        feats = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        gram = np.clip(feats @ feats.T, -1.0, 1.0)
        np.fill_diagonal(gram, -1.0)
        if float(np.arccos(gram.max())) >= min_angle:
            names = tuple(f"class-{i:03d}" for i in range(cfg.n_classes))
            return build_text_bank(feats, names)
    raise SeparationFailure(
        f"could not separate {cfg.n_classes} prototypes in d={cfg.d} "
        f"by {min_angle:.3f} rad after {_MAX_PROTOTYPE_ATTEMPTS} attempts"
    )


def generate_clean(cfg: SynthConfig, bank: TextBank) -> tuple[np.ndarray, np.ndarray]:
    """Clean features: normalized prototype-plus-noise, labels cycling over classes."""
    labels = np.arange(cfg.n_samples, dtype=np.int64) % cfg.n_classes
    feats = np.zeros((cfg.n_samples, cfg.d), dtype=np.float64)
    for i, y in enumerate(labels):
        g = _rng(cfg, 1, i).standard_normal(cfg.d)
        feats[i] = normalize(bank.features[y] + cfg.sigma_clean * g)
    return feats, labels


def attack_feature(z_clean, bank: TextBank, y: int, delta: float) -> np.ndarray:
    """Smallest geodesic rotation toward the runner-up prototype reaching margin <= -delta.

    Bisection over the arc from the clean feature to the runner-up text
    feature; the returned point always satisfies the margin bound.
    """
    z_clean = np.asarray(z_clean, dtype=np.float64)
    if margin(z_clean, bank, y) <= -delta:
        return z_clean
    j_star = runner_up(z_clean, bank, y)
    target = bank.features[j_star]
    theta_max = angle(z_clean, target)
    u = tangent_direction(z_clean, target)
    if margin(geodesic_point(z_clean, u, theta_max), bank, y) > -delta:
        raise AttackFailure(
            f"margin stays above {-delta} along the whole arc toward class {j_star}"
        )
    lo, hi = 0.0, theta_max
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if margin(geodesic_point(z_clean, u, mid), bank, y) <= -delta:
            hi = mid
        else:
            lo = mid
    return geodesic_point(z_clean, u, hi)


def generate_views(z_clean, z_adv, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """N unit views scattered around a center chosen by cfg.view_mode.

    The Gaussian block is drawn once per call (row j belongs to view j),
    so the draw is identical no matter which center the mode selects.
    """
    z_clean = np.asarray(z_clean, dtype=np.float64)
    z_adv = np.asarray(z_adv, dtype=np.float64)
    if cfg.view_mode == "recovering":
        center = z_clean
    elif cfg.view_mode == "adversarial_centered":
        center = z_adv
    else:
        lam = cfg.mix_lambda
        if lam == 0.0:
            center = z_adv
        elif lam == 1.0:
            center = z_clean
        else:
            span = angle(z_adv, z_clean)
            if span < 1e-9:
                center = z_clean
            else:
                center = geodesic_point(z_adv, tangent_direction(z_adv, z_clean), lam * span)
    noise = rng.standard_normal((cfg.n_views, cfg.d))
    raw = center[None, :] + cfg.sigma_view * noise
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def build_world(cfg: SynthConfig) -> SynthWorld:
    """Generate bank, clean and adversarial bundles for one configuration."""
    bank = generate_prototypes(cfg)
    clean, labels = generate_clean(cfg, bank)
    adv = np.zeros_like(clean)
    clean_views = np.zeros((cfg.n_samples, cfg.n_views, cfg.d), dtype=np.float64)
    adv_views = np.zeros_like(clean_views)
    recovering = replace(cfg, view_mode="recovering")
    for i in range(cfg.n_samples):
        adv[i] = attack_feature(clean[i], bank, int(labels[i]), cfg.delta)
        # Clean inputs have nothing to recover from; their views always
        # cluster around the clean feature.
        clean_views[i] = generate_views(clean[i], clean[i], recovering, _rng(cfg, 2, i))
        adv_views[i] = generate_views(clean[i], adv[i], cfg, _rng(cfg, 3, i))
    clean_bundle = make_bundle("clean", bank.names, bank.features, labels, clean, clean_views)
    adv_bundle = make_bundle("adversarial", bank.names, bank.features, labels, adv, adv_views)
    return SynthWorld(
        cfg=cfg,
        bank=bank,
        clean_bundle=clean_bundle,
        adv_bundle=adv_bundle,
        clean_features=clean,
        adv_features=adv,
        labels=labels,
    )


def run_synth_experiment(cfg: SynthConfig, agc_cfg: AgcConfig | None = None) -> EvalReport:
    """Build a world and evaluate all three modes on both bundles."""
    agc_cfg = agc_cfg or AgcConfig()
    world = build_world(cfg)
    bank = world.clean_bundle.text_bank()
    results: dict[str, dict] = {}
    for label, bundle in (("clean", world.clean_bundle), ("adversarial", world.adv_bundle)):
        per_mode = {}
        for mode in ("none", "ensemble", "agc"):
            ev = evaluate_bundle(bundle, bank, agc_cfg, mode)
            per_mode[mode] = mode_stats(ev)
        results[label] = per_mode
    return EvalReport(
        config={
            "synth": {
                "d": cfg.d,
                "n_classes": cfg.n_classes,
                "n_samples": cfg.n_samples,
                "n_views": cfg.n_views,
                "sigma_clean": cfg.sigma_clean,
                "sigma_view": cfg.sigma_view,
                "delta": cfg.delta,
                "view_mode": cfg.view_mode,
                "mix_lambda": cfg.mix_lambda,
            },
            "correction": {
                "beta_clean": agc_cfg.beta_clean,
                "beta_adv": agc_cfg.beta_adv,
                "gamma": agc_cfg.gamma_exp,
            },
        },
        provenance={"tool": "agc", "seed": cfg.seed},
        results=results,
    )


def write_lambda_manifest(cfg: SynthConfig, lambdas, out_dir) -> Path:
    """Materialize one adversarial bundle per mixing fraction plus a manifest.

    Group names encode the fraction (``mix-080`` for 0.8) so the ordering
    by recovery quality is also the lexicographic ordering.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for lam in lambdas:
        lam_cfg = replace(cfg, view_mode="mixed", mix_lambda=float(lam))
        world = build_world(lam_cfg)
        name = f"mix-{round(lam * 100):03d}"
        bundle_path = out_dir / f"{name}.agcb"
        write_bundle(world.adv_bundle, bundle_path)
        entries.append(ManifestEntry(name=name, intensity="unspecified", path=bundle_path))
    manifest_path = out_dir / "manifest.tsv"
    write_manifest(entries, manifest_path)
    return manifest_path
