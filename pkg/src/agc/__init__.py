"""Training-free geodesic feature correction for normalized embedding classifiers."""

__version__ = "0.1.0"

from . import errors
from .bench import bench_latency
from .bundle import EmbeddingBundle, make_bundle, read_bundle, read_manifest, write_bundle, write_manifest
from .core import (
    AgcConfig,
    CorrectionDiagnostics,
    adaptive_step,
    agc_infer,
    aggregate_anchor,
    correct_feature,
    correction_score,
    deviation_signal,
    reliability_signal,
)
from .augeval import (
    AugGroup,
    AugScoreRow,
    evaluate_accuracy,
    evaluate_bundle,
    pearson_correlation,
    score_augmentation,
    score_augmentation_multilevel,
    select_anchor_augmentation,
)
from .report import EvalReport, dumps_stable
from .sphere import angle, geodesic_point, normalize, tangent_direction
from .synth import SynthConfig, SynthWorld, attack_feature, build_world, run_synth_experiment
from .zeroshot import (
    Prediction,
    TextBank,
    build_text_bank,
    margin,
    margin_directional_derivative,
    predict,
    runner_up,
)

__all__ = [
    "AgcConfig",
    "AugGroup",
    "AugScoreRow",
    "CorrectionDiagnostics",
    "EmbeddingBundle",
    "EvalReport",
    "Prediction",
    "SynthConfig",
    "SynthWorld",
    "TextBank",
    "adaptive_step",
    "agc_infer",
    "aggregate_anchor",
    "angle",
    "attack_feature",
    "bench_latency",
    "build_text_bank",
    "build_world",
    "correct_feature",
    "correction_score",
    "deviation_signal",
    "dumps_stable",
    "errors",
    "evaluate_accuracy",
    "evaluate_bundle",
    "geodesic_point",
    "make_bundle",
    "margin",
    "margin_directional_derivative",
    "normalize",
    "pearson_correlation",
    "predict",
    "read_bundle",
    "read_manifest",
    "reliability_signal",
    "run_synth_experiment",
    "runner_up",
    "score_augmentation",
    "score_augmentation_multilevel",
    "select_anchor_augmentation",
    "tangent_direction",
    "write_bundle",
    "write_manifest",
]
