"""Evaluation reports and their schema-stable serialization.

JSON output sorts keys and prints floats with 17 significant digits, so
two runs producing the same numbers produce the same bytes and golden-file
diffs are meaningful.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass
class EvalReport:
    """Per-condition, per-mode accuracies plus configuration echo.

    `timing` stays None unless explicitly requested: wall-clock numbers
    would break bit-identical reports across runs and thread counts.
    """

    config: dict
    provenance: dict
    results: dict
    timing: dict | None = None
    per_sample: dict | None = None

    def to_dict(self) -> dict:
        out = {"config": self.config, "provenance": self.provenance, "results": self.results}
        if self.timing is not None:
            out["timing"] = self.timing
        if self.per_sample is not None:
            out["per_sample"] = self.per_sample
        return out


def mode_stats(evaluation) -> dict:
    """Summarize one ModeEvaluation as plain JSON-ready values."""
    stats = {
        "accuracy": float(evaluation.accuracy),
        "n_samples": int(evaluation.n_samples),
    }
    diags = evaluation.diagnostics
    if diags:
        stats["diagnostics"] = {
            "dev": float(np.mean([d.dev for d in diags])),
            "rel_raw": float(np.mean([d.rel_raw for d in diags])),
            "rel_rescaled": float(np.mean([d.rel_rescaled for d in diags])),
            "s_corr": float(np.mean([d.s_corr for d in diags])),
            "beta": float(np.mean([d.beta for d in diags])),
            "theta_star": float(np.mean([d.theta_star for d in diags])),
            "rotation_applied": float(np.mean([d.rotation_applied for d in diags])),
            "fallbacks": int(evaluation.fallback_count),
        }
    return stats


def timing_stats(timings: np.ndarray) -> dict:
    """Mean/median/p95 of per-sample wall-clock seconds."""
    t = np.asarray(timings, dtype=np.float64)
    return {
        "per_sample_mean_s": float(t.mean()),
        "per_sample_p50_s": float(np.percentile(t, 50)),
        "per_sample_p95_s": float(np.percentile(t, 95)),
        "n_timed": int(t.size),
    }


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot appear in a report")
    return format(x, ".17g")


def dumps_stable(obj, indent: int = 0) -> str:
    """Serialize to JSON with sorted keys and 17-significant-digit floats."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
            items.append(f'{pad}  {json.dumps(key)}: {dumps_stable(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad}  {dumps_stable(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__} in a report")


def render_table(obj, prefix: str = "") -> str:
    """Flatten a nested report into aligned `dotted.key  value` lines."""
    rows: list[tuple[str, str]] = []

    def walk(value, key):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(value[k], f"{key}.{k}" if key else str(k))
        elif isinstance(value, (list, tuple)):
            for i, v in enumerate(value):
                walk(v, f"{key}[{i}]")
        elif isinstance(value, (float, np.floating)):
            rows.append((key, format(float(value), ".6g")))
        else:
            rows.append((key, str(value)))

    walk(obj, prefix)
    if not rows:
        return ""
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def render_columns(header: list[str], rows: list[list]) -> str:
    """Aligned-column table with a header row."""
    cells = [header] + [
        [format(v, ".6g") if isinstance(v, (float, np.floating)) else str(v) for v in row]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(f"{c:<{w}}" for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines)
