"""Unit-hypersphere geometry primitives.

All functions take 1-D arrays (any real dtype), compute in float64 and
return float64. Inputs other than the argument of `normalize` are assumed
to be unit vectors; every returned point is renormalized defensively so
chained calls do not accumulate norm drift.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDirection, DimMismatch, ZeroNorm

# Below this, a vector's direction is numerically meaningless.
ZERO_NORM_EPS = 1e-12
# Residual-norm threshold for coincident/antipodal tangent projection.
DEGENERATE_EPS = 1e-9


def _vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def _pair(z, a) -> tuple[np.ndarray, np.ndarray]:
    z = _vector(z)
    a = _vector(a)
    if z.shape[0] != a.shape[0]:
        raise DimMismatch(f"dimension mismatch: {z.shape[0]} vs {a.shape[0]}")
    return z, a


def normalize(v) -> np.ndarray:
    """Scale `v` to unit Euclidean norm, preserving its direction."""
    arr = _vector(v)
    if arr.shape[0] < 2:
        raise DimMismatch("unit features need dimension >= 2")
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_EPS:
        raise ZeroNorm(f"cannot normalize a vector of norm {norm:.3e}")
    return arr / norm


def angle(z, a) -> float:
    """Geodesic angle between unit vectors, arccos of their inner product.

    The inner product is clamped to [-1, 1] before arccos so rounding just
    outside the domain cannot produce NaN.
    """
    z, a = _pair(z, a)
    return float(np.arccos(np.clip(z @ a, -1.0, 1.0)))


def tangent_direction(z, a) -> np.ndarray:
    """Unit tangent at `z` pointing along the great circle toward `a`.

    Raises DegenerateDirection when z and a are coincident or antipodal
    (residual norm below DEGENERATE_EPS) -- there is no unique direction.
    """
    z, a = _pair(z, a)
    residual = a - (a @ z) * z
    rnorm = float(np.linalg.norm(residual))
    if rnorm < DEGENERATE_EPS:
        raise DegenerateDirection(
            f"no tangent direction: residual norm {rnorm:.3e} (coincident or antipodal points)"
        )
    return residual / rnorm


def geodesic_point(z, u, t: float) -> np.ndarray:
    """Point at arc length `t` along the great circle through `z` with direction `u`.

    `t` may be any real number: negative walks backward, values past the
    anchor angle overshoot it. The result is renormalized (cos^2+sin^2
    drift accumulates over chained corrections).
    """
    z, u = _pair(z, u)
    p = np.cos(t) * z + np.sin(t) * u
    return p / np.linalg.norm(p)
