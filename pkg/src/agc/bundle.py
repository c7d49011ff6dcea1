"""Embedding-bundle (AGCB) file format and augmentation manifests.

Binary layout, little-endian throughout:

    magic   "AGCB"                      4 bytes
    version u32 (= 1)
    d, C, M, N                          u32 each
    condition u8 (0 clean, 1 adversarial, 2 unspecified), 3 zero pad bytes
    C names: u16 byte length + UTF-8 bytes each
    bank    C x d float32
    M records: label u32, original d float32, views N x d float32

Features are stored as float32; all computation happens in float64 after
load, via the `*_unit` accessors which renormalize rows. The raw float32
payload is kept verbatim so write(read(path)) reproduces the file byte for
byte.

Manifests are plain UTF-8 text, one `name<TAB>intensity<TAB>path` entry
per line; relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    BundleFormatError,
    LabelOutOfRange,
    ManifestError,
    Truncated,
    UnsupportedVersion,
    ZeroNormFeature,
)
from .sphere import ZERO_NORM_EPS
from .zeroshot import TextBank, build_text_bank

MAGIC = b"AGCB"
FORMAT_VERSION = 1
CONDITIONS = ("clean", "adversarial", "unspecified")
_HEADER = struct.Struct("<4sIIIIIB3x")

# Bank rows are expected unit norm; larger deviations are suspicious.
BANK_NORM_WARN = 1e-3


@dataclass
class EmbeddingBundle:
    """One condition's worth of samples: labels, original features, view features.

    Payload arrays are float32 exactly as stored on disk; `bank_norm_dev`
    and `feature_norm_dev` record the largest pre-normalization deviation
    from unit norm seen in the payload.
    """

    condition: str
    names: tuple[str, ...]
    bank_raw: np.ndarray  # (C, d) float32
    labels: np.ndarray  # (M,) int64
    originals_raw: np.ndarray  # (M, d) float32
    views_raw: np.ndarray  # (M, N, d) float32
    version: int = FORMAT_VERSION
    bank_norm_dev: float = field(init=False)
    feature_norm_dev: float = field(init=False)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise BundleFormatError(f"condition {self.condition!r} not one of {CONDITIONS}")
        self.bank_norm_dev = float(np.abs(np.linalg.norm(self.bank_raw, axis=1) - 1.0).max())
        devs = [np.abs(np.linalg.norm(self.originals_raw, axis=1) - 1.0).max()]
        if self.views_raw.size:
            devs.append(np.abs(np.linalg.norm(self.views_raw, axis=2) - 1.0).max())
        self.feature_norm_dev = float(max(devs))

    @property
    def dim(self) -> int:
        return self.bank_raw.shape[1]

    @property
    def n_classes(self) -> int:
        return self.bank_raw.shape[0]

    @property
    def n_samples(self) -> int:
        return self.originals_raw.shape[0]

    @property
    def n_views(self) -> int:
        return self.views_raw.shape[1]

    def text_bank(self) -> TextBank:
        if self.bank_norm_dev > BANK_NORM_WARN:
            warnings.warn(
                f"bank row deviates from unit norm by {self.bank_norm_dev:.2e}",
                stacklevel=2,
            )
        return build_text_bank(self.bank_raw.astype(np.float64), self.names)

    def original_unit(self, i: int) -> np.ndarray:
        row = self.originals_raw[i].astype(np.float64)
        return row / np.linalg.norm(row)

    def views_unit(self, i: int) -> np.ndarray:
        rows = self.views_raw[i].astype(np.float64)
        if rows.size == 0:
            return rows
        return rows / np.linalg.norm(rows, axis=1, keepdims=True)

    def all_originals_unit(self) -> np.ndarray:
        rows = self.originals_raw.astype(np.float64)
        return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def make_bundle(condition, names, bank, labels, originals, views) -> EmbeddingBundle:
    """Build a bundle from float arrays, casting the payload to float32."""
    bank = np.ascontiguousarray(bank, dtype=np.float32)
    originals = np.ascontiguousarray(originals, dtype=np.float32)
    views = np.ascontiguousarray(views, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)
    bundle = EmbeddingBundle(
        condition=condition,
        names=tuple(str(n) for n in names),
        bank_raw=bank,
        labels=labels,
        originals_raw=originals,
        views_raw=views,
    )
    _validate_payload(bundle)
    return bundle


def _validate_payload(b: EmbeddingBundle) -> None:
    if b.dim < 2:
        raise BundleFormatError(f"feature dimension {b.dim} < 2")
    if b.n_classes < 2:
        raise BundleFormatError(f"class count {b.n_classes} < 2")
    if b.n_samples < 1:
        raise BundleFormatError("bundle needs at least one sample")
    if len(b.names) != b.n_classes:
        raise BundleFormatError(f"{b.n_classes} bank rows but {len(b.names)} names")
    if b.originals_raw.shape != (b.n_samples, b.dim):
        raise BundleFormatError(f"original feature shape {b.originals_raw.shape} inconsistent")
    if b.views_raw.shape[0] != b.n_samples or b.views_raw.shape[2] != b.dim:
        raise BundleFormatError(f"view shape {b.views_raw.shape} inconsistent")
    bad = np.flatnonzero((b.labels < 0) | (b.labels >= b.n_classes))
    if bad.size:
        i = int(bad[0])
        raise LabelOutOfRange(f"sample {i} has label {int(b.labels[i])} >= {b.n_classes}", sample=i)
    bank_norms = np.linalg.norm(b.bank_raw.astype(np.float64), axis=1)
    bad = np.flatnonzero(bank_norms < ZERO_NORM_EPS)
    if bad.size:
        i = int(bad[0])
        raise ZeroNormFeature(f"bank row {i} has zero norm", sample=i, which="bank")
    orig_norms = np.linalg.norm(b.originals_raw.astype(np.float64), axis=1)
    bad = np.flatnonzero(orig_norms < ZERO_NORM_EPS)
    if bad.size:
        i = int(bad[0])
        raise ZeroNormFeature(f"original feature of sample {i} has zero norm", sample=i, which="original")
    if b.views_raw.size:
        view_norms = np.linalg.norm(b.views_raw.astype(np.float64), axis=2)
        bad = np.argwhere(view_norms < ZERO_NORM_EPS)
        if bad.size:
            i, j = (int(x) for x in bad[0])
            raise ZeroNormFeature(
                f"view {j} of sample {i} has zero norm", sample=i, which=f"view {j}"
            )


def write_bundle(bundle: EmbeddingBundle, path) -> None:
    """Serialize a bundle; the payload is written exactly as held in memory."""
    _validate_payload(bundle)
    d, c, m, n = bundle.dim, bundle.n_classes, bundle.n_samples, bundle.n_views
    out = bytearray()
    out += _HEADER.pack(MAGIC, bundle.version, d, c, m, n, CONDITIONS.index(bundle.condition))
    for name in bundle.names:
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise BundleFormatError(f"class name too long ({len(encoded)} bytes)")
        out += struct.pack("<H", len(encoded))
        out += encoded
    out += np.ascontiguousarray(bundle.bank_raw, dtype="<f4").tobytes()
    labels = bundle.labels.astype("<u4")
    originals = np.ascontiguousarray(bundle.originals_raw, dtype="<f4")
    views = np.ascontiguousarray(bundle.views_raw, dtype="<f4")
    for i in range(m):
        out += struct.pack("<I", int(labels[i]))
        out += originals[i].tobytes()
        out += views[i].tobytes()
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise Truncated(
                f"file ends at byte {len(self.buf)} while reading {what} "
                f"({n} bytes needed at offset {self.pos})",
                offset=len(self.buf),
            )
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk


def read_bundle(path) -> EmbeddingBundle:
    """Parse and validate an AGCB file."""
    buf = Path(path).read_bytes()
    r = _Reader(buf)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    header = r.take(_HEADER.size - 4, "header")
    version, d, c, m, n, cond = struct.unpack("<IIIIIB3x", header)
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"version {version} unsupported (reader knows {FORMAT_VERSION})")
    if header[-3:] != b"\x00\x00\x00":
        raise BundleFormatError("nonzero padding bytes in header")
    if cond >= len(CONDITIONS):
        raise BundleFormatError(f"unknown condition byte {cond}")
    names = []
    for k in range(c):
        (length,) = struct.unpack("<H", r.take(2, f"name {k} length"))
        raw = r.take(length, f"name {k}")
        try:
            names.append(raw.decode("utf-8"))
        except UnicodeDecodeError as e:
            raise BundleFormatError(f"name {k} is not valid UTF-8: {e}") from e
    bank = np.frombuffer(r.take(4 * c * d, "bank"), dtype="<f4").reshape(c, d).copy()
    labels = np.zeros(m, dtype=np.int64)
    originals = np.zeros((m, d), dtype=np.float32)
    views = np.zeros((m, n, d), dtype=np.float32)
    for i in range(m):
        (labels[i],) = struct.unpack("<I", r.take(4, f"label of sample {i}"))
        originals[i] = np.frombuffer(r.take(4 * d, f"original of sample {i}"), dtype="<f4")
        if n:
            views[i] = np.frombuffer(r.take(4 * n * d, f"views of sample {i}"), dtype="<f4").reshape(n, d)
    if r.pos != len(buf):
        raise BundleFormatError(f"{len(buf) - r.pos} trailing bytes after payload")
    bundle = EmbeddingBundle(
        condition=CONDITIONS[cond],
        names=tuple(names),
        bank_raw=bank,
        labels=labels,
        originals_raw=originals,
        views_raw=views,
        version=version,
    )
    _validate_payload(bundle)
    if bundle.bank_norm_dev > BANK_NORM_WARN:
        warnings.warn(
            f"{path}: bank row deviates from unit norm by {bundle.bank_norm_dev:.2e}",
            stacklevel=2,
        )
    return bundle


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    intensity: str
    path: Path


def read_manifest(path) -> list[ManifestEntry]:
    """Parse a manifest file; duplicate (name, intensity) pairs are rejected."""
    from .augeval import INTENSITIES

    path = Path(path)
    entries: list[ManifestEntry] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ManifestError(f"{path}:{lineno}: expected name<TAB>intensity<TAB>path")
        name, intensity, bundle_path = parts
        if intensity not in INTENSITIES:
            raise ManifestError(f"{path}:{lineno}: intensity {intensity!r} not one of {INTENSITIES}")
        key = (name, intensity)
        if key in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate entry {key}")
        seen.add(key)
        resolved = Path(bundle_path)
        if not resolved.is_absolute():
            resolved = path.parent / resolved
        entries.append(ManifestEntry(name=name, intensity=intensity, path=resolved))
    if not entries:
        raise ManifestError(f"{path}: no entries")
    return entries


def write_manifest(entries, path) -> None:
    path = Path(path)
    lines = [f"{e.name}\t{e.intensity}\t{e.path}" for e in entries]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def check_manifest_bundles(bundles: list[EmbeddingBundle]) -> None:
    """All bundles behind one manifest must share dims and sample order."""
    first = bundles[0]
    for b in bundles[1:]:
        if (b.dim, b.n_classes, b.n_samples) != (first.dim, first.n_classes, first.n_samples):
            raise ManifestError(
                f"bundle dims (d={b.dim}, C={b.n_classes}, M={b.n_samples}) differ from "
                f"(d={first.dim}, C={first.n_classes}, M={first.n_samples})"
            )
        if not np.array_equal(b.labels, first.labels):
            raise ManifestError("bundles disagree on sample labels/order")
