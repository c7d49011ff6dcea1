"""Exception taxonomy shared by all agc modules."""

from __future__ import annotations


class AgcError(Exception):
    """Base class for all errors raised by this package."""


class DimMismatch(AgcError):
    """Operands do not share a common dimension."""


class ZeroNorm(AgcError):
    """A vector expected to be normalizable has (numerically) zero norm."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class DegenerateDirection(AgcError):
    """Tangent direction undefined: points coincident or antipodal."""


class DuplicateName(AgcError):
    """Class names in a text bank must be unique."""


class BadLabel(AgcError):
    """Class label outside [0, C)."""


class NeedTwoViews(AgcError):
    """Pairwise view consistency needs at least two views."""


class AntipodalAnchor(AgcError):
    """Anchor is antipodal to the feature; the correction tangent is undefined."""


class NoValidViews(AgcError):
    """Every tangent toward the augmented views degenerated."""


class DegenerateVariance(AgcError):
    """Correlation undefined: a coordinate has zero variance."""


class EmptyInput(AgcError):
    """An operation requiring at least one element received none."""


class SeparationFailure(AgcError):
    """Could not draw class prototypes with the required pairwise separation."""


class AttackFailure(AgcError):
    """No point on the attack geodesic reaches the requested negative margin."""


class BundleFormatError(AgcError):
    """Malformed embedding-bundle file."""


class BadMagic(BundleFormatError):
    """File does not start with the bundle magic bytes."""


class UnsupportedVersion(BundleFormatError):
    """Bundle format version not understood by this reader."""


class Truncated(BundleFormatError):
    """File ends before the declared payload does.

    `offset` is the byte offset at which data ran out (the truncated
    file's length).
    """

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class LabelOutOfRange(BundleFormatError):
    """A stored sample label is >= the bundle's class count."""

    def __init__(self, message: str, sample: int):
        super().__init__(message)
        self.sample = sample


class ZeroNormFeature(BundleFormatError):
    """A stored feature row has zero norm and cannot be normalized."""

    def __init__(self, message: str, sample: int, which: str):
        super().__init__(message)
        self.sample = sample
        self.which = which


class ManifestError(AgcError):
    """Malformed or inconsistent augmentation manifest."""
