"""Exception and warning types shared across the package."""


class EmbalignError(Exception):
    """Base class for all embalign errors."""


class MissingHeader(EmbalignError):
    """First line of a .vec file is not '<count> <dim>'."""


class DimensionMismatch(EmbalignError):
    """Row or matrix dimensions disagree with the declared dimension."""


class EmptyVocabulary(EmbalignError):
    """A vocabulary or lexicon file yielded zero valid entries."""


class IoFailure(EmbalignError):
    """Underlying file I/O failed."""


class CorruptTransformFile(EmbalignError):
    """Transform file header is inconsistent with its payload."""


class CorruptMapFile(EmbalignError):
    """Correspondence map file header is inconsistent with its payload."""


class InvalidP(EmbalignError):
    """Requested component count exceeds what the input supports."""


class EmptyTargets(EmbalignError):
    """Nearest-neighbor search against an empty target set."""


class KTooLarge(EmbalignError):
    """k exceeds the number of available neighbors."""


class NonFiniteLoss(EmbalignError):
    """Optimization diverged (non-finite loss or runaway transform)."""


class AllRunsFailed(EmbalignError):
    """Every stochastic run diverged; nothing to select from."""


class NoEvaluableWords(EmbalignError):
    """No lexicon entry overlaps both vocabularies."""


class InvalidSpectrum(EmbalignError):
    """Synthetic-data spectrum is not a positive non-increasing vector."""


class UnknownWord(EmbalignError):
    """A requested word is absent from the vocabulary."""


class DegenerateInputWarning(UserWarning):
    """Input was degenerate; a safe fallback result was returned."""


class ZeroNormWarning(UserWarning):
    """Zero-norm rows encountered; their cosine similarity is taken as 0."""


class NoPairsSurvivedWarning(UserWarning):
    """Reciprocal filtering removed every candidate pair."""


class ClampedParameterWarning(UserWarning):
    """A configured parameter was reduced to fit the data at hand."""
