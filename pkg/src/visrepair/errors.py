"""Exception vocabulary shared across the pipeline.

Every stage raises from this small hierarchy so callers can tell input
problems (bad issue record, unreadable repo) apart from model-side faults
(endpoint down, replay miss) and from pipeline dead ends (no candidates).
"""

from __future__ import annotations


class RepairError(Exception):
    """Base class for all errors raised by this package."""


# --- workspace ---------------------------------------------------------------


class MissingField(RepairError):
    """An issue record lacks a required field."""


class UnreadableImage(RepairError):
    """An image attachment could not be fetched or decoded."""


class UnsupportedMediaType(RepairError):
    """An image attachment decoded to a format outside the supported set."""


class NotADirectory(RepairError):
    """A repository path does not point at a directory."""


class EmptyRepository(RepairError):
    """A repository snapshot found no files at all."""


class NoDocumentation(RepairError):
    """A documentation root exists but holds no documentation files."""


# --- provider ----------------------------------------------------------------


class EndpointUnreachable(RepairError):
    """The model endpoint could not be reached or returned a hard failure."""


class RateLimited(RepairError):
    """The model endpoint asked us to back off."""


class ReplayMiss(RepairError):
    """Replay mode was asked for a request that was never recorded."""


# --- retrieval ---------------------------------------------------------------


class DimensionMismatch(RepairError):
    """Embedding vectors of different dimensionality were mixed."""


class EmptyScope(RepairError):
    """A retrieval scope filtered out every candidate."""


# --- knowledge / localization ------------------------------------------------


class UnparseableSelection(RepairError):
    """A selection completion yielded no usable paths even after fallback."""


class NoCandidateFiles(RepairError):
    """File localization ended with zero suspicious files."""


class NoHunksLocalized(RepairError):
    """Hunk localization resolved no code regions in any sample."""


# --- reproduction ------------------------------------------------------------


class NoCodeBlock(RepairError):
    """A completion that had to carry a fenced code block carried none."""


class GenerationRefused(RepairError):
    """The model declined to produce reproduction code."""


# --- code views --------------------------------------------------------------


class ParseFailure(RepairError):
    """Source could not be scanned even by the line-based fallback."""


class ElementNotFound(RepairError):
    """No class or function matches the requested name."""


class AmbiguousElement(RepairError):
    """More than one element matches the requested name."""


class AnchorOutOfRange(RepairError):
    """A context-window anchor line falls outside the file."""


# --- patch generation --------------------------------------------------------


class NoEditBlocks(RepairError):
    """A completion contained no well-formed search/replace blocks."""


class SearchNotFound(RepairError):
    """An edit's search text does not occur in the target file."""


class AmbiguousMatch(RepairError):
    """An edit's search text occurs more than once, even after relaxation."""


class NoValidCandidates(RepairError):
    """Every patch completion failed to parse or apply."""


# --- validation --------------------------------------------------------------


class BuildFailure(RepairError):
    """A patched tree failed to build."""


class HarnessCrash(RepairError):
    """The render harness died or answered with garbage."""


class PageLoadTimeout(RepairError):
    """The render harness did not finish within its time budget."""


class BundleMissing(RepairError):
    """A build finished but the expected bundle file is absent."""


class NoCandidates(RepairError):
    """Patch selection was invoked with an empty candidate list."""
