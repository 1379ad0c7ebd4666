"""Exception taxonomy shared across the package.

``DataError`` subclasses map to CLI exit code 3, ``DivergenceError``
to exit code 4.
"""


class DataError(Exception):
    """Invalid or inconsistent input data."""


class XmlParseError(DataError):
    """Malformed argument-graph XML."""


class IntegrityError(DataError):
    """Reference to an unknown node or edge id."""


class StructureError(DataError):
    """Edges do not form a single rooted tree."""


class FunctionMappingError(DataError):
    """Unknown raw argumentative edge type."""


class AlignmentError(DataError):
    """Unit counts or segment boundaries do not line up."""


class VariantReferenceError(DataError):
    """Paraphrase variant points at a missing original document."""


class SegmentationError(DataError):
    """Tree leaves do not tile the document text."""


class NuclearityError(DataError):
    """Internal tree node without a nucleus child."""


class RstFormatError(DataError):
    """RST JSON file violates the schema."""


class EmbeddingFormatError(DataError):
    """Embedding file violates the binary layout."""


class EmbeddingCorruptionError(DataError):
    """Embedding file is truncated or fails its checksum."""


class CheckpointError(DataError):
    """Model checkpoint is unreadable or fails its checksum."""


class SplitError(DataError):
    """Cross-validation split references a missing document."""


class DivergenceError(Exception):
    """Training produced a non-finite loss.

    Carries the last finite-loss parameter snapshot so callers can
    recover it.
    """

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good
