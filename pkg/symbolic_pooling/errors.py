"""
Exception hierarchy for the symbolic pooling library.

Every error raised on purpose by the library derives from SymbolicPoolingError,
so callers (the CLI, the Dagster asset) can catch one type and report it.
"""

from typing import Optional


class SymbolicPoolingError(Exception):
    """Base class for all library errors"""


# Data validation

class DimensionMismatchError(SymbolicPoolingError):
    """Feature data length does not match the declared shape"""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected {expected} values, got {actual}")


class NonFiniteValueError(SymbolicPoolingError):
    """A NaN or infinite feature value was found"""

    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"Non-finite value at row {row}, col {col}")


class EmptyInputError(SymbolicPoolingError):
    """No values to build a histogram from"""


class InvalidBinCountError(SymbolicPoolingError):
    """Bin count must be a positive integer"""


class OutOfRangeError(SymbolicPoolingError):
    """Quantile level outside [0, 1]"""


class ShapeMismatchError(SymbolicPoolingError):
    """Representations or vectors with incompatible shapes were compared"""


class EmptySetError(SymbolicPoolingError):
    """An empty query or gallery set was given"""


# Triplet mining

class InsufficientLabelsError(SymbolicPoolingError):
    """Fewer than two identities in a batch"""


class SingletonLabelError(SymbolicPoolingError):
    """An identity in a batch has a single member"""

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"Identity '{label}' has only one member in the batch")


# Retrieval evaluation

class RankExceedsGalleryError(SymbolicPoolingError):
    """A CMC rank larger than the gallery was requested"""

    def __init__(self, rank: int, gallery_size: int):
        self.rank = rank
        self.gallery_size = gallery_size
        super().__init__(f"CMC rank {rank} exceeds gallery size {gallery_size}")


class NoRelevantItemsError(SymbolicPoolingError):
    """A query has no relevant gallery item"""

    def __init__(self, query_id: str):
        self.query_id = query_id
        super().__init__(f"Query '{query_id}' has no relevant gallery items")


# File formats

class ManifestParseError(SymbolicPoolingError):
    """Malformed manifest line or field"""

    def __init__(self, message: str, line: int, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = f"line {line}" + (f", field '{field}'" if field else "")
        super().__init__(f"{message} ({where})")


class DuplicatePathError(SymbolicPoolingError):
    """Two manifest entries reference the same feature file"""

    def __init__(self, path: str, line: int):
        self.path = path
        self.line = line
        super().__init__(f"Duplicate feature path '{path}' at line {line}")


class DimDeclarationError(SymbolicPoolingError):
    """Feature file disagrees with the manifest's declared dimension"""


class RaggedRowsError(SymbolicPoolingError):
    """A CSV row has a different number of values than the first row"""

    def __init__(self, line: int, expected: int, actual: int):
        self.line = line
        self.expected = expected
        self.actual = actual
        super().__init__(f"Ragged rows: line {line} has {actual} values, expected {expected}")


class NonNumericTokenError(SymbolicPoolingError):
    """A CSV token could not be parsed as a real number"""

    def __init__(self, line: int, token: str):
        self.line = line
        self.token = token
        super().__init__(f"Non-numeric token '{token}' at line {line}")


class ColumnCountMismatchError(SymbolicPoolingError):
    """A CSV file's column count differs from the expected feature dimension"""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected {expected} columns, found {actual}")


class BadMagicError(SymbolicPoolingError):
    """Binary file does not start with the expected magic bytes"""


class TruncatedFileError(SymbolicPoolingError):
    """Binary file is shorter than its header declares"""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Truncated file: expected {expected} bytes, found {actual}")


class UnsupportedVersionError(SymbolicPoolingError):
    """Binary file format version is not supported"""


class InvalidHistogramError(SymbolicPoolingError):
    """Histogram fields violate the histogram invariants"""
