"""
File formats: dataset manifests, tracklet feature files (CSV and binary),
representation files, distance matrices and evaluation reports.

Binary layouts are documented in FORMATS.md. All multi-byte values are
little-endian, and every loader checks declared sizes against the file size
before reading a payload.
"""

import logging
import os
import re
import struct
from dataclasses import dataclass
from io import StringIO
from pathlib import Path
from typing import BinaryIO, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import TypeAdapter

from .core_types import FeatureHistogram, FrameFeatureMatrix, QuantileFunction, SymbolicRepresentation, Tracklet
from .errors import (
    BadMagicError,
    ColumnCountMismatchError,
    DimDeclarationError,
    DimensionMismatchError,
    DuplicatePathError,
    EmptyInputError,
    ManifestParseError,
    NonNumericTokenError,
    RaggedRowsError,
    SymbolicPoolingError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .metric import DistanceMatrix
from .retrieval import EvalReport

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

FORMAT_VERSION = 1
TRACKLET_MAGIC = b"SYTP"
REPRESENTATION_MAGIC = b"SYRP"
DISTANCE_MAGIC = b"SYDM"

# magic, version, two u32 dimensions
HEADER = struct.Struct("<4sBII")
FEATURE_HEADER = struct.Struct("<ddI")
NO_STRING = 0xFFFFFFFF

SPLITS = ("query", "gallery", "train")
MANIFEST_COLUMNS = ["tracklet_id", "identity", "camera", "split", "path"]
_DIM_LINE = re.compile(r"^feature_dim=(\d+)$")


# Manifests

class ManifestEntry(NamedTuple):
    tracklet_id: str
    identity: str
    camera: Optional[str]
    split: str
    path: str


@dataclass(frozen=True)
class Manifest:
    """Declared feature dimension plus one entry per tracklet file"""

    feature_dim: int
    entries: Tuple[ManifestEntry, ...]
    root: Path = Path(".")

    def split(self, name: str) -> List[ManifestEntry]:
        return [entry for entry in self.entries if entry.split == name]

    def resolve(self, entry: ManifestEntry) -> Path:
        path = Path(entry.path)
        return path if path.is_absolute() else self.root / path


def load_manifest(path: PathLike) -> Manifest:
    """
    Parse a manifest: a 'feature_dim=M' line, a CSV header, then one entry per line

    Raises:
        ManifestParseError: malformed line or field (1-based line numbers)
        DuplicatePathError: two entries share a feature path
        DimDeclarationError: a referenced file disagrees with feature_dim
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    first, _, body = text.partition("\n")

    match = _DIM_LINE.match(first.strip())
    if not match or int(match.group(1)) < 1:
        raise ManifestParseError("Expected 'feature_dim=<positive int>'", line=1, field="feature_dim")
    feature_dim = int(match.group(1))

    try:
        frame = pd.read_csv(StringIO(body), dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise ManifestParseError("Missing column header", line=2)
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        line = int(found.group(1)) + 1 if found else 2
        logger.error(f"Manifest {path} is malformed: {str(e)}")
        raise ManifestParseError("Wrong number of fields", line=line)

    frame = frame.fillna("")
    if list(frame.columns) != MANIFEST_COLUMNS:
        raise ManifestParseError(f"Header must be {','.join(MANIFEST_COLUMNS)}", line=2)

    entries = []
    seen = {}
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 3
        for name in ("tracklet_id", "identity", "split", "path"):
            if not getattr(row, name).strip():
                raise ManifestParseError("Empty field", line=line, field=name)
        if row.split not in SPLITS:
            raise ManifestParseError(f"Split must be one of {SPLITS}", line=line, field="split")
        if row.path in seen:
            raise DuplicatePathError(row.path, line)
        seen[row.path] = line
        entries.append(ManifestEntry(row.tracklet_id, row.identity, row.camera or None, row.split, row.path))

    manifest = Manifest(feature_dim=feature_dim, entries=tuple(entries), root=path.parent)
    check_declared_dimension(manifest)
    logger.info(f"Loaded manifest {path} with {len(entries)} entries (M={feature_dim})")
    return manifest


def check_declared_dimension(manifest: Manifest) -> None:
    """
    Compare every referenced file's feature count with the declared M

    Only headers are read: the binary header or the first CSV row. Missing or
    unreadable files are skipped and fail later when their tracklet is loaded.

    Raises:
        DimDeclarationError: a file's feature count differs from M
    """
    unchecked = 0
    for entry in manifest.entries:
        path = manifest.resolve(entry)
        try:
            cols = peek_feature_count(path)
        except (OSError, UnicodeDecodeError, SymbolicPoolingError):
            unchecked += 1
            continue
        if cols is not None and cols != manifest.feature_dim:
            raise DimDeclarationError(
                f"{entry.path} has {cols} features but the manifest declares {manifest.feature_dim}"
            )
    if unchecked:
        logger.warning(f"{unchecked} of {len(manifest.entries)} manifest files are missing or unreadable, their dimension is unchecked")


def save_manifest(path: PathLike, manifest: Manifest) -> None:
    frame = pd.DataFrame([entry._asdict() for entry in manifest.entries], columns=MANIFEST_COLUMNS)
    frame["camera"] = frame["camera"].fillna("")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"feature_dim={manifest.feature_dim}\n")
        frame.to_csv(f, index=False, lineterminator="\n")


# Tracklet feature files

def load_tracklet_csv(path: PathLike, expected_m: Optional[int] = None) -> FrameFeatureMatrix:
    """
    One frame per line, comma-separated reals

    Parsed line by line rather than with pandas so errors can name the
    offending line and token.

    Raises:
        RaggedRowsError: a line with a different value count than the first
        NonNumericTokenError: a token that is not a real number
        ColumnCountMismatchError: column count differs from expected_m
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise RaggedRowsError(line_no, width, len(tokens))
            try:
                rows.append([float(token) for token in tokens])
            except ValueError:
                bad = next(token for token in tokens if not _is_number(token))
                raise NonNumericTokenError(line_no, bad.strip())

    if not rows:
        raise EmptyInputError(f"No frames in {path}")
    if expected_m is not None and width != expected_m:
        raise ColumnCountMismatchError(expected_m, width)
    return FrameFeatureMatrix.from_array(np.array(rows, dtype=np.float64))


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def save_tracklet_csv(path: PathLike, matrix: FrameFeatureMatrix) -> None:
    """Write values rounded to 32-bit precision (9 significant digits round-trip)"""
    np.savetxt(path, matrix.values.astype(np.float32), fmt="%.9g", delimiter=",")


class _BinaryReader:
    """Bounds-checked little-endian reads from an open file"""

    def __init__(self, f: BinaryIO, size: int):
        self.f = f
        self.size = size

    def remaining(self) -> int:
        return self.size - self.f.tell()

    def require(self, count: int) -> None:
        if count > self.remaining():
            raise TruncatedFileError(expected=self.f.tell() + count, actual=self.size)

    def read(self, count: int) -> bytes:
        self.require(count)
        return self.f.read(count)

    def unpack(self, layout: struct.Struct) -> tuple:
        return layout.unpack(self.read(layout.size))

    def read_u32(self) -> int:
        return struct.unpack("<I", self.read(4))[0]

    def read_array(self, count: int, dtype: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        self.require(count * itemsize)
        return np.frombuffer(self.read(count * itemsize), dtype=dtype)

    def read_string(self) -> Optional[str]:
        length = self.read_u32()
        if length == NO_STRING:
            return None
        return self.read(length).decode("utf-8")

    def expect_end(self) -> None:
        if self.remaining() != 0:
            raise DimensionMismatchError(expected=self.f.tell(), actual=self.size)


def _open_checked(f: BinaryIO, magic: bytes) -> Tuple[_BinaryReader, int, int]:
    """Validate magic and version, return the reader and the two header dimensions"""
    size = os.fstat(f.fileno()).st_size
    reader = _BinaryReader(f, size)
    prefix = f.read(len(magic))
    if prefix != magic:
        raise BadMagicError(f"Expected magic {magic!r}, found {prefix!r}")
    f.seek(0)
    _, version, first, second = reader.unpack(HEADER)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"Format version {version} is not supported (expected {FORMAT_VERSION})")
    return reader, first, second


def _write_string(f: BinaryIO, value: Optional[str]) -> None:
    if value is None:
        f.write(struct.pack("<I", NO_STRING))
        return
    data = value.encode("utf-8")
    f.write(struct.pack("<I", len(data)))
    f.write(data)


def save_tracklet_bin(path: PathLike, matrix: FrameFeatureMatrix) -> None:
    values = matrix.values
    with open(path, "wb") as f:
        f.write(HEADER.pack(TRACKLET_MAGIC, FORMAT_VERSION, values.shape[0], values.shape[1]))
        f.write(values.astype("<f4").tobytes(order="C"))


def load_tracklet_bin(path: PathLike) -> FrameFeatureMatrix:
    """
    Raises:
        BadMagicError, UnsupportedVersionError
        TruncatedFileError: payload shorter than N x M x 4 bytes
    """
    with open(path, "rb") as f:
        reader, rows, cols = _open_checked(f, TRACKLET_MAGIC)
        if rows < 1 or cols < 1:
            raise DimensionMismatchError(expected=1, actual=rows * cols)
        payload = reader.read_array(rows * cols, "<f4")
        reader.expect_end()
    return FrameFeatureMatrix(rows=rows, cols=cols, data=payload.astype(np.float64))


def load_tracklet_file(path: PathLike, expected_m: Optional[int] = None) -> FrameFeatureMatrix:
    """Dispatch on extension: .csv is text, anything else the binary format"""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_tracklet_csv(path, expected_m)
    matrix = load_tracklet_bin(path)
    if expected_m is not None and matrix.cols != expected_m:
        raise ColumnCountMismatchError(expected_m, matrix.cols)
    return matrix


def peek_feature_count(path: PathLike) -> Optional[int]:
    """Feature count from a tracklet file's header, or None for a CSV with no rows"""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    return len(line.strip().split(","))
        return None
    with open(path, "rb") as f:
        _, _, cols = _open_checked(f, TRACKLET_MAGIC)
    return cols


def load_entry_tracklet(manifest: Manifest, entry: ManifestEntry) -> Tracklet:
    """
    Raises:
        DimDeclarationError: the file's feature count differs from the manifest's
    """
    try:
        matrix = load_tracklet_file(manifest.resolve(entry), manifest.feature_dim)
    except ColumnCountMismatchError as e:
        raise DimDeclarationError(
            f"{entry.path} has {e.actual} features but the manifest declares {manifest.feature_dim}"
        ) from e
    return Tracklet(id=entry.identity, features=matrix, camera=entry.camera, name=entry.tracklet_id)


def iter_manifest_tracklets(manifest: Manifest, split: Optional[str] = None) -> Iterator[Tracklet]:
    for entry in manifest.entries:
        if split is None or entry.split == split:
            yield load_entry_tracklet(manifest, entry)


# Representations

def save_representation(path: PathLike, rep: SymbolicRepresentation) -> None:
    with open(path, "wb") as f:
        f.write(HEADER.pack(REPRESENTATION_MAGIC, FORMAT_VERSION, rep.feature_count, rep.t_samples))
        for value in (rep.identity, rep.camera, rep.name):
            _write_string(f, value)
        for q in rep.per_feature:
            h = q.histogram
            f.write(FEATURE_HEADER.pack(h.lo, h.hi, h.bin_count))
            f.write(h.freqs.astype("<f8").tobytes())


def load_representation(path: PathLike) -> SymbolicRepresentation:
    with open(path, "rb") as f:
        reader, features, t_samples = _open_checked(f, REPRESENTATION_MAGIC)
        if features < 1 or t_samples < 1:
            raise DimensionMismatchError(expected=1, actual=features * t_samples)
        identity = reader.read_string() or ""
        camera = reader.read_string()
        name = reader.read_string()

        per_feature = []
        for _ in range(features):
            lo, hi, bins = reader.unpack(FEATURE_HEADER)
            freqs = reader.read_array(bins, "<f8")
            per_feature.append(QuantileFunction(FeatureHistogram(lo=lo, hi=hi, freqs=freqs.astype(np.float64))))
        reader.expect_end()

    return SymbolicRepresentation(
        per_feature=tuple(per_feature), t_samples=t_samples, identity=identity, camera=camera, name=name
    )


def representation_filename(rep: SymbolicRepresentation, index: int) -> str:
    stem = rep.name or f"{rep.identity}_{index:06d}"
    return re.sub(r"[^A-Za-z0-9._-]", "_", stem) + ".rep"


def save_representation_dir(directory: PathLike, reps: Sequence[SymbolicRepresentation]) -> List[Path]:
    """
    Write one file per representation, named after it

    Names that clash once sanitized (or that differ only by case) get the
    position in reps appended, so no representation overwrites another.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    used = set()
    for index, rep in enumerate(reps):
        filename = representation_filename(rep, index)
        while filename.casefold() in used:
            filename = f"{filename[:-len('.rep')]}_{index:06d}.rep"
            logger.warning(f"Representation '{rep.name or rep.identity}' clashes with an earlier file name, writing {filename}")
        used.add(filename.casefold())
        path = directory / filename
        save_representation(path, rep)
        paths.append(path)
    return paths


def load_representation_dir(directory: PathLike) -> List[SymbolicRepresentation]:
    """All *.rep files of a directory, in file-name order"""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Representation directory not found: {directory}")
    reps = [load_representation(path) for path in sorted(directory.glob("*.rep"))]
    logger.info(f"Loaded {len(reps)} representations from {directory}")
    return reps


# Distance matrices

def save_distance_matrix(path: PathLike, matrix: DistanceMatrix) -> None:
    """Header, Q query ids, G gallery ids, then Q x G float64 row-major"""
    query_ids = matrix.query_ids or tuple(str(i) for i in range(matrix.rows))
    gallery_ids = matrix.gallery_ids or tuple(str(j) for j in range(matrix.cols))
    with open(path, "wb") as f:
        f.write(HEADER.pack(DISTANCE_MAGIC, FORMAT_VERSION, matrix.rows, matrix.cols))
        for value in query_ids + gallery_ids:
            _write_string(f, value)
        f.write(matrix.data.astype("<f8").tobytes(order="C"))


def load_distance_matrix(path: PathLike) -> DistanceMatrix:
    with open(path, "rb") as f:
        reader, rows, cols = _open_checked(f, DISTANCE_MAGIC)
        # each id takes at least its 4-byte length prefix
        reader.require(4 * (rows + cols))
        query_ids = tuple(reader.read_string() or "" for _ in range(rows))
        gallery_ids = tuple(reader.read_string() or "" for _ in range(cols))
        data = reader.read_array(rows * cols, "<f8").reshape(rows, cols)
        reader.expect_end()
    return DistanceMatrix(data.astype(np.float64), query_ids, gallery_ids)


# Reports

_REPORT_ADAPTER = TypeAdapter(EvalReport)


def save_report(path: PathLike, report: EvalReport) -> None:
    Path(path).write_bytes(_REPORT_ADAPTER.dump_json(report, indent=2))


def load_report(path: PathLike) -> EvalReport:
    return _REPORT_ADAPTER.validate_json(Path(path).read_bytes())
