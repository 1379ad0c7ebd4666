"""Pluggable providers of fixed-dimension unit vectors.

The numerical head consumes one dense vector per discourse unit plus a
root vector; where those vectors come from is opaque. Two providers
ship here: a deterministic character-n-gram hash encoder for desk-scale
runs, and a file-backed provider reading the ``AEMB`` binary format
produced by the offline exporter.

``AEMB`` layout (little-endian): magic ``AEMB``, version u16, d u32,
then per record a u16-length-prefixed UTF-8 doc id, unit index u32,
and d float32 values; the file ends with a CRC32 (u32) of all
preceding bytes.
"""

from __future__ import annotations

import hashlib
import struct
import warnings
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import DiscourseUnit, Document
from .errors import EmbeddingCorruptionError, EmbeddingFormatError

MAGIC = b"AEMB"
FORMAT_VERSION = 1


class EmptyTextWarning(UserWarning):
    """A unit with empty text produced an all-zero vector."""


@dataclass(frozen=True)
class UnitEmbedding:
    doc_id: str
    unit_index: int
    vector: np.ndarray  # float32, shape (d,)


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Stacked unit vectors with the root vector as row 0."""

    V: np.ndarray  # float64, shape (n + 1, d)

    def __post_init__(self):
        if self.V.ndim != 2 or self.V.shape[0] < 2:
            raise ValueError("embedding matrix needs a root row and at least one unit")
        if not np.all(np.isfinite(self.V)):
            raise ValueError("embedding matrix contains non-finite entries")

    @property
    def n(self) -> int:
        return self.V.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.V.shape[1]


def make_root_vector(dim: int, seed: int) -> np.ndarray:
    """Deterministic root vector, entries uniform in [-0.1, 0.1]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.1, 0.1, size=dim)


def _ngrams(text: str) -> Iterable[str]:
    padded = f"\x02{text}\x03"
    for size in (2, 3):
        for i in range(len(padded) - size + 1):
            yield padded[i : i + size]


def hash_encoder(unit: DiscourseUnit | str, dim: int, seed: int) -> np.ndarray:
    """Signed character-n-gram hashing into ``dim`` buckets, L2-normalized.

    Deterministic in (text, seed); independent of process hash
    randomization.
    """
    if dim < 8:
        raise ValueError(f"dimension {dim} too small, need at least 8")
    text = unit.text if isinstance(unit, DiscourseUnit) else unit
    vec = np.zeros(dim, dtype=np.float64)
    if not text:
        warnings.warn("empty unit text encodes to the zero vector", EmptyTextWarning)
        return vec
    key = seed.to_bytes(8, "little", signed=True)
    for gram in _ngrams(text):
        digest = hashlib.blake2b(gram.encode("utf-8"), key=key, digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        bucket = value % dim
        sign = 1.0 if (value >> 63) & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


class HashProvider:
    """Embeds any unit sequence on the fly with the hash encoder."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def unit_matrix(self, doc_id: str, units: Sequence[DiscourseUnit]) -> np.ndarray:
        return np.stack([hash_encoder(u, self.dim, self.seed) for u in units])

    def document_matrix(self, doc: Document) -> np.ndarray:
        return self.unit_matrix(doc.id, doc.units)


class FileProvider:
    """Serves vectors preloaded from an ``AEMB`` file."""

    def __init__(self, path: str | Path):
        self._by_doc = load_embeddings(path)
        first = next(iter(self._by_doc.values()))
        self.dim = len(first[0].vector)

    def unit_matrix(self, doc_id: str, units: Sequence[DiscourseUnit]) -> np.ndarray:
        if doc_id not in self._by_doc:
            raise EmbeddingFormatError(f"no embeddings for document {doc_id}")
        records = self._by_doc[doc_id]
        if len(records) != len(units):
            raise EmbeddingFormatError(
                f"document {doc_id} has {len(units)} units but {len(records)} vectors"
            )
        return np.stack([r.vector.astype(np.float64) for r in records])

    def document_matrix(self, doc: Document) -> np.ndarray:
        return self.unit_matrix(doc.id, doc.units)


def build_matrix(unit_vectors: np.ndarray, root_vector: np.ndarray) -> EmbeddingMatrix:
    if unit_vectors.shape[1] != root_vector.shape[0]:
        raise ValueError("root vector dimension does not match unit vectors")
    V = np.vstack([root_vector[None, :], unit_vectors]).astype(np.float64)
    return EmbeddingMatrix(V=V)


def write_embeddings(
    path: str | Path, by_doc: Mapping[str, Sequence[np.ndarray] | np.ndarray]
):
    """Write vectors grouped by document in unit order."""
    dims = set()
    for vectors in by_doc.values():
        for v in vectors:
            dims.add(len(v))
    if len(dims) != 1:
        raise EmbeddingFormatError(f"vectors disagree on dimension: {sorted(dims)}")
    dim = dims.pop()

    payload = bytearray()
    payload += MAGIC
    payload += struct.pack("<HI", FORMAT_VERSION, dim)
    for doc_id, vectors in by_doc.items():
        doc_bytes = doc_id.encode("utf-8")
        for idx, v in enumerate(vectors, start=1):
            payload += struct.pack("<H", len(doc_bytes))
            payload += doc_bytes
            payload += struct.pack("<I", idx)
            payload += np.asarray(v, dtype="<f4").tobytes()
    payload += struct.pack("<I", zlib.crc32(bytes(payload)))
    Path(path).write_bytes(bytes(payload))


def load_embeddings(path: str | Path) -> dict[str, list[UnitEmbedding]]:
    """Read an ``AEMB`` file into vectors grouped by document."""
    raw = Path(path).read_bytes()
    if len(raw) < 14:
        raise EmbeddingCorruptionError(f"{path}: file too short")
    if raw[:4] != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {raw[:4]!r}")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) != stored_crc:
        raise EmbeddingCorruptionError(f"{path}: checksum mismatch")
    version, dim = struct.unpack_from("<HI", raw, 4)
    if version != FORMAT_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")

    out: dict[str, list[UnitEmbedding]] = {}
    pos = 10
    end = len(raw) - 4
    while pos < end:
        if pos + 2 > end:
            raise EmbeddingCorruptionError(f"{path}: truncated record header")
        (id_len,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        if pos + id_len + 4 + 4 * dim > end:
            raise EmbeddingCorruptionError(f"{path}: truncated record")
        doc_id = raw[pos : pos + id_len].decode("utf-8")
        pos += id_len
        (unit_index,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        vector = np.frombuffer(raw, dtype="<f4", count=dim, offset=pos).copy()
        pos += 4 * dim
        out.setdefault(doc_id, []).append(
            UnitEmbedding(doc_id=doc_id, unit_index=unit_index, vector=vector)
        )
    for doc_id, records in out.items():
        records.sort(key=lambda r: r.unit_index)
        expected = list(range(1, len(records) + 1))
        if [r.unit_index for r in records] != expected:
            raise EmbeddingFormatError(f"{path}: unit indices of {doc_id} are not 1..n")
    return out
