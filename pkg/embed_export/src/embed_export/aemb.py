"""Writer for the ``AEMB`` embedding container.

Layout (little-endian): magic ``AEMB``, version u16, dimension u32,
then one record per vector — u16-length-prefixed UTF-8 document id,
unit index u32 (1-based, in document order), and ``dim`` float32
values — and a trailing CRC32 over everything before it.
"""

from __future__ import annotations

import struct
import zlib
from typing import Mapping, Sequence

import numpy as np

MAGIC = b"AEMB"
VERSION = 1


def aemb_bytes(by_doc: Mapping[str, Sequence[np.ndarray]]) -> bytes:
    dims = {len(v) for vectors in by_doc.values() for v in vectors}
    if len(dims) != 1:
        raise ValueError(f"vectors disagree on dimension: {sorted(dims)}")
    dim = dims.pop()
    payload = bytearray()
    payload += MAGIC
    payload += struct.pack("<HI", VERSION, dim)
    for doc_id, vectors in by_doc.items():
        doc_bytes = doc_id.encode("utf-8")
        for index, vector in enumerate(vectors, start=1):
            payload += struct.pack("<H", len(doc_bytes))
            payload += doc_bytes
            payload += struct.pack("<I", index)
            payload += np.asarray(vector, dtype="<f4").tobytes()
    payload += struct.pack("<I", zlib.crc32(bytes(payload)))
    return bytes(payload)


def write_aemb(path, by_doc: Mapping[str, Sequence[np.ndarray]]):
    from pathlib import Path

    Path(path).write_bytes(aemb_bytes(by_doc))
