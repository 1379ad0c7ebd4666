"""Batch encoding of bundle units into CLS-pooled vectors."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aemb import aemb_bytes

DEFAULT_MODEL = "microsoft/mdeberta-v3-base"


class BundleError(ValueError):
    """A bundle file is unreadable or violates the schema."""


class EncoderMismatchError(RuntimeError):
    """The encoder produced inconsistent hidden sizes across documents."""


class EmptyTextWarning(UserWarning):
    """A unit with empty text was exported as the zero vector."""


@dataclass
class ExportJob:
    bundles: list[Path]
    out: Path
    model: str = DEFAULT_MODEL
    max_len: int = 150
    batch_size: int = 16


def read_bundle(path: Path) -> tuple[str, list[str]]:
    """Document id and unit texts, in document order."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise BundleError(f"{path}: unreadable bundle ({err})") from err
    if "id" not in data or "units" not in data:
        raise BundleError(f"{path}: bundle needs 'id' and 'units'")
    try:
        texts = [unit["text"] for unit in data["units"]]
    except (TypeError, KeyError) as err:
        raise BundleError(f"{path}: malformed unit entries") from err
    if not texts:
        raise BundleError(f"{path}: bundle has no units")
    return data["id"], texts


class ClsEncoder:
    """CLS pooling over a pretrained transformer, inference only."""

    def __init__(self, model_name: str, max_len: int, batch_size: int = 16):
        import torch
        from transformers import AutoModel, AutoTokenizer

        torch.set_num_threads(1)  # keeps repeated runs bit-identical
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name)
        self.model.eval()
        self.max_len = max_len
        self.batch_size = batch_size
        self.hidden_size = int(self.model.config.hidden_size)

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = np.zeros((len(texts), self.hidden_size), dtype=np.float32)
        nonempty = [(i, t) for i, t in enumerate(texts) if t.strip()]
        for i, text in ((i, t) for i, t in enumerate(texts) if not t.strip()):
            warnings.warn(
                f"unit {i + 1} has empty text; exporting a zero vector", EmptyTextWarning
            )
        for start in range(0, len(nonempty), self.batch_size):
            chunk = nonempty[start : start + self.batch_size]
            encoded = self.tokenizer(
                [t for _, t in chunk],
                truncation=True,
                max_length=self.max_len,
                padding=True,
                return_tensors="pt",
            )
            with self._torch.no_grad():
                hidden = self.model(**encoded).last_hidden_state
            cls = hidden[:, 0, :].to(self._torch.float32).numpy()
            if cls.shape[1] != self.hidden_size:
                raise EncoderMismatchError(
                    f"hidden size changed from {self.hidden_size} to {cls.shape[1]}"
                )
            for (i, _), row in zip(chunk, cls):
                vectors[i] = row
        return vectors


def export(job: ExportJob) -> dict:
    """Encode every bundle and write one ``AEMB`` file atomically.

    Any failure leaves no partial output: the file is staged next to
    the target and renamed only after the full payload exists.
    """
    documents = [read_bundle(path) for path in job.bundles]
    seen = set()
    for doc_id, _ in documents:
        if doc_id in seen:
            raise BundleError(f"duplicate document id {doc_id!r} across bundles")
        seen.add(doc_id)

    encoder = ClsEncoder(job.model, job.max_len, job.batch_size)
    by_doc = {doc_id: list(encoder.encode(texts)) for doc_id, texts in documents}
    payload = aemb_bytes(by_doc)

    out = Path(job.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = out.with_name(out.name + f".tmp{os.getpid()}")
    staging.write_bytes(payload)
    os.replace(staging, out)
    return {
        "documents": len(by_doc),
        "vectors": sum(len(v) for v in by_doc.values()),
        "dim": encoder.hidden_size,
        "bytes": len(payload),
    }
