"""Offline unit-embedding exporter.

Encodes every discourse unit of canonical JSON bundles with a
pretrained transformer (CLS pooling) and writes the ``AEMB`` binary
format consumed by the parsing core. Strictly an embedding producer:
no training, no parsing.
"""

from .aemb import write_aemb
from .exporter import ExportJob, export

__all__ = ["ExportJob", "export", "write_aemb"]
__version__ = "0.1.0"
