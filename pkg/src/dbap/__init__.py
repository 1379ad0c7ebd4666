"""Argument-structure parsing over discourse units.

The package covers the full desk-scale pipeline: corpus ingestion
(Microtexts-style argument graphs), RST tree handling and dependency
reduction, agreement statistics between discourse analyses, a small
dense neural kernel, the biaffine argument parser with optional
discourse coefficients, evaluation, and a command-line surface.
"""

__version__ = "0.1.0"
