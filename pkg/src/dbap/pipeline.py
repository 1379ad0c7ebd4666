"""Shared data plumbing between the CLI commands and fold workers.

Bundles live one JSON document per file; RST files are matched to
documents by their ``doc_id``. Instance construction handles both
segmentation regimes: gold mode parses over the bundled ADUs, while
end-to-end mode parses over the EDU leaves of the document's RST tree
with same-arg arcs marking intra-ADU structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .corpus import (
    ArgumentTree,
    DiscourseUnit,
    Document,
    UnitKind,
    Variant,
    VariantGroup,
    bundle_variants,
    load_document_json,
)
from .encoder import FileProvider, HashProvider
from .errors import AlignmentError, DataError
from .parser import Instance, attach_same_arg
from .rst import (
    RstNode,
    load_rst_json,
    reduce_to_segmentation,
    to_dependencies,
)

SEG_GOLD = "gold"
SEG_E2E = "e2e"


def load_bundle_dir(path: str | Path) -> list[VariantGroup]:
    """Read every ``*.json`` bundle and group variants with originals."""
    path = Path(path)
    originals: list[tuple[Document, ArgumentTree]] = []
    variants: list[Document] = []
    for file in sorted(path.glob("*.json")):
        doc, tree = load_document_json(file)
        if doc.variant == Variant.ORIGINAL:
            if tree is None or tree.functions is None:
                raise DataError(f"{file}: original bundle lacks a simplified gold tree")
            originals.append((doc, tree))
        else:
            variants.append(doc)
    if not originals:
        raise DataError(f"{path}: no original documents found")
    return bundle_variants(originals, variants)


def load_rst_dir(path: str | Path) -> dict[str, RstNode]:
    path = Path(path)
    trees: dict[str, RstNode] = {}
    for file in sorted(path.glob("*.json")):
        doc_id, tree = load_rst_json(file)
        trees[doc_id] = tree
    return trees


def edu_units(doc: Document, tree: RstNode) -> list[DiscourseUnit]:
    """EDU-level units cut from the document text at the tree's leaf spans."""
    text = doc.text
    units = []
    for i, leaf in enumerate(tree.leaves(), start=1):
        start, end = leaf.span
        if end > len(text):
            raise AlignmentError(f"{doc.id}: RST leaf span {leaf.span} exceeds the text")
        units.append(
            DiscourseUnit(f"{doc.id}.edu{i}", text[start:end], (start, end), UnitKind.EDU)
        )
    return units


@dataclass
class InstanceBuilder:
    """Turns (document, gold tree) pairs into parser instances.

    ``needs_rst`` is true for the discourse-driven modes and for
    end-to-end segmentation, where the EDU layout itself comes from
    the RST tree.
    """

    provider: HashProvider | FileProvider
    segmentation: str = SEG_GOLD
    rst_trees: Mapping[str, RstNode] | None = None
    needs_rst: bool = False

    def _tree_for(self, doc: Document) -> RstNode:
        if self.rst_trees is None or doc.id not in self.rst_trees:
            raise DataError(f"no RST tree for document {doc.id}")
        return self.rst_trees[doc.id]

    def __call__(self, doc: Document, gold: ArgumentTree) -> Instance:
        if self.segmentation == SEG_E2E:
            tree = self._tree_for(doc)
            edus = edu_units(doc, tree)
            deps = to_dependencies(tree)
            gold_edu = attach_same_arg(deps, edus, doc.units, gold)
            units = self.provider.unit_matrix(doc.id, edus)
            return Instance(
                doc_id=doc.id,
                units=units,
                gold=gold_edu,
                rst=deps if self.needs_rst else None,
            )
        deps = None
        if self.needs_rst:
            tree = self._tree_for(doc)
            reduced = reduce_to_segmentation(tree, doc.units)
            if len(reduced.leaves()) != doc.n:
                raise AlignmentError(
                    f"{doc.id}: reduced tree has {len(reduced.leaves())} leaves "
                    f"for {doc.n} units"
                )
            deps = to_dependencies(reduced)
        units = self.provider.unit_matrix(doc.id, doc.units)
        return Instance(doc_id=doc.id, units=units, gold=gold, rst=deps)


def make_provider(
    embeddings: str | Path | None, hash_dim: int = 64, hash_seed: int = 0
):
    if embeddings is not None:
        return FileProvider(embeddings)
    return HashProvider(dim=hash_dim, seed=hash_seed)
