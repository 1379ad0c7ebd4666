"""Data model and ingestion for argumentative documents.

Loads Microtexts-style argument-graph XML into documents of
argumentative discourse units (ADUs) plus a labeled dependency tree,
simplifies the raw edge inventory down to {cc, support, attack},
bundles paraphrase variants with their shared gold tree, and
round-trips everything through a canonical JSON format.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    AlignmentError,
    FunctionMappingError,
    IntegrityError,
    StructureError,
    VariantReferenceError,
    XmlParseError,
)


class UnitKind(str, Enum):
    EDU = "edu"
    ADU = "adu"


class Language(str, Enum):
    EN = "en"
    RU = "ru"


class Variant(str, Enum):
    ORIGINAL = "original"
    BACK_TRANSLATED = "back-translated"


class ArgumentFunction(str, Enum):
    CC = "cc"
    SUPPORT = "support"
    ATTACK = "attack"
    SAME_ARG = "same-arg"


class Role(str, Enum):
    PRO = "pro"
    OPP = "opp"


#: raw Microtexts edge types that express an argumentative move,
#: mapped to the simplified function set
RAW_FUNCTION_MAP = {
    "sup": ArgumentFunction.SUPPORT,
    "exa": ArgumentFunction.SUPPORT,
    "add": ArgumentFunction.SUPPORT,
    "reb": ArgumentFunction.ATTACK,
    "und": ArgumentFunction.ATTACK,
    "cc": ArgumentFunction.CC,
}


@dataclass(frozen=True)
class DiscourseUnit:
    """A text span carrying one discourse or argumentative move."""

    id: str
    text: str
    span: tuple[int, int]
    kind: UnitKind

    def __post_init__(self):
        start, end = self.span
        if not 0 <= start < end:
            raise ValueError(f"unit {self.id}: bad span {self.span}")
        if end - start != len(self.text):
            raise ValueError(f"unit {self.id}: span length does not match its text")


@dataclass(frozen=True)
class Document:
    """An ordered sequence of discourse units with a variant identity."""

    id: str
    language: Language
    variant: Variant
    units: tuple[DiscourseUnit, ...]
    source_doc_id: str | None = None

    def __post_init__(self):
        if len(self.units) < 1:
            raise ValueError(f"document {self.id} has no units")
        ids = [u.id for u in self.units]
        if len(set(ids)) != len(ids):
            raise ValueError(f"document {self.id} has duplicate unit ids")
        prev_end = -1
        for u in self.units:
            if u.span[0] < prev_end:
                raise ValueError(
                    f"document {self.id}: unit {u.id} overlaps its predecessor"
                )
            prev_end = u.span[1]

    @property
    def n(self) -> int:
        return len(self.units)

    @property
    def text(self) -> str:
        """Document text reconstructed from unit spans (gaps are spaces)."""
        length = self.units[-1].span[1]
        buf = [" "] * length
        for u in self.units:
            buf[u.span[0] : u.span[1]] = u.text
        return "".join(buf)


@dataclass(frozen=True)
class ArgumentTree:
    """Labeled dependency tree over a document's units.

    ``heads`` maps 1-based dependent indices to parent indices, with 0
    reserved for the fictional root. ``raw_functions`` preserves the
    corpus edge types; ``functions`` holds the simplified inventory and
    is absent until :func:`simplify_functions` runs.
    """

    doc_id: str
    heads: Mapping[int, int]
    functions: Mapping[int, ArgumentFunction] | None = None
    raw_functions: Mapping[int, str] | None = None
    roles: Mapping[int, Role] | None = None

    def __post_init__(self):
        n = len(self.heads)
        if set(self.heads) != set(range(1, n + 1)):
            raise StructureError(f"{self.doc_id}: heads must cover 1..{n}")
        roots = [d for d, h in self.heads.items() if h == 0]
        if len(roots) != 1:
            raise StructureError(
                f"{self.doc_id}: expected exactly one root arc, got {len(roots)}"
            )
        for d, h in self.heads.items():
            if not 0 <= h <= n or h == d:
                raise StructureError(f"{self.doc_id}: bad head {d}->{h}")
        # every node must reach the root without revisiting
        for start in self.heads:
            seen = set()
            node = start
            while node != 0:
                if node in seen:
                    raise StructureError(f"{self.doc_id}: cycle through {node}")
                seen.add(node)
                node = self.heads[node]
        if self.functions is not None:
            if set(self.functions) != set(self.heads):
                raise StructureError(f"{self.doc_id}: functions must cover all arcs")
            root = roots[0]
            for d, f in self.functions.items():
                if (f == ArgumentFunction.CC) != (d == root):
                    raise StructureError(
                        f"{self.doc_id}: cc must label the root arc and only it"
                    )

    @property
    def n(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return next(d for d, h in self.heads.items() if h == 0)

    def children(self, node: int) -> list[int]:
        return sorted(d for d, h in self.heads.items() if h == node)


@dataclass
class VariantGroup:
    """An original document and its paraphrases, sharing one gold tree."""

    tree: ArgumentTree
    documents: list[Document]

    @property
    def original(self) -> Document:
        return self.documents[0]


def load_arggraph_xml(
    path: str | Path,
    language: Language = Language.EN,
    variant: Variant = Variant.ORIGINAL,
    source_doc_id: str | None = None,
) -> tuple[Document, ArgumentTree]:
    """Load one Microtexts-style argument-graph XML file.

    Returns the document with ADU-level units and the gold dependency
    tree with raw edge types preserved. Functions are not simplified
    here; run :func:`simplify_functions` on the result.
    """
    path = Path(path)
    try:
        root = ET.parse(str(path)).getroot()
    except ET.ParseError as e:
        raise XmlParseError(f"{path}: malformed XML at line {e.position[0]}") from e

    doc_id = root.get("id") or path.stem
    edu_order: list[str] = []
    edu_text: dict[str, str] = {}
    for el in root.iter("edu"):
        edu_order.append(el.get("id"))
        edu_text[el.get("id")] = (el.text or "").strip()
    adu_ids: list[str] = [el.get("id") for el in root.iter("adu")]
    edges = [
        (el.get("id"), el.get("src"), el.get("trg"), el.get("type"))
        for el in root.iter("edge")
    ]
    edge_src = {eid: src for eid, src, _, _ in edges}

    known = set(edu_order) | set(adu_ids) | set(edge_src)
    for eid, src, trg, _ in edges:
        for ref in (src, trg):
            if ref not in known:
                raise IntegrityError(f"{doc_id}: edge {eid} references unknown id {ref!r}")

    # segmentation edges assemble ADU texts from their EDUs
    adu_edus: dict[str, list[str]] = {a: [] for a in adu_ids}
    arg_edges = []
    for eid, src, trg, typ in edges:
        if typ == "seg":
            if src not in edu_text or trg not in adu_edus:
                raise IntegrityError(f"{doc_id}: seg edge {eid} must link an edu to an adu")
            adu_edus[trg].append(src)
        else:
            arg_edges.append((eid, src, trg, typ))

    if not adu_ids:
        raise IntegrityError(f"{doc_id}: file defines no adus")
    edu_pos = {e: i for i, e in enumerate(edu_order)}
    for a, members in adu_edus.items():
        if not members:
            raise IntegrityError(f"{doc_id}: adu {a} has no segmentation edge")
        members.sort(key=edu_pos.__getitem__)
    ordered_adus = sorted(adu_ids, key=lambda a: edu_pos[adu_edus[a][0]])
    adu_index = {a: i + 1 for i, a in enumerate(ordered_adus)}

    units = []
    cursor = 0
    for a in ordered_adus:
        text = " ".join(edu_text[e] for e in adu_edus[a])
        units.append(
            DiscourseUnit(id=a, text=text, span=(cursor, cursor + len(text)), kind=UnitKind.ADU)
        )
        cursor += len(text) + 1
    document = Document(
        id=doc_id,
        language=language,
        variant=variant,
        units=tuple(units),
        source_doc_id=source_doc_id,
    )

    heads: dict[int, int] = {}
    raw: dict[int, str] = {}
    for eid, src, trg, typ in arg_edges:
        if src not in adu_index:
            raise IntegrityError(f"{doc_id}: edge {eid} source {src!r} is not an adu")
        # edges may target another edge (undercut / linked support);
        # the dependency parent is then that edge's source unit
        if trg in adu_index:
            parent = adu_index[trg]
        elif trg in edge_src and edge_src[trg] in adu_index:
            parent = adu_index[edge_src[trg]]
        else:
            raise IntegrityError(f"{doc_id}: edge {eid} target {trg!r} cannot be resolved")
        dep = adu_index[src]
        if dep in heads:
            raise StructureError(f"{doc_id}: adu {src} has more than one outgoing edge")
        heads[dep] = parent
        raw[dep] = typ

    dangling = [i for a, i in adu_index.items() if i not in heads]
    if len(dangling) != 1:
        raise StructureError(
            f"{doc_id}: expected exactly one parentless adu, got {len(dangling)}"
        )
    heads[dangling[0]] = 0
    raw[dangling[0]] = "cc"
    tree = ArgumentTree(doc_id=doc_id, heads=heads, raw_functions=raw)
    return document, tree


def simplify_functions(tree: ArgumentTree) -> ArgumentTree:
    """Map raw corpus edge types onto {cc, support, attack}.

    ``sup``/``exa``/``add`` become support, ``reb``/``und`` become
    attack, the root arc is the central claim. Idempotent.
    """
    if tree.raw_functions is None:
        if tree.functions is not None:
            return tree
        raise FunctionMappingError(f"{tree.doc_id}: tree carries no raw edge types")
    unknown = sorted(set(tree.raw_functions.values()) - set(RAW_FUNCTION_MAP))
    if unknown:
        raise FunctionMappingError(
            f"{tree.doc_id}: unknown raw edge type(s): {', '.join(unknown)}"
        )
    functions = {d: RAW_FUNCTION_MAP[t] for d, t in tree.raw_functions.items()}
    functions[tree.root] = ArgumentFunction.CC
    return replace(tree, functions=functions)


def bundle_variants(
    originals: Sequence[tuple[Document, ArgumentTree]],
    variants: Iterable[Document] = (),
) -> list[VariantGroup]:
    """Group originals with their paraphrases under one gold tree.

    Paraphrase variants preserve the argument structure, so a variant
    must have the same unit count as its original; anything else is
    rejected rather than realigned.
    """
    by_id = {doc.id: VariantGroup(tree=tree, documents=[doc]) for doc, tree in originals}
    if len(by_id) != len(originals):
        raise VariantReferenceError("duplicate original document ids")
    for var in variants:
        if var.source_doc_id is None or var.source_doc_id not in by_id:
            raise VariantReferenceError(
                f"variant {var.id} references missing original {var.source_doc_id!r}"
            )
        group = by_id[var.source_doc_id]
        if var.n != group.original.n:
            raise AlignmentError(
                f"variant {var.id} has {var.n} units, original "
                f"{group.original.id} has {group.original.n}"
            )
        group.documents.append(var)
    return list(by_id.values())


def document_to_dict(doc: Document, tree: ArgumentTree | None = None) -> dict:
    """Canonical JSON form of a document and (optionally) its tree."""
    out: dict = {
        "id": doc.id,
        "language": doc.language.value,
        "variant": doc.variant.value,
        "units": [
            {"id": u.id, "text": u.text, "span": list(u.span), "kind": u.kind.value}
            for u in doc.units
        ],
    }
    if doc.source_doc_id is not None:
        out["source_doc_id"] = doc.source_doc_id
    if tree is not None:
        arg: dict = {"heads": {str(d): h for d, h in sorted(tree.heads.items())}}
        if tree.functions is not None:
            arg["functions"] = {
                str(d): f.value for d, f in sorted(tree.functions.items())
            }
        if tree.raw_functions is not None:
            arg["raw_functions"] = {
                str(d): t for d, t in sorted(tree.raw_functions.items())
            }
        if tree.roles is not None:
            arg["roles"] = {str(d): r.value for d, r in sorted(tree.roles.items())}
        out["argument"] = arg
    return out


def document_from_dict(data: dict) -> tuple[Document, ArgumentTree | None]:
    units = tuple(
        DiscourseUnit(
            id=u["id"], text=u["text"], span=tuple(u["span"]), kind=UnitKind(u["kind"])
        )
        for u in data["units"]
    )
    doc = Document(
        id=data["id"],
        language=Language(data["language"]),
        variant=Variant(data["variant"]),
        units=units,
        source_doc_id=data.get("source_doc_id"),
    )
    tree = None
    if "argument" in data:
        arg = data["argument"]
        heads = {int(d): h for d, h in arg["heads"].items()}
        functions = None
        if "functions" in arg:
            functions = {int(d): ArgumentFunction(f) for d, f in arg["functions"].items()}
        raw = None
        if "raw_functions" in arg:
            raw = {int(d): t for d, t in arg["raw_functions"].items()}
        roles = None
        if "roles" in arg:
            roles = {int(d): Role(r) for d, r in arg["roles"].items()}
        tree = ArgumentTree(
            doc_id=doc.id, heads=heads, functions=functions, raw_functions=raw, roles=roles
        )
    return doc, tree


def save_document_json(path: str | Path, doc: Document, tree: ArgumentTree | None = None):
    Path(path).write_text(
        json.dumps(document_to_dict(doc, tree), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_document_json(path: str | Path) -> tuple[Document, ArgumentTree | None]:
    return document_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
