"""RST constituency trees, dependency reduction, and adjacency encodings.

A tree is a nested structure of nucleus/satellite children joined by
relation labels. Converting to dependencies follows nucleus
percolation: every satellite (and every non-leftmost nucleus of a
multinuclear relation) attaches to the leftmost-nucleus leaf of its
head sibling. The dependency view feeds two encodings consumed by the
discourse-coefficient layers: a binary adjacency matrix and a one-hot
tensor over the directed label space (forward plus inverted labels).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import DiscourseUnit, Language
from .errors import AlignmentError, NuclearityError, RstFormatError, SegmentationError

NUCLEUS = "N"
SATELLITE = "S"


class Direction(str, Enum):
    FORWARD = "fwd"
    INVERTED = "inv"


@dataclass(frozen=True)
class RstNode:
    """One constituent: a leaf span or an internal node with children.

    ``nuclearities`` and ``relations`` are per-child; the head child
    (leftmost nucleus) carries relation ``None``.
    """

    span: tuple[int, int]
    children: tuple["RstNode", ...] = ()
    nuclearities: tuple[str, ...] = ()
    relations: tuple[str | None, ...] = ()

    def __post_init__(self):
        if self.span[0] >= self.span[1]:
            raise RstFormatError(f"empty span {self.span}")
        if self.is_leaf:
            return
        if len(self.children) < 2:
            raise RstFormatError("internal nodes need at least two children")
        if not (len(self.children) == len(self.nuclearities) == len(self.relations)):
            raise RstFormatError("children, nuclearities, relations must align")
        if NUCLEUS not in self.nuclearities:
            raise NuclearityError("internal node without a nucleus child")
        for nuc in self.nuclearities:
            if nuc not in (NUCLEUS, SATELLITE):
                raise RstFormatError(f"bad nuclearity {nuc!r}")
        for i, child in enumerate(self.children):
            if i != self.head_child and self.relations[i] is None:
                raise RstFormatError("non-head child without a relation label")
        # children must be ordered and non-overlapping; small gaps are
        # legal (reduced trees inherit inter-unit whitespace)
        if self.children[0].span[0] != self.span[0] or self.children[-1].span[1] != self.span[1]:
            raise SegmentationError("parent span must be the hull of its children")
        prev = self.span[0]
        for child in self.children:
            if child.span[0] < prev:
                raise SegmentationError("children overlap or are out of order")
            prev = child.span[1]

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def head_child(self) -> int:
        return self.nuclearities.index(NUCLEUS)

    def leaves(self) -> list["RstNode"]:
        if self.is_leaf:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out


@dataclass(frozen=True)
class RelationInventory:
    """Versioned, ordered relation label set for one language."""

    language: Language
    version: str
    labels: tuple[str, ...]

    @property
    def k(self) -> int:
        """Directed label count: every label forward and inverted."""
        return 2 * len(self.labels)

    def directed_index(self, label: str, direction: Direction = Direction.FORWARD) -> int:
        try:
            base = self.labels.index(label)
        except ValueError:
            raise RstFormatError(
                f"relation {label!r} not in the {self.language.value} inventory"
            ) from None
        return base if direction == Direction.FORWARD else len(self.labels) + base


def inventory_for(language: Language) -> RelationInventory:
    name = f"relations-{language.value}-v1.json"
    data = json.loads(resources.files("dbap.data").joinpath(name).read_text("utf-8"))
    return RelationInventory(
        language=Language(data["language"]),
        version=data["version"],
        labels=tuple(data["labels"]),
    )


@dataclass(frozen=True)
class RstDependencies:
    """Labeled dependency view of an RST tree.

    ``heads`` maps 1-based unit indices to head indices (0 for the
    unit heading the whole tree); ``relations`` carries the label and
    direction of every non-root arc.
    """

    heads: Mapping[int, int]
    relations: Mapping[int, tuple[str, Direction]]

    def __post_init__(self):
        n = len(self.heads)
        if set(self.heads) != set(range(1, n + 1)):
            raise RstFormatError(f"heads must cover 1..{n}")
        roots = [u for u, h in self.heads.items() if h == 0]
        if len(roots) != 1:
            raise RstFormatError(f"expected one root unit, got {len(roots)}")
        if set(self.relations) != set(self.heads) - set(roots):
            raise RstFormatError("relations must cover exactly the non-root arcs")
        for u in self.heads:
            seen = set()
            node = u
            while node != 0:
                if node in seen:
                    raise RstFormatError(f"cycle through unit {node}")
                seen.add(node)
                node = self.heads[node]

    @property
    def n(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return next(u for u, h in self.heads.items() if h == 0)

    def dependents(self, unit: int) -> list[int]:
        return sorted(u for u, h in self.heads.items() if h == unit)


def rst_tree_from_dict(data: dict) -> RstNode:
    """Build a tree from the RST JSON schema.

    Schema: ``{doc_id, leaves:[{span:[s,e]}], nodes:[{children:[...],
    nuclearities:[...], relations:[...]}]}`` where node children are
    ``{"leaf": i}`` or ``{"node": j}`` references and nodes are listed
    in preorder (index 0 is the root).
    """
    leaf_specs = data.get("leaves", [])
    if not leaf_specs:
        raise RstFormatError("tree has no leaves")
    spans = [tuple(l["span"]) for l in leaf_specs]
    prev = spans[0][0]
    for s, e in spans:
        if s != prev:
            kind = "gap" if s > prev else "overlap"
            raise SegmentationError(f"leaves do not tile the text ({kind} at offset {prev})")
        if s >= e:
            raise SegmentationError(f"empty leaf span [{s}, {e})")
        prev = e
    leaves = [RstNode(span=sp) for sp in spans]

    node_specs = data.get("nodes", [])
    if not node_specs:
        if len(leaves) != 1:
            raise RstFormatError("multiple leaves but no internal nodes")
        return leaves[0]

    used_leaves: set[int] = set()
    used_nodes: set[int] = set()

    def build(idx: int) -> RstNode:
        if idx in used_nodes:
            raise RstFormatError(f"node {idx} referenced twice")
        used_nodes.add(idx)
        spec = node_specs[idx]
        children = []
        for ref in spec["children"]:
            if "leaf" in ref:
                li = ref["leaf"]
                if not 0 <= li < len(leaves):
                    raise RstFormatError(f"leaf index {li} out of range")
                if li in used_leaves:
                    raise RstFormatError(f"leaf {li} referenced twice")
                used_leaves.add(li)
                children.append(leaves[li])
            elif "node" in ref:
                ni = ref["node"]
                if not 0 <= ni < len(node_specs):
                    raise RstFormatError(f"node index {ni} out of range")
                if ni <= idx:
                    raise RstFormatError("node children must come later in preorder")
                children.append(build(ni))
            else:
                raise RstFormatError(f"bad child reference {ref!r}")
        span = (children[0].span[0], children[-1].span[1])
        return RstNode(
            span=span,
            children=tuple(children),
            nuclearities=tuple(spec["nuclearities"]),
            relations=tuple(spec["relations"]),
        )

    tree = build(0)
    if len(used_nodes) != len(node_specs):
        raise RstFormatError("unreachable internal nodes")
    if len(used_leaves) != len(leaves):
        raise RstFormatError("unreachable leaves")
    return tree


def rst_tree_to_dict(doc_id: str, tree: RstNode) -> dict:
    """Serialize a tree back into the RST JSON schema."""
    leaves = tree.leaves()
    leaf_index = {id(l): i for i, l in enumerate(leaves)}
    nodes: list[dict] = []

    def visit(node: RstNode) -> dict:
        spec: dict = {"children": [], "nuclearities": list(node.nuclearities),
                      "relations": list(node.relations)}
        my_idx = len(nodes)
        nodes.append(spec)
        for child in node.children:
            if child.is_leaf:
                spec["children"].append({"leaf": leaf_index[id(child)]})
            else:
                spec["children"].append({"node": None})  # patched below
                pos = len(spec["children"]) - 1
                child_idx = len(nodes)
                visit(child)
                spec["children"][pos] = {"node": child_idx}
        return spec

    if not tree.is_leaf:
        visit(tree)
    return {
        "doc_id": doc_id,
        "leaves": [{"span": list(l.span)} for l in leaves],
        "nodes": nodes,
    }


def parse_rst_json(path: str | Path) -> RstNode:
    """Load one RST JSON file; see :func:`rst_tree_from_dict`."""
    return rst_tree_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_rst_json(path: str | Path) -> tuple[str, RstNode]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return data.get("doc_id", Path(path).stem), rst_tree_from_dict(data)


def save_rst_json(path: str | Path, doc_id: str, tree: RstNode):
    Path(path).write_text(
        json.dumps(rst_tree_to_dict(doc_id, tree), indent=2) + "\n", encoding="utf-8"
    )


def _overlap(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(0, min(a[1], b[1]) - max(a[0], b[0]))


def assign_spans(
    spans: Sequence[tuple[int, int]], units: Sequence[DiscourseUnit]
) -> list[int]:
    """Assign each span to the unit covering most of its characters.

    Ties go to the earlier unit. Returns 0-based unit indices.
    """
    out = []
    for sp in spans:
        overlaps = [_overlap(sp, u.span) for u in units]
        best = max(range(len(units)), key=lambda i: (overlaps[i], -i))
        out.append(best)
    return out


def reduce_to_segmentation(tree: RstNode, adus: Sequence[DiscourseUnit]) -> RstNode:
    """Collapse an EDU-level tree onto a reference ADU segmentation.

    Maximal subtrees lying inside one ADU become a single leaf. When an
    ADU straddles several subtrees, the subtree covering the majority
    of its characters becomes the ADU's leaf and the remaining pieces
    are dropped (their parents splice out); relations between distinct
    ADUs are preserved.
    """
    if not adus:
        raise AlignmentError("empty ADU list")
    leaves = tree.leaves()
    leaf_adu = assign_spans([l.span for l in leaves], adus)
    leaf_ids = {id(l): i for i, l in enumerate(leaves)}

    def subtree_adu(node: RstNode) -> int | None:
        """ADU index if every leaf below maps to the same ADU."""
        members = {leaf_adu[leaf_ids[id(l)]] for l in node.leaves()}
        return members.pop() if len(members) == 1 else None

    # pick, per ADU, the maximal single-ADU subtree covering most of it
    anchors: dict[int, tuple[int, int]] = {}  # adu index -> (chars, id of subtree)

    def collect(node: RstNode, covered: int | None):
        mine = subtree_adu(node)
        if mine is not None and covered is None:
            chars = sum(
                _overlap(l.span, adus[mine].span)
                for l in node.leaves()
            )
            prev = anchors.get(mine)
            if prev is None or chars > prev[0]:
                anchors[mine] = (chars, id(node))
            covered = mine
        for child in node.children:
            collect(child, covered if mine is not None else None)

    collect(tree, None)
    missing = [adus[i].id for i in range(len(adus)) if i not in anchors]
    if missing:
        raise AlignmentError(f"no subtree maps onto ADU(s) {', '.join(missing)}")
    anchor_ids = {aid: adu for adu, (_, aid) in anchors.items()}

    def rebuild(node: RstNode) -> RstNode | None:
        if id(node) in anchor_ids:
            adu = adus[anchor_ids[id(node)]]
            return RstNode(span=adu.span)
        if node.is_leaf or subtree_adu(node) is not None:
            return None  # non-anchor piece of an already-represented ADU
        kept, nucs, rels = [], [], []
        for child, nuc, rel in zip(node.children, node.nuclearities, node.relations):
            new = rebuild(child)
            if new is not None:
                kept.append(new)
                nucs.append(nuc)
                rels.append(rel)
        if not kept:
            return None
        if len(kept) == 1:
            return kept[0]  # unary splice
        if NUCLEUS not in nucs:
            nucs[0] = NUCLEUS  # promote after nucleus loss
            rels[0] = None
        if rels[nucs.index(NUCLEUS)] is not None:
            # keep the head-child convention after reshuffling
            head = nucs.index(NUCLEUS)
            rels[head] = None
        return RstNode(
            span=(kept[0].span[0], kept[-1].span[1]),
            children=tuple(kept),
            nuclearities=tuple(nucs),
            relations=tuple(rels),
        )

    reduced = rebuild(tree)
    if reduced is None:
        raise AlignmentError("reduction produced an empty tree")
    return reduced


def to_dependencies(tree: RstNode) -> RstDependencies:
    """Convert a tree to labeled dependencies by nucleus percolation."""
    leaves = tree.leaves()
    index = {id(l): i + 1 for i, l in enumerate(leaves)}
    heads: dict[int, int] = {}
    relations: dict[int, tuple[str, Direction]] = {}

    def head_leaf(node: RstNode) -> int:
        if node.is_leaf:
            return index[id(node)]
        return head_leaf(node.children[node.head_child])

    def walk(node: RstNode):
        if node.is_leaf:
            return
        target = head_leaf(node)
        for i, child in enumerate(node.children):
            if i != node.head_child:
                dep = head_leaf(child)
                heads[dep] = target
                relations[dep] = (node.relations[i], Direction.FORWARD)
            walk(child)

    walk(tree)
    heads[head_leaf(tree)] = 0
    return RstDependencies(heads=heads, relations=relations)


def adjacency(
    dep: RstDependencies, inventory: RelationInventory, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Dense encodings of the dependency arcs.

    Returns ``(a_adj, a_full)``: ``a_adj[i-1, j-1]`` is 1 iff unit ``i``
    attaches to unit ``j``; ``a_full`` adds a one-hot directed relation
    label on the third axis.
    """
    a_adj = np.zeros((n, n), dtype=np.float64)
    a_full = np.zeros((n, n, inventory.k), dtype=np.float64)
    for u, h in dep.heads.items():
        if not 1 <= u <= n or not 0 <= h <= n:
            raise IndexError(f"dependency {u}->{h} out of range for n={n}")
        if h == 0:
            continue
        a_adj[u - 1, h - 1] = 1.0
        label, direction = dep.relations[u]
        a_full[u - 1, h - 1, inventory.directed_index(label, direction)] = 1.0
    return a_adj, a_full
