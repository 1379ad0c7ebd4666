"""Maximum spanning arborescence decoding for dependency scores.

Scores come as an ``n x (n + 1)`` matrix: row ``i - 1`` holds the
scores of attaching dependent ``i`` to every candidate head (column 0
is the fictional root). Decoding finds the highest-scoring spanning
arborescence in which the root has exactly one child, via
Chu-Liu-Edmonds with cycle contraction, run once per candidate root
child. A plain per-row argmax is available for ablations.
"""

from __future__ import annotations

import numpy as np

_FORBIDDEN = -1e18


def _find_cycle(successor: dict[int, int]) -> list[int] | None:
    seen_global: set[int] = set()
    for start in successor:
        if start in seen_global:
            continue
        path: list[int] = []
        on_path: set[int] = set()
        node = start
        while node in successor and node not in seen_global:
            if node in on_path:
                return path[path.index(node) :]
            path.append(node)
            on_path.add(node)
            node = successor[node]
        seen_global.update(on_path)
    return None


def _cle(nodes: set[int], arcs: dict[tuple[int, int], float], root: int) -> dict[int, int]:
    """Best incoming arc per node, contracting cycles until none remain.

    ``arcs`` maps (head, dependent) to weight.
    """
    best_in: dict[int, tuple[float, int]] = {}
    for (head, dep), weight in arcs.items():
        if dep == root:
            continue
        if dep not in best_in or weight > best_in[dep][0]:
            best_in[dep] = (weight, head)
    for node in nodes:
        if node != root and node not in best_in:
            raise ValueError(f"node {node} has no incoming arc")

    cycle = _find_cycle({dep: head for dep, (_, head) in best_in.items()})
    if cycle is None:
        return {dep: head for dep, (_, head) in best_in.items()}

    cyc = set(cycle)
    super_node = max(nodes) + 1
    new_arcs: dict[tuple[int, int], float] = {}
    enter_via: dict[int, int] = {}  # external head -> cycle vertex it would replace
    leave_via: dict[int, int] = {}  # external dependent -> cycle vertex heading it
    for (head, dep), weight in arcs.items():
        if head in cyc and dep in cyc:
            continue
        if dep in cyc:
            adjusted = weight - best_in[dep][0]
            key = (head, super_node)
            if key not in new_arcs or adjusted > new_arcs[key]:
                new_arcs[key] = adjusted
                enter_via[head] = dep
        elif head in cyc:
            key = (super_node, dep)
            if key not in new_arcs or weight > new_arcs[key]:
                new_arcs[key] = weight
                leave_via[dep] = head
        else:
            new_arcs[(head, dep)] = weight

    contracted = (nodes - cyc) | {super_node}
    sub = _cle(contracted, new_arcs, root)

    heads: dict[int, int] = {}
    for dep, head in sub.items():
        if dep == super_node:
            continue
        heads[dep] = leave_via[dep] if head == super_node else head
    entry_head = sub[super_node]
    entry_vertex = enter_via[entry_head]
    for vertex in cyc:
        heads[vertex] = entry_head if vertex == entry_vertex else best_in[vertex][1]
    return heads


def _single_root_cle(scores: np.ndarray, root_child: int) -> dict[int, int]:
    n = scores.shape[0]
    arcs: dict[tuple[int, int], float] = {}
    for dep in range(1, n + 1):
        for head in range(0, n + 1):
            if head == dep:
                continue
            if head == 0 and dep != root_child:
                continue
            arcs[(head, dep)] = float(scores[dep - 1, head])
    return _cle(set(range(0, n + 1)), arcs, 0)


def tree_score(scores: np.ndarray, heads: dict[int, int]) -> float:
    return float(sum(scores[dep - 1, head] for dep, head in heads.items()))


def max_spanning_arborescence(scores: np.ndarray) -> dict[int, int]:
    """Best single-root-child arborescence under the given scores.

    Exact: tries every node as the root's only child and keeps the
    best full tree.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if scores.shape != (n, n + 1):
        raise ValueError(f"scores must be n x (n + 1), got {scores.shape}")
    if n == 1:
        return {1: 0}
    best_heads: dict[int, int] | None = None
    best_value = -np.inf
    for root_child in range(1, n + 1):
        heads = _single_root_cle(scores, root_child)
        value = tree_score(scores, heads)
        if value > best_value:
            best_value = value
            best_heads = heads
    assert best_heads is not None
    return best_heads


def greedy_heads(scores: np.ndarray) -> dict[int, int]:
    """Per-dependent argmax over candidate heads (ablation only).

    The root child is the dependent with the best root score; other
    dependents pick their best non-root head. The result is not
    guaranteed to be a tree.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if n == 1:
        return {1: 0}
    root_child = int(np.argmax(scores[:, 0])) + 1
    heads: dict[int, int] = {root_child: 0}
    for dep in range(1, n + 1):
        if dep == root_child:
            continue
        row = scores[dep - 1].copy()
        row[0] = _FORBIDDEN
        row[dep] = _FORBIDDEN
        heads[dep] = int(np.argmax(row))
    return heads
