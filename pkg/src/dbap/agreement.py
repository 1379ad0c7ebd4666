"""Pairwise agreement between discourse analyses of the same text.

Two dependency-reduced trees over the same units are compared as two
raters assigning three categorical ratings per unit: the head index
(constituent), whether the unit heads other units or attaches as a
satellite (nuclearity), and the incoming relation together with its
attachment point (relation). Chance-corrected agreement uses Fleiss'
kappa with pooled category proportions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .corpus import Language
from .rst import RstDependencies

_DIMENSIONS = ("constituent", "nuclearity", "relation")


@dataclass(frozen=True)
class AgreementReport:
    constituent: float
    nuclearity: float
    relation: float
    degenerate: tuple[str, ...] = ()

    @property
    def avg(self) -> float:
        return (self.constituent + self.nuclearity + self.relation) / 3.0

    def as_dict(self) -> dict[str, float]:
        return {
            "constituent": self.constituent,
            "nuclearity": self.nuclearity,
            "relation": self.relation,
            "avg": self.avg,
        }


@dataclass
class AgreementSummary:
    """Per-language aggregate over all variant pairs."""

    language: Language
    n_pairs: int
    mean: dict[str, float]
    std: dict[str, float]
    constituent_perfect_frac: float
    identical_frac: float


def fleiss_kappa_two_raters(
    a: Sequence[Hashable], b: Sequence[Hashable]
) -> tuple[float, bool]:
    """Fleiss' kappa for two raters over categorical items.

    Chance agreement comes from the pooled category proportions of
    both raters. Returns ``(kappa, degenerate)``; when chance
    agreement is 1, kappa is 1.0 for perfect observed agreement and
    0.0 otherwise, flagged as degenerate.
    """
    if len(a) != len(b):
        raise ValueError("rating vectors must have equal length")
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    counts: dict[Hashable, int] = {}
    for x in list(a) + list(b):
        counts[x] = counts.get(x, 0) + 1
    total = 2 * n
    expected = sum((c / total) ** 2 for c in counts.values())
    if expected >= 1.0:
        return (1.0, True) if observed == 1.0 else (0.0, True)
    return (observed - expected) / (1.0 - expected), False


def _ratings(dep: RstDependencies) -> dict[str, list[Hashable]]:
    has_deps = {u: False for u in dep.heads}
    for u, h in dep.heads.items():
        if h != 0:
            has_deps[h] = True
    constituent: list[Hashable] = []
    nuclearity: list[Hashable] = []
    relation: list[Hashable] = []
    for u in sorted(dep.heads):
        h = dep.heads[u]
        constituent.append(h)
        nuclearity.append("is-head" if (has_deps[u] or h == 0) else "heads-a-satellite")
        if h == 0:
            relation.append(("root",))
        else:
            label, _ = dep.relations[u]
            relation.append((h, label))
    return {"constituent": constituent, "nuclearity": nuclearity, "relation": relation}


def pairwise_kappa(a: RstDependencies, b: RstDependencies) -> AgreementReport:
    """Agreement between two dependency trees over the same units."""
    if a.n != b.n:
        raise ValueError(f"unit count mismatch: {a.n} vs {b.n}")
    ra = _ratings(a)
    rb = _ratings(b)
    values: dict[str, float] = {}
    degenerate = []
    for dim in _DIMENSIONS:
        values[dim], flag = fleiss_kappa_two_raters(ra[dim], rb[dim])
        if flag:
            degenerate.append(dim)
    return AgreementReport(degenerate=tuple(degenerate), **values)


def _identical(a: RstDependencies, b: RstDependencies) -> bool:
    return dict(a.heads) == dict(b.heads) and dict(a.relations) == dict(b.relations)


def corpus_agreement(
    groups: Iterable[tuple[Language, Sequence[RstDependencies]]],
) -> dict[Language, AgreementSummary]:
    """Aggregate pairwise agreement over a corpus of variant groups.

    Every group contributes all unordered pairs of its variants.
    Means use population standard deviation; the summary also reports
    the fraction of pairs in perfect constituent agreement and with
    fully identical structures.
    """
    per_lang: dict[Language, list[tuple[AgreementReport, bool]]] = {}
    for language, variants in groups:
        if len(variants) < 2:
            raise ValueError("each group needs at least two discourse variants")
        for i in range(len(variants)):
            for j in range(i + 1, len(variants)):
                report = pairwise_kappa(variants[i], variants[j])
                per_lang.setdefault(language, []).append(
                    (report, _identical(variants[i], variants[j]))
                )
    if not per_lang:
        raise ValueError("no eligible variant pairs")

    out: dict[Language, AgreementSummary] = {}
    for language, rows in per_lang.items():
        n = len(rows)
        columns = {dim: [r.as_dict()[dim] for r, _ in rows] for dim in (*_DIMENSIONS, "avg")}
        mean = {dim: sum(v) / n for dim, v in columns.items()}
        std = {
            dim: (sum((x - mean[dim]) ** 2 for x in v) / n) ** 0.5
            for dim, v in columns.items()
        }
        out[language] = AgreementSummary(
            language=language,
            n_pairs=n,
            mean=mean,
            std=std,
            constituent_perfect_frac=sum(1 for r, _ in rows if r.constituent == 1.0) / n,
            identical_frac=sum(1 for _, ident in rows if ident) / n,
        )
    return out


def summary_tsv(summaries: Mapping[Language, AgreementSummary]) -> str:
    header = [
        "language",
        "constituent_mean", "constituent_std",
        "nuclearity_mean", "nuclearity_std",
        "relation_mean", "relation_std",
        "avg_mean", "avg_std",
        "constituent_perfect_frac",
        "identical_frac",
    ]
    lines = ["\t".join(header)]
    for language in sorted(summaries, key=lambda l: l.value):
        s = summaries[language]
        row = [language.value]
        for dim in (*_DIMENSIONS, "avg"):
            row.append(f"{s.mean[dim]:.4f}")
            row.append(f"{s.std[dim]:.4f}")
        row.append(f"{s.constituent_perfect_frac:.4f}")
        row.append(f"{s.identical_frac:.4f}")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
