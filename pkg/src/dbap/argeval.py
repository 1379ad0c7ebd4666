"""Evaluation metrics, cross-validation, and significance testing.

Per document, predictions against gold yield counts for six scores:
central-claim detection (cc, macro F1 over the is-claim decision,
averaged over documents), role assignment (ro) and function tagging
(fu, macro F1 pooled over units), positive attachment (at, F1 over
unordered attached unit pairs excluding root arcs), and the attachment
accuracies UAS/LAS. Units whose gold incoming arc is same-arg can be
excluded from at/UAS/LAS/fu, which keeps end-to-end runs comparable
to gold-segmentation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .corpus import ArgumentFunction, ArgumentTree, Role
from .errors import SplitError


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0


@dataclass
class EvalCounts:
    """Mergeable per-document tallies."""

    docs: int = 0
    cc_f1_sum: float = 0.0
    ro: dict[str, ClassCounts] = field(default_factory=dict)
    fu: dict[str, ClassCounts] = field(default_factory=dict)
    at_tp: int = 0
    at_pred: int = 0
    at_gold: int = 0
    uas_correct: int = 0
    las_correct: int = 0
    attach_total: int = 0

    def merge(self, other: "EvalCounts"):
        self.docs += other.docs
        self.cc_f1_sum += other.cc_f1_sum
        for store, incoming in ((self.ro, other.ro), (self.fu, other.fu)):
            for cls, c in incoming.items():
                mine = store.setdefault(cls, ClassCounts())
                mine.tp += c.tp
                mine.fp += c.fp
                mine.fn += c.fn
        self.at_tp += other.at_tp
        self.at_pred += other.at_pred
        self.at_gold += other.at_gold
        self.uas_correct += other.uas_correct
        self.las_correct += other.las_correct
        self.attach_total += other.attach_total


def _macro_f1(per_class: Mapping[str, ClassCounts]) -> float:
    present = [c for c in per_class.values() if c.tp or c.fp or c.fn]
    if not present:
        return 1.0
    return sum(c.f1() for c in present) / len(present)


def _tally(per_class: dict[str, ClassCounts], gold: str, pred: str):
    g = per_class.setdefault(gold, ClassCounts())
    if gold == pred:
        g.tp += 1
    else:
        g.fn += 1
        per_class.setdefault(pred, ClassCounts()).fp += 1


def _roles_of(tree: ArgumentTree) -> Mapping[int, Role]:
    if tree.roles is not None:
        return tree.roles
    from .parser import infer_roles

    return infer_roles(tree).roles


def evaluate(
    pred: ArgumentTree, gold: ArgumentTree, exclude_same_arg: bool = False
) -> EvalCounts:
    """Count one document's correctness signals; merge across a test set."""
    if set(pred.heads) != set(gold.heads):
        raise ValueError(f"{gold.doc_id}: unit sets differ between pred and gold")
    if pred.functions is None or gold.functions is None:
        raise ValueError(f"{gold.doc_id}: both trees need functions")
    counts = EvalCounts(docs=1)
    units = sorted(gold.heads)
    excluded = {
        u
        for u in units
        if exclude_same_arg and gold.functions[u] == ArgumentFunction.SAME_ARG
    }

    # central claim: binary per-unit decision, macro over both outcomes
    cc_classes: dict[str, ClassCounts] = {}
    for u in units:
        _tally(
            cc_classes,
            "cc" if gold.heads[u] == 0 else "other",
            "cc" if pred.heads[u] == 0 else "other",
        )
    counts.cc_f1_sum = _macro_f1(cc_classes)

    pred_roles = _roles_of(pred)
    gold_roles = _roles_of(gold)
    for u in units:
        _tally(counts.ro, gold_roles[u].value, pred_roles[u].value)
        if u not in excluded:
            _tally(counts.fu, gold.functions[u].value, pred.functions[u].value)

    pred_pairs = {
        frozenset((u, pred.heads[u]))
        for u in units
        if pred.heads[u] != 0 and u not in excluded
    }
    gold_pairs = {
        frozenset((u, gold.heads[u]))
        for u in units
        if gold.heads[u] != 0 and u not in excluded
    }
    counts.at_tp = len(pred_pairs & gold_pairs)
    counts.at_pred = len(pred_pairs)
    counts.at_gold = len(gold_pairs)

    for u in units:
        if gold.heads[u] == 0 or u in excluded:
            continue
        counts.attach_total += 1
        if pred.heads[u] == gold.heads[u]:
            counts.uas_correct += 1
            if pred.functions[u] == gold.functions[u]:
                counts.las_correct += 1
    return counts


METRICS = ("cc", "ro", "fu", "at", "uas", "las")


def metrics_from_counts(counts: EvalCounts) -> dict[str, float]:
    """Percent scores from pooled counts."""
    at_denom = counts.at_pred + counts.at_gold
    return {
        "cc": 100.0 * counts.cc_f1_sum / counts.docs if counts.docs else 0.0,
        "ro": 100.0 * _macro_f1(counts.ro),
        "fu": 100.0 * _macro_f1(counts.fu),
        "at": 100.0 * (2 * counts.at_tp / at_denom) if at_denom else 100.0,
        "uas": 100.0 * counts.uas_correct / counts.attach_total
        if counts.attach_total
        else 100.0,
        "las": 100.0 * counts.las_correct / counts.attach_total
        if counts.attach_total
        else 100.0,
    }


@dataclass
class TTestResult:
    t: float
    p: float
    degenerate: bool = False


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test.

    Zero-variance differences are degenerate: p is 1 when the means
    agree and 0 when they cannot (the t statistic diverges).
    """
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    if len(a) < 2:
        raise ValueError("need at least two pairs")
    diffs = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    mean = diffs.mean()
    sd = diffs.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0, degenerate=True)
        return TTestResult(t=float("inf") if mean > 0 else float("-inf"), p=0.0, degenerate=True)
    t = mean / (sd / np.sqrt(len(diffs)))
    p = 2.0 * scipy_stats.t.sf(abs(t), df=len(diffs) - 1)
    return TTestResult(t=float(t), p=float(p))


def significance_mark(p: float) -> str:
    if p < 0.005:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass
class EvalReport:
    """Fold-wise scores for one configuration."""

    label: str
    fold_metrics: list[dict[str, float]]
    significance: dict[str, str] = field(default_factory=dict)

    def vector(self, metric: str) -> list[float]:
        return [m[metric] for m in self.fold_metrics]

    def mean(self, metric: str) -> float:
        return float(np.mean(self.vector(metric)))

    def std(self, metric: str) -> float:
        return float(np.std(self.vector(metric)))

    def cells(self) -> dict[str, str]:
        out = {}
        for metric in METRICS:
            mark = self.significance.get(metric, "")
            out[metric] = f"{self.mean(metric):.1f} ± {self.std(metric):.1f}{mark}"
        return out


def mark_significance(report: EvalReport, baseline: EvalReport):
    """Annotate a report against a baseline with */** marks."""
    for metric in METRICS:
        result = paired_ttest(report.vector(metric), baseline.vector(metric))
        report.significance[metric] = significance_mark(result.p)


def report_table_tsv(reports: Sequence[EvalReport]) -> str:
    lines = ["configuration\t" + "\t".join(METRICS)]
    for report in reports:
        cells = report.cells()
        lines.append(report.label + "\t" + "\t".join(cells[m] for m in METRICS))
    return "\n".join(lines) + "\n"


def report_table_markdown(reports: Sequence[EvalReport]) -> str:
    header = "| configuration | " + " | ".join(METRICS) + " |"
    sep = "|" + "---|" * (len(METRICS) + 1)
    lines = [header, sep]
    for report in reports:
        cells = report.cells()
        lines.append(
            "| " + report.label + " | " + " | ".join(cells[m] for m in METRICS) + " |"
        )
    return "\n".join(lines) + "\n"


def cross_validate(
    groups: Sequence,
    splits: Sequence[Mapping[str, Sequence[str]]],
    make_instances,
    mode: str,
    segmentation: str,
    augmented: bool,
    hyper,
    inventory,
    d_lm: int,
    seed: int = 0,
    label: str | None = None,
    freeze_coefficients: bool = False,
) -> EvalReport:
    """Train and evaluate once per fold; test sets hold originals only.

    ``groups`` are variant groups; ``make_instances(doc, tree)`` turns a
    document into a training instance (embeddings plus optional RST).
    A seeded 15% of each fold's training groups is held out for early
    stopping.
    """
    from .parser import ModelParams, decode, score, train

    by_original = {g.original.id: g for g in groups}
    fold_metrics: list[dict[str, float]] = []
    for fold_index, split in enumerate(splits):
        for doc_id in list(split["train"]) + list(split["test"]):
            if doc_id not in by_original:
                raise SplitError(f"fold {fold_index} references unknown document {doc_id}")
        train_groups = [by_original[d] for d in split["train"]]
        test_groups = [by_original[d] for d in split["test"]]

        # folds share one seed so that identical fold definitions give
        # identical runs; variation across folds comes from the data
        rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
        n_dev = int(round(hyper.dev_fraction * len(train_groups)))
        dev_ids: set[int] = set()
        if n_dev:
            dev_ids = set(rng.choice(len(train_groups), size=n_dev, replace=False).tolist())

        train_instances = []
        dev_instances = []
        for gi, group in enumerate(train_groups):
            docs = group.documents if augmented else [group.original]
            for doc in docs:
                inst = make_instances(doc, group.tree)
                if gi in dev_ids:
                    if doc.variant.value == "original":
                        dev_instances.append(inst)
                else:
                    train_instances.append(inst)

        params = ModelParams(
            mode=mode,
            segmentation=segmentation,
            d_lm=d_lm,
            inventory=inventory,
            hyper=hyper,
            seed=seed,
        )
        train(
            params,
            train_instances,
            dev=dev_instances,
            seed=seed,
            freeze_coefficients=freeze_coefficients,
        )

        fold_counts = EvalCounts()
        exclude = segmentation == "e2e"
        for group in test_groups:
            inst = make_instances(group.original, group.tree)
            pred = decode(score(params, inst.units, inst.rst, doc_id=inst.doc_id))
            fold_counts.merge(evaluate(pred, inst.gold, exclude_same_arg=exclude))
        fold_metrics.append(metrics_from_counts(fold_counts))
    return EvalReport(label=label or f"{mode}/{segmentation}", fold_metrics=fold_metrics)
