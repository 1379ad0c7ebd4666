import numpy as np
import pytest
import scipy.stats

from dbap.argeval import (
    EvalCounts,
    EvalReport,
    cross_validate,
    evaluate,
    mark_significance,
    metrics_from_counts,
    paired_ttest,
    report_table_markdown,
    report_table_tsv,
    significance_mark,
)
from dbap.corpus import ArgumentFunction as F
from dbap.corpus import ArgumentTree, Language
from dbap.encoder import HashProvider
from dbap.errors import SplitError
from dbap.parser import Hyperparams, Instance, inventory_for
from synthcorpus import random_tree, synth_groups

INV = inventory_for(Language.EN)


def tree(heads, functions):
    return ArgumentTree("d", heads, functions=functions)


GOLD_STAR = tree(
    {1: 0, 2: 1, 3: 1, 4: 1, 5: 1},
    {1: F.CC, 2: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.SUPPORT},
)


def pooled(pred, gold, exclude=False):
    return metrics_from_counts(evaluate(pred, gold, exclude_same_arg=exclude))


class TestEvaluate:
    def test_self_evaluation_is_all_100(self, k002):
        _, gold = k002
        scores = pooled(gold, gold)
        assert all(v == 100.0 for v in scores.values())

    def test_hand_counted_five_unit_case(self):
        # unit 5 rewired to unit 2 with attack; tallies counted on paper:
        # ro macro = (8/9 + 0)/2, fu macro = (1 + 6/7 + 0)/3, at = 6/8,
        # uas = las = 3/4
        pred = tree(
            {1: 0, 2: 1, 3: 1, 4: 1, 5: 2},
            {1: F.CC, 2: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.ATTACK},
        )
        scores = pooled(pred, GOLD_STAR)
        assert scores["cc"] == pytest.approx(100.0)
        assert scores["ro"] == pytest.approx(100 * (8 / 9 + 0) / 2)
        assert scores["fu"] == pytest.approx(100 * (1 + 6 / 7 + 0) / 3)
        assert scores["at"] == pytest.approx(75.0)
        assert scores["uas"] == pytest.approx(75.0)
        assert scores["las"] == pytest.approx(75.0)

    def test_total_miss_on_chain(self):
        gold = tree(
            {1: 0, 2: 1, 3: 2, 4: 3, 5: 4},
            {1: F.CC, 2: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.SUPPORT},
        )
        pred = tree(
            {1: 0, 2: 5, 3: 1, 4: 1, 5: 3},
            {1: F.CC, 2: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.SUPPORT},
        )
        scores = pooled(pred, gold)
        assert scores["uas"] == 0.0
        assert scores["at"] == 0.0
        assert scores["las"] == 0.0

    def test_cc_wrong_root(self):
        pred = tree(
            {2: 0, 1: 2, 3: 2, 4: 2, 5: 2},
            {2: F.CC, 1: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.SUPPORT},
        )
        scores = pooled(pred, GOLD_STAR)
        # cc macro: claim class F1 = 0, non-claim F1 = 6/8
        assert scores["cc"] == pytest.approx(100 * (0 + 6 / 8) / 2)

    def test_las_never_exceeds_uas_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for i in range(300):
            n = int(rng.integers(1, 9))
            gold = random_tree("g", n, rng)
            pred = random_tree("g", n, rng)
            scores = pooled(pred, gold)
            assert scores["las"] <= scores["uas"] + 1e-12

    def test_same_arg_exclusion_matches_manual_tallies(self):
        gold = tree(
            {1: 0, 2: 1, 3: 1, 4: 3},
            {1: F.CC, 2: F.SAME_ARG, 3: F.SUPPORT, 4: F.SAME_ARG},
        )
        pred = tree(
            {1: 0, 2: 3, 3: 1, 4: 1},
            {1: F.CC, 2: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT},
        )
        counts = evaluate(pred, gold, exclude_same_arg=True)
        # only unit 3 remains: head correct
        assert counts.attach_total == 1
        assert counts.uas_correct == 1
        assert counts.at_gold == 1 and counts.at_pred == 1 and counts.at_tp == 1

    def test_exclusion_is_noop_without_same_arg(self, k002):
        _, gold = k002
        pred = tree(
            {1: 0, 2: 1, 3: 2, 4: 1, 5: 4},
            {1: F.CC, 2: F.ATTACK, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.SUPPORT},
        )
        assert pooled(pred, gold, exclude=False) == pooled(pred, gold, exclude=True)

    def test_unit_mismatch_rejected(self):
        with pytest.raises(ValueError):
            evaluate(tree({1: 0}, {1: F.CC}), GOLD_STAR)

    def test_counts_merge_matches_joint_computation(self):
        pred = tree(
            {1: 0, 2: 1, 3: 1, 4: 1, 5: 2},
            {1: F.CC, 2: F.SUPPORT, 3: F.SUPPORT, 4: F.SUPPORT, 5: F.ATTACK},
        )
        a = evaluate(pred, GOLD_STAR)
        b = evaluate(GOLD_STAR, GOLD_STAR)
        merged = EvalCounts()
        merged.merge(a)
        merged.merge(b)
        assert merged.docs == 2
        assert merged.uas_correct == a.uas_correct + b.uas_correct
        assert metrics_from_counts(merged)["uas"] == pytest.approx(100 * 7 / 8)


class TestPairedTTest:
    def test_identical_vectors_degenerate_p1(self):
        result = paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert result.degenerate and result.p == 1.0 and result.t == 0.0

    def test_constant_nonzero_difference(self):
        result = paired_ttest([2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0])
        assert result.degenerate and result.p == 0.0 and result.t == float("inf")

    def test_matches_scipy_oracle(self):
        a = [1.0, 2.0, 3.0]
        b = [2.0, 4.0, 6.0]
        mine = paired_ttest(a, b)
        oracle = scipy.stats.ttest_rel(a, b)
        assert mine.t == pytest.approx(oracle.statistic)
        assert mine.p == pytest.approx(oracle.pvalue)
        assert mine.t == pytest.approx(-2 * np.sqrt(3))

    def test_random_vectors_match_scipy(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            k = int(rng.integers(2, 12))
            a = rng.normal(size=k)
            b = rng.normal(size=k)
            mine = paired_ttest(a, b)
            oracle = scipy.stats.ttest_rel(a, b)
            if not mine.degenerate:
                assert mine.t == pytest.approx(oracle.statistic)
                assert mine.p == pytest.approx(oracle.pvalue)

    def test_length_checks(self):
        with pytest.raises(ValueError):
            paired_ttest([1.0], [2.0])
        with pytest.raises(ValueError):
            paired_ttest([1.0, 2.0], [2.0])

    def test_marks(self):
        assert significance_mark(0.004) == "**"
        assert significance_mark(0.04) == "*"
        assert significance_mark(0.5) == ""


class TestReports:
    def make_report(self, label, rows):
        return EvalReport(label=label, fold_metrics=rows)

    def test_mean_std_consistency(self):
        report = self.make_report(
            "bap", [{m: v for m in ("cc", "ro", "fu", "at", "uas", "las")} for v in (50.0, 70.0)]
        )
        assert report.mean("uas") == pytest.approx(60.0)
        assert report.std("uas") == pytest.approx(10.0)

    def test_zero_std_for_identical_folds(self):
        row = {m: 80.0 for m in ("cc", "ro", "fu", "at", "uas", "las")}
        report = self.make_report("bap", [dict(row), dict(row)])
        assert report.std("las") == 0.0

    def test_table_layout_and_significance(self):
        row_a = {m: 80.0 for m in ("cc", "ro", "fu", "at", "uas", "las")}
        base_rows = [
            {m: v for m in ("cc", "ro", "fu", "at", "uas", "las")}
            for v in (10.0, 11.0, 12.0, 13.0)
        ]
        better_rows = [
            {m: v for m in ("cc", "ro", "fu", "at", "uas", "las")}
            for v in (50.0, 51.0, 52.0, 53.0)
        ]
        baseline = self.make_report("bap", base_rows)
        better = self.make_report("dbap6", better_rows)
        mark_significance(better, baseline)
        assert better.significance["uas"] == "**"
        tsv = report_table_tsv([baseline, better])
        assert tsv.splitlines()[0] == "configuration\tcc\tro\tfu\tat\tuas\tlas"
        assert "**" in tsv
        md = report_table_markdown([baseline, better])
        assert md.startswith("| configuration |")


class TestCrossValidate:
    def make_instances_factory(self, d_lm=16, calls=None):
        provider = HashProvider(dim=d_lm, seed=0)

        def make(doc, tree):
            if calls is not None:
                calls.append(doc.id)
            units = provider.document_matrix(doc)
            return Instance(doc_id=doc.id, units=units, gold=tree, rst=None)

        return make

    def test_identical_folds_zero_std(self):
        rng = np.random.default_rng(0)
        groups = synth_groups(6, rng)
        ids = [g.original.id for g in groups]
        split = {"train": ids[:4], "test": ids[4:]}
        hyper = Hyperparams(epochs=2, dropout=0.0, dev_fraction=0.0)
        report = cross_validate(
            groups,
            [split, split],
            self.make_instances_factory(),
            mode="bap",
            segmentation="gold",
            augmented=False,
            hyper=hyper,
            inventory=None,
            d_lm=16,
            seed=0,
        )
        assert len(report.fold_metrics) == 2
        for metric in ("cc", "ro", "fu", "at", "uas", "las"):
            assert report.std(metric) == 0.0

    def test_missing_document_is_split_error(self):
        rng = np.random.default_rng(1)
        groups = synth_groups(2, rng)
        hyper = Hyperparams(epochs=1, dropout=0.0)
        with pytest.raises(SplitError):
            cross_validate(
                groups,
                [{"train": ["ghost"], "test": [groups[0].original.id]}],
                self.make_instances_factory(),
                mode="bap",
                segmentation="gold",
                augmented=False,
                hyper=hyper,
                inventory=None,
                d_lm=16,
            )

    def test_separable_corpus_discourse_wins(self):
        # discourse arcs equal the gold argument arcs, so the gate is a
        # perfect oracle; the plain model sees only uninformative text
        from dbap.rst import Direction, RstDependencies

        rng = np.random.default_rng(5)
        groups = synth_groups(16, rng, units=(4, 7))
        ids = [g.original.id for g in groups]
        splits = [{"train": ids[:12], "test": ids[12:]},
                  {"train": ids[4:], "test": ids[:4]}]
        provider = HashProvider(dim=32, seed=0)
        label_rng = np.random.default_rng(3)
        rst_by_doc = {}
        for g in groups:
            rels = {
                u: (INV.labels[int(label_rng.integers(0, len(INV.labels)))], Direction.FORWARD)
                for u, h in g.tree.heads.items()
                if h != 0
            }
            rst_by_doc[g.original.id] = RstDependencies(
                heads=dict(g.tree.heads), relations=rels
            )

        def factory(with_rst):
            def make(doc, tree):
                rst = rst_by_doc[doc.id] if with_rst else None
                return Instance(doc.id, provider.document_matrix(doc), tree, rst)

            return make

        hyper = Hyperparams(epochs=40, dev_fraction=0.0)
        bap = cross_validate(
            groups, splits, factory(False), mode="bap", segmentation="gold",
            augmented=False, hyper=hyper, inventory=None, d_lm=32, seed=0,
        )
        dbap = cross_validate(
            groups, splits, factory(True), mode="dbap6", segmentation="gold",
            augmented=False, hyper=hyper, inventory=INV, d_lm=32, seed=0,
        )
        assert dbap.mean("uas") >= bap.mean("uas") + 5.0

    def test_augmented_run_trains_on_variants_but_tests_originals(self):
        rng = np.random.default_rng(2)
        groups = synth_groups(4, rng, with_variants=True)
        ids = [g.original.id for g in groups]
        calls: list[str] = []
        hyper = Hyperparams(epochs=1, dropout=0.0, dev_fraction=0.0)
        cross_validate(
            groups,
            [{"train": ids[:3], "test": ids[3:]}],
            self.make_instances_factory(calls=calls),
            mode="bap",
            segmentation="gold",
            augmented=True,
            hyper=hyper,
            inventory=None,
            d_lm=16,
            seed=0,
        )
        train_calls = [c for c in calls if c != ids[3]]
        assert len(train_calls) == 6  # three originals plus their paraphrases
        assert calls.count(ids[3]) == 1  # tested once, original only
        assert not any(c.endswith("_bt") and c == ids[3] for c in calls)
