import numpy as np
import pytest
from statsmodels.stats.inter_rater import aggregate_raters, fleiss_kappa

from dbap.agreement import (
    AgreementReport,
    corpus_agreement,
    fleiss_kappa_two_raters,
    pairwise_kappa,
    summary_tsv,
)
from dbap.corpus import Language
from dbap.rst import Direction, RstDependencies


def deps(heads, labels=None):
    labels = labels or {}
    rels = {
        u: (labels.get(u, "Elaborate"), Direction.FORWARD)
        for u, h in heads.items()
        if h != 0
    }
    return RstDependencies(heads=heads, relations=rels)


def statsmodels_kappa(a, b):
    """Independent oracle: pooled-proportion Fleiss kappa via statsmodels."""
    categories = {c: i for i, c in enumerate(dict.fromkeys(list(a) + list(b)))}
    table = np.array([[categories[x], categories[y]] for x, y in zip(a, b)])
    counts, _ = aggregate_raters(table, n_cat=len(categories))
    return fleiss_kappa(counts, method="fleiss")


TREE_A = deps({4: 0, 2: 4, 3: 2, 1: 2}, {2: "Cause", 3: "Elaborate", 1: "Elaborate"})
TREE_B = deps({3: 0, 1: 3, 4: 3, 2: 4}, {1: "Elaborate", 4: "Elaborate", 2: "Cause"})


class TestPairwiseKappa:
    def test_identical_trees_are_perfect(self):
        t = deps({1: 0, 2: 1, 3: 1}, {2: "Cause", 3: "Contrast"})
        report = pairwise_kappa(t, t)
        assert report.constituent == report.nuclearity == report.relation == 1.0
        assert report.avg == 1.0

    def test_hand_computed_values(self):
        # constituent: Po=2/3, pooled Pe=7/18 -> 5/11; nuclearity:
        # Po=2/3, Pe=1/2 -> 1/3; relation mirrors constituent here
        a = deps({1: 0, 2: 1, 3: 1}, {2: "Elaborate", 3: "Elaborate"})
        b = deps({1: 0, 2: 1, 3: 2}, {2: "Elaborate", 3: "Cause"})
        report = pairwise_kappa(a, b)
        assert report.constituent == pytest.approx(5 / 11)
        assert report.nuclearity == pytest.approx(1 / 3)
        assert report.relation == pytest.approx(5 / 11)
        assert report.avg == pytest.approx((5 / 11 + 1 / 3 + 5 / 11) / 3, abs=1e-12)

    def test_matches_statsmodels_oracle(self):
        rng = np.random.default_rng(11)
        labels = ["Elaborate", "Cause", "Contrast", "Joint"]
        for _ in range(50):
            n = int(rng.integers(2, 8))
            trees = []
            for _ in range(2):
                order = list(rng.permutation(np.arange(1, n + 1)))
                heads = {int(order[0]): 0}
                for u in order[1:]:
                    heads[int(u)] = int(rng.choice(order[: order.index(u)]))
                trees.append(
                    deps(heads, {u: str(rng.choice(labels)) for u in heads if heads[u]})
                )
            a, b = trees
            report = pairwise_kappa(a, b)
            from dbap.agreement import _ratings

            for dim in ("constituent", "nuclearity", "relation"):
                mine = getattr(report, dim)
                if dim in report.degenerate:
                    continue
                oracle = statsmodels_kappa(_ratings(a)[dim], _ratings(b)[dim])
                assert mine == pytest.approx(oracle, abs=1e-10)

    def test_symmetry(self):
        r1 = pairwise_kappa(TREE_A, TREE_B)
        r2 = pairwise_kappa(TREE_B, TREE_A)
        assert r1 == r2

    def test_unit_count_mismatch(self):
        with pytest.raises(ValueError):
            pairwise_kappa(deps({1: 0}), deps({1: 0, 2: 1}))

    def test_single_unit_is_degenerate_perfect(self):
        report = pairwise_kappa(deps({1: 0}), deps({1: 0}))
        assert report.constituent == 1.0
        assert "constituent" in report.degenerate

    def test_relation_agreement_requires_head_agreement(self):
        # same label, different attachment: the relation items disagree
        a = deps({1: 0, 2: 1, 3: 1}, {2: "Elaborate", 3: "Cause"})
        b = deps({1: 0, 2: 3, 3: 1}, {2: "Elaborate", 3: "Cause"})
        report = pairwise_kappa(a, b)
        assert report.relation < 1.0

    def test_observed_agreement_invariant_under_relabeling(self):
        mapping = {"Elaborate": "Alpha", "Cause": "Beta", "Contrast": "Gamma"}

        def relabel(tree):
            rels = {u: (mapping[l], d) for u, (l, d) in tree.relations.items()}
            return RstDependencies(heads=tree.heads, relations=rels)

        before = pairwise_kappa(TREE_A, TREE_B)
        after = pairwise_kappa(relabel(TREE_A), relabel(TREE_B))
        assert before == after


class TestTwoRaterKappa:
    def test_degenerate_single_category(self):
        kappa, flag = fleiss_kappa_two_raters(["x", "x"], ["x", "x"])
        assert kappa == 1.0 and flag

    def test_matches_statsmodels_on_random_vectors(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(2, 20))
            a = [int(x) for x in rng.integers(0, 4, n)]
            b = [int(x) for x in rng.integers(0, 4, n)]
            kappa, flag = fleiss_kappa_two_raters(a, b)
            if not flag:
                assert kappa == pytest.approx(statsmodels_kappa(a, b), abs=1e-10)


class TestCorpusAgreement:
    def test_identical_pair_gives_ones(self):
        t = deps({1: 0, 2: 1, 3: 1}, {2: "Cause", 3: "Contrast"})
        out = corpus_agreement([(Language.EN, [t, t])])
        summary = out[Language.EN]
        assert summary.mean["constituent"] == 1.0
        assert summary.std["constituent"] == 0.0
        assert summary.constituent_perfect_frac == 1.0
        assert summary.identical_frac == 1.0

    def test_two_pairs_mean_half_std_half(self):
        perfect = deps({1: 0, 2: 1, 3: 1, 4: 1}, {2: "Cause", 3: "Cause", 4: "Cause"})
        groups = [
            (Language.EN, [perfect, perfect]),
            (Language.EN, [TREE_A, TREE_B]),
        ]
        summary = corpus_agreement(groups)[Language.EN]
        for dim in ("constituent", "nuclearity", "relation", "avg"):
            assert summary.mean[dim] == pytest.approx(0.5)
            assert summary.std[dim] == pytest.approx(0.5)
        assert summary.constituent_perfect_frac == 0.5
        assert summary.identical_frac == 0.5

    def test_no_pairs_is_error(self):
        with pytest.raises(ValueError):
            corpus_agreement([])

    def test_short_group_is_error(self):
        with pytest.raises(ValueError):
            corpus_agreement([(Language.EN, [TREE_A])])

    def test_tsv_layout(self):
        t = deps({1: 0, 2: 1}, {2: "Cause"})
        text = summary_tsv(corpus_agreement([(Language.EN, [t, t])]))
        lines = text.strip().split("\n")
        assert lines[0] == (
            "language\tconstituent_mean\tconstituent_std\tnuclearity_mean\t"
            "nuclearity_std\trelation_mean\trelation_std\tavg_mean\tavg_std\t"
            "constituent_perfect_frac\tidentical_frac"
        )
        assert lines[1].split("\t")[0] == "en"


def test_report_avg_consistency():
    report = AgreementReport(constituent=0.5, nuclearity=0.25, relation=0.75)
    assert abs(report.avg - 0.5) < 1e-12
