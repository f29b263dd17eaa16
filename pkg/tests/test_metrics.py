import itertools
import json
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from attnplaus import metrics as M
from attnplaus.errors import DegenerateTruth, DimensionError, RangeError, UndefinedCorrelation
from attnplaus.maps import AttentionMap


def amap(pid, p, h):
    return AttentionMap(pid, np.asarray(p, float), np.asarray(h, float))


def pair_count_auc(scores, labels):
    """P(random positive outscores random negative), ties count one half."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


def brute_perm_p(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    r0 = abs(np.corrcoef(x, y)[0, 1])
    hits = [abs(np.corrcoef(x, y[list(p)])[0, 1]) >= r0 - 1e-12
            for p in itertools.permutations(range(len(y)))]
    return sum(hits) / len(hits)


class TestBinarize:
    def test_threshold(self):
        np.testing.assert_array_equal(M.binarize([0.2, 0.7], 0.5), [0, 1])

    def test_zero_highlights_all(self):
        np.testing.assert_array_equal(M.binarize([0.0, 0.3, 1.0], 0.0), [1, 1, 1])

    def test_one_keeps_exact_ones(self):
        np.testing.assert_array_equal(M.binarize([0.999, 1.0], 1.0), [0, 1])

    @pytest.mark.parametrize("eps", [-0.1, 1.5])
    def test_range(self, eps):
        with pytest.raises(RangeError):
            M.binarize([0.5], eps)


class TestRoc:
    def test_hand_enumerated(self):
        curve = M.roc_from_scores([0.9, 0.8, 0.1], [1, 1, 0], [0.05, 0.5, 0.95])
        assert list(zip(curve.fpr, curve.tpr)) == [(0, 0), (0, 1), (1, 1)]
        assert list(curve.epsilon) == [0.95, 0.5, 0.05]

    def test_maps_rescaled(self):
        curve = M.roc_curve([amap("a", [0.9, 0.8, 0.1], [0.1])], [amap("a", [1, 1, 0], [0])],
                            [0.05, 0.5, 0.95])
        # premise -> [1, 8/9, 1/9]; the lone hypothesis score rescales to 1 and is a negative
        assert list(zip(curve.fpr, curve.tpr)) == [(0.5, 0.5), (0.5, 1), (1, 1)]

    def test_perfect(self):
        truth = [amap("a", [1, 0, 1], [0, 1])]
        curve = M.roc_curve(truth, truth)
        assert (0.0, 1.0) in set(zip(curve.fpr, curve.tpr))
        assert M.auc(curve) == 1.0

    def test_chance(self):
        curve = M.roc_curve([amap("a", [0.5] * 4, [0.5] * 2)], [amap("a", [1, 0, 1, 0], [0, 1])])
        np.testing.assert_array_equal(curve.tpr, curve.fpr)
        assert M.auc(curve) == 0.5

    def test_degenerate_truth(self):
        with pytest.raises(DegenerateTruth):
            M.roc_curve([amap("a", [0.1, 0.2], [0.3])], [amap("a", [0, 0], [0])])

    def test_pairing_checked(self):
        with pytest.raises(DimensionError):
            M.roc_curve([amap("a", [0.1, 0.2], [0.3])], [amap("a", [1, 0, 0], [0])])

    def test_closed_endpoints(self):
        curve = M.roc_from_scores([0.9, 0.8, 0.1], [1, 1, 0], [0.5])
        fpr, tpr = curve.closed()
        assert (fpr[0], tpr[0]) == (0.0, 0.0) and (fpr[-1], tpr[-1]) == (1.0, 1.0)

    def test_csv(self):
        csv = M.roc_from_scores([0.9, 0.1], [1, 0], [0.5]).to_csv()
        assert csv.splitlines() == ["epsilon,tpr,fpr", "0.5,1.0,0.0"]

    def test_monotone(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = rng.integers(2, 30)
            s = rng.random(n)
            y = rng.integers(0, 2, n)
            y[0], y[1] = 1, 0
            c = M.roc_from_scores(s, y, M.default_grid(64))
            assert np.all(np.diff(c.tpr) >= 0) and np.all(np.diff(c.fpr) >= 0)
            assert np.all((0 <= c.tpr) & (c.tpr <= 1))


class TestAuc:
    def test_concordant_example(self):
        assert pair_count_auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
        assert M.auc_from_scores([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0

    def test_matches_pair_counting(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            n = int(rng.integers(2, 21))
            # few distinct levels so ties are common
            s = rng.integers(0, 5, n) / 4.0 if rng.random() < 0.5 else rng.random(n)
            y = rng.integers(0, 2, n)
            y[0], y[-1] = 1, 0
            assert abs(M.auc_from_scores(s, y) - pair_count_auc(s, y)) < 1e-9

    def test_grid_with_all_values(self):
        s = np.array([0.25, 0.5, 0.5, 0.75])
        y = np.array([0, 1, 0, 1])
        curve = M.roc_from_scores(s, y, np.unique(np.concatenate([s, [0.0, 0.1]])))
        assert M.auc(curve) == pytest.approx(pair_count_auc(s, y), abs=1e-12)


class TestAucVsEpsilon:
    def test_fraction(self):
        rows = (M.AucRow(0.1, 0.7, 0.6), M.AucRow(0.2, 0.4, 0.6),
                M.AucRow(0.3, 0.8, 0.5), M.AucRow(0.4, 0.5, 0.5))
        assert M.AucTable(rows).fraction_human_better == 0.5

    def test_undefined_points_excluded(self):
        heur = [amap("a", [1.0, 0.0, 0.5], [0.0, 1.0])]
        human = [amap("a", [1, 0, 0], [0, 1])]
        model = [amap("a", [0.2, 0.3, 0.5], [0.6, 0.4])]
        table = M.auc_vs_epsilon(heur, human, model, [0.0, 0.4, 0.9])
        assert not table.at(0.0).defined  # everything positive
        row = table.at(0.9)               # truth = tokens scored 1.0
        assert row.auc_human == pytest.approx(1.0)
        assert table.fraction_human_better is not None
        zero = [amap("a", [0.0, 0.0, 0.0], [0.0, 0.0])]
        assert not M.auc_vs_epsilon(zero, human, model, [0.9]).at(0.9).defined

    def test_against_pair_counting(self):
        heur = [amap("a", [1.0, 0.0, 0.5], [0.0, 1.0]), amap("b", [0.3, 1.0], [1.0, 0.2, 0.0])]
        human = [amap("a", [1, 0, 1], [0, 1]), amap("b", [0, 1], [1, 1, 0])]
        model = [amap("a", [0.2, 0.3, 0.5], [0.6, 0.4]), amap("b", [0.5, 0.5], [0.1, 0.3, 0.6])]
        t = M.auc_vs_epsilon(heur, human, model, [0.5])
        truth = [1, 0, 1, 0, 1, 0, 1, 1, 0, 0]
        human_s = [1, 0, 1, 0, 1, 0, 1, 1, 1, 0]
        model_s = [0.4, 0.6, 1.0, 1.0, 4 / 6, 1.0, 1.0, 1 / 6, 0.5, 1.0]
        assert t.at(0.5).auc_human == pytest.approx(pair_count_auc(human_s, truth), abs=1e-12)
        assert t.at(0.5).auc_model == pytest.approx(pair_count_auc(model_s, truth), abs=1e-12)

    def test_default_grid(self):
        g = M.default_grid()
        assert g[0] == 0.0 and g[-1] == 1.0
        for eps in M.TABLE_CHECKPOINTS:
            assert eps in g
        assert np.all(np.diff(g) > 0)


class TestCorrelation:
    def test_perfect_linear(self):
        r, p = M.pearson([1, 2, 3], [2, 4, 6])
        assert r == pytest.approx(1.0, abs=1e-15)

    def test_exact_permutation(self):
        r, p = M.pearson([1, 2, 3, 4], [1, 3, 2, 4])
        assert r == pytest.approx(0.8, abs=1e-12)
        # two-sided: 4 orderings reach r >= 0.8 and their reversals reach r <= -0.8
        assert brute_perm_p([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(8 / 24)
        assert p == pytest.approx(8 / 24, abs=1e-12)

    def test_permutation_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for n in (3, 5, 6):
            x, y = rng.normal(size=n), rng.normal(size=n)
            assert M.pearson(x, y)[1] == pytest.approx(brute_perm_p(x, y), abs=1e-12)

    def test_t_approximation_matches_scipy(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=50)
        y = x + rng.normal(size=50)
        r, p = M.pearson(x, y)
        ref = scipy.stats.pearsonr(x, y)
        assert r == pytest.approx(ref[0], abs=1e-12)
        assert p == pytest.approx(ref[1], rel=1e-8)

    def test_spearman_rank_difference(self):
        x, y = [1, 2, 3], [3, 1, 2]
        d2 = sum((a - b) ** 2 for a, b in zip(x, y))
        oracle = 1 - 6 * d2 / (3 * (3 ** 2 - 1))
        assert oracle == -0.5
        assert M.spearman(x, y)[0] == pytest.approx(-0.5, abs=1e-15)

    def test_spearman_monotone(self):
        x = np.arange(8.0)
        assert M.spearman(x, np.exp(x))[0] == pytest.approx(1.0, abs=1e-15)

    def test_spearman_ties_use_average_ranks(self):
        x = [1, 2, 2, 3, 4, 5, 5, 6, 7, 8, 9, 10]
        y = [2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11]
        ref = scipy.stats.spearmanr(x, y)
        rho, p = M.spearman(x, y)
        assert rho == pytest.approx(ref[0], abs=1e-12)
        assert p == pytest.approx(ref[1], rel=1e-8)

    @pytest.mark.parametrize("fn", [M.pearson, M.spearman])
    def test_constant(self, fn):
        with pytest.raises(UndefinedCorrelation):
            fn([1, 2, 3], [5, 5, 5])

    def test_too_short(self):
        with pytest.raises(UndefinedCorrelation):
            M.pearson([1, 2], [2, 1])

    def test_ten_points_exact(self):
        x = np.arange(10.0)
        r, p = M.pearson(x, x[::-1])
        assert r == pytest.approx(-1.0) and p == pytest.approx(2 / math.factorial(10))

    def test_permutation_close_to_t(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(60):
            n = int(rng.integers(6, 8))
            x, y = rng.normal(size=n), rng.normal(size=n)
            r, p_exact = M.pearson(x, y)
            worst = max(worst, abs(p_exact - M._t_pvalue(r, n)))
        assert worst < 0.1

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
    def test_pearson_affine_invariance(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=12), rng.normal(size=12)
        assert M.pearson_r(a * x + b, y) == pytest.approx(M.pearson_r(x, y), abs=1e-9)
        assert -1.0 <= M.pearson_r(x, y) <= 1.0


class TestDistributions:
    def test_normalize(self):
        np.testing.assert_array_equal(M.to_distribution([1, 0, 1, 0]), [0.5, 0, 0.5, 0])

    def test_uniform_fallback(self):
        np.testing.assert_allclose(M.to_distribution([0, 0, 0]), [1 / 3] * 3)

    def test_softmax_unchanged(self):
        p = np.exp([0.3, -1.0, 2.0])
        p /= p.sum()
        np.testing.assert_allclose(M.to_distribution(p), p, atol=1e-12)

    def test_js_closed_form(self):
        # KL([1,0] || [.5,.5]) = ln 2 on each side
        assert M.js_divergence([1, 0], [0, 1]) == pytest.approx(math.log(2), abs=1e-12)
        assert M.js_divergence([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_js_value(self):
        p, q = np.array([0.5, 0.5, 0.0]), np.array([0.25, 0.25, 0.5])
        m = (p + q) / 2
        def kl(a, b):
            nz = a > 0
            return float(np.sum(a[nz] * np.log(a[nz] / b[nz])))
        assert M.js_divergence(p, q) == pytest.approx(0.5 * kl(p, m) + 0.5 * kl(q, m), abs=1e-15)

    def test_js_mismatch(self):
        with pytest.raises(DimensionError):
            M.js_divergence([1.0], [0.5, 0.5])

    def test_js_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            n = int(rng.integers(1, 12))
            p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            js = M.js_divergence(p, q)
            assert 0.0 <= js <= math.log(2)
            assert js == pytest.approx(M.js_divergence(q, p), abs=1e-15)
            assert M.js_divergence(p, p) == pytest.approx(0.0, abs=1e-15)


class TestPerInstance:
    def test_identical(self):
        ms = [amap("a", [0.1, 0.5, 0.9], [0.3, 0.2, 0.8, 0.0]), amap("b", [1, 0, 2], [5, 4, 3])]
        res = M.per_instance_stats(ms, ms)
        assert len(res.records) == 4 and res.skipped == 0
        for r in res.records:
            assert r.js == pytest.approx(0, abs=1e-15)
            assert r.spearman == pytest.approx(1) and r.pearson == pytest.approx(1)

    def test_skips_and_accounting(self):
        cand = [amap("a", [0.1, 0.5], [0.3, 0.2, 0.8]), amap("b", [1, 2, 3], [1, 1, 1])]
        ref = [amap("a", [1, 0], [0, 1, 1]), amap("b", [0, 1, 1], [0, 1, 0])]
        res = M.per_instance_stats(cand, ref)
        assert res.skipped == 2
        assert len(res.records) == 2 * len(cand) - res.skipped
        assert [(r.pair_id, r.side) for r in res.records] == [("a", "hypothesis"), ("b", "premise")]


def test_global_correlations():
    cand = [amap("a", [0.0, 0.2, 1.0, 0.5], [1.0, 0.0, 0.3]),
            amap("b", [1.0, 0.1, 0.0], [0.2, 0.9, 0.0, 0.4])]
    ref = [amap("a", [0, 0, 1, 1], [1, 0, 0]), amap("b", [1, 0, 0], [0, 1, 0, 1])]
    g = M.global_correlations(cand, ref)
    x = np.concatenate([cand[0].premise, cand[0].hypothesis, cand[1].premise, cand[1].hypothesis])
    y = np.concatenate([[0, 0, .5, .5], [1, 0, 0], [1, 0, 0], [0, .5, 0, .5]])
    assert g["general"]["pearson"][0] == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
    assert g["general"]["spearman"][0] == pytest.approx(scipy.stats.spearmanr(x, y)[0], abs=1e-12)
    assert set(g) == {"premise", "hypothesis", "general"}


def test_evaluate_report_is_json():
    cand = [amap("a", [0.0, 0.2, 1.0, 0.5], [1.0, 0.0, 0.3]),
            amap("b", [1.0, 0.1, 0.0], [0.2, 0.9, 0.0, 0.4])]
    truth = [amap("a", [0, 0, 1, 1], [1, 0, 0]), amap("b", [1, 0, 0], [0, 1, 0, 1])]
    rep = M.evaluate(cand, truth, M.default_grid(16), heuristic=cand, human=truth, model=cand)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert 0 <= doc["auc"] <= 1
    assert doc["fraction_human_better"] is not None
    assert len(doc["roc"]) == len(M.default_grid(16))
