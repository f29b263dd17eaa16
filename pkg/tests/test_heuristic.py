import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnplaus.corpus import Dataset, SentencePair, Token
from attnplaus.embeddings import EmbeddingTable
from attnplaus.errors import EmptyVector
from attnplaus.heuristic import heuristic_map, heuristic_maps, minmax_normalize, similarity01


def tok(word, stop=False):
    return Token(word, word, stop)


def pair(prem, hyp, pid="p"):
    return SentencePair(pid, tuple(prem), tuple(hyp), "entailment",
                        (0,) * len(prem), (0,) * len(hyp))


def table(**vecs):
    return EmbeddingTable(list(vecs), np.array(list(vecs.values()), dtype=float))


class TestSimilarity:
    t = table(a=[1.0, 0.0], b=[-1.0, 0.0], c=[1.0, 0.0])

    def test_identical(self):
        assert similarity01(tok("a"), tok("c"), self.t) == 1.0

    def test_negative_clamped(self):
        assert similarity01(tok("a"), tok("b"), self.t) == 0.0

    def test_stop_word(self):
        assert similarity01(tok("a", stop=True), tok("c"), self.t) == 0.0
        assert similarity01(tok("a"), tok("c", stop=True), self.t) == 0.0


class TestMinMax:
    @pytest.mark.parametrize("xs,want", [([2, 5, 8], [0, 0.5, 1]),
                                         ([0.2, 0.5, 0.8], [0, 0.5, 1]),
                                         ([3, 3, 3], [0, 0, 0])])
    def test_examples(self, xs, want):
        np.testing.assert_allclose(minmax_normalize(xs), want, atol=1e-15)

    def test_empty(self):
        with pytest.raises(EmptyVector):
            minmax_normalize([])


class TestHeuristicMap:
    def test_two_by_one(self):
        # raw premise sums by hand: w1.v1 = 1, w2.v1 = 0
        t = table(w1=[1.0, 0.0], w2=[0.0, 1.0], v1=[1.0, 0.0])
        h = heuristic_map(pair([tok("w1"), tok("w2")], [tok("v1")]), t)
        np.testing.assert_array_equal(h.premise_scores, [1.0, 0.0])
        np.testing.assert_array_equal(h.similarity_matrix, [[1.0], [0.0]])
        # a single hypothesis token has a constant (degenerate) raw vector
        np.testing.assert_array_equal(h.hypothesis_scores, [0.0])

    def test_self_pair_extremes(self):
        t = table(x=[1.0, 0.0], y=[0.8, 0.6], z=[0.0, 1.0])
        words = [tok("x"), tok("y"), tok("z")]
        h = heuristic_map(pair(words, words), t)
        # raw sums: x 1+0.8+0 = 1.8, y 0.8+1+0.6 = 2.4, z 0+0.6+1 = 1.6
        assert h.premise_scores.argmax() == 1 and h.premise_scores[1] == 1.0
        assert h.premise_scores.argmin() == 2 and h.premise_scores[2] == 0.0
        np.testing.assert_allclose(h.premise_scores, [(1.8 - 1.6) / 0.8, 1.0, 0.0])

    def test_all_stop_premise(self):
        t = table(a=[1.0, 0.0], b=[1.0, 1.0])
        h = heuristic_map(pair([tok("a", True), tok("b", True)], [tok("a"), tok("b")]), t)
        np.testing.assert_array_equal(h.premise_scores, [0.0, 0.0])
        assert h.premise_degenerate and not h.hypothesis_degenerate

    def test_stop_rows_zeroed(self):
        t = table(a=[1.0, 0.0], b=[1.0, 1.0], c=[0.0, 1.0])
        h = heuristic_map(pair([tok("a"), tok("b", True), tok("c")], [tok("b"), tok("c")]), t)
        assert h.premise_scores[1] == 0.0
        np.testing.assert_array_equal(h.similarity_matrix[1], [0.0, 0.0])

    def test_oov_zero_policy(self):
        t = table(a=[1.0, 0.0])
        h = heuristic_map(pair([tok("a"), tok("unknown")], [tok("a")]), t)
        np.testing.assert_array_equal(h.premise_scores, [1.0, 0.0])

    def test_threads_preserve_order(self):
        rng = np.random.default_rng(0)
        words = [f"w{i}" for i in range(8)]
        t = EmbeddingTable(words, rng.normal(size=(8, 4)))
        pairs = tuple(pair([tok(w) for w in rng.choice(words, 4)],
                           [tok(w) for w in rng.choice(words, 3)], pid=f"p{i}")
                      for i in range(20))
        d = Dataset(pairs)
        a = heuristic_maps(d, t, threads=1)
        b = heuristic_maps(d, t, threads=4)
        assert [m.pair_id for m in b] == [p.pair_id for p in d]
        for x, y in zip(a, b):
            assert x.premise.tobytes() == y.premise.tobytes()


@st.composite
def random_pair(draw):
    n = draw(st.integers(1, 7))
    m = draw(st.integers(1, 7))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(n + m, 3))
    stops = rng.random(n + m) < 0.25
    words = [f"t{i}" for i in range(n + m)]
    t = EmbeddingTable(words, vecs)
    toks = [tok(w, bool(s)) for w, s in zip(words, stops)]
    return pair(toks[:n], toks[n:]), t, rng


@settings(max_examples=200, deadline=None)
@given(random_pair())
def test_ranges_and_extremes(case):
    p, t, _ = case
    h = heuristic_map(p, t)
    for scores, tokens in ((h.premise_scores, p.premise), (h.hypothesis_scores, p.hypothesis)):
        assert np.all((scores >= 0) & (scores <= 1))
        content = np.array([not x.is_stop for x in tokens])
        assert np.all(scores[~content] == 0)
        if content.any() and scores[content].max() > 0:
            assert np.sum(scores[content] == 1.0) >= 1 and np.sum(scores[content] == 0.0) >= 1
    assert np.all((h.similarity_matrix >= 0) & (h.similarity_matrix <= 1))


@settings(max_examples=100, deadline=None)
@given(random_pair())
def test_hypothesis_permutation_invariance(case):
    p, t, rng = case
    order = rng.permutation(len(p.hypothesis))
    shuffled = pair(p.premise, [p.hypothesis[i] for i in order])
    np.testing.assert_allclose(heuristic_map(p, t).premise_scores,
                               heuristic_map(shuffled, t).premise_scores, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(random_pair(), st.integers(0, 6))
def test_appending_twin_never_lowers_raw(case, k):
    p, t, _ = case
    i = k % len(p.premise)
    twin = Token("twin", p.premise[i].normalized, p.premise[i].is_stop)
    longer = pair(p.premise, list(p.hypothesis) + [twin])
    before = heuristic_map(p, t).similarity_matrix.sum(axis=1)[i]
    after = heuristic_map(longer, t).similarity_matrix.sum(axis=1)[i]
    assert after >= before - 1e-12
