import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import intersection_counts, random_tree
from parser_ensemble.evaluation import (
    PairCounts,
    constituent_accuracy,
    f_measure,
    round_half_up,
    score_corpus,
    score_pair,
)
from parser_ensemble.trees import Tree, constituents, parse_bracketed


def T(text):
    return parse_bracketed(text)[0]


GOLD = T("(TOP (S (NP (A w0) (B w1)) (C w2)))")
HYP = T("(TOP (S (A w0) (NP (B w1) (C w2))))")


def test_identical_pair():
    counts = score_pair(GOLD, GOLD)
    assert counts == PairCounts(len(constituents(GOLD)), 0, 0)


def test_hand_example():
    assert score_pair(GOLD, HYP) == PairCounts(1, 1, 1)


def test_nothing_to_score():
    t = T("(TOP (X w))")
    assert score_pair(t, t) == PairCounts(0, 0, 0)
    assert score_pair(t, t).exact


def test_yield_mismatch():
    with pytest.raises(ValueError, match="yield"):
        score_pair(GOLD, T("(TOP (S (A w0) (B w1) (C zz)))"))


def test_constituent_accuracy():
    assert constituent_accuracy(PairCounts(1, 1, 1)) == pytest.approx(1 / 3)
    assert constituent_accuracy(PairCounts(7, 0, 0)) == 1.0
    assert constituent_accuracy(PairCounts(0, 0, 0)) == 1.0


def test_f_measure_table_values():
    assert abs(f_measure(69.90, 54.19) - 61.05) <= 0.01
    assert abs(f_measure(87.99, 87.87) - 87.93) <= 0.01
    assert f_measure(42.5, 42.5) == pytest.approx(42.5)
    assert f_measure(0, 0) == 0.0


def test_corpus_identical():
    rep = score_corpus([GOLD, HYP], [GOLD, HYP])
    assert (rep.precision, rep.recall, rep.f, rep.exact) == (100, 100, 100, 100)


def test_corpus_micro_average():
    second = T("(TOP (S (NP (A w0) (B w1)) (C w2)))")
    rep = score_corpus([GOLD, second], [HYP, second])
    assert rep.counts == PairCounts(3, 1, 1)
    assert rep.rounded() == ("75.00", "75.00", "75.00", "50.00")


def test_corpus_errors():
    with pytest.raises(ValueError, match="empty"):
        score_corpus([], [])
    with pytest.raises(ValueError):
        score_corpus([GOLD], [GOLD, GOLD])


@pytest.mark.parametrize("value,text", [(0.125, "0.13"), (2.675, "2.68"), (61.045, "61.05"), (1.0, "1.00"), (99.994999, "99.99")])
def test_half_up_rounding(value, text):
    assert round_half_up(value) == text


def test_oracle_on_random_pairs():
    rng = np.random.default_rng(5)
    done = 0
    while done < 1000:
        g = random_tree(rng, max_depth=5)
        h = random_tree(rng, max_depth=5)
        if g.leaves != h.leaves:
            h = _reyield(h, g.leaves)
            if h is None:
                continue
        assert tuple(score_pair(g, h)) == intersection_counts(g, h)
        done += 1


def _reyield(tree, words):
    if len(tree) != len(words):
        return None
    it = iter(words)

    def walk(node):
        if node.is_leaf:
            return Tree.leaf(next(it))
        return Tree(node.label, tuple(walk(c) for c in node.children))

    return walk(tree)


pr = st.floats(min_value=0, max_value=100, allow_nan=False)


@given(pr, pr)
def test_prop_f_between_p_and_r(p, r):
    if p + r == 0:
        return
    f = f_measure(p, r)
    assert min(p, r) - 1e-9 <= f <= max(p, r) + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prop_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = random_tree(rng, max_depth=5)
    h = _reyield(random_tree(rng, max_depth=5), g.leaves)
    if h is None:
        return
    ab, ba = score_pair(g, h), score_pair(h, g)
    assert (ab.a, ab.b, ab.c) == (ba.a, ba.c, ba.b)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=5))
def test_prop_report_bounds(triples):
    from parser_ensemble.evaluation import report_from_counts

    total = PairCounts(0, 0, 0)
    for t in triples:
        total = total + PairCounts(*t)
    rep = report_from_counts(total, sum(b == c == 0 for _, b, c in triples), len(triples))
    for v in (rep.precision, rep.recall, rep.f, rep.exact):
        assert 0 <= v <= 100
