"""PARSEVAL-style scoring.

Counts are summed over the corpus before ratios are taken (micro-average).
"""
from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import NamedTuple, Sequence

from .trees import DEFAULT_POLICY, ScoringPolicy, Tree, constituents

__all__ = [
    "PairCounts",
    "ScoreReport",
    "score_pair",
    "constituent_accuracy",
    "f_measure",
    "score_corpus",
    "round_half_up",
]


class PairCounts(NamedTuple):
    """``a`` matched, ``b`` precision errors, ``c`` recall errors."""

    a: int
    b: int
    c: int

    def __add__(self, other):
        return PairCounts(self.a + other.a, self.b + other.b, self.c + other.c)

    @property
    def exact(self) -> bool:
        return self.b == 0 and self.c == 0


class ScoreReport(NamedTuple):
    precision: float
    recall: float
    f: float
    exact: float
    counts: PairCounts
    n: int

    def rounded(self) -> tuple[str, str, str, str]:
        return tuple(round_half_up(v) for v in (self.precision, self.recall, self.f, self.exact))


def round_half_up(value: float, places: int = 2) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def score_pair(gold: Tree, hyp: Tree, policy: ScoringPolicy = DEFAULT_POLICY) -> PairCounts:
    if gold.leaves != hyp.leaves:
        raise ValueError(f"yield mismatch: {' '.join(gold.leaves)!r} vs {' '.join(hyp.leaves)!r}")
    g = constituents(gold, policy)
    h = constituents(hyp, policy)
    a = len(g & h)
    return PairCounts(a, len(h) - a, len(g) - a)


def constituent_accuracy(counts: PairCounts) -> float:
    """``a / (a + b + c)``; 1.0 when there is nothing to score."""
    total = counts.a + counts.b + counts.c
    return 1.0 if total == 0 else counts.a / total


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ratio(hit: int, total: int, other_errors: int) -> float:
    if total:
        return 100.0 * hit / total
    return 100.0 if other_errors == 0 else 0.0


def score_corpus(gold, hypotheses: Sequence[Tree], policy: ScoringPolicy = DEFAULT_POLICY) -> ScoreReport:
    gold = list(gold)
    hypotheses = list(hypotheses)
    if not gold:
        raise ValueError("cannot score an empty corpus")
    if len(gold) != len(hypotheses):
        raise ValueError(f"{len(gold)} gold trees but {len(hypotheses)} hypotheses")
    total = PairCounts(0, 0, 0)
    exact = 0
    for g, h in zip(gold, hypotheses):
        counts = score_pair(g, h, policy)
        total = total + counts
        exact += counts.exact
    return report_from_counts(total, exact, len(gold))


def report_from_counts(total: PairCounts, n_exact: int, n: int) -> ScoreReport:
    p = _ratio(total.a, total.a + total.b, total.c)
    r = _ratio(total.a, total.a + total.c, total.b)
    return ScoreReport(p, r, f_measure(p, r), 100.0 * n_exact / n, total, n)
