"""Treebank quality control.

Two tools: a memorization test that finds entries a learner cannot
reproduce even when trained on nothing else, and views of a boosting
trace (rank-weight curves and a ranking of the most heavily weighted
entries) for finding inconsistent annotations.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .boosting import BoostTrace
from .ensemble import fit_member
from .evaluation import score_pair
from .trees import DEFAULT_POLICY, Corpus, ScoringPolicy, Tree, serialize
from .utils.validation import check_corpus, check_is_fitted

logger = logging.getLogger(__name__)

__all__ = [
    "RemovedEntry",
    "RankedEntry",
    "QcReport",
    "memorization_test",
    "joint_memorization",
    "trim_corpus",
    "weight_rank_curves",
    "rank_inconsistencies",
    "CorpusTrimmer",
    "write_removed",
    "write_ranking",
    "write_curves",
]


class RemovedEntry(NamedTuple):
    index: int
    tree: Tree
    reason: str


class RankedEntry(NamedTuple):
    rank: int
    index: int
    weight: float
    tree: Tree


@dataclass
class QcReport:
    memorizable: list[bool]
    stable: Corpus
    removed: list[RemovedEntry]
    ranking: list[RankedEntry] = field(default_factory=list)


def _reproduces(member, gold: Tree, policy: ScoringPolicy) -> bool:
    return score_pair(gold, member.parse(gold.leaves), policy).exact


def _check_replication(replication: int) -> None:
    if replication < 1:
        raise ValueError("replication must be at least 1")


def _memorize(entry: Tree, learner, replication: int, seed: int, policy: ScoringPolicy) -> tuple[bool, str]:
    try:
        member = fit_member(learner, Corpus((entry,) * replication), seed)
        ok = _reproduces(member, entry, policy)
    except Exception as exc:  # noqa: BLE001  any learner failure means "not memorizable"
        logger.warning("learner failed on a single-entry corpus: %s", exc)
        return False, f"learner failed: {exc}"
    return ok, "" if ok else "not reproduced by a parser trained on it alone"


def memorization_test(
    entry: Tree, learner=None, replication: int = 10, *, seed: int = 0, policy: ScoringPolicy = DEFAULT_POLICY
) -> bool:
    """Whether a parser trained on ``replication`` copies of ``entry`` parses
    its sentence back to exactly its gold bracketing."""
    _check_replication(replication)
    return _memorize(entry, learner, replication, seed, policy)[0]


def joint_memorization(
    entries: Sequence[Tree], learner=None, replication: int = 10, *, seed: int = 0,
    policy: ScoringPolicy = DEFAULT_POLICY,
) -> list[bool]:
    """Train one parser on ``replication`` copies of every entry and report
    which entries it reproduces."""
    _check_replication(replication)
    member = fit_member(learner, Corpus(tuple(entries) * replication), seed)
    return [_reproduces(member, e, policy) for e in entries]


def trim_corpus(
    corpus, learner=None, replication: int = 10, *, seed: int = 0, policy: ScoringPolicy = DEFAULT_POLICY
) -> tuple[Corpus, list[RemovedEntry]]:
    """Split ``corpus`` into memorizable entries and the removed rest."""
    report = trim_report(corpus, learner, replication, seed=seed, policy=policy)
    return report.stable, report.removed


def trim_report(corpus, learner=None, replication: int = 10, *, seed: int = 0,
                policy: ScoringPolicy = DEFAULT_POLICY) -> QcReport:
    corpus = check_corpus(corpus)
    _check_replication(replication)
    flags, kept, removed = [], [], []
    # identical entries get identical verdicts
    verdicts: dict[Tree, tuple[bool, str]] = {}
    for i, tree in enumerate(corpus):
        if tree not in verdicts:
            verdicts[tree] = _memorize(tree, learner, replication, seed, policy)
        ok, reason = verdicts[tree]
        flags.append(ok)
        if ok:
            kept.append(tree)
        else:
            removed.append(RemovedEntry(i, tree, reason))
    return QcReport(flags, Corpus(tuple(kept)), removed)


def _pick_distribution(trace: BoostTrace, rounds: int | None) -> np.ndarray:
    if not trace.rounds:
        raise ValueError("trace has no rounds")
    if rounds is None:
        return trace.final
    if not 0 <= rounds <= len(trace.rounds):
        raise ValueError(f"trace has {len(trace.rounds)} rounds, asked for {rounds}")
    return trace.distributions()[rounds]


def weight_rank_curves(trace: BoostTrace, bins: int = 1000) -> list[tuple[int, int, float]]:
    """Mean weight per rank bin for every distribution in ``trace``.

    Rows are ``(iteration, bin, mean_weight)``; iteration counts completed
    rounds (0 is the initial distribution) and bins are numbered from 1.
    Weights are sorted in descending order and cut into ``bins`` contiguous
    runs of equal length, the last run absorbing the remainder.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    dists = trace.distributions()
    if len(dists) < 2:
        raise ValueError("trace has no rounds")
    size = len(dists[0])
    bins = min(bins, size)
    width = size // bins
    bounds = [b * width for b in range(bins)] + [size]
    rows = []
    for it, dist in enumerate(dists):
        w = np.sort(np.asarray(dist, dtype=np.float64))[::-1]
        for b in range(bins):
            lo, hi = bounds[b], bounds[b + 1]
            rows.append((it, b + 1, math.fsum(w[lo:hi]) / (hi - lo)))
    return rows


def rank_inconsistencies(trace: BoostTrace, corpus, top_k: int = 100, *, rounds: int | None = None) -> list[RankedEntry]:
    """The ``top_k`` entries by boosting weight, heaviest first.

    Uses the final distribution unless ``rounds`` selects the one after that
    many rounds.  Equal weights are ordered by entry index.
    """
    corpus = check_corpus(corpus)
    dist = _pick_distribution(trace, rounds)
    if len(dist) != len(corpus):
        raise ValueError(f"trace covers {len(dist)} entries but the corpus has {len(corpus)}")
    if top_k < 0:
        raise ValueError("top_k must be non-negative")
    order = np.lexsort((np.arange(len(dist)), -dist))[:top_k]
    return [RankedEntry(r + 1, int(i), float(dist[i]), corpus[int(i)]) for r, i in enumerate(order)]


class CorpusTrimmer(TransformerMixin, BaseEstimator):
    """Drop entries the learner cannot memorize in isolation.

    Parameters
    ----------
    learner : estimator or callable, default=None
        ``None`` means :class:`PCFGParser`.
    replication : int, default=10
        Copies of the entry in each single-entry training corpus.
    random_state : int, default=0
    policy : ScoringPolicy, default=DEFAULT_POLICY
        Bracketing compared when deciding whether a parse reproduces its tree.

    Attributes
    ----------
    memorizable_ : list of bool
    removed_ : list of RemovedEntry
    """

    def __init__(self, learner=None, replication=10, random_state=0, policy=DEFAULT_POLICY):
        self.learner = learner
        self.replication = replication
        self.random_state = random_state
        self.policy = policy

    def fit(self, X, y=None):
        report = trim_report(X, self.learner, self.replication, seed=self.random_state, policy=self.policy)
        self.memorizable_ = report.memorizable
        self.removed_ = report.removed
        self.stable_ = report.stable
        return self

    def transform(self, X) -> Corpus:
        check_is_fitted(self, "memorizable_")
        return trim_corpus(X, self.learner, self.replication, seed=self.random_state, policy=self.policy)[0]

    def fit_transform(self, X, y=None, **fit_params) -> Corpus:
        return self.fit(X).stable_


# -- report files ------------------------------------------------------------

def write_removed(removed: Sequence[RemovedEntry], path) -> None:
    """Tab-separated ``line, reason, tree``; ``line`` is 1-based."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["line", "reason", "tree"])
        for r in removed:
            w.writerow([r.index + 1, r.reason, serialize(r.tree)])


def write_ranking(ranking: Sequence[RankedEntry], path) -> None:
    """Tab-separated ``rank, line, weight, tree``; ``line`` is 1-based."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["rank", "line", "weight", "tree"])
        for r in ranking:
            w.writerow([r.rank, r.index + 1, repr(r.weight), serialize(r.tree)])


def write_curves(rows: Sequence[tuple[int, int, float]], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "bin", "mean_weight"])
        for it, b, mean in rows:
            w.writerow([it, b, repr(mean)])
