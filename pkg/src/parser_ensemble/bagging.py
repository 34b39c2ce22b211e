"""Bagging a parser: bootstrap replicates, one parser per replicate,
unweighted constituent voting."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from sklearn.base import BaseEstimator

from . import _seeding
from .ensemble import (
    CurveRow,
    combine,
    corpus_fingerprint,
    fit_member,
    member_model,
    parse_all,
    prefix_curve,
    summarize_curve,
)
from .trees import DEFAULT_POLICY, Corpus, ScoringPolicy, Tree
from .utils.validation import check_corpus, check_is_fitted, check_sentence, check_sentences

__all__ = ["BagEnsemble", "BaggedParser", "bootstrap_replicate", "train_bagged", "predict", "evaluate_curve"]


def bootstrap_replicate(corpus, rng: np.random.Generator) -> Corpus:
    """``len(corpus)`` entries drawn uniformly with replacement."""
    corpus = check_corpus(corpus)
    return corpus.take(_bootstrap_indices(len(corpus), rng))


def _bootstrap_indices(size: int, rng: np.random.Generator) -> np.ndarray:
    if size == 0:
        raise ValueError("cannot resample an empty corpus")
    return rng.integers(0, size, size=size)


@dataclass
class BagEnsemble:
    members: list[Any]
    seeds: list[int]
    fingerprint: str
    n_members: int
    master_seed: int
    root_label: str = "TOP"
    replicate_indices: list[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def models(self):
        return [member_model(member) for member in self.members]


def train_bagged(corpus, n_members: int = 15, learner=None, master_seed: int = 0, *, root_label: str = "TOP") -> BagEnsemble:
    """Train ``n_members`` parsers, member ``i`` on bootstrap replicate ``i``.

    Replicate ``i`` and its learner seed both come from
    ``derive_seed(master_seed, BAG, i)``, so members are independent of
    training order.
    """
    corpus = check_corpus(corpus)
    if n_members < 1:
        raise ValueError("n_members must be at least 1")
    if len(corpus) == 0:
        raise ValueError("cannot bag an empty corpus")
    members, seeds, replicates = [], [], []
    for i in range(n_members):
        seed = _seeding.derive_seed(master_seed, _seeding.BAG, i)
        rng = np.random.default_rng(seed)
        idx = _bootstrap_indices(len(corpus), rng)
        try:
            members.append(fit_member(learner, corpus.take(idx), seed))
        except Exception as exc:
            raise RuntimeError(f"learner failed on bootstrap replicate {i + 1}: {exc}") from exc
        seeds.append(seed)
        replicates.append(idx)
    return BagEnsemble(members, seeds, corpus_fingerprint(corpus), n_members, master_seed, root_label, replicates)


def predict(ensemble: BagEnsemble, sentence, prefix_size: int | None = None) -> Tree:
    """Unweighted vote of the first ``prefix_size`` members."""
    sentence = check_sentence(sentence)
    p = len(ensemble) if prefix_size is None else prefix_size
    if not 1 <= p <= len(ensemble):
        raise ValueError(f"prefix_size must be in [1, {len(ensemble)}]")
    trees = [member.parse(sentence) for member in ensemble.members[:p]]
    return combine(trees, root_label=ensemble.root_label)


def evaluate_curve(
    ensemble: BagEnsemble, train, test, policy: ScoringPolicy = DEFAULT_POLICY
) -> tuple[list[CurveRow], list]:
    """Per-prefix scores on both sets plus the summary rows."""
    sets = {}
    for name, gold in (("train", train), ("test", test)):
        if gold is None:
            continue
        gold = check_corpus(gold)
        sets[name] = (gold, [parse_all(member, gold.sentences) for member in ensemble.members])
    rows = prefix_curve(sets, None, policy, ensemble.root_label)
    return rows, summarize_curve(rows)


class BaggedParser(BaseEstimator):
    """Bootstrap-aggregated parser ensemble.

    Parameters
    ----------
    learner : estimator, default=None
        Parser induction algorithm; ``None`` means :class:`PCFGParser`.
    n_estimators : int, default=15
    random_state : int, default=0
        Master seed.
    root_label : str, default="TOP"
        Label of the root added to voted trees.
    """

    def __init__(self, learner=None, n_estimators=15, random_state=0, root_label="TOP"):
        self.learner = learner
        self.n_estimators = n_estimators
        self.random_state = random_state
        self.root_label = root_label

    def fit(self, X, y=None):
        self.ensemble_ = train_bagged(
            X, self.n_estimators, self.learner, self.random_state, root_label=self.root_label
        )
        return self

    def predict(self, X, n_members: int | None = None) -> list[Tree]:
        check_is_fitted(self, "ensemble_")
        return [predict(self.ensemble_, s, n_members) for s in check_sentences(X)]

    def score_curve(self, train, test=None, policy: ScoringPolicy = DEFAULT_POLICY):
        check_is_fitted(self, "ensemble_")
        return evaluate_curve(self.ensemble_, train, test, policy)
