"""Boosting a parser with constituent-level reweighting.

Every round resamples the corpus from the current distribution, trains a
parser on the sample and parses every original entry with it.  The
per-entry union of gold and hypothesis constituents drives both the
mixing coefficient and the reweighting: each constituent in the union
contributes ``alpha`` when the two annotations agree on it and ``1`` when
they disagree.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, NamedTuple, Sequence

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
from .trees import DEFAULT_POLICY, Corpus, ScoringPolicy, Tree, constituents
from .utils.validation import check_corpus, check_is_fitted, check_sentence, check_sentences

logger = logging.getLogger(__name__)

ALPHA_MIN = 1e-6
ALPHA_MAX = 1.0 - 1e-6

__all__ = [
    "AgreementStats",
    "BoostRound",
    "BoostTrace",
    "BoostEnsemble",
    "BoostedParser",
    "UnboostableRound",
    "weighted_resample",
    "agreement_stats",
    "alpha_ca_raw",
    "compute_alpha_ca",
    "update_distribution",
    "boost",
    "predict",
    "evaluate_curve",
    "write_trace",
    "read_trace",
    "ALPHA_RULES",
]


class UnboostableRound(RuntimeError):
    """No entry had any agreeing constituent, so alpha is undefined."""

    def __init__(self, message: str, trace: BoostTrace | None = None):
        super().__init__(message)
        self.trace = trace


class AgreementStats(NamedTuple):
    union: int
    agreements: int
    disagreements: int


def agreement_stats(gold: Tree, hyp: Tree, policy: ScoringPolicy = DEFAULT_POLICY) -> AgreementStats:
    """Size of the gold/hypothesis constituent union and how many of its
    members the two trees share."""
    if gold.leaves != hyp.leaves:
        raise ValueError("yield mismatch between gold and hypothesis")
    g = constituents(gold, policy)
    h = constituents(hyp, policy)
    agree = len(g & h)
    union = len(g | h)
    return AgreementStats(union, agree, union - agree)


def _check_distribution(dist, size: int) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape != (size,):
        raise ValueError(f"distribution has shape {dist.shape}, expected ({size},)")
    if np.any(dist < 0) or not np.all(np.isfinite(dist)) or abs(math.fsum(dist) - 1.0) > 1e-9:
        raise ValueError("distribution must be non-negative and sum to 1")
    return dist


def weighted_resample(corpus, dist, rng: np.random.Generator) -> Corpus:
    """``len(corpus)`` entries drawn i.i.d. from ``dist``."""
    corpus = check_corpus(corpus)
    return corpus.take(_resample_indices(dist, len(corpus), rng))


def _resample_indices(dist, size: int, rng: np.random.Generator) -> np.ndarray:
    dist = _check_distribution(dist, size)
    if size == 0:
        raise ValueError("cannot resample an empty corpus")
    cdf = np.cumsum(dist)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, size - 1)


def _as_arrays(stats: Sequence[AgreementStats]):
    arr = np.asarray(stats, dtype=np.int64).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def alpha_ca_raw(stats: Sequence[AgreementStats], dist) -> float:
    """Weighted disagreements over weighted agreements, each entry scaled by
    its weight over its union size.  Entries with an empty union are skipped."""
    union, agree, disagree = _as_arrays(stats)
    dist = np.asarray(dist, dtype=np.float64)
    keep = union > 0
    scale = dist[keep] / union[keep]
    num = math.fsum(scale * disagree[keep])
    den = math.fsum(scale * agree[keep])
    if den <= 0.0:
        raise UnboostableRound("no constituent agreements anywhere in the corpus")
    return num / den


def compute_alpha_ca(stats: Sequence[AgreementStats], dist) -> float:
    return min(max(alpha_ca_raw(stats, dist), ALPHA_MIN), ALPHA_MAX)


ALPHA_RULES: dict[str, Callable[[Sequence[AgreementStats], Any], float]] = {"ca": alpha_ca_raw}


def update_distribution(dist, alpha: float, stats: Sequence[AgreementStats]) -> tuple[np.ndarray, float]:
    """Reweight each entry by ``alpha*union + (1 - alpha)*disagreements``.

    Entries with an empty union get factor ``alpha``.  Returns the
    normalized distribution and the normalizer.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    union, _, disagree = _as_arrays(stats)
    dist = _check_distribution(dist, len(union))
    factor = np.where(union > 0, alpha * union + (1.0 - alpha) * disagree, alpha)
    unnorm = dist * factor
    norm = math.fsum(unnorm)
    return unnorm / norm, norm


@dataclass
class BoostRound:
    index: int
    alpha: float
    raw_alpha: float
    vote_weight: float
    normalizer: float
    union: np.ndarray = field(repr=False)
    disagreements: np.ndarray = field(repr=False)
    distribution: np.ndarray = field(repr=False)

    @property
    def clamped(self) -> bool:
        return self.alpha != self.raw_alpha


@dataclass
class BoostTrace:
    """``initial`` is the uniform start; round ``i`` stores the distribution
    after ``i`` updates."""

    initial: np.ndarray
    rounds: list[BoostRound] = field(default_factory=list)

    def distributions(self) -> list[np.ndarray]:
        return [self.initial] + [r.distribution for r in self.rounds]

    def distribution(self, round_no: int) -> np.ndarray:
        """Distribution in effect at round ``round_no`` (1-based; round 1 is uniform)."""
        return self.distributions()[round_no - 1]

    @property
    def final(self) -> np.ndarray:
        return self.distributions()[-1]


@dataclass
class BoostEnsemble:
    members: list[Any]
    trace: BoostTrace
    fingerprint: str
    master_seed: int
    vote: str = "log"
    root_label: str = "TOP"

    def __len__(self) -> int:
        return len(self.members)

    @property
    def alphas(self) -> list[float]:
        return [r.alpha for r in self.trace.rounds]

    @property
    def weights(self) -> list[float]:
        return [r.vote_weight for r in self.trace.rounds]

    def models(self):
        return [member_model(member) for member in self.members]


def vote_weight(alpha: float, vote: str = "log") -> float:
    """``ln(1/alpha)`` by default; ``literal`` uses ``alpha`` itself."""
    if vote == "log":
        return math.log(1.0 / alpha)
    if vote == "literal":
        return alpha
    raise ValueError(f"unknown vote rule {vote!r}")


def boost(
    corpus,
    rounds: int = 15,
    learner=None,
    master_seed: int = 0,
    *,
    policy: ScoringPolicy = DEFAULT_POLICY,
    vote: str = "log",
    alpha_rule: str | Callable = "ca",
    root_label: str = "TOP",
) -> BoostEnsemble:
    """Run ``rounds`` boosting rounds and return members plus the full trace.

    An unboostable round raises :class:`UnboostableRound` carrying the trace
    of the rounds completed so far.
    """
    corpus = check_corpus(corpus)
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    size = len(corpus)
    if size == 0:
        raise ValueError("cannot boost an empty corpus")
    rule = ALPHA_RULES[alpha_rule] if isinstance(alpha_rule, str) else alpha_rule
    sentences = corpus.sentences
    dist = np.full(size, 1.0 / size)
    trace = BoostTrace(dist.copy())
    members = []
    for round_no in range(1, rounds + 1):
        seed = _seeding.derive_seed(master_seed, _seeding.BOOST, round_no)
        rng = np.random.default_rng(seed)
        sample = corpus.take(_resample_indices(dist, size, rng))
        member = fit_member(learner, sample, seed)
        stats = [agreement_stats(g, h, policy) for g, h in zip(corpus, parse_all(member, sentences))]
        try:
            raw = rule(stats, dist)
        except UnboostableRound as exc:
            raise UnboostableRound(f"round {round_no}: {exc}", trace) from exc
        alpha = min(max(raw, ALPHA_MIN), ALPHA_MAX)
        if alpha != raw:
            logger.info("round %d: alpha %.3g clamped to %.3g", round_no, raw, alpha)
        dist, norm = update_distribution(dist, alpha, stats)
        union, _, disagree = _as_arrays(stats)
        trace.rounds.append(
            BoostRound(round_no, alpha, raw, vote_weight(alpha, vote), norm, union.copy(), disagree.copy(), dist.copy())
        )
        members.append(member)
    return BoostEnsemble(members, trace, corpus_fingerprint(corpus), master_seed, vote, root_label)


def predict(ensemble: BoostEnsemble, sentence, prefix_size: int | None = None) -> Tree:
    """Weighted constituent vote of the first ``prefix_size`` members."""
    sentence = check_sentence(sentence)
    p = len(ensemble) if prefix_size is None else prefix_size
    if not 1 <= p <= len(ensemble):
        raise ValueError(f"prefix_size must be in [1, {len(ensemble)}]")
    trees = [mem.parse(sentence) for mem in ensemble.members[:p]]
    return combine(trees, ensemble.weights[:p], root_label=ensemble.root_label)


def evaluate_curve(ensemble: BoostEnsemble, train, test, policy: ScoringPolicy = DEFAULT_POLICY):
    sets = {}
    for name, gold in (("train", train), ("test", test)):
        if gold is None:
            continue
        gold = check_corpus(gold)
        sets[name] = (gold, [parse_all(mem, gold.sentences) for mem in ensemble.members])
    rows: list[CurveRow] = prefix_curve(sets, ensemble.weights, policy, ensemble.root_label)
    return rows, summarize_curve(rows)


# -- trace files -------------------------------------------------------------

TRACE_COLUMNS = ["round", "alpha", "raw_alpha", "vote_weight", "normalizer", "alpha_clamped", "distribution"]


def _fixed(x: float) -> str:
    return f"{x:.20f}"


def write_trace(trace: BoostTrace, path) -> None:
    """One CSV row per round; the distribution is space-separated fixed-point."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.rounds:
            w.writerow([
                r.index,
                repr(r.alpha),
                repr(r.raw_alpha),
                repr(r.vote_weight),
                repr(r.normalizer),
                int(r.clamped),
                " ".join(_fixed(x) for x in r.distribution),
            ])


def read_trace(path) -> BoostTrace:
    """Rebuild a trace from :func:`write_trace` output (the initial distribution is taken as uniform)."""
    rounds = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace columns {reader.fieldnames}")
        for row in reader:
            dist = np.array([float(x) for x in row["distribution"].split()])
            empty = np.zeros(0, dtype=np.int64)
            rounds.append(BoostRound(
                int(row["round"]),
                float(row["alpha"]),
                float(row["raw_alpha"]),
                float(row["vote_weight"]),
                float(row["normalizer"]),
                empty,
                empty,
                dist,
            ))
    if not rounds:
        raise ValueError(f"{path}: trace has no rounds")
    size = len(rounds[0].distribution)
    return BoostTrace(np.full(size, 1.0 / size), rounds)


class BoostedParser(BaseEstimator):
    """Parser ensemble built by constituent-level boosting.

    Parameters
    ----------
    learner : estimator, default=None
        Parser induction algorithm; ``None`` means :class:`PCFGParser`.
    n_rounds : int, default=15
    random_state : int, default=0
        Master seed.
    vote : {"log", "literal"}, default="log"
        Member vote weight: ``ln(1/alpha)`` or ``alpha`` itself.
    alpha_rule : str or callable, default="ca"
        Mixing coefficient rule; a callable takes ``(stats, dist)``.
    policy : ScoringPolicy, default=DEFAULT_POLICY
        Constituents counted when comparing a parse with its gold tree.

    Attributes
    ----------
    ensemble_ : BoostEnsemble
    trace_ : BoostTrace
    """

    def __init__(self, learner=None, n_rounds=15, random_state=0, vote="log", alpha_rule="ca",
                 policy=DEFAULT_POLICY, root_label="TOP"):
        self.learner = learner
        self.n_rounds = n_rounds
        self.random_state = random_state
        self.vote = vote
        self.alpha_rule = alpha_rule
        self.policy = policy
        self.root_label = root_label

    def fit(self, X, y=None):
        self.ensemble_ = boost(
            X, self.n_rounds, self.learner, self.random_state, policy=self.policy,
            vote=self.vote, alpha_rule=self.alpha_rule, root_label=self.root_label,
        )
        self.trace_ = self.ensemble_.trace
        return self

    def predict(self, X, n_members: int | None = None) -> list[Tree]:
        check_is_fitted(self, "ensemble_")
        return [predict(self.ensemble_, s, n_members) for s in check_sentences(X)]

    def score_curve(self, train, test=None, policy: ScoringPolicy | None = None):
        check_is_fitted(self, "ensemble_")
        return evaluate_curve(self.ensemble_, train, test, policy or self.policy)
