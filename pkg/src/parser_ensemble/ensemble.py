"""Machinery shared by the bagging and boosting ensembles.

Members are parsed once per sentence; an ensemble of size ``p`` is the
vote over the first ``p`` members, so growing an ensemble one member at a
time is evaluated by prefixes rather than by retraining.
"""
from __future__ import annotations

import hashlib
from typing import NamedTuple, Sequence

from sklearn.base import clone

from .evaluation import PairCounts, ScoreReport, report_from_counts, score_pair
from .grammar import PCFGParser, PcfgModel, is_fallback
from .trees import Corpus, ScoringPolicy, Tree, constituent_list, serialize
from .voting import build_tree, tally_votes

__all__ = [
    "fit_member",
    "member_model",
    "parse_all",
    "combine",
    "CurveRow",
    "SummaryRow",
    "prefix_curve",
    "summarize_curve",
    "corpus_fingerprint",
]


def fit_member(learner, corpus: Corpus, seed: int):
    """Train one ensemble member.

    ``learner`` is an estimator with ``fit``/``parse`` (cloned per member,
    with ``random_state`` set when it has one) or a callable
    ``learner(corpus, seed)`` returning an object with ``parse``.
    """
    if learner is None:
        learner = PCFGParser()
    if hasattr(learner, "fit"):
        est = clone(learner)
        if "random_state" in est.get_params():
            est.set_params(random_state=seed)
        return est.fit(corpus)
    return learner(corpus, seed)


def member_model(member) -> PcfgModel | None:
    if isinstance(member, PcfgModel):
        return member
    return getattr(member, "model_", None)


def parse_all(member, sentences) -> list[Tree]:
    return [member.parse(s) for s in sentences]


def voting_policy(root_label: str) -> ScoringPolicy:
    return ScoringPolicy(root_label=root_label)


def combine(
    member_trees: Sequence[Tree],
    weights: Sequence[float] | None = None,
    *,
    root_label: str = "TOP",
    cached_sets: Sequence[list] | None = None,
) -> Tree:
    """Vote over member hypotheses for one sentence and rebuild a tree."""
    policy = voting_policy(root_label)
    sets = cached_sets if cached_sets is not None else [constituent_list(t, policy) for t in member_trees]
    tally = tally_votes(sets, weights)
    return build_tree(
        tally.winners(), member_trees[0].leaves, member_trees, tally=tally, root_label=root_label
    )


class CurveRow(NamedTuple):
    prefix: int
    set: str
    report: ScoreReport
    fallbacks: int = 0


class SummaryRow(NamedTuple):
    name: str
    prefix: int
    set: str
    report: ScoreReport


def prefix_curve(
    member_parses: dict[str, tuple[Corpus, list[list[Tree]]]],
    weights: Sequence[float] | None,
    policy: ScoringPolicy,
    root_label: str = "TOP",
) -> list[CurveRow]:
    """Score the vote of every member prefix on every named gold set.

    ``member_parses[name] = (gold, parses)`` where ``parses[j][i]`` is member
    ``j``'s tree for gold entry ``i``.
    """
    vpolicy = voting_policy(root_label)
    rows = []
    for name, (gold, parses) in member_parses.items():
        n_members = len(parses)
        sets = [[constituent_list(t, vpolicy) for t in member] for member in parses]
        fallbacks = [sum(map(is_fallback, member)) for member in parses]
        for p in range(1, n_members + 1):
            total, exact = PairCounts(0, 0, 0), 0
            w = None if weights is None else list(weights[:p])
            for i, g in enumerate(gold):
                trees = [parses[j][i] for j in range(p)]
                hyp = combine(trees, w, root_label=root_label, cached_sets=[sets[j][i] for j in range(p)])
                counts = score_pair(g, hyp, policy)
                total = total + counts
                exact += counts.exact
            rows.append(CurveRow(p, name, report_from_counts(total, exact, len(gold)), sum(fallbacks[:p])))
    rows.sort(key=lambda r: (r.prefix, r.set != "train", r.set))
    return rows


def _argmax_prefix(rows: list[CurveRow], set_name: str) -> int:
    best = None
    for r in rows:
        if r.set == set_name and (best is None or r.report.f > best.report.f):
            best = r
    return best.prefix


def summarize_curve(rows: list[CurveRow]) -> list[SummaryRow]:
    """Initial, Final(k), BestF, TrainBestF and TestBestF rows.

    BestF reports each set at the prefix maximizing that set's own F;
    TrainBestF and TestBestF report the test set at the prefix maximizing
    train and test F respectively.  Ties go to the smaller prefix.
    """
    by_key = {(r.prefix, r.set): r.report for r in rows}
    sets = sorted({r.set for r in rows}, key=lambda s: (s != "train", s))
    n_members = max(r.prefix for r in rows)
    out = []
    for s in sets:
        out.append(SummaryRow("Initial", 1, s, by_key[1, s]))
    for s in sets:
        out.append(SummaryRow(f"Final({n_members})", n_members, s, by_key[n_members, s]))
    for s in sets:
        p = _argmax_prefix(rows, s)
        out.append(SummaryRow("BestF", p, s, by_key[p, s]))
    if "test" in sets:
        if "train" in sets:
            p = _argmax_prefix(rows, "train")
            out.append(SummaryRow("TrainBestF", p, "test", by_key[p, "test"]))
        p = _argmax_prefix(rows, "test")
        out.append(SummaryRow("TestBestF", p, "test", by_key[p, "test"]))
    return out


def corpus_fingerprint(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for tree in corpus:
        h.update(serialize(tree).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()

