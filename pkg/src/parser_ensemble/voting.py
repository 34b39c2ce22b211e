"""Constituent voting and reconstruction of a tree from the winners.

Each ensemble member casts one vote (or its weight) for every distinct
constituent it proposes.  A constituent wins when its vote mass is strictly
greater than half the total mass.  Winners are pairwise non-crossing
whenever every member's own set is: two winners each hold more than half of
the mass, so some member proposed both.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .trees import Constituent, Tree, is_crossing

__all__ = ["VoteTally", "tally_votes", "vote_unweighted", "vote_weighted", "build_tree", "CrossingError"]


class CrossingError(ValueError):
    pass


@dataclass(frozen=True)
class VoteTally:
    mass: dict[Constituent, float]
    total: float
    label_order: dict[str, int]

    def winners(self) -> set[Constituent]:
        return {c for c, m in self.mass.items() if 2.0 * m > self.total}


def _ordered(hyp: Iterable[Constituent]) -> list[Constituent]:
    if isinstance(hyp, (set, frozenset)):
        return sorted(hyp, key=lambda c: (c.start, -c.end, c.label))
    return list(hyp)


def tally_votes(hyp_sets: Sequence[Iterable[Constituent]], weights: Sequence[float] | None = None) -> VoteTally:
    if not hyp_sets:
        raise ValueError("need at least one hypothesis to vote")
    if weights is None:
        weights = [1] * len(hyp_sets)
    elif len(weights) != len(hyp_sets):
        raise ValueError(f"{len(hyp_sets)} hypotheses but {len(weights)} weights")
    for w in weights:
        if not w > 0:
            raise ValueError(f"vote weights must be positive, got {w!r}")
    contributions: dict[Constituent, list[float]] = {}
    label_order: dict[str, int] = {}
    for hyp, w in zip(hyp_sets, weights):
        seen = set()
        for c in _ordered(hyp):
            if c in seen:
                continue
            seen.add(c)
            contributions.setdefault(c, []).append(w)
            label_order.setdefault(c.label, len(label_order))
    mass = {c: math.fsum(ws) for c, ws in contributions.items()}
    return VoteTally(mass, math.fsum(weights), label_order)


def vote_unweighted(hyp_sets: Sequence[Iterable[Constituent]]) -> set[Constituent]:
    """Constituents proposed by strictly more than half of the members."""
    return tally_votes(hyp_sets).winners()


def vote_weighted(hyp_sets: Sequence[Iterable[Constituent]], weights: Sequence[float]) -> set[Constituent]:
    """Constituents whose summed member weight exceeds half the total weight."""
    return tally_votes(hyp_sets, weights).winners()


def _plurality_tags(n: int, member_trees: Sequence[Tree], default: str) -> list[str]:
    tags = []
    columns = [t.pos_tags() for t in member_trees]
    for i in range(n):
        votes = Counter(col[i] for col in columns)
        if not votes:
            tags.append(default)
            continue
        top = max(votes.values())
        # tie -> the tag proposed by the lowest-index member
        tags.append(next(col[i] for col in columns if votes[col[i]] == top))
    return tags


def build_tree(
    winners: Iterable[Constituent],
    sentence: Sequence[str],
    member_trees: Sequence[Tree] = (),
    *,
    tally: VoteTally | None = None,
    root_label: str = "TOP",
    default_tag: str = "X",
) -> Tree:
    """Assemble a tree containing every winning constituent.

    Preterminals come from a plurality vote over ``member_trees``.  A root
    over the whole sentence labeled ``root_label`` is added unless a winner
    already provides it.  Constituents sharing a span nest by descending vote
    mass, then by the order in which their labels were first proposed.
    """
    sentence = tuple(sentence)
    n = len(sentence)
    for t in member_trees:
        if t.leaves != sentence:
            raise ValueError("member hypothesis yield differs from the sentence")
    winners = list(dict.fromkeys(sorted(winners, key=lambda c: (c.start, -c.end, c.label))))
    for i, x in enumerate(winners):
        if not 0 <= x.start < x.end <= n:
            raise ValueError(f"constituent {x} outside a {n}-word sentence")
        for y in winners[i + 1:]:
            if is_crossing(x, y):
                raise CrossingError(f"winning constituents cross: {x} and {y}")
    tags = _plurality_tags(n, member_trees, default_tag)
    # a one-word winner with the voted tag is already realized by the preterminal
    winners = [c for c in winners if not (c.end - c.start == 1 and c.label == tags[c.start])]

    mass = tally.mass if tally is not None else {}
    order = tally.label_order if tally is not None else {}
    root = Constituent(root_label, 0, n)

    def key(c: Constituent):
        if c == root:
            return (c.start, -c.end, -math.inf, 0, "")
        return (c.start, -c.end, -mass.get(c, 0.0), order.get(c.label, len(order)), c.label)

    items = sorted(set(winners) | {root}, key=key)
    children: dict[Constituent, list] = {c: [] for c in items}
    stack = [items[0]]
    word_items = [(i, Tree.preterminal(tags[i], sentence[i])) for i in range(n)]
    # merge constituents and words in document order; a word follows every
    # constituent that starts at its position
    merged = sorted(
        [(key(c), 0, c) for c in items[1:]] + [((i, -(i + 1), math.inf, 0, ""), 1, (i, w)) for i, w in word_items],
        key=lambda it: (it[0][0], it[1], it[0][1:]),
    )
    for _, is_word, item in merged:
        start, end = (item[0], item[0] + 1) if is_word else (item.start, item.end)
        while not (stack[-1].start <= start and end <= stack[-1].end):
            stack.pop()
        if is_word:
            children[stack[-1]].append(item[1])
        else:
            children[stack[-1]].append(item)
            stack.append(item)

    def make(c: Constituent) -> Tree:
        return Tree(c.label, tuple(make(k) if isinstance(k, Constituent) else k for k in children[c]))

    return make(items[0])
