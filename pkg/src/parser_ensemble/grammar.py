"""Treebank PCFG induction and exact Viterbi decoding.

Training trees are transformed before counting: unary chains collapse into
composite labels (``A+B``) and nodes with more than two children are
right-factored with intermediate labels of the form ``A|<C-D>``.  Decoded
trees go through the inverse transforms, so callers only ever see trees in
the original label space.

Probabilities are additively smoothed relative frequencies over the events
observed for each left-hand side; no unseen rule is ever invented.  Words
with training frequency at or below ``rare_threshold`` additionally train
unknown-word signature events for their tag.
"""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._cky import viterbi_chart
from .trees import Corpus, Tree
from .utils.validation import check_corpus, check_is_fitted, check_sentence

logger = logging.getLogger(__name__)

UNARY_JOIN = "+"
INTERMEDIATE = "|<"
START = "<START>"
LEX = "<LEX>"
FALLBACK_LABEL = "FAIL"
FORMAT_HEADER = "pcfg-model 1"

__all__ = [
    "PcfgModel",
    "PCFGParser",
    "induce",
    "parse",
    "binarize",
    "debinarize",
    "collapse_unaries",
    "expand_unaries",
    "signature",
    "is_fallback",
    "load_model",
]


# -- tree transforms ---------------------------------------------------------


def collapse_unaries(tree: Tree) -> Tree:
    """Merge every chain of single-child internal nodes into one node.

    >>> from parser_ensemble.trees import parse_bracketed
    >>> str(collapse_unaries(parse_bracketed("(TOP (NP (NNS Fees)))")[0]))
    '(TOP+NP+NNS Fees)'
    """
    if tree.is_leaf:
        return tree
    label = tree.label
    node = tree
    while len(node.children) == 1 and not node.children[0].is_leaf:
        node = node.children[0]
        label = label + UNARY_JOIN + node.label
    return Tree(label, tuple(collapse_unaries(c) for c in node.children))


def expand_unaries(tree: Tree) -> Tree:
    if tree.is_leaf:
        return tree
    children = tuple(expand_unaries(c) for c in tree.children)
    parts = tree.label.split(UNARY_JOIN)
    node = Tree(parts[-1], children)
    for part in reversed(parts[:-1]):
        node = Tree(part, (node,))
    return node


def _base_label(label: str) -> str:
    return label.split(INTERMEDIATE, 1)[0]


def binarize(tree: Tree) -> Tree:
    """Right-factor nodes with more than two children."""
    if tree.is_leaf:
        return tree
    children = [binarize(c) for c in tree.children]
    if len(children) <= 2:
        return Tree(tree.label, tuple(children))
    base = _base_label(tree.label)
    # build from the right: A -> c1 A|<c2-...-cn>
    right = Tree(_intermediate(base, children[-2:]), tuple(children[-2:]))
    for i in range(len(children) - 3, 0, -1):
        right = Tree(_intermediate(base, children[i:]), (children[i], right))
    return Tree(tree.label, (children[0], right))


def _intermediate(base: str, children: Sequence[Tree]) -> str:
    names = [c.label if not c.is_leaf else c.word for c in children]
    return f"{base}{INTERMEDIATE}{'-'.join(names)}>"


def debinarize(tree: Tree) -> Tree:
    """Splice out intermediate nodes introduced by :func:`binarize`."""
    if INTERMEDIATE in tree.label:
        raise ValueError(f"dangling intermediate label {tree.label!r} at the root")
    return _debinarize(tree)


def _debinarize(node: Tree) -> Tree:
    if node.is_leaf:
        return node
    children: list[Tree] = []
    for pos, child in enumerate(node.children):
        if not child.is_leaf and INTERMEDIATE in child.label:
            if pos != len(node.children) - 1 or _base_label(child.label) != _base_label(node.label):
                raise ValueError(
                    f"dangling intermediate label {child.label!r} under {node.label!r}"
                )
            spliced = _debinarize(child)
            children.extend(spliced.children)
        else:
            children.append(_debinarize(child))
    return Tree(node.label, tuple(children))


# -- unknown words -----------------------------------------------------------


def signature(word: str) -> str:
    """Unknown-word class: capitalization and digit flags plus a 2-char suffix.

    >>> signature("Fees"), signature("7/8"), signature("run")
    ('<UNK-C:es>', '<UNK-D:/8>', '<UNK:un>')
    """
    flags = ""
    if word[:1].isupper():
        flags += "-C"
    if any(ch.isdigit() for ch in word):
        flags += "-D"
    return f"<UNK{flags}:{word[-2:].lower()}>"


def _signature_class(sig: str) -> str:
    return sig.split(":", 1)[0]


# -- model -------------------------------------------------------------------


@dataclass(eq=False)
class PcfgModel:
    """An induced PCFG.

    All log-probabilities are base 10.  ``rules`` holds binary rules
    ``(lhs, left, right, logprob)``; ``lexical`` maps each preterminal label
    (possibly a collapsed chain such as ``ADJP+JJ``) to the log-probability
    of its lexical expansion.  Word emission is tied to the chain's bottom
    POS tag: ``lexicon`` and ``signatures`` map a word (or unknown-word
    signature) to ``{tag: logprob}``.  ``start`` scores root labels.
    """

    rules: tuple[tuple[str, str, str, float], ...]
    start: dict[str, float]
    lexical: dict[str, float]
    lexicon: dict[str, dict[str, float]]
    signatures: dict[str, dict[str, float]]
    unseen: dict[str, float] = field(default_factory=dict)
    smoothing: float = 1e-3
    rare_threshold: int = 1
    root_label: str = "TOP"

    def __post_init__(self):
        labels = set(self.start) | set(self.lexical)
        for lhs, left, right, _ in self.rules:
            labels.update((lhs, left, right))
        self.labels = tuple(sorted(labels))
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        idx = self.index
        rules = sorted(self.rules, key=lambda r: (idx[r[0]], idx[r[1]], idx[r[2]]))
        self.rules = tuple(rules)
        self._r_lhs = np.array([idx[r[0]] for r in rules], dtype=np.int32)
        self._r_left = np.array([idx[r[1]] for r in rules], dtype=np.int32)
        self._r_right = np.array([idx[r[2]] for r in rules], dtype=np.int32)
        self._r_logp = np.array([r[3] for r in rules], dtype=np.float64)
        self._start = np.full(len(self.labels), -np.inf)
        for lab, lp in self.start.items():
            self._start[idx[lab]] = lp
        self._by_tag: dict[str, list[tuple[int, float]]] = defaultdict(list)
        for lab in sorted(self.lexical):
            self._by_tag[bottom_tag(lab)].append((idx[lab], self.lexical[lab]))
        self._cache: dict[tuple[str, ...], Tree] = {}

    # probability-space views, mostly for tests and inspection
    def rule_prob(self, lhs: str, left: str, right: str) -> float:
        for r in self.rules:
            if r[:3] == (lhs, left, right):
                return 10.0 ** r[3]
        return 0.0

    def outgoing_mass(self) -> dict[str, float]:
        """Total probability of each rule and emission distribution (all 1)."""
        mass: dict[str, list[float]] = defaultdict(list)
        for lhs, _, _, lp in self.rules:
            mass[lhs].append(10.0 ** lp)
        for lab, lp in self.lexical.items():
            mass[lab].append(10.0 ** lp)
        for table in (self.lexicon, self.signatures):
            for tags in table.values():
                for tag, lp in tags.items():
                    mass["emit:" + tag].append(10.0 ** lp)
        mass[START] = [10.0 ** lp for lp in self.start.values()]
        return {k: math.fsum(v) for k, v in mass.items()}

    def lexical_scores(self, sentence: Sequence[str]) -> np.ndarray:
        lex = np.full((len(sentence), len(self.labels)), -np.inf)
        for i, word in enumerate(sentence):
            for tag, lp in self._word_events(word).items():
                for a, prefix in self._by_tag.get(tag, ()):
                    lex[i, a] = prefix + lp
        return lex

    def _word_events(self, word: str) -> dict[str, float]:
        if word in self.lexicon:
            return self.lexicon[word]
        sig = signature(word)
        if sig in self.signatures:
            return self.signatures[sig]
        cls = _signature_class(sig)
        pooled = _pool(v for k, v in self.signatures.items() if _signature_class(k) == cls)
        if not pooled:
            pooled = _pool(self.signatures.values())
        return pooled or self.unseen

    def parse(self, sentence: Sequence[str]) -> Tree:
        return parse(self, sentence)

    def to_text(self) -> str:
        lines = [
            FORMAT_HEADER,
            f"smoothing {self.smoothing!r}",
            f"rare_threshold {self.rare_threshold}",
            f"root_label {self.root_label}",
            "[rules]",
        ]
        for lab in sorted(self.start):
            lines.append(f"{START} {lab} {self.start[lab]!r}")
        rows = [(lhs, f"{left} {right}", lp) for lhs, left, right, lp in self.rules]
        rows += [(lab, LEX, lp) for lab, lp in self.lexical.items()]
        for lhs, rhs, lp in sorted(rows, key=lambda r: (r[0], r[1])):
            lines.append(f"{lhs} {rhs} {lp!r}")
        lines.append("[lexicon]")
        for word in sorted(self.lexicon):
            for tag, lp in sorted(self.lexicon[word].items()):
                lines.append(f"{tag} {word} {lp!r}")
        lines.append("[signatures]")
        for sig in sorted(self.signatures):
            for tag, lp in sorted(self.signatures[sig].items()):
                lines.append(f"{tag} {sig} {lp!r}")
        lines.append("[unseen]")
        for tag, lp in sorted(self.unseen.items()):
            lines.append(f"{tag} {lp!r}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str) -> PcfgModel:
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError("not a pcfg model file (bad header)")
        meta: dict[str, str] = {}
        section = None
        rules, start, lexical = [], {}, {}
        lexicon: dict[str, dict[str, float]] = defaultdict(dict)
        signatures: dict[str, dict[str, float]] = defaultdict(dict)
        unseen: dict[str, float] = {}
        for lineno, line in enumerate(lines[1:], 2):
            if not line:
                continue
            if line.startswith("["):
                section = line
                continue
            parts = line.split()
            try:
                if section is None:
                    meta[parts[0]] = parts[1]
                elif section == "[rules]" and parts[0] == START:
                    start[parts[1]] = float(parts[2])
                elif section == "[rules]" and parts[1] == LEX:
                    lexical[parts[0]] = float(parts[2])
                elif section == "[rules]":
                    rules.append((parts[0], parts[1], parts[2], float(parts[3])))
                elif section == "[lexicon]":
                    lexicon[parts[1]][parts[0]] = float(parts[2])
                elif section == "[signatures]":
                    signatures[parts[1]][parts[0]] = float(parts[2])
                elif section == "[unseen]":
                    unseen[parts[0]] = float(parts[1])
                else:
                    raise ValueError(f"unknown section {section}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"model file line {lineno}: {exc}") from exc
        return cls(
            rules=tuple(rules),
            start=start,
            lexical=lexical,
            lexicon=dict(lexicon),
            signatures=dict(signatures),
            unseen=unseen,
            smoothing=float(meta.get("smoothing", 1e-3)),
            rare_threshold=int(meta.get("rare_threshold", 1)),
            root_label=meta.get("root_label", "TOP"),
        )


def load_model(path) -> PcfgModel:
    return PcfgModel.from_text(Path(path).read_text(encoding="utf-8"))


def bottom_tag(label: str) -> str:
    return label.rsplit(UNARY_JOIN, 1)[-1]


def _pool(tables) -> dict[str, float]:
    acc: dict[str, list[float]] = defaultdict(list)
    for tags in tables:
        for tag, lp in tags.items():
            acc[tag].append(10.0 ** lp)
    return {tag: math.log10(math.fsum(ps)) for tag, ps in sorted(acc.items())}


# -- induction ---------------------------------------------------------------


def _smoothed(counts: Counter, lam: float) -> tuple[dict, float]:
    denom = sum(counts.values()) + lam * len(counts)
    # events mix the LEX marker with child-label pairs; order them by kind first
    ordered = sorted(counts, key=lambda e: (isinstance(e, tuple), e))
    probs = {event: math.log10((counts[event] + lam) / denom) for event in ordered}
    return probs, math.log10(lam / denom)


def induce(corpus, seed: int = 0, *, smoothing: float = 1e-3, rare_threshold: int = 1) -> PcfgModel:
    """Relative-frequency PCFG from a corpus of gold trees.

    ``seed`` is accepted for interface compatibility; induction is
    deterministic and does not consume randomness.  Repeated corpus entries
    count independently.
    """
    corpus = check_corpus(corpus)
    if len(corpus) == 0:
        raise ValueError("cannot induce a grammar from an empty corpus")
    word_freq: Counter[str] = Counter()
    for tree in corpus:
        word_freq.update(tree.leaves)
    root_counts: Counter[str] = Counter()
    original_roots: Counter[str] = Counter()
    expansions: dict[str, Counter] = defaultdict(Counter)
    emissions: dict[str, Counter] = defaultdict(Counter)
    for tree in corpus:
        _check_labels(tree)
        original_roots[tree.label] += 1
        t = binarize(collapse_unaries(tree))
        root_counts[t.label] += 1
        for node in t.subtrees():
            if node.is_preterminal:
                word = node.children[0].word
                expansions[node.label][LEX] += 1
                tag = bottom_tag(node.label)
                emissions[tag][("w", word)] += 1
                if word_freq[word] <= rare_threshold:
                    emissions[tag][("s", signature(word))] += 1
            elif all(not c.is_leaf for c in node.children):
                expansions[node.label][(node.children[0].label, node.children[1].label)] += 1
            else:
                raise ValueError(f"bare token under phrasal node {node.label!r}")

    rules, lexical = [], {}
    for lhs in sorted(expansions):
        probs, _ = _smoothed(expansions[lhs], smoothing)
        for event, lp in probs.items():
            if event == LEX:
                lexical[lhs] = lp
            else:
                rules.append((lhs, event[0], event[1], lp))
    lexicon, signatures, unseen = defaultdict(dict), defaultdict(dict), {}
    for tag in sorted(emissions):
        probs, unseen[tag] = _smoothed(emissions[tag], smoothing)
        for (kind, item), lp in probs.items():
            (lexicon if kind == "w" else signatures)[item][tag] = lp
    start, _ = _smoothed(root_counts, smoothing)
    root_label = min(original_roots, key=lambda lab: (-original_roots[lab], lab))
    return PcfgModel(
        rules=tuple(rules),
        start=start,
        lexical=lexical,
        lexicon=dict(lexicon),
        signatures=dict(signatures),
        unseen=unseen,
        smoothing=smoothing,
        rare_threshold=rare_threshold,
        root_label=root_label,
    )


def _check_labels(tree: Tree) -> None:
    for node in tree.subtrees():
        if UNARY_JOIN in node.label or INTERMEDIATE in node.label or node.label in (LEX, START):
            raise ValueError(f"label {node.label!r} uses a reserved character sequence")


# -- decoding ----------------------------------------------------------------


def parse(model: PcfgModel, sentence: Sequence[str]) -> Tree:
    """Most probable tree for ``sentence``.

    Returns a right-branching tree labeled ``FAIL`` (see :func:`is_fallback`)
    when no derivation exists.
    """
    sentence = check_sentence(sentence)
    cached = model._cache.get(sentence)
    if cached is not None:
        return cached
    tree = _decode(model, sentence)
    model._cache[sentence] = tree
    return tree


def best_derivation(model: PcfgModel, sentence: Sequence[str]) -> tuple[Tree | None, float]:
    """Binarized Viterbi tree (in the model's label space) and its log10 prob."""
    n = len(sentence)
    lex = model.lexical_scores(sentence)
    score, back_rule, back_split = viterbi_chart(
        lex, model._r_lhs, model._r_left, model._r_right, model._r_logp
    )
    top = score[0, n] + model._start
    best = int(np.argmax(top))
    if top[best] == -np.inf:
        return None, -math.inf
    labels = model.labels

    def build(i: int, j: int, a: int) -> Tree:
        if j - i == 1:
            return Tree.preterminal(labels[a], sentence[i])
        r = back_rule[i, j, a]
        k = back_split[i, j, a]
        return Tree(labels[a], (build(i, k, model._r_left[r]), build(k, j, model._r_right[r])))

    return build(0, n, best), float(top[best])


def _decode(model: PcfgModel, sentence: tuple[str, ...]) -> Tree:
    tree, _ = best_derivation(model, sentence)
    if tree is None:
        logger.debug("no derivation for %d-word sentence; emitting fallback tree", len(sentence))
        return fallback_tree(sentence, model.root_label)
    return expand_unaries(debinarize(tree))


def fallback_tree(sentence: Sequence[str], root_label: str = "TOP") -> Tree:
    node = Tree.preterminal(FALLBACK_LABEL, sentence[-1])
    for word in reversed(sentence[:-1]):
        node = Tree(FALLBACK_LABEL, (Tree.preterminal(FALLBACK_LABEL, word), node))
    return Tree(root_label, (node,))


def is_fallback(tree: Tree) -> bool:
    return len(tree.children) == 1 and tree.children[0].label == FALLBACK_LABEL


# -- estimator ---------------------------------------------------------------


class PCFGParser(BaseEstimator):
    """Smoothed treebank PCFG with exact CKY decoding.

    Parameters
    ----------
    smoothing : float, default=1e-3
        Additive constant applied to every observed event count.
    rare_threshold : int, default=1
        Words seen at most this often also train unknown-word signatures.
    random_state : int, default=0
        Accepted so ensembles can hand each member a seed; unused.

    Attributes
    ----------
    model_ : PcfgModel
    """

    def __init__(self, smoothing=1e-3, rare_threshold=1, random_state=0):
        self.smoothing = smoothing
        self.rare_threshold = rare_threshold
        self.random_state = random_state

    def fit(self, X, y=None):
        self.model_ = induce(
            X, self.random_state, smoothing=self.smoothing, rare_threshold=self.rare_threshold
        )
        return self

    def parse(self, sentence) -> Tree:
        check_is_fitted(self, "model_")
        return parse(self.model_, sentence)

    def predict(self, X) -> list[Tree]:
        """Parse a list of sentences (token sequences, trees, or a Corpus)."""
        check_is_fitted(self, "model_")
        if isinstance(X, Corpus):
            X = X.sentences
        return [self.parse(s.leaves if isinstance(s, Tree) else s) for s in X]

    @classmethod
    def from_model(cls, model: PcfgModel) -> PCFGParser:
        est = cls(smoothing=model.smoothing, rare_threshold=model.rare_threshold)
        est.model_ = model
        return est
