"""Synthetic treebanks sampled from a generator PCFG, with planted noise.

Grammar files hold one rule per line, ``LHS -> RHS1 RHS2 ... PROB``; blank
lines and ``#`` comments are ignored.  Symbols that never appear on a
left-hand side are words.  The first left-hand side is the start symbol.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _seeding
from .trees import Corpus, Tree

__all__ = ["GeneratorGrammar", "default_grammar", "default_vocabulary", "synth_corpus", "GrammarError"]


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorGrammar:
    start: str
    rules: dict[str, tuple[tuple[tuple[str, ...], float], ...]]

    @classmethod
    def from_rules(cls, rules: Sequence[tuple[str, Sequence[str], float]], start: str | None = None):
        table: dict[str, list] = defaultdict(list)
        for lhs, rhs, p in rules:
            if not rhs:
                raise GrammarError(f"empty right-hand side for {lhs}")
            table[lhs].append((tuple(rhs), float(p)))
        if not table:
            raise GrammarError("grammar has no rules")
        start = start or next(iter(table))
        grammar = cls(start, {k: tuple(v) for k, v in table.items()})
        grammar.check_proper()
        return grammar

    @classmethod
    def from_text(cls, text: str) -> GeneratorGrammar:
        rules = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 4 or parts[1] != "->":
                raise GrammarError(f"line {lineno}: expected 'LHS -> RHS... PROB'")
            try:
                p = float(parts[-1])
            except ValueError as exc:
                raise GrammarError(f"line {lineno}: bad probability {parts[-1]!r}") from exc
            rules.append((parts[0], parts[2:-1], p))
        return cls.from_rules(rules)

    def to_text(self) -> str:
        lines = []
        for lhs, expansions in self.rules.items():
            for rhs, p in expansions:
                lines.append(f"{lhs} -> {' '.join(rhs)} {p!r}")
        return "\n".join(lines) + "\n"

    @property
    def nonterminals(self) -> list[str]:
        return list(self.rules)

    def is_preterminal(self, label: str) -> bool:
        return all(len(rhs) == 1 and rhs[0] not in self.rules for rhs, _ in self.rules[label])

    def check_proper(self) -> None:
        """Rule probabilities per LHS sum to 1 and expected size is finite."""
        for lhs, expansions in self.rules.items():
            total = sum(p for _, p in expansions)
            if any(p <= 0 for _, p in expansions) or abs(total - 1.0) > 1e-9:
                raise GrammarError(f"rules for {lhs} are not a probability distribution (sum {total})")
        nts = self.nonterminals
        idx = {a: i for i, a in enumerate(nts)}
        mean = np.zeros((len(nts), len(nts)))
        for lhs, expansions in self.rules.items():
            for rhs, p in expansions:
                for sym in rhs:
                    if sym in idx:
                        mean[idx[lhs], idx[sym]] += p
        radius = max(abs(np.linalg.eigvals(mean))) if len(nts) else 0.0
        if radius >= 1.0:
            raise GrammarError(f"expected derivation size is unbounded (spectral radius {radius:.3f})")

    def sample(self, rng: np.random.Generator, symbol: str | None = None, depth: int = 0) -> Tree:
        symbol = symbol or self.start
        if depth > 200:
            raise RecursionError("derivation too deep")
        expansions = self.rules[symbol]
        probs = np.array([p for _, p in expansions])
        rhs, _ = expansions[rng.choice(len(expansions), p=probs / probs.sum())]
        children = tuple(
            self.sample(rng, sym, depth + 1) if sym in self.rules else Tree.leaf(sym) for sym in rhs
        )
        return Tree(symbol, children)

    def conflict_labels(self) -> dict[tuple[str, ...], list[str]]:
        """Right-hand sides (as child label sequences) shared by several phrasal labels."""
        by_rhs: dict[tuple[str, ...], list[str]] = defaultdict(list)
        for lhs, expansions in self.rules.items():
            if self.is_preterminal(lhs):
                continue
            for rhs, _ in expansions:
                if lhs not in by_rhs[rhs]:
                    by_rhs[rhs].append(lhs)
        return {rhs: labs for rhs, labs in by_rhs.items() if len(labs) > 1}


_STRUCTURE = """
TOP -> S 1.0
S -> NP VP 0.80
S -> ADVP NP VP 0.10
S -> NP VP ADVP 0.10
NP -> DT NN 0.36
NP -> DT JJ NN 0.16
NP -> DT NNS 0.10
NP -> NNP 0.12
NP -> PRP 0.14
NP -> CD NNS 0.06
NP -> NNP NNP 0.06
VP -> VBD NP 0.40
VP -> VBD NP PP 0.16
VP -> VBD PP 0.12
VP -> VBD ADJP 0.10
VP -> VBD 0.10
VP -> VBD QP 0.06
VP -> MD VP 0.06
PP -> IN NP 1.0
ADJP -> JJ 0.55
ADJP -> RB JJ 0.45
ADVP -> RB 0.60
ADVP -> DT NN 0.25
ADVP -> RB RB 0.15
QP -> CD NNS 0.60
QP -> CD CD 0.40
"""

_CLOSED = {
    "DT": "the a this that every some",
    "PRP": "he she it they we you",
    "MD": "would could might should",
    "IN": "in on with at for from by near of",
    "CD": "one two three four five six seven eight nine ten",
}

_ONSETS = "b c d f g h j k l m n p r s t v w z br cl dr fl gr pl st tr sh ch".split()
_VOWELS = "a e i o u ai ea oo ou".split()
_CODAS = "n t r l m k p d s ng st".split()

# open-class vocabulary sizes and the suffixes their words may carry
_OPEN = {
    "NN": (800, ["", "", "er", "ment", "ion", "ity"]),
    "JJ": (400, ["al", "ous", "ive", "y", "ic", ""]),
    "NNP": (600, [""]),
    "VBD": (500, ["ed", "ed", "ed", ""]),
    "RB": (150, ["ly", "ly", ""]),
}
_N_PLURALS = 400
_N_NUMERALS = 100


def _coin_words(n: int, suffixes: list[str], rng: np.random.Generator, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        stem = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(rng.integers(1, 3))
        )
        word = stem + _CODAS[rng.integers(len(_CODAS))] + suffixes[rng.integers(len(suffixes))]
        if word not in taken:
            taken.add(word)
            out.append(word)
    return out


def default_vocabulary(seed: int = 7) -> dict[str, list[str]]:
    """Closed-class English words plus coined open-class words.

    Coined words carry class-typical suffixes often but not always, so
    unknown words are only partly predictable from their spelling.
    """
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    vocab = {tag: words.split() for tag, words in _CLOSED.items()}
    for tag, (size, suffixes) in _OPEN.items():
        vocab[tag] = _coin_words(size, suffixes, rng, taken)
    vocab["NNP"] = [w.capitalize() for w in vocab["NNP"]]
    vocab["NNS"] = [w + "s" for w in vocab["NN"][:_N_PLURALS]]
    vocab["CD"] = vocab["CD"] + [str(x) for x in range(11, 11 + _N_NUMERALS)]
    return vocab


def default_grammar() -> GeneratorGrammar:
    """Toy English-like grammar with a large Zipfian lexicon and label overlaps.

    Attachment is unambiguous, so a treebank PCFG can learn the clean
    grammar; its errors come from sparse words.  ``ADVP -> DT NN`` overlaps
    ``NP -> DT NN`` and ``QP -> CD NNS`` overlaps ``NP -> CD NNS``; planted
    label conflicts go there.
    """
    rules = []
    for raw in _STRUCTURE.strip().splitlines():
        parts = raw.split()
        rules.append((parts[0], parts[2:-1], float(parts[-1])))
    for tag, vocab in default_vocabulary().items():
        weights = np.array([1.0 / (r + 1) for r in range(len(vocab))])
        weights /= weights.sum()
        # last rule absorbs rounding so each tag sums to 1 exactly
        probs = [float(w) for w in weights[:-1]]
        probs.append(1.0 - sum(probs))
        for word, p in zip(vocab, probs):
            rules.append((tag, [word], p))
    return GeneratorGrammar.from_rules(rules, start="TOP")


def _noise_sites(tree: Tree, conflicts) -> list[tuple[tuple[int, ...], list[str]]]:
    sites = []

    def walk(node: Tree, path: tuple[int, ...]):
        if node.is_leaf or node.is_preterminal:
            return
        rhs = tuple(c.label for c in node.children)
        alts = [lab for lab in conflicts.get(rhs, ()) if lab != node.label]
        if path and alts:
            sites.append((path, alts))
        for i, child in enumerate(node.children):
            walk(child, path + (i,))

    walk(tree, ())
    return sites


def _relabel(tree: Tree, path: tuple[int, ...], label: str) -> Tree:
    if not path:
        return Tree(label, tree.children)
    i = path[0]
    kids = list(tree.children)
    kids[i] = _relabel(kids[i], path[1:], label)
    return Tree(tree.label, tuple(kids))


def synth_corpus(
    grammar: GeneratorGrammar | None = None,
    n: int = 2000,
    noise_rate: float = 0.0,
    seed: int = 0,
    *,
    max_length: int = 30,
) -> tuple[Corpus, list[int]]:
    """Sample ``n`` trees; perturb a ``noise_rate`` fraction with label conflicts.

    A perturbed entry has one phrasal node relabeled to another label that the
    grammar also uses over the same child sequence.  Sentences longer than
    ``max_length`` are rejected and redrawn.  Returns the corpus and the
    sorted indices of perturbed entries.
    """
    grammar = grammar or default_grammar()
    if not 0.0 <= noise_rate < 1.0:
        raise ValueError("noise_rate must be in [0, 1)")
    rng = _seeding.rng_for(seed, _seeding.SYNTH)
    noise_rng = _seeding.rng_for(seed, _seeding.NOISE)
    conflicts = grammar.conflict_labels()
    if noise_rate > 0 and not conflicts:
        raise GrammarError("grammar has no shared right-hand sides to plant conflicts on")

    def draw() -> Tree:
        while True:
            t = grammar.sample(rng)
            if len(t) <= max_length:
                return t

    trees, planted = [], []
    for i in range(n):
        tree = draw()
        if noise_rate > 0 and noise_rng.random() < noise_rate:
            sites = _noise_sites(tree, conflicts)
            for _ in range(1000):
                if sites:
                    break
                tree = draw()
                sites = _noise_sites(tree, conflicts)
            else:
                raise GrammarError("could not draw a tree with a conflict site")
            path, alts = sites[noise_rng.integers(len(sites))]
            tree = _relabel(tree, path, alts[noise_rng.integers(len(alts))])
            planted.append(i)
        trees.append(tree)
    return Corpus(tuple(trees)), planted
