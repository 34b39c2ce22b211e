"""Bracketed parse trees, constituent extraction and corpora.

Trees are immutable.  A leaf carries a word and no children; every other
node carries a label and at least one child.  A preterminal is a node whose
only child is a leaf.

>>> t = parse_bracketed("(TOP (NP (NNS Fees) (CD 1) (CD 7/8)))")[0]
>>> sorted(constituents(t))
[Constituent(label='NP', start=0, end=3)]
>>> serialize(t)
'(TOP (NP (NNS Fees) (CD 1) (CD 7/8)))'
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

__all__ = [
    "Tree",
    "Constituent",
    "ScoringPolicy",
    "DEFAULT_POLICY",
    "COUNT_ALL",
    "Corpus",
    "TreeParseError",
    "CorpusError",
    "parse_bracketed",
    "serialize",
    "constituents",
    "constituent_list",
    "is_crossing",
    "corpus_load",
    "corpus_save",
]


class TreeParseError(ValueError):
    """Malformed bracketed text.  ``offset`` is a 1-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple[Tree, ...] = ()
    word: str | None = None

    def __post_init__(self):
        if self.word is None and not self.children:
            raise ValueError(f"internal node {self.label!r} has no children")
        if self.word is not None and self.children:
            raise ValueError("a leaf cannot have children")

    @classmethod
    def leaf(cls, word: str) -> Tree:
        return cls("", (), word)

    @classmethod
    def preterminal(cls, tag: str, word: str) -> Tree:
        return cls(tag, (cls.leaf(word),))

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        if self.is_leaf:
            return (self.word,)
        out: list[str] = []
        for child in self.children:
            out.extend(child.leaves)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.leaves)

    def subtrees(self) -> Iterator[Tree]:
        """Internal nodes in preorder."""
        if self.is_leaf:
            return
        yield self
        for child in self.children:
            yield from child.subtrees()

    def node_count(self) -> int:
        return sum(1 for _ in self.subtrees())

    def pos_tags(self) -> list[str]:
        return [node.label for node in self.subtrees() if node.is_preterminal]

    def __str__(self) -> str:
        return serialize(self)


class Constituent(NamedTuple):
    """A labeled half-open word span ``[start, end)``."""

    label: str
    start: int
    end: int


@dataclass(frozen=True)
class ScoringPolicy:
    """Which nodes of a tree count as constituents.

    By default the root (when labeled ``root_label``) and preterminals are
    skipped.  Leaves whose preterminal label is in ``punct`` are deleted
    before spans are computed; nodes covering only such leaves disappear.
    """

    root_label: str = "TOP"
    count_root: bool = False
    count_preterminals: bool = False
    punct: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "punct", frozenset(self.punct))


DEFAULT_POLICY = ScoringPolicy()
COUNT_ALL = ScoringPolicy(count_root=True, count_preterminals=True)

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def parse_bracketed(text: str) -> list[Tree]:
    """Parse zero or more bracketed trees from ``text``."""
    trees: list[Tree] = []
    # stack items: [label, children, open_offset]
    stack: list[list] = []
    pending_open: int | None = None
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        pos = m.start() + 1
        if tok == "(":
            if pending_open is not None:
                raise TreeParseError("label-less internal node", pending_open)
            pending_open = pos
        elif tok == ")":
            if pending_open is not None:
                raise TreeParseError("empty node", pending_open)
            if not stack:
                raise TreeParseError("unbalanced ')'", pos)
            label, children, start = stack.pop()
            if not children:
                raise TreeParseError(f"node {label!r} has no children", start)
            node = Tree(label, tuple(children))
            if stack:
                stack[-1][1].append(node)
            else:
                trees.append(node)
        elif pending_open is not None:
            stack.append([tok, [], pending_open])
            pending_open = None
        else:
            if not stack:
                raise TreeParseError(f"token {tok!r} outside brackets", pos)
            stack[-1][1].append(Tree.leaf(tok))
    if pending_open is not None or stack:
        raise TreeParseError("unbalanced '('", len(text) + 1)
    return trees


def serialize(tree: Tree) -> str:
    if tree.is_leaf:
        return tree.word
    return "(" + tree.label + " " + " ".join(serialize(c) for c in tree.children) + ")"


def constituent_list(tree: Tree, policy: ScoringPolicy = DEFAULT_POLICY) -> list[Constituent]:
    """Counted constituents in preorder, duplicates dropped."""
    out: list[Constituent | None] = []

    def walk(node: Tree, start: int, is_root: bool) -> int:
        if node.is_preterminal:
            if node.label in policy.punct:
                return start
            if policy.count_preterminals:
                out.append(Constituent(node.label, start, start + 1))
            return start + 1
        if node.is_leaf:
            # bare token under a phrasal node
            return start + 1
        slot = len(out)
        out.append(None)
        end = start
        for child in node.children:
            end = walk(child, end, False)
        skip = is_root and not policy.count_root and node.label == policy.root_label
        if end > start and not skip:
            out[slot] = Constituent(node.label, start, end)
        return end

    walk(tree, 0, True)
    return list(dict.fromkeys(c for c in out if c is not None))


def constituents(tree: Tree, policy: ScoringPolicy = DEFAULT_POLICY) -> set[Constituent]:
    """The set of counted ``(label, start, end)`` triples of ``tree``."""
    return set(constituent_list(tree, policy))


def is_crossing(x: Constituent, y: Constituent) -> bool:
    return x.start < y.start < x.end < y.end or y.start < x.start < y.end < x.end


@dataclass(frozen=True)
class Corpus:
    """An ordered multiset of gold trees; sentences are the tree yields."""

    trees: tuple[Tree, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))

    def __len__(self) -> int:
        return len(self.trees)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Corpus(self.trees[i])
        return self.trees[i]

    def __iter__(self) -> Iterator[Tree]:
        return iter(self.trees)

    @property
    def sentences(self) -> list[tuple[str, ...]]:
        return [t.leaves for t in self.trees]

    def entries(self) -> Iterator[tuple[tuple[str, ...], Tree]]:
        for t in self.trees:
            yield t.leaves, t

    def take(self, indices: Iterable[int]) -> Corpus:
        return Corpus(tuple(self.trees[i] for i in indices))

    @classmethod
    def from_strings(cls, lines: Sequence[str]) -> Corpus:
        trees = []
        for line in lines:
            trees.extend(parse_bracketed(line))
        return cls(tuple(trees))


def corpus_load(path) -> Corpus:
    """Read one bracketed tree per line; blank lines are skipped."""
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                parsed = parse_bracketed(line)
            except TreeParseError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from exc
            if len(parsed) != 1:
                raise CorpusError(f"{path}: line {lineno}: expected one tree, found {len(parsed)}")
            trees.append(parsed[0])
    return Corpus(tuple(trees))


def corpus_save(corpus: Corpus | Iterable[Tree], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tree in corpus:
            fh.write(serialize(tree) + "\n")
