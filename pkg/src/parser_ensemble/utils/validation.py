"""Input coercion helpers shared by the estimators."""
from __future__ import annotations

from sklearn.utils.validation import check_is_fitted

from ..trees import Corpus, Tree, parse_bracketed

__all__ = ["check_corpus", "check_sentence", "check_sentences", "check_is_fitted"]


def check_corpus(X) -> Corpus:
    """Coerce ``X`` (Corpus, trees, or bracketed strings) into a Corpus."""
    if isinstance(X, Corpus):
        return X
    if isinstance(X, (str, Tree)):
        raise TypeError("expected a sequence of trees, got a single item")
    trees = []
    for item in X:
        if isinstance(item, Tree):
            trees.append(item)
        elif isinstance(item, str):
            parsed = parse_bracketed(item)
            if len(parsed) != 1:
                raise ValueError(f"expected one tree per string, got {len(parsed)}")
            trees.append(parsed[0])
        else:
            raise TypeError(f"cannot interpret {type(item).__name__} as a tree")
    return Corpus(tuple(trees))


def check_sentence(sentence) -> tuple[str, ...]:
    if isinstance(sentence, Tree):
        sentence = sentence.leaves
    elif isinstance(sentence, str):
        sentence = sentence.split()
    sentence = tuple(sentence)
    if not sentence:
        raise ValueError("cannot parse an empty sentence")
    for tok in sentence:
        if not isinstance(tok, str) or not tok or any(ch.isspace() or ch in "()" for ch in tok):
            raise ValueError(f"invalid token {tok!r}")
    return sentence


def check_sentences(X) -> list[tuple[str, ...]]:
    if isinstance(X, Corpus):
        return X.sentences
    return [check_sentence(s) for s in X]
