"""Bagging and boosting ensembles of treebank parsers, with treebank QC."""
from .trees import (
    COUNT_ALL,
    DEFAULT_POLICY,
    Constituent,
    Corpus,
    ScoringPolicy,
    Tree,
    constituents,
    corpus_load,
    corpus_save,
    parse_bracketed,
    serialize,
)
from .grammar import PCFGParser, PcfgModel, induce, parse

__version__ = "0.1.0"

__all__ = [
    "COUNT_ALL",
    "DEFAULT_POLICY",
    "Constituent",
    "Corpus",
    "ScoringPolicy",
    "Tree",
    "constituents",
    "corpus_load",
    "corpus_save",
    "parse_bracketed",
    "serialize",
    "PCFGParser",
    "PcfgModel",
    "induce",
    "parse",
]
