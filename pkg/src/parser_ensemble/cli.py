"""``ensemble`` command line interface.

Exit status: 0 success, 1 usage error, 2 data error, 3 unboostable round.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .boosting import UnboostableRound, read_trace
from .ensemble import combine
from .evaluation import score_corpus
from .experiments import RunConfig, format_table, prepare_out_dir, run_bag, run_boost, run_learning_curve
from .grammar import induce, load_model, parse
from .qc import rank_inconsistencies, trim_report, weight_rank_curves, write_curves, write_ranking, write_removed
from .synth import GeneratorGrammar, default_grammar, synth_corpus
from .trees import CorpusError, corpus_load, corpus_save, serialize
from .utils.validation import check_sentence

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UNBOOSTABLE = 0, 1, 2, 3

GLOBAL_DEFAULTS = {
    "seed": 0,
    "policy_root": "TOP",
    "policy_count_preterminals": False,
    "punct_set": "",
    "csv": None,
    "out_dir": None,
    "verbose": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_globals(p: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the subcommand
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    g.add_argument("--policy-root", default=argparse.SUPPRESS, metavar="LABEL",
                   help="root label excluded from scoring (default TOP)")
    g.add_argument("--policy-count-preterminals", action="store_true", default=argparse.SUPPRESS,
                   help="score preterminal (POS) constituents too")
    g.add_argument("--punct-set", default=argparse.SUPPRESS, metavar="TAGS",
                   help="comma-separated tags deleted before scoring")
    g.add_argument("--csv", nargs="?", const="-", default=argparse.SUPPRESS, metavar="PATH",
                   help="machine-readable CSV output ('-' or no value for stdout)")
    g.add_argument("--out-dir", default=argparse.SUPPRESS, metavar="DIR", help="run output directory")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ensemble", description="Bagging and boosting treebank parsers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def cmd(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_globals(p)
        return p

    p = cmd("corpus", "corpus utilities")
    csub = p.add_subparsers(dest="corpus_command", metavar="ACTION", parser_class=_Parser)
    csub.required = True
    v = csub.add_parser("validate", help="check a corpus file, reporting the first bad line")
    _add_globals(v)
    v.add_argument("path")

    p = cmd("induce", "induce a PCFG from a treebank")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)

    p = cmd("parse", "parse tokenized sentences, one per line")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="output corpus (default stdout)")

    p = cmd("eval", "score hypothesis trees against gold trees")
    p.add_argument("--gold", required=True)
    p.add_argument("--hyp", required=True)

    p = cmd("vote", "combine parallel parse files by constituent voting")
    p.add_argument("--inputs", required=True, help="comma-separated parse files")
    p.add_argument("--weights", help="comma-separated positive vote weights")
    p.add_argument("--out", required=True)

    p = cmd("bag", "train and evaluate a bagged ensemble")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--k", type=int, default=15)

    p = cmd("boost", "train and evaluate a boosted ensemble")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--rounds", type=int, default=15)
    p.add_argument("--bins", type=int, default=1000, help="rank bins for curves.csv")
    p.add_argument("--literal-alpha-vote", action="store_true",
                   help="vote with weight alpha instead of ln(1/alpha)")

    p = cmd("trim", "remove entries the learner cannot memorize")
    p.add_argument("--train", required=True)
    p.add_argument("--out-stable", required=True)
    p.add_argument("--out-removed", required=True)
    p.add_argument("--replication", type=int, default=10)

    p = cmd("rank", "list the most heavily weighted entries of a boosting trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--top", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--corpus", help="boosted corpus (default: train.trees beside the trace)")
    p.add_argument("--round", type=int, dest="after_round", help="use the distribution after this round")

    p = cmd("curves", "rank-weight curves of a boosting trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--bins", type=int, default=1000)

    p = cmd("learning-curve", "train on growing prefixes and score each model")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--sizes", help="comma-separated ascending sizes (default: standard ladder)")

    p = cmd("synth", "sample a synthetic treebank")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--max-length", type=int, default=30)
    p.add_argument("--grammar", help="generator grammar file (default: built-in)")
    p.add_argument("--out", required=True)
    p.add_argument("--planted", help="write planted-noise line numbers here")
    return parser


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _config(args, command: str, params: dict) -> RunConfig:
    return RunConfig(
        command=command,
        seed=args.seed,
        params=params,
        policy_root=args.policy_root,
        policy_count_preterminals=args.policy_count_preterminals,
        punct_set=sorted(t for t in args.punct_set.split(",") if t),
    )


def _need_out_dir(args) -> Path:
    if not args.out_dir:
        raise UsageError(f"{args.command} needs --out-dir")
    return prepare_out_dir(args.out_dir)


def _write_csv(target, header, rows) -> None:
    """Write to ``target`` ("-" is stdout)."""
    if target == "-":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_sentences(path) -> list[tuple[str, ...]]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                sentences.append(check_sentence(line.split()))
            except ValueError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from exc
    return sentences


# -- subcommands -------------------------------------------------------------

def cmd_corpus(args) -> int:
    corpus = corpus_load(args.path)
    print(f"{args.path}: {len(corpus)} trees ok")
    return EXIT_OK


def cmd_induce(args) -> int:
    model = induce(corpus_load(args.train), args.seed)
    model.save(args.out)
    return EXIT_OK


def cmd_parse(args) -> int:
    model = load_model(args.model)
    trees = [parse(model, s) for s in _read_sentences(args.input)]
    if args.out:
        corpus_save(trees, args.out)
    else:
        for t in trees:
            print(serialize(t))
    return EXIT_OK


def cmd_eval(args) -> int:
    gold, hyp = corpus_load(args.gold), corpus_load(args.hyp)
    policy = _config(args, "eval", {}).policy
    report = score_corpus(gold, hyp.trees, policy)
    cells = [report.n, *report.rounded()]
    header = ["Sentences", "P", "R", "F", "Exact"]
    if args.csv != "-":
        print(format_table(header, [cells]), end="")
    if args.csv is not None:
        _write_csv(args.csv, header, [cells])
    return EXIT_OK


def cmd_vote(args) -> int:
    paths = [p for p in args.inputs.split(",") if p]
    if not paths:
        raise UsageError("--inputs is empty")
    weights = _float_list(args.weights) if args.weights else None
    if weights is not None and len(weights) != len(paths):
        raise UsageError(f"{len(paths)} inputs but {len(weights)} weights")
    if weights is not None and any(not w > 0 for w in weights):
        raise UsageError("vote weights must be positive")
    corpora = [corpus_load(p) for p in paths]
    sizes = {len(c) for c in corpora}
    if len(sizes) != 1:
        raise CorpusError(f"input files have different numbers of trees: {[len(c) for c in corpora]}")
    out = []
    for i, trees in enumerate(zip(*corpora), 1):
        if len({t.leaves for t in trees}) != 1:
            raise CorpusError(f"line {i}: inputs disagree on the sentence")
        out.append(combine(trees, weights, root_label=args.policy_root))
    corpus_save(out, args.out)
    return EXIT_OK


def _print_summary(out: Path) -> None:
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")


def cmd_bag(args) -> int:
    out = _need_out_dir(args)
    train = corpus_load(args.train)
    test = corpus_load(args.test) if args.test else None
    config = _config(args, "bag", {"train": args.train, "test": args.test, "k": args.k})
    run_bag(config, train, test, out)
    _print_summary(out)
    return EXIT_OK


def cmd_boost(args) -> int:
    out = _need_out_dir(args)
    train = corpus_load(args.train)
    test = corpus_load(args.test) if args.test else None
    config = _config(args, "boost", {
        "train": args.train,
        "test": args.test,
        "rounds": args.rounds,
        "bins": args.bins,
        "literal_alpha_vote": args.literal_alpha_vote,
    })
    run_boost(config, train, test, out)
    _print_summary(out)
    return EXIT_OK


def cmd_trim(args) -> int:
    corpus = corpus_load(args.train)
    policy = _config(args, "trim", {}).policy
    report = trim_report(corpus, None, args.replication, seed=args.seed, policy=policy)
    corpus_save(report.stable, args.out_stable)
    write_removed(report.removed, args.out_removed)
    print(f"kept {len(report.stable)} of {len(corpus)} trees; removed {len(report.removed)}")
    return EXIT_OK


def cmd_rank(args) -> int:
    trace = read_trace(args.trace)
    corpus_path = args.corpus or Path(args.trace).with_name("train.trees")
    ranking = rank_inconsistencies(trace, corpus_load(corpus_path), args.top, rounds=args.after_round)
    write_ranking(ranking, args.out)
    return EXIT_OK


def cmd_curves(args) -> int:
    if args.csv is None:
        raise UsageError("curves needs --csv PATH")
    rows = weight_rank_curves(read_trace(args.trace), args.bins)
    if args.csv == "-":
        _write_csv("-", ["iteration", "bin", "mean_weight"], [[it, b, repr(mean)] for it, b, mean in rows])
    else:
        write_curves(rows, args.csv)
    return EXIT_OK


def cmd_learning_curve(args) -> int:
    out = _need_out_dir(args)
    sizes = _int_list(args.sizes) if args.sizes else None
    config = _config(args, "learning-curve", {"train": args.train, "test": args.test, "sizes": sizes})
    run_learning_curve(config, corpus_load(args.train), corpus_load(args.test), out)
    print((out / "learning_curve.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    grammar = default_grammar()
    if args.grammar:
        grammar = GeneratorGrammar.from_text(Path(args.grammar).read_text(encoding="utf-8"))
    corpus, planted = synth_corpus(grammar, args.n, args.noise, args.seed, max_length=args.max_length)
    corpus_save(corpus, args.out)
    if args.planted:
        Path(args.planted).write_text("".join(f"{i + 1}\n" for i in planted), encoding="utf-8")
    print(f"wrote {len(corpus)} trees ({len(planted)} perturbed) to {args.out}")
    return EXIT_OK


COMMANDS = {
    "corpus": cmd_corpus,
    "induce": cmd_induce,
    "parse": cmd_parse,
    "eval": cmd_eval,
    "vote": cmd_vote,
    "bag": cmd_bag,
    "boost": cmd_boost,
    "trim": cmd_trim,
    "rank": cmd_rank,
    "curves": cmd_curves,
    "learning-curve": cmd_learning_curve,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ensemble: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnboostableRound as exc:
        print(f"ensemble: unboostable round: {exc}", file=sys.stderr)
        return EXIT_UNBOOSTABLE
    except (OSError, ValueError, RuntimeError) as exc:
        # TreeParseError and CorpusError are ValueErrors
        print(f"ensemble: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
