"""Run orchestration: configuration, output directories and report files.

Every run directory holds the exact configuration that produced it
(``config.json``), the master seed (``seed.txt``), an aligned text table
and machine-readable CSVs.  All outputs are pure functions of the inputs
and the configuration, so a rerun reproduces them byte for byte.
"""
from __future__ import annotations

import csv
import json
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, NamedTuple, Sequence

from . import _seeding
from .bagging import evaluate_curve as bag_curve
from .bagging import train_bagged
from .boosting import UnboostableRound, boost, write_trace
from .boosting import evaluate_curve as boost_curve
from .ensemble import CurveRow, SummaryRow, fit_member, member_model, parse_all
from .evaluation import ScoreReport, score_corpus
from .qc import weight_rank_curves, write_curves
from .trees import DEFAULT_POLICY, Corpus, ScoringPolicy, corpus_save
from .utils.validation import check_corpus

__all__ = [
    "RunConfig",
    "SIZE_LADDER",
    "LearningRow",
    "default_sizes",
    "learning_curve",
    "prepare_out_dir",
    "run_bag",
    "run_boost",
    "run_learning_curve",
    "format_table",
    "write_score_csv",
]

# training sizes of the original study; runs truncate this at the corpus size
SIZE_LADDER = (50, 100, 500, 1000, 5000, 10000, 20000)
SCORE_COLUMNS = ["P", "R", "F", "Exact"]


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    policy_root: str = "TOP"
    policy_count_preterminals: bool = False
    punct_set: list[str] = field(default_factory=list)

    @property
    def policy(self) -> ScoringPolicy:
        return ScoringPolicy(
            root_label=self.policy_root,
            count_preterminals=self.policy_count_preterminals,
            punct=frozenset(self.punct_set),
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        return cls(**json.loads(text))

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        (out / "config.json").write_text(self.to_json(), encoding="utf-8")
        (out / "seed.txt").write_text(f"{self.seed}\n", encoding="utf-8")


def prepare_out_dir(path) -> Path:
    """Create ``path`` and prove it is writable, before any real work."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out, prefix=".probe-"):
            pass
    except OSError as exc:
        raise PermissionError(f"output directory {out} is not writable: {exc}") from exc
    return out


# -- report files ------------------------------------------------------------

def _score_cells(report: ScoreReport) -> list[str]:
    return list(report.rounded())


def write_score_csv(rows: Sequence[CurveRow], path) -> None:
    """Columns ``prefix,set,P,R,F,Exact``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["prefix", "set", *SCORE_COLUMNS])
        for r in rows:
            w.writerow([r.prefix, r.set, *_score_cells(r.report)])


def write_summary_csv(rows: Sequence[SummaryRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "prefix", "set", *SCORE_COLUMNS])
        for r in rows:
            w.writerow([r.name, r.prefix, r.set, *_score_cells(r.report)])


def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Aligned plain-text table; all-numeric columns are right-aligned."""
    cells = [[str(c) for c in row] for row in rows]
    cols = range(len(header))
    widths = [max([len(header[i])] + [len(r[i]) for r in cells]) for i in cols]
    right = [bool(cells) and all(_looks_numeric(r[i]) for r in cells) for i in cols]

    def fmt(row):
        return "  ".join(c.rjust(widths[i]) if right[i] else c.ljust(widths[i]) for i, c in enumerate(row)).rstrip()

    lines = [fmt(list(header)), "  ".join("-" * w for w in widths)] + [fmt(r) for r in cells]
    return "\n".join(lines) + "\n"


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def summary_table(rows: Sequence[SummaryRow]) -> str:
    return format_table(
        ["Row", "Prefix", "Set", *SCORE_COLUMNS],
        [[r.name, r.prefix, r.set, *_score_cells(r.report)] for r in rows],
    )


def _save_models(members, out: Path) -> None:
    models = [member_model(member) for member in members]
    if any(member is None for member in models):
        return
    mdir = out / "models"
    mdir.mkdir(exist_ok=True)
    width = max(2, len(str(len(models))))
    for i, model in enumerate(models, 1):
        model.save(mdir / f"member_{i:0{width}d}.pcfg")


# -- runs ----------------------------------------------------------------------

def run_bag(config: RunConfig, train: Corpus, test: Corpus | None, out_dir, learner=None):
    out = prepare_out_dir(out_dir)
    config.write(out)
    n_members = int(config.params.get("k", 15))
    ensemble = train_bagged(train, n_members, learner, config.seed, root_label=config.policy_root)
    rows, summary = bag_curve(ensemble, train, test, config.policy)
    _save_models(ensemble.members, out)
    write_score_csv(rows, out / "bag_curve.csv")
    write_summary_csv(summary, out / "summary.csv")
    (out / "summary.txt").write_text(summary_table(summary), encoding="utf-8")
    return ensemble, rows, summary


def run_boost(config: RunConfig, train: Corpus, test: Corpus | None, out_dir, learner=None):
    """Boost, then write curves, the trace and its rank-weight curves.

    An unboostable round still leaves the partial trace on disk before the
    error propagates.
    """
    out = prepare_out_dir(out_dir)
    config.write(out)
    params = config.params
    corpus_save(train, out / "train.trees")
    try:
        ensemble = boost(
            train,
            int(params.get("rounds", 15)),
            learner,
            config.seed,
            policy=config.policy,
            vote="literal" if params.get("literal_alpha_vote") else "log",
            root_label=config.policy_root,
        )
    except UnboostableRound as exc:
        if exc.trace is not None and exc.trace.rounds:
            write_trace(exc.trace, out / "trace.csv")
        raise
    rows, summary = boost_curve(ensemble, train, test, config.policy)
    _save_models(ensemble.members, out)
    write_score_csv(rows, out / "boost_curve.csv")
    write_summary_csv(summary, out / "summary.csv")
    (out / "summary.txt").write_text(summary_table(summary), encoding="utf-8")
    write_trace(ensemble.trace, out / "trace.csv")
    write_curves(weight_rank_curves(ensemble.trace, int(params.get("bins", 1000))), out / "curves.csv")
    return ensemble, rows, summary


# -- learning curve ----------------------------------------------------------

class LearningRow(NamedTuple):
    size: int
    train: ScoreReport
    test: ScoreReport


def default_sizes(size: int) -> list[int]:
    return [s for s in SIZE_LADDER if s < size] + [size]


def learning_curve(
    corpus,
    test,
    sizes: Sequence[int] | None = None,
    learner=None,
    seed: int = 0,
    policy: ScoringPolicy = DEFAULT_POLICY,
) -> list[LearningRow]:
    """Train on nested prefixes of a seed-shuffled corpus and score each
    model on its own training data and on ``test``."""
    corpus = check_corpus(corpus)
    test = check_corpus(test)
    size = len(corpus)
    sizes = default_sizes(size) if sizes is None else list(sizes)
    if not sizes:
        raise ValueError("no training sizes given")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if sizes[0] < 1 or sizes[-1] > size:
        raise ValueError(f"sizes must lie in [1, {size}]")
    order = _seeding.rng_for(seed, _seeding.SHUFFLE).permutation(size)
    shuffled = corpus.take(order)
    rows = []
    for size in sizes:
        subset = shuffled[:size]
        member = fit_member(learner, subset, seed)
        rows.append(LearningRow(
            size,
            score_corpus(subset, parse_all(member, subset.sentences), policy),
            score_corpus(test, parse_all(member, test.sentences), policy),
        ))
    return rows


def run_learning_curve(config: RunConfig, train: Corpus, test: Corpus, out_dir, learner=None):
    out = prepare_out_dir(out_dir)
    config.write(out)
    sizes = config.params.get("sizes")
    rows = learning_curve(train, test, sizes, learner, config.seed, config.policy)
    table = []
    for r in rows:
        for name, rep in (("train", r.train), ("test", r.test)):
            table.append([r.size, name, *_score_cells(rep)])
    header = ["size", "set", *SCORE_COLUMNS]
    with open(out / "learning_curve.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(table)
    (out / "learning_curve.txt").write_text(format_table(header, table), encoding="utf-8")
    return rows
