"""Acceptance gate.  Each test records a one-line verdict that the terminal
summary prints as ``criterion N: PASS/FAIL``."""
import filecmp
import math
import shutil
import statistics
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from oracles import all_derivations, intersection_counts, literal_alpha, random_tree
from parser_ensemble.bagging import evaluate_curve, train_bagged
from parser_ensemble.boosting import AgreementStats, alpha_ca_raw, boost, compute_alpha_ca
from parser_ensemble.evaluation import f_measure, score_pair
from parser_ensemble.experiments import default_sizes, learning_curve
from parser_ensemble.grammar import best_derivation, induce
from parser_ensemble.qc import joint_memorization, memorization_test, trim_corpus
from parser_ensemble.synth import synth_corpus
from parser_ensemble.trees import Constituent, Corpus, Tree, is_crossing, parse_bracketed, serialize
from parser_ensemble.voting import build_tree, tally_votes

RESULTS: dict[int, tuple[bool, str]] = {}
SEEDS = range(5)


def record(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = (bool(ok), detail)
    assert ok, f"criterion {number}: {detail}"


def train_test(seed):
    train, _ = synth_corpus(n=2000, seed=seed)
    test, _ = synth_corpus(n=500, seed=100 + seed)
    return train, test


@pytest.fixture(scope="module")
def noisy_boosts():
    """Fifteen-round boosts of the 5%-noise corpus, one per seed."""
    runs = []
    for seed in SEEDS:
        corpus, planted = synth_corpus(n=2000, noise_rate=0.05, seed=seed)
        runs.append((corpus, planted, boost(corpus, 15, master_seed=seed)))
    return runs


# 1 ---------------------------------------------------------------------------

def test_criterion_01_metric_fidelity():
    f1 = f_measure(69.90, 54.19)
    f2 = f_measure(87.99, 87.87)
    ok = abs(f1 - 61.05) <= 0.01 and abs(f2 - 87.93) <= 0.01
    record(1, ok, f"F(69.90, 54.19)={f1:.4f} (61.05), F(87.99, 87.87)={f2:.4f} (87.93), tol 0.01")


# 2 ---------------------------------------------------------------------------

def _random_instance(rng):
    pool = [Constituent(lab, s, e) for lab in "ABC" for s in range(4) for e in range(s + 1, 5)]
    while True:
        m = int(rng.integers(1, 12))
        golds, hyps = [], []
        for _ in range(m):
            golds.append({c for c in pool if rng.random() < 0.15})
            hyps.append({c for c in pool if rng.random() < 0.15} | {c for c in golds[-1] if rng.random() < 0.6})
        dist = rng.dirichlet(np.ones(m))
        stats = [AgreementStats(len(g | h), len(g & h), len(g ^ h)) for g, h in zip(golds, hyps)]
        if any(s.agreements for s in stats if s.union):
            return golds, hyps, dist, stats


def test_criterion_02_alpha_oracle():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        golds, hyps, dist, stats = _random_instance(rng)
        ref = literal_alpha(golds, hyps, dist)
        worst = max(worst, abs(alpha_ca_raw(stats, dist) - ref) / max(1.0, ref))
        worst = max(worst, abs(compute_alpha_ca(stats, dist) - min(max(ref, 1e-6), 1 - 1e-6)))
    worked = compute_alpha_ca([AgreementStats(4, 3, 1), AgreementStats(5, 5, 0)], [0.5, 0.5])
    ok = worst <= 1e-12 and worked == 1 / 7
    record(2, ok, f"max deviation {worst:.2e} over 1000 instances (tol 1e-12); worked example {worked!r} (1/7)")


# 3, 6, 7 ---------------------------------------------------------------------

def test_criterion_03_distribution_hygiene(noisy_boosts):
    worst_sum, most_negative, count = 0.0, math.inf, 0
    for _, _, ens in noisy_boosts:
        for dist in ens.trace.distributions():
            worst_sum = max(worst_sum, abs(math.fsum(dist) - 1.0))
            most_negative = min(most_negative, float(dist.min()))
            count += 1
    ok = worst_sum <= 1e-9 and most_negative >= 0.0
    record(3, ok, f"{count} distributions: max |sum-1|={worst_sum:.1e} (tol 1e-9), min entry {most_negative:.3g}")


def test_criterion_06_boosting_skew(noisy_boosts):
    pairs = [(ens.trace.distribution(2).max(), ens.trace.distribution(15).max()) for _, _, ens in noisy_boosts]
    wins = sum(late > early for early, late in pairs)
    detail = ", ".join(f"{e:.4f}->{l:.4f}" for e, l in pairs)
    record(6, wins >= 4, f"max weight at round 15 > at round 2 in {wins}/5 seeds (need 4): {detail}")


def test_criterion_07_inconsistency_mining(noisy_boosts):
    fractions = []
    for corpus, planted, ens in noisy_boosts:
        dist = ens.trace.distributions()[10]  # after 10 rounds
        order = np.lexsort((np.arange(len(dist)), -dist))
        top = set(order[: len(dist) // 10].tolist())
        fractions.append(len(top & set(planted)) / len(planted))
    worst = min(fractions)
    detail = ", ".join(f"{f:.1%}" for f in fractions)
    record(7, worst >= 0.60, f"planted entries in top 10% after 10 rounds: {detail} (need >=60% in every seed)")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_non_crossing_votes():
    rng = np.random.default_rng(4)
    crossings = 0
    for _ in range(1000):
        k = int(rng.integers(2, 10))
        trees = [random_tree(rng, max_depth=5) for _ in range(k)]
        n = min(len(t) for t in trees)
        members = []
        for t in trees:
            # re-yield every member over a common n-word sentence
            words = [f"w{i}" for i in range(n)]
            members.append(_reyield(t, words))
        sets = [[Constituent(*c) for c in _spans(m)] for m in members]
        weights = rng.uniform(0.01, 5.0, size=k)
        for w in (None, weights):
            winners = sorted(tally_votes(sets, w).winners())
            crossings += sum(is_crossing(x, y) for i, x in enumerate(winners) for y in winners[i + 1:])
            build_tree(winners, members[0].leaves, members)
    record(4, crossings == 0, f"{crossings} crossing winner pairs over 1000 ensembles x 2 vote rules")


def _reyield(tree, words):
    """Truncate ``tree`` to ``len(words)`` leaves and rename them."""
    pos = iter(words)
    budget = [len(words)]

    def walk(node):
        if node.is_preterminal:
            if budget[0] == 0:
                return None
            budget[0] -= 1
            return Tree.preterminal(node.label, next(pos))
        kids = [c for c in (walk(ch) for ch in node.children) if c is not None]
        return Tree(node.label, tuple(kids)) if kids else None

    return walk(tree)


def _spans(tree):
    out = []

    def walk(node, start, top):
        if node.is_preterminal:
            return start + 1
        end = start
        for ch in node.children:
            end = walk(ch, end, False)
        if not top:
            out.append((node.label, start, end))
        return end

    walk(tree, 0, True)
    return out


# 5 ---------------------------------------------------------------------------

def test_criterion_05_bagging_direction():
    gains = []
    for seed in SEEDS:
        train, test = train_test(seed)
        ens = train_bagged(train, 15, master_seed=seed)
        rows, _ = evaluate_curve(ens, None, test)
        f = {r.prefix: r.report.f for r in rows}
        gains.append(f[15] - f[1])
    wins = sum(g >= 0 for g in gains)
    median = statistics.median(gains)
    ok = wins >= 4 and median > 0
    detail = ", ".join(f"{g:+.2f}" for g in gains)
    record(5, ok, f"Final-Initial test F per seed: {detail}; {wins}/5 non-negative (need 4), median {median:+.2f} (need >0)")


# 8 ---------------------------------------------------------------------------

CONFLICT_PAIR = (
    "(TOP (S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (NNP Smith)) (PP (IN in) (NP (NNP Boston))))))",
    "(TOP (S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (NP (NNP Smith)) (PP (IN in) (NP (NNP Boston)))))))",
)
# each is more probable under a different derivation of its own grammar
UNMEMORIZABLE = (
    "(TOP (X (X (A a) (Y (A a) (A a))) (X (X (A a) (A a)) (A a))))",
    "(TOP (X (Y (A a) (A a)) (Y (A a) (Y (A a) (A a) (A a)))))",
)


def test_criterion_08_memorization_and_trim():
    pair = [parse_bracketed(s)[0] for s in CONFLICT_PAIR]
    alone = [memorization_test(t) for t in pair]
    jointly = joint_memorization(pair)
    fixtures = [parse_bracketed(s)[0] for s in UNMEMORIZABLE]
    clean, _ = synth_corpus(n=48, seed=8)
    trees = list(clean.trees)
    trees.insert(11, fixtures[0])
    trees.insert(37, fixtures[1])
    stable, removed = trim_corpus(Corpus(tuple(trees)))
    removed_idx = sorted(r.index for r in removed)
    ok = all(alone) and not all(jointly) and removed_idx == [11, 37] and len(stable) == 48
    record(8, ok, f"conflicting pair alone {alone}, jointly {jointly}; trim removed {removed_idx} of 50 (planted [11, 37])")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_learning_curve_shape():
    monotone = concave = 0
    lines = []
    for seed in SEEDS:
        train, test = train_test(seed)
        sizes = default_sizes(len(train))
        rows = learning_curve(train, test, sizes, seed=seed)
        f = [r.test.f for r in rows]
        slopes = [(f[i + 1] - f[i]) / (sizes[i + 1] - sizes[i]) for i in range(len(f) - 1)]
        monotone += all(b >= a for a, b in zip(f, f[1:]))
        concave += all(b <= a for a, b in zip(slopes, slopes[1:]))
        lines.append("/".join(f"{x:.1f}" for x in f))
    ok = monotone >= 4 and concave >= 3
    record(9, ok, f"sizes {sizes}: test F {'; '.join(lines)}; non-decreasing {monotone}/5 (need 4), "
                  f"slopes non-increasing {concave}/5 (need 3)")


# 10 --------------------------------------------------------------------------

PIPELINE = [
    ["synth", "--n", "2000", "--seed", "0", "--out", "train.trees"],
    ["synth", "--n", "500", "--seed", "100", "--out", "test.trees"],
    ["synth", "--n", "2000", "--noise", "0.05", "--seed", "0", "--out", "noisy.trees", "--planted", "planted.txt"],
    ["bag", "--train", "train.trees", "--test", "test.trees", "--k", "15", "--seed", "0", "--out-dir", "bag"],
    ["boost", "--train", "noisy.trees", "--test", "test.trees", "--rounds", "15", "--seed", "0", "--out-dir", "boost"],
    ["rank", "--trace", "boost/trace.csv", "--top", "100", "--out", "rank.tsv"],
    ["curves", "--trace", "boost/trace.csv", "--bins", "1000", "--csv", "curves.csv"],
    ["trim", "--train", "test.trees", "--out-stable", "stable.trees", "--out-removed", "removed.tsv"],
    ["learning-curve", "--train", "train.trees", "--test", "test.trees", "--seed", "0", "--out-dir", "lc"],
    ["induce", "--train", "train.trees", "--seed", "0", "--out", "model.pcfg"],
    ["parse", "--model", "model.pcfg", "--input", "tokens.txt", "--out", "hyp.trees"],
    ["eval", "--gold", "test.trees", "--hyp", "hyp.trees", "--csv", "eval.csv"],
    ["vote", "--inputs", "hyp.trees,test.trees,hyp.trees", "--weights", "1,2.5,1", "--out", "voted.trees"],
]


def _run_pipeline(workdir: Path) -> list[int]:
    workdir.mkdir()
    codes = []
    for argv in PIPELINE:
        if argv[0] == "parse":
            test = (workdir / "test.trees").read_text().splitlines()
            toks = [" ".join(parse_bracketed(line)[0].leaves) for line in test]
            (workdir / "tokens.txt").write_text("\n".join(toks) + "\n")
        proc = subprocess.run([sys.executable, "-m", "parser_ensemble.cli", *argv], cwd=workdir,
                              capture_output=True, text=True)
        (workdir / f"stdout-{len(codes):02d}-{argv[0]}.txt").write_text(proc.stdout)
        codes.append(proc.returncode)
    return codes


def _diff(a: Path, b: Path) -> list[str]:
    cmp = filecmp.dircmp(a, b)
    out = [str(a / x) for x in cmp.left_only + cmp.right_only]
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    out += [str(a / x) for x in mismatch + errors]
    for sub in cmp.common_dirs:
        out += _diff(a / sub, b / sub)
    return out


def test_criterion_10_determinism(tmp_path):
    codes = [_run_pipeline(tmp_path / run) for run in ("first", "second")]
    differing = _diff(tmp_path / "first", tmp_path / "second")
    n_files = sum(1 for p in (tmp_path / "first").rglob("*") if p.is_file())
    ok = codes[0] == codes[1] == [0] * len(PIPELINE) and not differing
    record(10, ok, f"{len(PIPELINE)} subcommands run twice, exit codes {codes[0]}; "
                   f"{n_files} files compared, {len(differing)} differ {differing[:3]}")
    shutil.rmtree(tmp_path, ignore_errors=True)


# 11 --------------------------------------------------------------------------

def test_criterion_11_roundtrip_and_oracles():
    rng = np.random.default_rng(11)
    roundtrip_bad = 0
    for _ in range(500):
        t = random_tree(rng)
        roundtrip_bad += parse_bracketed(serialize(t)) != [t]

    scoring_bad = 0
    for _ in range(1000):
        g = random_tree(rng)
        h = random_tree(rng, max_depth=6)
        while len(h) < len(g):
            h = random_tree(rng, max_depth=6)
        h = _reyield(h, list(g.leaves))
        scoring_bad += tuple(score_pair(g, h)) != intersection_counts(g, h)

    train, _ = synth_corpus(n=300, seed=11)
    model = induce(train)
    sentences = [s for s in synth_corpus(n=2000, seed=12)[0].sentences if len(s) <= 6][:200]
    decoder_bad, worst = 0, 0.0
    for s in sentences:
        tree, lp = best_derivation(model, s)
        derivations = all_derivations(model, s)
        if not derivations:
            decoder_bad += tree is not None
            continue
        best = max(p for _, p in derivations)
        worst = max(worst, abs(lp - best))
        tied = {t for t, p in derivations if abs(p - best) <= 1e-12}
        decoder_bad += abs(lp - best) > 1e-12 or tree not in tied
    ok = roundtrip_bad == 0 and scoring_bad == 0 and decoder_bad == 0 and len(sentences) == 200
    record(11, ok, f"round-trip failures {roundtrip_bad}/500, scoring mismatches {scoring_bad}/1000, "
                   f"decoder mismatches {decoder_bad}/{len(sentences)} (max |dlogp| {worst:.1e}, tol 1e-12)")
