import csv
import json
import os

import pytest

from parser_ensemble.experiments import (
    RunConfig,
    default_sizes,
    format_table,
    learning_curve,
    prepare_out_dir,
    run_bag,
    run_boost,
    run_learning_curve,
)
from parser_ensemble.synth import synth_corpus
from parser_ensemble.trees import corpus_load


@pytest.fixture(scope="module")
def data():
    train, _ = synth_corpus(n=120, noise_rate=0.05, seed=50)
    test, _ = synth_corpus(n=30, seed=150)
    return train, test


def header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_default_sizes():
    assert default_sizes(2000) == [50, 100, 500, 1000, 2000]
    assert default_sizes(50) == [50]
    assert default_sizes(39832)[-1] == 39832


def test_learning_curve_errors(data):
    train, test = data
    with pytest.raises(ValueError):
        learning_curve(train, test, [10, len(train) + 1])
    with pytest.raises(ValueError):
        learning_curve(train, test, [20, 10])
    with pytest.raises(ValueError):
        learning_curve(train, test, [])


def test_learning_curve_memorizing_learner(data):
    train, test = data

    class Lookup:
        def __init__(self, corpus):
            self.table = {t.leaves: t for t in corpus}

        def parse(self, sentence):
            return self.table.get(tuple(sentence)) or next(iter(self.table.values()))

    rows = learning_curve(train, train, [len(train)], lambda c, s: Lookup(c))
    assert rows[0].train.exact == 100.0


def test_learning_curve_nested_prefixes(data):
    train, test = data
    seen = []

    def spy(corpus, seed):
        seen.append(list(corpus))
        from parser_ensemble.grammar import induce

        return induce(corpus, seed)

    rows = learning_curve(train, test, [10, 40, 120], spy, seed=3)
    assert [r.size for r in rows] == [10, 40, 120]
    assert [len(s) for s in seen] == [10, 40, 120]
    assert seen[1][:10] == seen[0] and seen[2][:40] == seen[1]
    assert sorted(map(str, seen[2])) == sorted(map(str, train))


def test_run_config_round_trip(tmp_path):
    cfg = RunConfig("bag", seed=4, params={"k": 3}, punct_set=[","])
    cfg.write(tmp_path)
    assert RunConfig.from_json((tmp_path / "config.json").read_text()) == cfg
    assert (tmp_path / "seed.txt").read_text() == "4\n"
    assert cfg.policy.punct == frozenset({","})


def test_bag_outputs(data, tmp_path):
    train, test = data
    run_bag(RunConfig("bag", seed=1, params={"k": 3}), train, test, tmp_path)
    assert header(tmp_path / "bag_curve.csv") == ["prefix", "set", "P", "R", "F", "Exact"]
    assert header(tmp_path / "summary.csv") == ["row", "prefix", "set", "P", "R", "F", "Exact"]
    assert sorted(p.name for p in (tmp_path / "models").iterdir()) == ["member_01.pcfg", "member_02.pcfg", "member_03.pcfg"]
    assert json.loads((tmp_path / "config.json").read_text())["params"] == {"k": 3}
    assert "Final(3)" in (tmp_path / "summary.txt").read_text()


def test_boost_outputs_and_rerun(data, tmp_path):
    train, test = data
    cfg = RunConfig("boost", seed=2, params={"rounds": 2, "bins": 10})
    for out in (tmp_path / "a", tmp_path / "b"):
        run_boost(cfg, train, test, out)
    assert header(tmp_path / "a" / "trace.csv")[:2] == ["round", "alpha"]
    assert header(tmp_path / "a" / "curves.csv") == ["iteration", "bin", "mean_weight"]
    assert corpus_load(tmp_path / "a" / "train.trees") == train
    for name in ("trace.csv", "curves.csv", "boost_curve.csv", "summary.csv", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_learning_curve_outputs(data, tmp_path):
    train, test = data
    run_learning_curve(RunConfig("learning-curve", params={"sizes": [30, 120]}), train, test, tmp_path)
    rows = list(csv.reader(open(tmp_path / "learning_curve.csv")))
    assert rows[0] == ["size", "set", "P", "R", "F", "Exact"]
    assert [r[:2] for r in rows[1:]] == [["30", "train"], ["30", "test"], ["120", "train"], ["120", "test"]]


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_directory(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        with pytest.raises(PermissionError):
            prepare_out_dir(locked / "run")
    finally:
        locked.chmod(0o700)


def test_out_dir_over_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(PermissionError):
        prepare_out_dir(blocker / "run")


def test_format_table_alignment():
    text = format_table(["name", "F"], [["a", "1.50"], ["long", "12.25"]])
    lines = text.splitlines()
    assert lines[1] == "----  -----"
    assert lines[2] == "a      1.50"
    assert lines[3] == "long  12.25"
