import csv
import io
import itertools
import math
import random

import numpy as np
import pytest

from randksat.analysis import (
    SCHEMA,
    ExperimentGrid,
    chain_law,
    clause_components,
    count_bad_formula,
    fit_exponent,
    grow_connected_set,
    induced_edges,
    linearity_scan,
    pinning_experiment,
    pipeline_once,
    run_grid,
    thread_count,
    to_csv,
    tree_excess_stats,
    tree_excess_target,
    unsatisfied_mask,
    z0_stats,
)
from randksat.classifier import ClassifierParams, classify
from randksat.formula import Formula, generate_random
from randksat.marking import Marking
from randksat.oracle import brute_count


def bfs_components(f, clauses, var_ok=lambda v: True):
    clauses = list(clauses)
    comp = {}
    for c in clauses:
        if c in comp:
            continue
        comp[c] = c
        stack = [c]
        while stack:
            a = stack.pop()
            for b in clauses:
                if b not in comp and {v for v in f.clause_vars[a] if var_ok(v)} & set(f.clause_vars[b]):
                    comp[b] = c
                    stack.append(b)
    return comp


@pytest.mark.parametrize("seed", range(10))
def test_clause_components_match_bfs(seed):
    f = generate_random(3, 40, 0.8, seed)
    rng = np.random.default_rng(seed)
    mask = rng.random(f.m) < 0.7
    vmask = rng.random(f.n) < 0.8
    labels, sizes = clause_components(f, mask, vmask)
    ref = bfs_components(f, np.flatnonzero(mask).tolist(), lambda v: vmask[v])
    assert (labels[~mask] == -1).all()
    for a, b in itertools.combinations(ref, 2):
        assert (labels[a] == labels[b]) == (ref[a] == ref[b])
    assert sizes.sum() == mask.sum()


def naive_linearity(f):
    vs = [set(x) for x in f.clause_vars]
    short = sum(len(s) < f.k - 1 for s in vs)
    inter = [len(a & b) for a, b in itertools.combinations(vs, 2)]
    return short, sum(t >= 3 for t in inter), max(inter, default=0)


@pytest.mark.parametrize("seed", range(40))
def test_linearity_scan_matches_naive(seed):
    rng = random.Random(seed)
    f = generate_random(rng.randint(3, 8), rng.randint(6, 30), rng.uniform(0.5, 3), seed)
    assert linearity_scan(f) == naive_linearity(f)


def test_linearity_scan_example():
    f = Formula.from_signed(6, [[1, 2, 3, 4], [1, 2, 3, 5], [1, 1, 1, 6]])
    assert linearity_scan(f) == (1, 1, 3)


def test_tree_excess_helpers():
    f = Formula.from_signed(6, [[1, 2, 3], [3, 4, 5], [5, 6, 1]])
    assert induced_edges(f, [0, 1, 2]) == 3
    ys = grow_connected_set(f, 0, 3, random.Random(0))
    assert sorted(ys) == [0, 1, 2]
    assert tree_excess_target(10, 2.0, 1.0) == pytest.approx(2 * math.log(math.e * 200))
    assert tree_excess_target(2, 0.01, 1.0) == 1.0


def test_tree_excess_stats_fields():
    f = generate_random(10, 1000, 2.0, seed=0)
    s = tree_excess_stats(f, 2.0, 0, samples=30)
    assert s.extra["size_limit"] == math.floor(math.log(1000))
    assert s.max_tree_excess >= s.extra["sampled_max"] >= 0


def test_unsatisfied_mask():
    f = Formula.from_signed(3, [[1, 2], [-1, 3], [2, 3]])
    assert unsatisfied_mask(f, {0: True}).tolist() == [False, True, True]
    assert unsatisfied_mask(f, {}).all()


def test_pinning_theory_guard():
    f = generate_random(4, 50, 1.0, seed=0)
    with pytest.raises(ValueError):
        pinning_experiment(f, range(50), 5, 3)
    s = pinning_experiment(f, range(50), 5, 10, L=3, mode="desk")
    assert s.extra["draws"] == 10 and len(s.largest_unsat_set) == 10
    assert s.extra["exceed_count"] == sum(x >= 3 for x in s.largest_unsat_set)


def test_pinning_with_chain_law():
    f = Formula.from_signed(6, [[1, 2, 3], [4, 5, 6]])
    mk = Marking(frozenset({0, 1, 3}), frozenset({2, 4}), frozenset({5}))
    s = pinning_experiment(f, mk.marked, 1, 5, law=chain_law(f, mk, 2), L=1, mode="desk")
    assert s.extra["draws"] == 5


def test_count_bad_formula_matches_brute():
    f = generate_random(3, 14, 3.0, seed=2)
    cls = classify(f, ClassifierParams(override_Delta=7))
    res = count_bad_formula(f, cls)
    sub = [f.literals[c] for c in sorted(cls.bad_clauses)]
    bad = sorted(cls.bad_vars)
    ref = 0
    for bits in itertools.product((0, 1), repeat=len(bad)):
        val = dict(zip(bad, bits))
        ref += all(any(val[v] == w for v, w in lits) for lits in sub)
    assert res.count == ref and res.variables == len(bad)
    s = z0_stats(f, 3.0, 2, delta_override=7)
    assert int(s.extra["z0_full"]) == ref << (14 - len(bad))


def test_fit_exponent():
    ns = [10, 100, 1000]
    assert fit_exponent(ns, [n**1.3 for n in ns]) == pytest.approx(1.3)


def test_pipeline_once_small():
    row = pipeline_once(10, 2000, 0.05, 0, delta_override=6)
    assert row["T"] == math.ceil(2000**0.2 * math.log(2000))
    assert row["total"] >= row["steps"] >= 0


def test_grid_and_csv():
    with pytest.raises(ValueError):
        ExperimentGrid("nope")
    grid = ExperimentGrid("linearity", k=(5,), n=(100, 200), alpha=(2.0,), seeds=(0, 1))
    rep = run_grid(grid)
    assert rep["schema"] == SCHEMA and len(rep["rows"]) == 4
    assert [r["n"] for r in rep["summary"]] == [100, 200]
    rows = list(csv.DictReader(io.StringIO(to_csv(rep))))
    assert len(rows) == 4 and rows[0]["schema"] == SCHEMA


def test_thread_count(monkeypatch):
    monkeypatch.setenv("RANDKSAT_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("RANDKSAT_THREADS", "x")
    assert thread_count() == 1
