import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import naive_classify
from randksat.classifier import ClassifierParams, classify, degree_table
from randksat.formula import Formula, generate_random


def test_default_constants():
    p = ClassifierParams()
    assert p.Delta(10) == math.ceil(2 ** ((0.117841 - 2e-5) * 10))
    assert p.alpha0(10) == pytest.approx(2 ** ((0.117841 - 2e-5) * 10) / 1000)
    with pytest.raises(ValueError):
        ClassifierParams(r=0.2)
    with pytest.raises(ValueError):
        ClassifierParams(override_Delta=0)


def test_all_low_degree():
    f = generate_random(3, 100, 0.5, seed=1)
    cls = classify(f, ClassifierParams(override_Delta=1000))
    assert not cls.bad_vars and not cls.bad_clauses


def test_hand_example():
    f = Formula.from_signed(4, [[1, 2, 3]] * 3 + [[1, 2, 4]])
    cls = classify(f, ClassifierParams(override_Delta=2))
    assert list(cls.degree) == [4, 4, 3, 1]
    # the last clause holds only two bad variables, so x3 stays good
    assert cls.bad_vars == {0, 1, 2}
    assert cls.bad_clauses == {0, 1, 2}


def test_degree_table():
    f = Formula.from_signed(2, [[1, 1, 2]])
    assert list(degree_table(f)) == [2, 1]
    assert list(degree_table(Formula(3, 2, [], []))) == [0, 0, 0]
    g = generate_random(4, 30, 3.0, seed=2)
    assert degree_table(g).sum() == g.k * g.m


@given(st.integers(3, 10), st.integers(5, 60), st.floats(0.5, 6), st.integers(1, 12), st.integers(0, 10**6))
@settings(max_examples=150, deadline=None)
def test_matches_naive_fixpoint(k, n, alpha, Delta, seed):
    f = generate_random(k, n, alpha, seed)
    cls = classify(f, ClassifierParams(override_Delta=Delta))
    bad, bad_clauses = naive_classify(f, Delta)
    assert cls.bad_vars == bad
    assert cls.bad_clauses == bad_clauses
    for c, vs in enumerate(f.clause_vars):
        nb = sum(v in bad for v in vs)
        if c in cls.good_clauses:
            assert nb <= 2
        else:
            assert set(vs) <= bad
    assert (cls.degree[~cls.bad_var_mask] < Delta).all()


def test_fixpoint_is_stable():
    f = generate_random(5, 200, 4.0, seed=3)
    cls = classify(f, ClassifierParams(override_Delta=12))
    bad = cls.bad_var_mask
    for vs in f.clause_vars:
        if bad[list(vs)].sum() >= 3:
            assert bad[list(vs)].all()


def test_summary_fields():
    f = generate_random(4, 50, 2.0, seed=0)
    s = classify(f).summary()
    assert set(s) >= {"bad_var_count", "bad_clause_count", "max_degree", "histogram"}
    assert sum(s["histogram"].values()) == f.n
    assert s["max_degree"] == int(np.max(degree_table(f)))
