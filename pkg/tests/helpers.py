"""Instance builders and independent oracles shared by the test modules."""
import random

import numpy as np

from randksat.classifier import ClassifierParams, classify
from randksat.errors import ResampleBudgetExceeded
from randksat.formula import Formula, generate_random
from randksat.marking import MarkingParams, compute_marking, verify_marking
from randksat.oracle import brute_count, chain_tv_after, marked_marginal


def random_small(count, seed=0, ks=(3, 4, 5), max_n=16, max_m=40):
    """``count`` random formulas with k in ``ks``, n <= max_n, m <= max_m."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        k = rng.choice(ks)
        n = rng.randint(1, max_n)
        m = rng.randint(0, max_m)
        variables = [rng.randrange(n) for _ in range(m * k)]
        negated = [rng.random() < 0.5 for _ in range(m * k)]
        out.append(Formula(n, k, variables, negated))
    return out


def adversarial():
    """50 hand-built formulas: contradictions, duplicates, tautologies, hubs,
    cycles and dense cores."""
    fs = []
    S = Formula.from_signed
    fs.append(S(3, [], k=3))  # no clauses
    fs.append(S(1, [[1], [-1]]))  # x and not x
    fs.append(S(2, [[1, 1], [-1, -1]]))
    fs.append(S(3, [[1, 2], [-1, 3]]))  # count 4
    fs.append(S(2, [[1, -1]]))  # tautology
    fs.append(S(3, [[1, -1, 2], [2, -2, 3]]))
    fs.append(S(4, [[1, 2, 3]] * 3 + [[1, 2, 4]]))  # repeated clause
    fs.append(S(3, [[1, 1, 1], [2, 2, 2], [3, 3, 3]]))  # unit-like
    fs.append(S(3, [[1, 2, 3], [-1, -2, -3]] + [[1, -2, 3], [-1, 2, -3]]))
    fs.append(S(3, [[a, b, c] for a in (1, -1) for b in (2, -2) for c in (3, -3)]))  # all 8: unsat
    fs.append(S(3, [[a, b, c] for a in (1, -1) for b in (2, -2) for c in (3, -3)][:7]))  # one model
    fs.append(S(6, [[1, 2, 3], [3, 4, 5], [5, 6, 1]]))  # clause cycle
    fs.append(S(7, [[1, 2, 3], [1, 4, 5], [1, 6, 7]]))  # triangle through x0
    fs.append(S(8, [[1, 2, 3], [3, 4, 5], [5, 6, 7], [7, 8, 1], [2, 4, 6]]))
    fs.append(S(10, [[i, i + 1, i + 2] for i in range(1, 9)]))  # sliding window
    fs.append(S(10, [[-i, -(i + 1), -(i + 2)] for i in range(1, 9)]))
    fs.append(S(12, [[1, i, i + 1] for i in range(2, 12)]))  # hub
    fs.append(S(12, [[-1, i, -(i + 1)] for i in range(2, 12)]))
    fs.append(S(5, [[a, b] for a in range(1, 6) for b in range(a + 1, 6)]))  # dense 2-CNF
    fs.append(S(5, [[-a, -b] for a in range(1, 6) for b in range(a + 1, 6)]))
    fs.append(S(6, [[a, -b, c] for a in range(1, 3) for b in range(3, 5) for c in range(5, 7)]))
    fs.append(S(4, [[1, 2, 3, 4], [-1, -2, -3, -4], [1, -2, 3, -4], [-1, 2, -3, 4]]))
    fs.append(S(16, [[i, i + 8] for i in range(1, 9)]))  # perfect matching
    fs.append(S(16, [[i, -(i % 16 + 1)] for i in range(1, 17)]))  # implication cycle
    fs.append(S(16, [[i, (i % 16) + 1, ((i + 1) % 16) + 1] for i in range(1, 17)]))
    fs.append(S(9, [[1, 2, 3], [4, 5, 6], [7, 8, 9], [1, 4, 7], [2, 5, 8], [3, 6, 9]]))  # grid
    fs.append(S(9, [[-1, -2, -3], [-4, -5, -6], [-7, -8, -9], [1, 4, 7], [2, 5, 8], [3, 6, 9]]))
    fs.append(S(4, [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]]))  # K4 core
    fs.append(S(4, [[-1, 2, 3], [1, -2, 4], [1, 3, -4], [-2, -3, 4]]))
    fs.append(S(5, [[1, 1, 2], [2, 2, 3], [3, 3, 4], [4, 4, 5], [5, 5, 1]]))
    fs.append(S(5, [[1, -1, 2], [-2, 3, 3], [4, -4, 5]]))
    fs.append(S(2, [[1, 2], [1, -2], [-1, 2]]))  # one model
    fs.append(S(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]]))  # unsat
    fs.append(S(14, [[1, 2, 3], [3, 4, 5], [5, 6, 7], [7, 8, 9], [9, 10, 11], [11, 12, 13], [13, 14, 1]]))
    fs.append(S(6, [[1, 2, 3, 4], [3, 4, 5, 6], [5, 6, 1, 2]]))  # pairs shared
    fs.append(S(6, [[1, 2, 3, 4], [1, 2, 3, 5], [1, 2, 3, 6]]))  # heavy overlaps
    fs.append(S(8, [[1, 2, 3, 4, 5], [4, 5, 6, 7, 8], [-1, -8, 2, 7, 3]]))
    fs.append(S(12, [[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]]))  # disjoint
    fs.append(S(12, [[1, 2, 3], [3, 4, 5], [7, 8, 9], [9, 10, 7]]))  # two components
    fs.append(S(3, [[1, 2, 3]] * 6))
    fs.append(S(3, [[-1, -2, -3]] * 2 + [[1, 2, 3]] * 2))
    fs.append(S(10, [[1, 2, 3], [1, 4, 5], [1, 6, 7], [1, 8, 9], [2, 4, 6], [3, 5, 7], [8, 9, 10]]))
    fs.append(S(7, [[a, b, c] for a, b, c in ((1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 7), (5, 6, 1), (6, 7, 2), (7, 1, 3))]))
    fs.append(S(7, [[-a, b, -c] for a, b, c in ((1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 7), (5, 6, 1), (6, 7, 2), (7, 1, 3))]))
    fs.append(S(15, [[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 5, 6], [7, 8, 9], [10, 11, 12], [13, 14, 15], [6, 7, 10]]))
    fs.append(S(16, [[i, -(i + 1), i + 2] for i in range(1, 15)]))
    fs.append(S(16, [[-i, -(i + 1), -(i + 2), -(i % 16 + 1)] for i in range(1, 15)]))
    fs.append(S(1, [[1, 1, 1]]))
    fs.append(S(5, [[1, 2, 3, 4, 5]] + [[-1, -2, -3, -4, -5]]))
    fs.append(S(6, [[1, 2], [2, 3], [3, 1], [4, 5], [5, 6], [6, 4], [1, 4]]))
    assert len(fs) == 50, len(fs)
    return fs


def naive_classify(f, Delta):
    """Repeated-scan least fixpoint; independent of the stack implementation."""
    degree = np.bincount(f.variables.ravel(), minlength=f.n)
    bad = set(np.flatnonzero(degree >= Delta).tolist())
    changed = True
    while changed:
        changed = False
        for vs in f.clause_vars:
            if sum(v in bad for v in vs) >= 3 and not set(vs) <= bad:
                bad |= set(vs)
                changed = True
    bad_clauses = {c for c, vs in enumerate(f.clause_vars) if sum(v in bad for v in vs) >= 3}
    return bad, bad_clauses


DESK_BETA = (0.34, 0.33)
DESK_R = 0.45
DESK_DELTA = 100


def desk_marking(f, seed, r=DESK_R, beta=DESK_BETA, Delta=DESK_DELTA, rounds=2000):
    """Classification and a verified desk marking, or None when none is found."""
    cls = classify(f, ClassifierParams(override_Delta=Delta))
    try:
        mk = compute_marking(f, cls, MarkingParams(beta[0], beta[1], r, rounds, seed))
    except ResampleBudgetExceeded:
        return None
    ok, _ = verify_marking(f, cls, mk, r)
    assert ok
    return cls, mk


def desk_instances(count, start=0, k=4, min_count=16, max_count=300, max_marked=10, min_marked=1,
                   full_support=True):
    """Scan seeds for small satisfiable instances with a valid desk marking."""
    out = []
    s = start
    while len(out) < count:
        n = 8 + s % 3
        m = n + (s // 3) % 5
        f = generate_random(k, n, m / n, seed=s)
        s += 1
        z = brute_count(f)
        if not min_count <= z <= max_count:
            continue
        got = desk_marking(f, s)
        if got is None:
            continue
        cls, mk = got
        if not min_marked <= len(mk.marked) <= max_marked:
            continue
        if full_support and len(marked_marginal(f, mk.marked).support) != 1 << len(mk.marked):
            continue
        out.append((s - 1, f, cls, mk))
    return out


def desk_T(f, mk, rho=1, tol=0.005, limit=60):
    """First step count at which the exact chain law is within ``tol`` of the target."""
    tvs = chain_tv_after(f, mk.marked, rho, limit)
    for t, tv in enumerate(tvs, 1):
        if tv < tol:
            return t
    return limit


def clause_violation_prob(width, need, beta):
    """Exact probability that ``width`` i.i.d. labels miss some class lower bound."""
    from math import ceil, comb

    lo = [ceil(x - 1e-12) for x in need]
    b0, b1, b2 = beta
    ok = 0.0
    for a in range(width + 1):
        for b in range(width - a + 1):
            c = width - a - b
            if a >= lo[0] and b >= lo[1] and c >= lo[2]:
                ok += comb(width, a) * comb(width - a, b) * b0**a * b1**b * b2**c
    return 1.0 - ok


def lll_certified(f, cls, p):
    """Symmetric local lemma e * p * (d + 1) <= 1 over good clauses."""
    import math

    bad = cls.bad_var_mask
    good = [c for c in range(f.m) if not cls.bad_clause_mask[c]]
    if not good:
        return True
    need = (p.r * (f.k - 3), p.r * (f.k - 3), 2 * p.r * (f.k - 3))
    beta = (p.beta_marked, p.beta_aux, p.beta_control)
    gv = {c: {v for v in f.clause_vars[c] if not bad[v]} for c in good}
    pmax = max(clause_violation_prob(len(gv[c]), need, beta) for c in good)
    occ = {}
    for c in good:
        for v in gv[c]:
            occ.setdefault(v, set()).add(c)
    d = max(len(set().union(*(occ[v] for v in gv[c])) - {c}) if gv[c] else 0 for c in good)
    return math.e * pmax * (d + 1) <= 1
