import math
from fractions import Fraction

import numpy as np
import pytest

from helpers import desk_instances
from randksat.errors import SupportMismatch, TooLarge, UnsatisfiableResidual
from randksat.formula import Formula, generate_random
from randksat.marking import Marking
from randksat.oracle import (
    ExactDistribution,
    block_kernel,
    brute_count,
    brute_enumerate,
    chain_tv_after,
    power_iteration,
    spectral_check,
    stationarity_check,
    tv_distance,
    tv_radius,
    uniform_over_satisfying,
)


@pytest.fixture(scope="module")
def desk():
    return desk_instances(4)


def test_brute_small():
    f = Formula.from_signed(3, [[1, 2], [-1, 3]])
    assert brute_count(f) == 4
    assert brute_count(f, {0: True}) == 2
    assert sorted(tuple(sorted(d.items())) for d in brute_enumerate(f, {0: False, 2: True})) == [((1, True),)]


def test_brute_limit():
    with pytest.raises(TooLarge):
        brute_count(Formula(40, 3, [], []))


def test_uniform_and_marginal():
    f = Formula.from_signed(2, [[1, 2]])
    d = uniform_over_satisfying(f)
    assert d.as_dict() == {a: Fraction(1, 3) for a in [(True, False), (False, True), (True, True)]}
    m = d.marginal((1,))
    assert m.as_dict() == {(False,): Fraction(1, 3), (True,): Fraction(2, 3)}
    with pytest.raises(UnsatisfiableResidual):
        uniform_over_satisfying(Formula.from_signed(1, [[1], [-1]]))
    with pytest.raises(ValueError):
        ExactDistribution((0,), ((True,),), (Fraction(1, 2),))


def test_tv_exact():
    p = ExactDistribution.uniform((0,), [(True,), (False,)])
    q = ExactDistribution.from_weights((0,), {(True,): 3, (False,): 1})
    assert tv_distance(p, q).exact == Fraction(1, 4)
    assert tv_distance(p, p).tv == 0
    with pytest.raises(SupportMismatch):
        tv_distance(p, ExactDistribution.uniform((1,), [(True,)]))


def test_tv_empirical():
    p = ExactDistribution.uniform((0,), [(True,), (False,)])
    rep = tv_distance(p, {(True,): 60, (False,): 40})
    assert rep.tv == pytest.approx(0.1)
    assert rep.samples == 100
    assert rep.radius == pytest.approx(math.sqrt((2 * math.log(2) + math.log(40)) / 200))
    assert tv_radius(4, 0) == math.inf
    assert tv_radius(4, 10**6) < tv_radius(4, 10**4)


def test_tv_radius_coverage():
    # the plug-in TV of a sample from p itself stays within the radius
    p = ExactDistribution.uniform((0, 1), [(a, b) for a in (False, True) for b in (False, True)])
    rng = np.random.default_rng(0)
    misses = 0
    for _ in range(200):
        draws = rng.integers(0, 4, 500)
        hist = {p.support[i]: int(c) for i, c in enumerate(np.bincount(draws, minlength=4))}
        rep = tv_distance(p, hist)
        misses += rep.tv > rep.radius
    assert misses <= 10


def test_kernel_rows_are_stochastic(desk):
    _, f, _, mk = desk[0]
    kernel = block_kernel(f, mk.marked, 1)
    for row in kernel.values():
        if row is not None:
            assert sum(row.values()) == 1


@pytest.mark.parametrize("rho", [1, 2])
def test_stationarity(desk, rho):
    for _, f, _, mk in desk:
        if len(mk.marked) >= rho:
            rep = stationarity_check(f, mk, rho)
            assert rep.exact_residual == 0


def test_stationarity_detects_wrong_target():
    # the kernel of a constrained formula does not fix the unconstrained marginal
    f = Formula.from_signed(3, [[1, 2, 2], [-1, 3, 3]])
    mk = Marking(frozenset({0, 1}), frozenset(), frozenset({2}))
    kernel = block_kernel(f, [0, 1], 1)
    wrong = {x: Fraction(1, 4) for x in kernel}
    from randksat.oracle import kernel_step

    moved = kernel_step(wrong, kernel)
    assert any(moved.get(x, 0) != wrong[x] for x in wrong)
    assert stationarity_check(f, mk, 1).exact_residual == 0


def test_chain_tv_decreases(desk):
    _, f, _, mk = desk[0]
    tvs = chain_tv_after(f, mk.marked, 1, 40)
    assert tvs[-1] < tvs[0] and tvs[-1] < 0.01


def test_power_iteration():
    rng = np.random.default_rng(1)
    b = rng.random((6, 6))
    a = b @ b.T
    lam, _ = power_iteration(a)
    assert lam == pytest.approx(np.linalg.eigvalsh(a).max(), rel=1e-6)
    assert power_iteration(np.zeros((3, 3)))[0] == 0.0


@pytest.mark.parametrize("seed", range(6))
def test_spectral_bound(seed):
    f = generate_random(3, 10, 1.5, seed)
    if brute_count(f) == 0:
        return
    mk = Marking(frozenset(range(6)), frozenset(), frozenset(range(6, 10)))
    rep = spectral_check(f, mk)
    assert rep.bound_holds
    assert rep.lambda1 == pytest.approx(rep.lambda1_eig, abs=1e-6)
    assert np.allclose(np.diag(rep.matrix), 1.0)
