"""High-degree, bad and good variables/clauses.

Bad variables are the least set that contains every high-degree variable
and is closed under "a clause with at least three bad variables makes all
its variables bad"; bad clauses are the clauses with at least three bad
variables. Everything else is good.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

R0 = 0.117841
DELTA = 0.00001
R = 0.1178


@dataclass(frozen=True)
class ClassifierParams:
    r0: float = R0
    delta: float = DELTA
    r: float = R
    override_Delta: int | None = None

    def __post_init__(self):
        if not 0 < self.r < self.r0 < 0.5:
            raise ValueError("need 0 < r < r0 < 1/2")
        if self.override_Delta is not None and self.override_Delta < 1:
            raise ValueError("Delta must be at least 1")

    def Delta(self, k):
        """Degree threshold; a variable of degree >= Delta is high-degree."""
        if self.override_Delta is not None:
            return int(self.override_Delta)
        return math.ceil(2 ** ((self.r0 - 2 * self.delta) * k))

    def alpha0(self, k):
        return 2 ** ((self.r0 - 2 * self.delta) * k) / k**3


# rows per block, keeps dense temporaries cache-sized
_CHUNK = 16384


def degree_table(f):
    """Literal occurrences per variable, repetitions inside a clause counted separately."""
    starts, _ = f.occurrence_csr
    # distinct occurrences from the cached index, then the rare in-clause repeats
    repeats = f.variables[~f.first_slot]
    return np.diff(starts).astype(np.int64) + np.bincount(repeats, minlength=f.n)


@dataclass(frozen=True, eq=False)
class Classification:
    degree: np.ndarray
    Delta: int
    bad_var_mask: np.ndarray
    bad_clause_mask: np.ndarray
    bad_count: np.ndarray = field(repr=False)

    @cached_property
    def bad_vars(self):
        return frozenset(np.flatnonzero(self.bad_var_mask).tolist())

    @cached_property
    def bad_clauses(self):
        return frozenset(np.flatnonzero(self.bad_clause_mask).tolist())

    @cached_property
    def good_vars(self):
        return frozenset(np.flatnonzero(~self.bad_var_mask).tolist())

    @cached_property
    def good_clauses(self):
        return frozenset(np.flatnonzero(~self.bad_clause_mask).tolist())

    def is_bad_clause(self, c):
        return bool(self.bad_clause_mask[c])

    def summary(self):
        counts = np.bincount(self.degree) if self.degree.size else np.zeros(1, dtype=np.int64)
        return {
            "bad_var_count": int(self.bad_var_mask.sum()),
            "bad_clause_count": int(self.bad_clause_mask.sum()),
            "max_degree": int(self.degree.max()) if self.degree.size else 0,
            "Delta": int(self.Delta),
            "histogram": {str(d): int(c) for d, c in enumerate(counts.tolist()) if c},
        }


def classify(f, params=None):
    """Stack-and-counter fixpoint, O(n + mk).

    The stack is drained in waves: every variable is pushed once when it
    turns bad, and each of its clause occurrences bumps that clause's
    counter once, so the result is the same least fixpoint. Large waves
    recount all counters in cache-sized row blocks instead.
    """
    params = params or ClassifierParams()
    Delta = params.Delta(f.k)
    degree = degree_table(f)
    bad_var = degree >= Delta
    m = f.m
    bad_clause = np.zeros(m, dtype=bool)
    bad_count = np.zeros(m, dtype=np.int64)
    wave = np.flatnonzero(bad_var)
    if wave.size and m:
        starts, clause_ids = f.occurrence_csr
        variables = f.variables
        first = f.first_slot
        # bad_count excludes the current wave until the wave is processed
        while wave.size:
            if wave.size * 8 >= f.n:
                # large wave: recount every clause with a sequential row gather
                for a in range(0, m, _CHUNK):
                    b = a + _CHUNK
                    bad_count[a:b] = np.count_nonzero(bad_var[variables[a:b]] & first[a:b], axis=1)
                cs = np.flatnonzero((bad_count >= 3) & ~bad_clause)
                fresh = cs
            else:
                lo, hi = starts[wave], starts[wave + 1]
                lens = hi - lo
                offs = np.repeat(lo - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
                cs, cnt = np.unique(clause_ids[offs + np.arange(offs.size)], return_counts=True)
                bad_count[cs] += cnt
                fresh = cs[(bad_count[cs] >= 3) & ~bad_clause[cs]]
            bad_clause[fresh] = True
            if fresh.size * f.k * 8 >= f.n:
                new = np.zeros(f.n, dtype=bool)
                for a in range(0, fresh.size, _CHUNK):
                    new[variables[fresh[a:a + _CHUNK]].ravel()] = True
                wave = np.flatnonzero(new & ~bad_var)
            else:
                vs = variables[fresh].ravel()
                wave = np.unique(vs[~bad_var[vs]])
            bad_var[wave] = True
    return Classification(
        degree=degree,
        Delta=Delta,
        bad_var_mask=bad_var,
        bad_clause_mask=bad_clause,
        bad_count=bad_count,
    )
