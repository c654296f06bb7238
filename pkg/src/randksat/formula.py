"""k-CNF formulas, random instances, the clause dependency graph and DIMACS I/O.

Variables are 0-based indices. Internally a literal is the pair
``(var, want)`` where ``want`` is the value (0 = F, 1 = T) that makes the
literal true; the public :class:`Literal` keeps the ``negated`` flag.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import MalformedInput, NonUniformWidth
from .rng import numpy_rng


@dataclass(frozen=True)
class Literal:
    var: int
    negated: bool = False

    def __str__(self):
        return f"{'¬' if self.negated else ''}x{self.var}"


@dataclass(frozen=True)
class Clause:
    literals: tuple

    @property
    def varset(self):
        return frozenset(l.var for l in self.literals)

    def __len__(self):
        return len(self.literals)


class Formula:
    """Immutable k-CNF formula backed by two ``(m, k)`` arrays."""

    def __init__(self, n, k, variables, negated):
        variables = np.asarray(variables, dtype=np.int64).reshape(-1, k)
        negated = np.asarray(negated, dtype=bool).reshape(-1, k)
        if n < 1 or k < 1:
            raise ValueError("need n >= 1 and k >= 1")
        if variables.shape != negated.shape:
            raise ValueError("variables and negated differ in shape")
        if variables.size and (variables.min() < 0 or variables.max() >= n):
            raise ValueError("literal variable out of range")
        variables.flags.writeable = False
        negated.flags.writeable = False
        self.n = int(n)
        self.k = int(k)
        self.variables = variables
        self.negated = negated

    @classmethod
    def from_signed(cls, n, clauses, k=None):
        """Build from DIMACS-style signed 1-based literals, e.g. ``[[1, -2, 3]]``."""
        clauses = [list(c) for c in clauses]
        if k is None:
            k = len(clauses[0]) if clauses else 1
        if any(len(c) != k for c in clauses):
            raise NonUniformWidth("clauses of different widths")
        arr = np.array(clauses, dtype=np.int64).reshape(-1, k)
        if arr.size and (np.any(arr == 0) or np.abs(arr).max() > n):
            raise ValueError("literal out of range")
        return cls(n, k, np.abs(arr) - 1, arr < 0)

    @property
    def m(self):
        return self.variables.shape[0]

    @property
    def density(self):
        return Fraction(self.m, self.n)

    def __len__(self):
        return self.m

    def __eq__(self, other):
        if not isinstance(other, Formula):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and np.array_equal(self.variables, other.variables)
            and np.array_equal(self.negated, other.negated)
        )

    def __hash__(self):
        return hash((self.n, self.k, self.variables.tobytes(), self.negated.tobytes()))

    def __repr__(self):
        return f"Formula(n={self.n}, k={self.k}, m={self.m})"

    def clause(self, i):
        return Clause(tuple(Literal(int(v), bool(s)) for v, s in zip(self.variables[i], self.negated[i])))

    @cached_property
    def clauses(self):
        return [self.clause(i) for i in range(self.m)]

    @cached_property
    def literals(self):
        """Per clause, a tuple of ``(var, want)`` pairs in slot order."""
        want = (~self.negated).astype(np.int64)
        return [tuple(zip(v, w)) for v, w in zip(self.variables.tolist(), want.tolist())]

    @cached_property
    def clause_vars(self):
        """Per clause, the sorted tuple of distinct variables (``var(c)``)."""
        return [tuple(sorted(set(row))) for row in self.variables.tolist()]

    @cached_property
    def first_slot(self):
        """``(m, k)`` bool: the slot holds the first occurrence of its variable in the clause."""
        v = self.variables
        first = np.ones(v.shape, dtype=bool)
        for j in range(1, v.shape[1]):
            first[:, j] = ~(v[:, :j] == v[:, j:j + 1]).any(axis=1)
        return first

    @cached_property
    def incidence(self):
        """Per variable, the sorted list of clauses containing it (no repeats)."""
        occ = [[] for _ in range(self.n)]
        for c, vs in enumerate(self.clause_vars):
            for v in vs:
                occ[v].append(c)
        return occ

    @cached_property
    def occurrence_csr(self):
        """``(starts, clause_ids)``: clauses of variable v are ``clause_ids[starts[v]:starts[v+1]]``.

        Built with numpy, counts repeated occurrences once, clause ids ascending.
        """
        m, k = self.variables.shape
        flat = self.variables.ravel()
        clause_of = np.repeat(np.arange(m, dtype=np.int64), k)
        key = np.unique(flat * max(m, 1) + clause_of)
        var_of = key // max(m, 1)
        clause_ids = key % max(m, 1)
        starts = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(var_of, minlength=self.n), out=starts[1:])
        return starts, clause_ids

    def is_satisfied_by(self, assignment):
        """True iff ``assignment`` (mapping or sequence var -> bool) satisfies every clause."""
        return not self.unsatisfied_clauses(assignment)

    def unsatisfied_clauses(self, assignment):
        out = []
        for c, lits in enumerate(self.literals):
            if not any(assignment[v] == bool(w) for v, w in lits):
                out.append(c)
        return out

    def subformula(self, clause_indices, n=None):
        idx = np.asarray(sorted(clause_indices), dtype=np.int64)
        return Formula(self.n if n is None else n, self.k, self.variables[idx], self.negated[idx])


def generate_random(k, n, alpha, seed=0):
    """Random formula with ``floor(alpha * n)`` clauses; every literal slot i.i.d. uniform."""
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    # tolerance keeps e.g. 0.29 * 100 from flooring to 28
    m = math.floor(alpha * n) if isinstance(alpha, Fraction) else math.floor(alpha * n + 1e-9)
    rng = numpy_rng(seed, 0)
    variables = rng.integers(0, n, size=(m, k))
    negated = rng.integers(0, 2, size=(m, k)).astype(bool)
    return Formula(n, k, variables, negated)


@dataclass(frozen=True)
class DependencyGraph:
    adjacency: tuple

    def __len__(self):
        return len(self.adjacency)

    def neighbors(self, c):
        return self.adjacency[c]

    def edges(self):
        for a, nbrs in enumerate(self.adjacency):
            for b in nbrs:
                if a < b:
                    yield a, b

    @property
    def n_edges(self):
        return sum(len(a) for a in self.adjacency) // 2


def build_dependency_graph(f):
    occ = f.incidence
    adjacency = []
    for c, vs in enumerate(f.clause_vars):
        nbrs = set()
        for v in vs:
            nbrs.update(occ[v])
        nbrs.discard(c)
        adjacency.append(tuple(sorted(nbrs)))
    return DependencyGraph(tuple(adjacency))


def read_dimacs(text, k=None):
    """Parse DIMACS CNF. All clauses must have the same width."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode()
    header = None
    width_hint = None
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 4 and parts[1] == "randksat" and parts[2] == "k":
                width_hint = int(parts[3])
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise MalformedInput(f"line {lineno}: bad header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise MalformedInput(f"line {lineno}: bad header {line!r}") from None
            if header[0] < 1 or header[1] < 0:
                raise MalformedInput(f"line {lineno}: bad header {line!r}")
            continue
        if header is None:
            raise MalformedInput(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                tokens.append(int(tok))
            except ValueError:
                raise MalformedInput(f"line {lineno}: bad literal {tok!r}") from None
    if header is None:
        raise MalformedInput("missing 'p cnf' header")
    n, m = header
    clauses, cur = [], []
    for lit in tokens:
        if lit == 0:
            clauses.append(cur)
            cur = []
        elif abs(lit) > n:
            raise MalformedInput(f"variable {abs(lit)} out of range 1..{n}")
        else:
            cur.append(lit)
    if cur:
        raise MalformedInput("last clause is missing its 0 terminator")
    if len(clauses) != m:
        raise MalformedInput(f"header announces {m} clauses, found {len(clauses)}")
    if clauses:
        width = len(clauses[0])
        if width == 0:
            raise MalformedInput("empty clause")
        for i, c in enumerate(clauses):
            if len(c) != width:
                raise NonUniformWidth(f"clause {i} has width {len(c)}, expected {width}")
        if k is not None and k != width:
            raise NonUniformWidth(f"clauses have width {width}, expected {k}")
    else:
        width = k or width_hint or 1
    return Formula.from_signed(n, clauses, k=width)


def write_dimacs(f):
    lines = [f"c randksat k {f.k}", f"p cnf {f.n} {f.m}"]
    signed = np.where(f.negated, -(f.variables + 1), f.variables + 1)
    for row in signed.tolist():
        lines.append(" ".join(map(str, row)) + " 0")
    return "\n".join(lines) + "\n"
