"""Brute-force ground truth and exact/statistical comparison tools."""
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .components import Counter, sample_marginals_law
from .errors import SupportMismatch, TooLarge, UnsatisfiableResidual

BRUTE_LIMIT = 30
_CHUNK = 1 << 14


def satisfying_matrix(f, lam=None, limit=BRUTE_LIMIT):
    """``(free_vars, rows)``: every satisfying assignment of the free variables.

    ``rows`` is a bool array with one row per satisfying assignment and one
    column per entry of ``free_vars`` (ascending variable order); rows are
    in lexicographic order with the smallest variable as the lowest bit.
    """
    lam = dict(lam or {})
    free = [v for v in range(f.n) if v not in lam]
    if len(free) > limit:
        raise TooLarge(f"{len(free)} free variables exceed the brute-force limit {limit}")
    want = (~f.negated)
    base = np.zeros(f.n, dtype=bool)
    for v, val in lam.items():
        base[v] = bool(val)
    free_arr = np.array(free, dtype=np.int64)
    shifts = np.arange(len(free), dtype=np.uint64)
    total = 1 << len(free)
    out = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.uint64)
        bits = ((idx[:, None] >> shifts[None, :]) & np.uint64(1)).astype(bool)
        vals = np.broadcast_to(base, (idx.size, f.n)).copy()
        if free:
            vals[:, free_arr] = bits
        if f.m:
            ok = (vals[:, f.variables] == want).any(axis=2).all(axis=1)
            bits = bits[ok]
        out.append(bits)
    rows = np.concatenate(out) if out else np.zeros((0, len(free)), dtype=bool)
    return free, rows


def brute_count(f, lam=None, limit=BRUTE_LIMIT):
    return int(satisfying_matrix(f, lam, limit)[1].shape[0])


def brute_enumerate(f, lam=None, limit=BRUTE_LIMIT):
    """Satisfying assignments of the free variables, as dicts ``var -> bool``."""
    free, rows = satisfying_matrix(f, lam, limit)
    return [dict(zip(free, map(bool, row))) for row in rows.tolist()]


@dataclass(frozen=True)
class ExactDistribution:
    variables: tuple  # coordinate order of every atom
    support: tuple  # atoms: tuples of bools
    mass: tuple  # Fractions aligned with support

    def __post_init__(self):
        if sum(self.mass) != 1:
            raise ValueError("masses must sum to 1")

    def as_dict(self):
        return dict(zip(self.support, self.mass))

    @classmethod
    def uniform(cls, variables, atoms):
        atoms = tuple(tuple(map(bool, a)) for a in atoms)
        if not atoms:
            raise ValueError("empty support")
        p = Fraction(1, len(atoms))
        return cls(tuple(variables), atoms, (p,) * len(atoms))

    @classmethod
    def from_weights(cls, variables, weights):
        """From a mapping atom -> nonnegative rational weight."""
        total = sum(weights.values())
        items = sorted((a, Fraction(w) / total) for a, w in weights.items() if w)
        return cls(tuple(variables), tuple(a for a, _ in items), tuple(w for _, w in items))

    def marginal(self, variables):
        """Projection onto a subset of the coordinates (kept in the given order)."""
        pos = [self.variables.index(v) for v in variables]
        acc = {}
        for atom, p in zip(self.support, self.mass):
            key = tuple(atom[i] for i in pos)
            acc[key] = acc.get(key, 0) + p
        return ExactDistribution.from_weights(variables, acc)


def uniform_over_satisfying(f, lam=None, variables=None):
    """μ_{Ω^Λ}, optionally projected onto ``variables``."""
    free, rows = satisfying_matrix(f, lam)
    if rows.shape[0] == 0:
        raise UnsatisfiableResidual()
    dist = ExactDistribution.uniform(free, map(tuple, rows.tolist()))
    if variables is not None:
        dist = dist.marginal(tuple(variables))
    return dist


@dataclass(frozen=True)
class TVReport:
    tv: float
    samples: int | None = None
    radius: float | None = None
    confidence: float | None = None
    exact: Fraction | None = None

    def as_dict(self):
        return {"tv": self.tv, "samples": self.samples, "radius": self.radius, "confidence": self.confidence}


def tv_radius(n_atoms, samples, delta=0.05):
    """Half-width t with Pr(|plug-in TV - TV| > t) <= delta.

    Hoeffding per event plus a union bound over the 2^K events of a
    K-atom universe.
    """
    if samples <= 0:
        return math.inf
    return math.sqrt((n_atoms * math.log(2) + math.log(2 / delta)) / (2 * samples))


def tv_distance(p, q, delta=0.05):
    """Exact TV between two ExactDistributions, or plug-in TV of an empirical
    histogram ``{atom: count}`` against ``p`` with a confidence radius."""
    if isinstance(q, ExactDistribution):
        if tuple(q.variables) != tuple(p.variables):
            raise SupportMismatch("distributions are over different variables")
        a, b = p.as_dict(), q.as_dict()
        exact = sum(abs(a.get(x, 0) - b.get(x, 0)) for x in set(a) | set(b)) / 2
        return TVReport(float(exact), exact=Fraction(exact))
    counts = dict(q)
    width = len(p.variables)
    if any(len(x) != width for x in counts):
        raise SupportMismatch("histogram atoms have the wrong width")
    n = sum(counts.values())
    if n == 0:
        raise ValueError("empty histogram")
    a = p.as_dict()
    atoms = set(a) | set(counts)
    tv = 0.5 * sum(abs(float(a.get(x, 0)) - counts.get(x, 0) / n) for x in atoms)
    return TVReport(min(tv, 1.0), n, tv_radius(len(atoms), n, delta), 1 - delta)


# -- block-dynamics kernel -------------------------------------------------------


@dataclass(frozen=True)
class StationarityReport:
    residual: float
    exact_residual: Fraction
    rho: int
    n_states: int
    support_size: int
    undefined_rows: int

    def as_dict(self):
        return {
            "residual": self.residual,
            "exact_residual": str(self.exact_residual),
            "rho": self.rho,
            "n_states": self.n_states,
            "support_size": self.support_size,
            "undefined_rows": self.undefined_rows,
        }


def block_kernel(f, marked, rho, counter=None, states=None):
    """Exact ρ-block transition kernel on assignments of ``marked``.

    Rows are dicts ``{next state: Fraction}`` keyed by state tuples in the
    order of ``sorted(marked)``. A row whose conditionals are undefined
    (the pinned formula is unsatisfiable) is recorded as ``None``.
    """
    marked = sorted(marked)
    d = len(marked)
    counter = counter or Counter()
    subsets = list(itertools.combinations(range(d), rho))
    weight = Fraction(1, len(subsets))
    laws = {}
    if states is None:
        states = list(itertools.product((False, True), repeat=d))
    kernel = {}
    for x in states:
        row = {}
        try:
            for sub in subsets:
                keep = tuple(i for i in range(d) if i not in sub)
                key = (sub, tuple(x[i] for i in keep))
                law = laws.get(key)
                if law is None:
                    lam = {marked[i]: x[i] for i in keep}
                    law = sample_marginals_law(f, lam, [marked[i] for i in sub], counter)
                    laws[key] = law
                for outcome, p in law.items():
                    y = list(x)
                    for i, val in zip(sub, outcome):
                        y[i] = val
                    y = tuple(y)
                    row[y] = row.get(y, 0) + weight * p
        except UnsatisfiableResidual:
            row = None
        kernel[x] = row
    return kernel


def marked_marginal(f, marked):
    return uniform_over_satisfying(f, None, sorted(marked))


def kernel_step(dist, kernel):
    """``dist^T P`` for a sparse distribution ``{state: Fraction}``."""
    out = {}
    for x, p in dist.items():
        if not p:
            continue
        row = kernel[x]
        if row is None:
            raise UnsatisfiableResidual()
        for y, q in row.items():
            out[y] = out.get(y, 0) + p * q
    return out


def stationarity_check(f, marking, rho, limit=12):
    marked = sorted(marking.marked)
    if len(marked) > limit:
        raise TooLarge(f"|V_m| = {len(marked)} exceeds {limit}")
    if not 1 <= rho <= max(len(marked), 1):
        raise ValueError("need 1 <= rho <= |V_m|")
    mu = marked_marginal(f, marked).as_dict() if marked else {(): Fraction(1)}
    if not marked:
        return StationarityReport(0.0, Fraction(0), rho, 1, 1, 0)
    kernel = block_kernel(f, marked, rho)
    moved = kernel_step(mu, kernel)
    res = max(abs(moved.get(x, 0) - mu.get(x, 0)) for x in set(mu) | set(moved))
    return StationarityReport(
        float(res),
        Fraction(res),
        rho,
        len(kernel),
        len(mu),
        sum(1 for r in kernel.values() if r is None),
    )


def chain_tv_after(f, marked, rho, steps, kernel=None):
    """Exact TV between μ|V_m and the chain law after each of ``steps`` steps from uniform X_0.

    States with undefined conditionals keep their mass in place.
    """
    marked = sorted(marked)
    kernel = kernel or block_kernel(f, marked, rho)
    mu = marked_marginal(f, marked).as_dict()
    d = len(marked)
    p0 = Fraction(1, 1 << d)
    dist = {x: p0 for x in kernel}
    out = []
    for _ in range(steps):
        nxt = {}
        for x, p in dist.items():
            row = kernel[x] or {x: Fraction(1)}
            for y, q in row.items():
                nxt[y] = nxt.get(y, 0) + p * q
        dist = nxt
        out.append(float(sum(abs(dist.get(x, 0) - mu.get(x, 0)) for x in set(dist) | set(mu)) / 2))
    return out


# -- influences ------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralReport:
    variables: tuple
    matrix: np.ndarray
    lambda1: float
    lambda1_eig: float
    max_row_sum: float
    iterations: int
    skipped: tuple  # unpinned marked variables with a degenerate marginal

    @property
    def bound_holds(self):
        return self.lambda1 <= self.max_row_sum + 1e-9

    def as_dict(self):
        return {
            "variables": list(self.variables),
            "lambda1": self.lambda1,
            "lambda1_eig": self.lambda1_eig,
            "max_row_sum": self.max_row_sum,
            "bound_holds": self.bound_holds,
            "iterations": self.iterations,
            "skipped": list(self.skipped),
        }


def power_iteration(a, tol=1e-9, max_iter=100000, seed=0):
    """Dominant eigenvalue of a matrix with real nonnegative spectrum."""
    n = a.shape[0]
    if n == 0 or not np.any(a):
        return 0.0, 0
    x = np.random.default_rng(seed).random(n) + 0.5
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0, it
        new = float(x @ y)
        x = y / norm
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return new, it
        lam = new
    return lam, max_iter


def spectral_check(f, marking, lam=None, limit=20):
    """Influence matrix over unpinned marked variables, its top eigenvalue and max row sum.

    I = D^{-1} Cov with D the diagonal of variances, so the spectrum is real
    and nonnegative and plain power iteration converges.
    """
    from .coupling import influence_exact
    from .errors import UndefinedConditional

    lam = dict(lam or {})
    free = [v for v in sorted(marking.marked) if v not in lam]
    if f.n - len(lam) > limit:
        raise TooLarge(f"{f.n - len(lam)} free variables exceed {limit}")
    counter = Counter()
    ok, skipped = [], []
    for u in free:
        try:
            influence_exact(f, u, u, lam, counter=counter)
            ok.append(u)
        except UndefinedConditional:
            skipped.append(u)
    mat = np.zeros((len(ok), len(ok)))
    for i, u in enumerate(ok):
        for j, v in enumerate(ok):
            mat[i, j] = float(influence_exact(f, u, v, lam, counter=counter))
    lam1, iters = power_iteration(mat)
    eig = float(np.max(np.abs(np.linalg.eigvals(mat)))) if len(ok) else 0.0
    row = float(np.abs(mat).sum(axis=1).max()) if len(ok) else 0.0
    return SpectralReport(tuple(ok), mat, lam1, eig, row, iters, tuple(skipped))


def empirical_marginals(samples):
    """Per-coordinate frequency of True in an array of bool rows."""
    arr = np.asarray(samples, dtype=bool)
    return arr.mean(axis=0) if arr.size else np.zeros(0)

