"""Experiment orchestration: structural statistics of random formulas, the
pinning experiment, scaling benchmarks and the exact bad-formula count Z(0).

Every report is a plain dict tagged with ``SCHEMA`` and is a deterministic
function of its grid and seeds. W.h.p. statements are reported next to
their targets and never raise.
"""
import csv
import io
import itertools
import math
import os
import time
from collections import Counter as Tally
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .classifier import DELTA, R0, ClassifierParams, classify
from .components import Counter, normalize
from .errors import ExcessBudgetExceeded, ResampleBudgetExceeded
from .formula import generate_random
from .glauber import GlauberChain, GlauberConfig
from .marking import MarkingParams, compute_marking
from .rng import py_rng

SCHEMA = "randksat.analysis/1"
THREADS_ENV = "RANDKSAT_THREADS"
EXPERIMENTS = ("tree-excess", "linearity", "bad-fraction", "pinning", "scaling", "z0")


def thread_count():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ExperimentGrid:
    experiment: str
    k: tuple = (10,)
    n: tuple = (1000,)
    alpha: tuple = (2.0,)
    seeds: tuple = (0,)
    output: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        for name in ("k", "n", "alpha", "seeds"):
            if not getattr(self, name):
                raise ValueError(f"grid axis {name!r} is empty")

    def cells(self):
        return list(itertools.product(self.k, self.n, self.alpha, self.seeds))


@dataclass
class StructureStats:
    """Per-instance structural record; unused fields stay ``None``."""

    k: int
    n: int
    alpha: float
    seed: int
    m: int = 0
    max_tree_excess: int | None = None
    max_pair_intersection: int | None = None
    bad_fraction: float | None = None
    largest_unsat_set: list | None = None
    component_histogram: dict | None = None
    extra: dict = field(default_factory=dict)

    def as_row(self):
        d = asdict(self)
        extra = d.pop("extra")
        d.pop("largest_unsat_set")
        d.pop("component_histogram")
        d.update(extra)
        return d


# -- shared graph helpers ------------------------------------------------------


def clause_components(f, clause_mask=None, var_mask=None):
    """Connected components of the clause graph restricted to ``clause_mask``,
    with adjacency through variables in ``var_mask`` only.

    Returns ``(labels, sizes)``: ``labels[c]`` is -1 for clauses outside the mask.
    """
    m, k = f.variables.shape
    if clause_mask is None:
        clause_mask = np.ones(m, dtype=bool)
    cs = np.flatnonzero(clause_mask)
    labels = np.full(m, -1, dtype=np.int64)
    if cs.size == 0:
        return labels, np.zeros(0, dtype=np.int64)
    rows = np.repeat(np.arange(cs.size), k)
    cols = f.variables[cs].ravel()
    if var_mask is not None:
        keep = var_mask[cols]
        rows, cols = rows[keep], cols[keep]
    # bipartite graph: clause nodes first, then variables
    size = cs.size + f.n
    g = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols + cs.size)), shape=(size, size))
    _, lab = connected_components(g, directed=False)
    _, dense = np.unique(lab[: cs.size], return_inverse=True)
    labels[cs] = dense
    return labels, np.bincount(dense)


def induced_edges(f, clauses):
    """Number of clause pairs in ``clauses`` sharing at least one variable."""
    sets = [set(f.clause_vars[c]) for c in clauses]
    return sum(1 for i, j in itertools.combinations(range(len(sets)), 2) if sets[i] & sets[j])


def grow_connected_set(f, start, size, rng):
    """Random connected clause set: grow from ``start`` by uniform frontier picks."""
    starts, ids = f.occurrence_csr
    chosen = [start]
    inside = {start}
    frontier = []
    in_frontier = set()

    def expand(c):
        for v in f.clause_vars[c]:
            for d in ids[starts[v]:starts[v + 1]].tolist():
                if d not in inside and d not in in_frontier:
                    in_frontier.add(d)
                    frontier.append(d)

    expand(start)
    while len(chosen) < size and frontier:
        i = rng.randrange(len(frontier))
        frontier[i], frontier[-1] = frontier[-1], frontier[i]
        c = frontier.pop()
        in_frontier.discard(c)
        inside.add(c)
        chosen.append(c)
        expand(c)
    return chosen


def tree_excess_target(k, alpha, b):
    return max(1.0, 2 * b * math.log(math.e * k * k * alpha))


# -- tree-excess ---------------------------------------------------------------


def tree_excess_stats(f, alpha, seed, b=1.0, samples=200):
    """Tree-excess of connected clause sets of size at most ``b log n``.

    Two measurements: every connected component of the clause graph that is
    small enough (exact), and ``samples`` randomly grown connected sets of
    size ``floor(b log n)``.
    """
    n, k = f.n, f.k
    limit = max(1, math.floor(b * math.log(n)))
    target = tree_excess_target(k, alpha, b)
    stats = StructureStats(k, n, alpha, seed, f.m)
    if f.m == 0:
        stats.max_tree_excess = 0
        stats.extra.update(size_limit=limit, target_c=target, sampled_max=0, sampled_mean=0.0,
                           small_components=0, exceed_fraction=0.0)
        return stats
    labels, sizes = clause_components(f)
    comp_max = 0
    small = np.flatnonzero(sizes <= limit)
    if small.size:
        members = {}
        mask = np.isin(labels, small)
        for c in np.flatnonzero(mask).tolist():
            members.setdefault(int(labels[c]), []).append(c)
        for cl in members.values():
            comp_max = max(comp_max, induced_edges(f, cl) - (len(cl) - 1))
    rng = py_rng(seed, 20)
    sampled = []
    for _ in range(samples):
        ys = grow_connected_set(f, rng.randrange(f.m), limit, rng)
        sampled.append(induced_edges(f, ys) - (len(ys) - 1))
    stats.max_tree_excess = max(comp_max, max(sampled))
    stats.component_histogram = {str(s): int(c) for s, c in sorted(Tally(sizes.tolist()).items())}
    stats.extra.update(
        size_limit=limit,
        target_c=target,
        small_components=int(small.size),
        small_component_max_excess=comp_max,
        sampled_max=max(sampled),
        sampled_mean=float(np.mean(sampled)),
        exceed_fraction=float(np.mean([s > target for s in sampled])),
    )
    return stats


# -- linearity -----------------------------------------------------------------


def linearity_scan(f):
    """Exact linearity check.

    Returns ``(short_clauses, bad_pairs, max_intersection)`` where
    ``short_clauses`` counts clauses with fewer than k - 1 distinct variables
    and ``bad_pairs`` counts clause pairs sharing at least three variables.
    Pairs are found by hashing the variable pairs of every clause and only
    examining clauses that collide.
    """
    m, k = f.variables.shape
    if m == 0:
        return 0, 0, 0
    s = np.sort(f.variables, axis=1)
    distinct = 1 + (np.diff(s, axis=1) != 0).sum(axis=1)
    short = int((distinct < k - 1).sum())
    # any variable in two clauses gives intersection >= 1
    first = np.ones_like(s, dtype=bool)
    first[:, 1:] = np.diff(s, axis=1) != 0
    occ = np.bincount(s[first], minlength=f.n)
    best = 1 if (occ >= 2).any() else 0
    if k < 2:
        return short, 0, best
    iu, ju = np.triu_indices(k, 1)
    a, b = s[:, iu], s[:, ju]
    keys = a * np.int64(f.n) + b
    keys[a == b] = -1
    flat = keys.ravel()
    srt = np.sort(flat)
    dup = np.unique(srt[1:][srt[1:] == srt[:-1]])
    dup = dup[dup >= 0]
    if dup.size == 0:
        return short, 0, best
    pos = np.searchsorted(dup, flat).clip(0, dup.size - 1)
    hit = np.flatnonzero(dup[pos] == flat)
    clause_of = hit // iu.size
    groups = {}
    for key, c in zip(flat[hit].tolist(), clause_of.tolist()):
        groups.setdefault(key, set()).add(c)
    pairs = set()
    for cs in groups.values():
        if len(cs) > 1:
            pairs.update(itertools.combinations(sorted(cs), 2))
    bad = 0
    vars_of = f.clause_vars
    for c, d in pairs:
        t = len(set(vars_of[c]) & set(vars_of[d]))
        best = max(best, t)
        bad += t >= 3
    return short, bad, best


def linearity_stats(f, alpha, seed):
    short, bad, best = linearity_scan(f)
    stats = StructureStats(f.k, f.n, alpha, seed, f.m, max_pair_intersection=best)
    stats.extra.update(short_clauses=short, heavy_pairs=bad, violated=bool(short or bad),
                       target_max_intersection=2, target_min_distinct=f.k - 1)
    return stats


# -- bad fraction --------------------------------------------------------------


def bad_fraction_stats(f, alpha, seed, delta_override=None, b=1.0, samples=200):
    """Bad clauses inside connected clause sets.

    The guarantee only concerns sets with at least ``2 k^4 log n`` variables;
    when ``n`` is below that no such set exists and the check is vacuous. The
    grown-set proxy reports the bad fraction of sampled connected sets of
    size ``floor(b log n)`` (and of the whole formula) against ``1/k``.
    """
    k, n = f.k, f.n
    cls = classify(f, ClassifierParams(override_Delta=delta_override))
    threshold = 2 * k**4 * math.log(n)
    overall = float(cls.bad_clause_mask.mean()) if f.m else 0.0
    stats = StructureStats(k, n, alpha, seed, f.m, bad_fraction=overall)
    fracs = []
    if f.m:
        rng = py_rng(seed, 21)
        size = max(1, math.floor(b * math.log(n)))
        bad = cls.bad_clause_mask
        for _ in range(samples):
            ys = grow_connected_set(f, rng.randrange(f.m), size, rng)
            fracs.append(float(bad[ys].mean()))
    _, comp_sizes = clause_components(f, cls.bad_clause_mask) if f.m else (None, np.zeros(0))
    stats.extra.update(
        Delta=cls.Delta,
        bad_clause_count=int(cls.bad_clause_mask.sum()),
        bad_var_count=int(cls.bad_var_mask.sum()),
        var_threshold=threshold,
        vacuous=bool(n < threshold),
        target_fraction=1 / k,
        sampled_max_fraction=max(fracs, default=0.0),
        sampled_mean_fraction=float(np.mean(fracs)) if fracs else 0.0,
        largest_bad_component=int(comp_sizes.max()) if comp_sizes.size else 0,
    )
    return stats


# -- pinning experiment --------------------------------------------------------


def uniform_law(rng, variables):
    """Independent fair coins: the law of the chain state at step 0."""
    bits = rng.getrandbits(len(variables)) if variables else 0
    return {v: bool((bits >> i) & 1) for i, v in enumerate(variables)}


def chain_law(f, marking, steps, cfg=None):
    """Law of the block-dynamics state after ``steps`` steps, as a draw function."""
    cfg = cfg or GlauberConfig(mode="desk", T=max(1, steps))

    def draw(rng, variables):
        chain = GlauberChain(f, marking, cfg)
        chain.reset(rng.getrandbits(63))
        chain.init()
        for _ in range(steps):
            chain.step()
        state = chain.chain_state().assignment
        return {v: state[v] for v in variables}

    return draw


def unsatisfied_mask(f, lam):
    """Clauses with no literal made true by the partial assignment ``lam``."""
    vals = np.full(f.n, -1, dtype=np.int8)
    if lam:
        idx = np.fromiter(lam.keys(), dtype=np.int64, count=len(lam))
        vals[idx] = np.fromiter((int(x) for x in lam.values()), dtype=np.int8, count=len(lam))
    lit = vals[f.variables]
    true_lit = (lit >= 0) & (lit == (~f.negated).astype(np.int8))
    return ~true_lit.any(axis=1)


def pinning_experiment(f, V, rho, seeds, law=None, L=None, xi=1, mode="theory", seed=0):
    """Repeat the pinning experiment ``seeds`` times.

    Each draw picks a uniform ``rho``-subset S of ``V``, pins ``V \\ S`` with
    ``law`` and records the largest connected (in the full clause graph) set
    of clauses left unsatisfied. ``F`` is the event that this set has at
    least ``L`` clauses. Also records the component sizes of the simplified
    formula.
    """
    V = sorted(V)
    k, n = f.k, f.n
    if mode == "theory" and rho > len(V) / 2**k:
        raise ValueError(f"rho = {rho} exceeds |V| / 2^k = {len(V) / 2**k:.3g}; use mode='desk'")
    if not 0 <= rho <= len(V):
        raise ValueError("need 0 <= rho <= |V|")
    law = law or uniform_law
    if L is None:
        L = math.ceil(2 * k**4 * (1 + xi) * math.log(n))
    draws = seeds if isinstance(seeds, int) else len(seeds)
    seed_list = list(range(draws)) if isinstance(seeds, int) else list(seeds)
    largest = []
    hist = Tally()
    for s in seed_list:
        rng = py_rng(seed, 22, s)
        S = set(rng.sample(V, rho)) if rho else set()
        lam = law(rng, [v for v in V if v not in S])
        unsat = unsatisfied_mask(f, lam)
        _, sizes = clause_components(f, unsat)
        largest.append(int(sizes.max()) if sizes.size else 0)
        free = np.ones(n, dtype=bool)
        if lam:
            free[list(lam)] = False
        _, res_sizes = clause_components(f, unsat, free)
        hist.update(res_sizes.tolist())
    hits = sum(x >= L for x in largest)
    stats = StructureStats(k, n, float(f.density) if f.m else 0.0, seed, f.m)
    stats.largest_unsat_set = largest
    stats.component_histogram = {str(s): int(c) for s, c in sorted(hist.items())}
    stats.extra.update(
        draws=len(seed_list),
        rho=rho,
        V_size=len(V),
        L=L,
        exceed_count=int(hits),
        empirical_PrF=hits / len(seed_list) if seed_list else 0.0,
        target_PrF=2.0 ** (-DELTA * k * L),
        max_largest=max(largest, default=0),
        mean_largest=float(np.mean(largest)) if largest else 0.0,
        mode=mode,
    )
    return stats


def pinning_stats(f, alpha, seed, draws=100, delta_override=None, rho=None, mode=None, marking_params=None):
    cls = classify(f, ClassifierParams(override_Delta=delta_override))
    p = marking_params or MarkingParams(seed=seed, max_resample_rounds=10 * f.m + 1000)
    try:
        marking = compute_marking(f, cls, p)
    except ResampleBudgetExceeded as exc:
        stats = StructureStats(f.k, f.n, alpha, seed, f.m)
        stats.extra.update(status="marking_failed", message=str(exc))
        return stats
    V = marking.marked
    theory_rho = math.floor(len(V) / 2**f.k)
    if rho is None:
        rho = theory_rho
    mode = mode or ("theory" if rho <= theory_rho else "desk")
    stats = pinning_experiment(f, V, rho, draws, mode=mode, seed=seed)
    stats.alpha = alpha
    stats.extra.update(status="ok", Delta=cls.Delta)
    return stats


# -- Z(0) ----------------------------------------------------------------------


@dataclass(frozen=True)
class CountResult:
    count: int
    variables: int  # size of the variable set counted over
    clauses: int

    def as_dict(self):
        return {"count": str(self.count), "variables": self.variables, "clauses": self.clauses}


def count_bad_formula(f, cls, max_cycle_vars=None):
    """Exact number of assignments of the bad variables satisfying every bad clause."""
    bad_vars = sorted(cls.bad_vars)
    clauses = []
    for c in sorted(cls.bad_clauses):
        nc = normalize(f.literals[c])
        if nc is not None:
            clauses.append(nc)
    count = Counter(max_cycle_vars).count_on(clauses, set(bad_vars))
    return CountResult(count, len(bad_vars), len(cls.bad_clauses))


def z0_stats(f, alpha, seed, delta_override=None, max_cycle_vars=24):
    cls = classify(f, ClassifierParams(override_Delta=delta_override))
    stats = StructureStats(f.k, f.n, alpha, seed, f.m)
    try:
        res = count_bad_formula(f, cls, max_cycle_vars)
    except ExcessBudgetExceeded as exc:
        stats.extra.update(status="excess_budget", message=str(exc), bad_var_count=len(cls.bad_vars),
                           bad_clause_count=len(cls.bad_clauses))
        return stats
    full = res.count << (f.n - res.variables)
    stats.extra.update(
        status="ok",
        Delta=cls.Delta,
        bad_var_count=res.variables,
        bad_clause_count=res.clauses,
        z0=str(res.count),
        z0_full=str(full),
        log2_z0=math.log2(res.count) if res.count else None,
    )
    return stats


def naive_count_estimate(f, samples=200, seed=0, max_cycle_vars=None):
    """Naive self-reducibility estimate of the model count (not part of the
    sampling algorithm; provided as plumbing only).

    Fixes variables one at a time to their majority value among exact samples
    of the current residual formula and multiplies the inverse frequencies.
    Returns ``(estimate, log2 estimate)``; the estimate is unbiased only in
    the limit of many samples.
    """
    from .components import sample_marginals

    lam = {}
    log2 = 0.0
    rng = py_rng(seed, 23)
    for v in range(f.n):
        ones = 0
        for _ in range(samples):
            out = sample_marginals(f, lam, [v], seed=rng, max_cycle_vars=max_cycle_vars)
            ones += out[v]
        val = ones * 2 >= samples
        freq = (ones if val else samples - ones) / samples
        log2 -= math.log2(freq)
        lam[v] = val
    return 2.0**log2, log2


# -- scaling -------------------------------------------------------------------


def fit_exponent(ns, times):
    """Slope of log(time) against log(n)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.maximum(np.asarray(times, dtype=float), 1e-9))
    return float(np.polyfit(x, y, 1)[0])


def pipeline_once(k, n, alpha, seed, theta=0.2, T_scale=1.0, delta_override=None, marking_params=None,
                  rho=None, cap=None):
    """Time one run of classify + mark + T block-dynamics steps."""
    f = generate_random(k, n, alpha, seed)
    t0 = time.perf_counter()
    cls = classify(f, ClassifierParams(override_Delta=delta_override))
    t1 = time.perf_counter()
    marking = compute_marking(f, cls, marking_params or MarkingParams(seed=seed))
    t2 = time.perf_counter()
    T = max(1, math.ceil(T_scale * n**theta * math.log(n)))
    chain = GlauberChain(f, marking, GlauberConfig(mode="desk", theta=theta, T=T, rho=rho,
                                                   component_cap=cap, retries=3, seed=seed))
    chain.init()
    biggest = 0
    for _ in range(T):
        biggest = max(biggest, chain.step())
    t3 = time.perf_counter()
    return {
        "n": n,
        "m": f.m,
        "classify": t1 - t0,
        "mark": t2 - t1,
        "steps": t3 - t2,
        "total": t3 - t0,
        "T": T,
        "rho": chain.rho,
        "cap": chain.cap,
        "marked": len(marking.marked),
        "resample_rounds": marking.resample_rounds,
        "max_component": biggest,
        "retries_used": chain.retries_used,
    }


def scaling_bench(k=10, ns=(10**4, 10**5, 10**6), alpha=0.1, seed=0, repeats=1, **kw):
    """Per-stage wall clock across ``ns`` (median over ``repeats``) with fitted exponents."""
    rows = []
    for n in ns:
        runs = [pipeline_once(k, n, alpha, seed + r, **kw) for r in range(repeats)]
        row = dict(runs[0])
        for stage in ("classify", "mark", "steps", "total"):
            row[stage] = float(np.median([r[stage] for r in runs]))
        rows.append(row)
    exps = {stage: fit_exponent(ns, [r[stage] for r in rows]) for stage in ("classify", "mark", "steps", "total")}
    return {"rows": rows, "exponents": exps, "k": k, "alpha": alpha, "theta": kw.get("theta", 0.2)}


# -- grid runner and reporting -------------------------------------------------


def _run_cell(args):
    experiment, k, n, alpha, seed, options = args
    f = generate_random(k, n, alpha, seed)
    if experiment == "tree-excess":
        return tree_excess_stats(f, alpha, seed, options.get("b", 1.0), options.get("samples", 200))
    if experiment == "linearity":
        return linearity_stats(f, alpha, seed)
    if experiment == "bad-fraction":
        return bad_fraction_stats(f, alpha, seed, options.get("delta_override"), options.get("b", 1.0),
                                  options.get("samples", 200))
    if experiment == "pinning":
        return pinning_stats(f, alpha, seed, options.get("draws", 100), options.get("delta_override"),
                             options.get("rho"))
    if experiment == "z0":
        return z0_stats(f, alpha, seed, options.get("delta_override"), options.get("max_cycle_vars", 24))
    raise ValueError(experiment)


def _summaries(experiment, stats):
    by_n = {}
    for s in stats:
        by_n.setdefault((s.k, s.n, s.alpha), []).append(s)
    out = []
    for (k, n, alpha), group in sorted(by_n.items()):
        row = {"k": k, "n": n, "alpha": alpha, "instances": len(group)}
        ex = [g.extra for g in group]
        if experiment == "tree-excess":
            row.update(max_tree_excess=max(g.max_tree_excess for g in group), target_c=ex[0]["target_c"],
                       size_limit=ex[0]["size_limit"],
                       exceed_fraction=float(np.mean([e["exceed_fraction"] for e in ex])))
        elif experiment == "linearity":
            row.update(violation_frequency=float(np.mean([e["violated"] for e in ex])),
                       mean_heavy_pairs=float(np.mean([e["heavy_pairs"] for e in ex])),
                       mean_short_clauses=float(np.mean([e["short_clauses"] for e in ex])),
                       max_pair_intersection=max(g.max_pair_intersection for g in group))
        elif experiment == "bad-fraction":
            row.update(mean_bad_fraction=float(np.mean([g.bad_fraction for g in group])),
                       sampled_max_fraction=max(e["sampled_max_fraction"] for e in ex),
                       target_fraction=1 / k, vacuous=all(e["vacuous"] for e in ex),
                       var_threshold=ex[0]["var_threshold"])
        elif experiment == "pinning":
            ok = [e for e in ex if e.get("status") == "ok"]
            draws = sum(e["draws"] for e in ok)
            row.update(failed_markings=len(ex) - len(ok),
                       empirical_PrF=sum(e["exceed_count"] for e in ok) / draws if draws else None,
                       target_PrF=ok[0]["target_PrF"] if ok else None,
                       L=ok[0]["L"] if ok else None,
                       max_largest=max((e["max_largest"] for e in ok), default=0))
        elif experiment == "z0":
            row.update(ok=sum(e["status"] == "ok" for e in ex),
                       excess_budget=sum(e["status"] == "excess_budget" for e in ex))
        out.append(row)
    return out


TARGETS = {
    "tree-excess": "connected sets of at most b log n clauses have tree-excess at most "
                   "c = max(1, 2 b log(e k^2 alpha))",
    "linearity": "|var(c)| >= k - 1 and |var(c) & var(c')| <= 2 for distinct clauses",
    "bad-fraction": "connected Y with |var(Y)| >= 2 k^4 log n has at most |Y| / k bad clauses",
    "pinning": "Pr(F) <= 2^(-delta k L) with L = ceil(2 k^4 (1 + xi) log n), rho <= |V| / 2^k",
    "scaling": "pipeline time O(n^(1 + theta))",
    "z0": "Z(0) is the exact number of satisfying assignments of the bad subformula",
}


def run_grid(grid):
    """Run every cell of ``grid``; returns a schema-tagged report dict."""
    opts = dict(grid.options)
    if grid.experiment == "scaling":
        kw = {key: opts[key] for key in ("theta", "T_scale", "delta_override", "rho", "cap") if key in opts}
        rep = scaling_bench(grid.k[0], tuple(grid.n), grid.alpha[0], grid.seeds[0], opts.get("repeats", 1), **kw)
        return {"schema": SCHEMA, "experiment": "scaling", "target": TARGETS["scaling"],
                "grid": _grid_dict(grid), "rows": rep["rows"], "summary": rep["exponents"]}
    cells = [(grid.experiment, k, n, a, s, opts) for k, n, a, s in grid.cells()]
    workers = thread_count()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(workers) as pool:
            stats = list(pool.map(_run_cell, cells))
    else:
        stats = [_run_cell(c) for c in cells]
    return {
        "schema": SCHEMA,
        "experiment": grid.experiment,
        "target": TARGETS[grid.experiment],
        "grid": _grid_dict(grid),
        "rows": [s.as_row() for s in stats],
        "summary": _summaries(grid.experiment, stats),
        "details": [{"largest_unsat_set": s.largest_unsat_set, "component_histogram": s.component_histogram}
                    for s in stats] if grid.experiment in ("pinning", "tree-excess") else None,
    }


def _grid_dict(grid):
    return {"k": list(grid.k), "n": list(grid.n), "alpha": list(grid.alpha), "seeds": len(grid.seeds),
            "options": grid.options, "r0": R0}


def to_csv(report):
    rows = report["rows"]
    buf = io.StringIO()
    if not rows:
        return ""
    names = []
    for r in rows:
        for key in r:
            if key not in names:
                names.append(key)
    w = csv.DictWriter(buf, fieldnames=["schema"] + names)
    w.writeheader()
    for r in rows:
        w.writerow({"schema": report["schema"], **r})
    return buf.getvalue()
