"""Coupling process on auxiliary variables, and influences between marked variables.

Two partial assignments start from the same pinning with a single
discrepancy at ``u``; clauses next to failed clauses are explored in index
order, and auxiliary variables are coupled one at a time with the monotone
coupling of their exact conditional marginals.
"""
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .classifier import classify
from .components import Counter, ResidualState, conditional_counts
from .errors import UndefinedConditional
from .rng import py_rng


@dataclass
class CouplingRun:
    u: int
    lam: dict
    Xhat: dict
    Yhat: dict
    V_set: frozenset
    V_d: frozenset
    F_d: frozenset
    F_u: frozenset
    C_rem: frozenset
    trace: list = field(repr=False)  # (v, X(v), Y(v), Pr_X(v=T), Pr_Y(v=T)) per sampled pair
    X: dict | None = field(default=None, repr=False)  # extension to V_m ∪ V_a
    Y: dict | None = field(default=None, repr=False)

    def summary(self):
        return {
            "u": self.u,
            "V_set": len(self.V_set),
            "V_d": len(self.V_d),
            "F_d": len(self.F_d),
            "F_u": len(self.F_u),
            "C_rem": len(self.C_rem),
            "sampled": len(self.trace),
        }


def _check_inputs(f, marking, u, lam):
    if u not in marking.marked:
        raise ValueError(f"x{u} is not marked")
    if u in lam:
        raise ValueError("u must not be pinned")
    if any(v not in marking.marked for v in lam):
        raise ValueError("the pinning must be on marked variables")


def _monotone_pair(rng, tx, ty):
    """Monotone coupling of Bernoulli(t1/(t0+t1)) pairs with one shared uniform.

    U = (t+1)/(A B) with t uniform in [0, A B): X = T iff U <= px, Y = T iff U <= py.
    """
    ax, ay = tx[0] + tx[1], ty[0] + ty[1]
    t = rng.randrange(ax * ay)
    return int(t < tx[1] * ay), int(t < ty[1] * ax)


def run_coupling(f, marking, u, lam=None, seed=0, cls=None, cap=None, extend=False, counter=None):
    """Execute the coupling process; with ``extend`` also couple the remaining
    marked and auxiliary variables in index order."""
    lam = {int(v): bool(x) for v, x in (lam or {}).items()}
    _check_inputs(f, marking, u, lam)
    cls = cls if cls is not None else classify(f)
    rng = seed if hasattr(seed, "randrange") else py_rng(seed, 5)
    counter = counter or Counter()
    aux = marking.auxiliary
    bad_clause = cls.bad_clause_mask.tolist()
    clause_vars = f.clause_vars
    occ = f.incidence

    sx = ResidualState(f, lam)
    t0, t1, _ = conditional_counts(sx, u, counter, cap)
    if t0 == 0 or t1 == 0 or sx.has_empty_clause():
        raise UndefinedConditional(f"x{u} has a degenerate marginal under the pinning")
    sy = ResidualState(f, lam)
    sx.pin(u, 1)
    sy.pin(u, 0)

    V_set = set(lam) | {u}
    V_d = {u}
    F_d = set(occ[u])
    F_u = set()
    in_rem = [True] * f.m
    active = set()
    heap = []
    queued = set()
    trace = []

    def activate(x):
        if x in active:
            return
        active.add(x)
        for c in occ[x]:
            if in_rem[c] and c not in queued:
                heapq.heappush(heap, c)
                queued.add(c)

    activate(u)
    while heap:
        c = heapq.heappop(heap)
        queued.discard(c)
        if not in_rem[c]:
            continue
        if bad_clause[c]:
            in_rem[c] = False
            F_u.add(c)
            for x in clause_vars[c]:
                activate(x)
            continue
        unset = [x for x in clause_vars[c] if x in aux and x not in V_set]
        if not unset:
            in_rem[c] = False
            if sx.true_count[c] == 0 or sy.true_count[c] == 0:
                F_u.add(c)
                for x in clause_vars[c]:
                    activate(x)
            continue
        v = unset[0]
        tx = conditional_counts(sx, v, counter, cap)[:2]
        ty = conditional_counts(sy, v, counter, cap)[:2]
        xv, yv = _monotone_pair(rng, tx, ty)
        sx.pin(v, xv)
        sy.pin(v, yv)
        V_set.add(v)
        trace.append((v, bool(xv), bool(yv), Fraction(tx[1], sum(tx)), Fraction(ty[1], sum(ty))))
        if xv != yv:
            V_d.add(v)
            F_d.update(occ[v])
            activate(v)
        heapq.heappush(heap, c)
        queued.add(c)

    Xhat = {v: bool(sx.value[v]) for v in V_set}
    Yhat = {v: bool(sy.value[v]) for v in V_set}
    out = CouplingRun(
        u=u,
        lam=lam,
        Xhat=Xhat,
        Yhat=Yhat,
        V_set=frozenset(V_set),
        V_d=frozenset(V_d),
        F_d=frozenset(F_d),
        F_u=frozenset(F_u),
        C_rem=frozenset(c for c in range(f.m) if in_rem[c]),
        trace=trace,
    )
    if extend:
        for v in sorted((marking.marked | aux) - V_set):
            tx = conditional_counts(sx, v, counter, cap)[:2]
            ty = conditional_counts(sy, v, counter, cap)[:2]
            xv, yv = _monotone_pair(rng, tx, ty)
            sx.pin(v, xv)
            sy.pin(v, yv)
        keep = marking.marked | aux
        out.X = {v: bool(sx.value[v]) for v in sorted(keep)}
        out.Y = {v: bool(sy.value[v]) for v in sorted(keep)}
    return out


def _satisfied(f, c, assignment):
    return any(assignment.get(v) == bool(w) for v, w in f.literals[c])


def _connected(f, clauses):
    clauses = set(clauses)
    if not clauses:
        return True
    start = min(clauses)
    seen = {start}
    stack = [start]
    occ = f.incidence
    while stack:
        c = stack.pop()
        for v in f.clause_vars[c]:
            for d in occ[v]:
                if d in clauses and d not in seen:
                    seen.add(d)
                    stack.append(d)
    return len(seen) == len(clauses)


def _residual(f, assignment):
    out = {}
    for c, lits in enumerate(f.literals):
        if not any(assignment.get(v) == bool(w) for v, w in lits):
            out[c] = tuple(sorted((v, w) for v, w in lits if v not in assignment))
    return out


def check_coupling(f, marking, run, cls=None):
    """Evaluate the five end-state properties and the residual-structure
    decomposition; returns a list of violation strings (empty when sound)."""
    cls = cls if cls is not None else classify(f)
    aux = marking.auxiliary
    S = set(run.lam)
    X, Y = run.Xhat, run.Yhat
    bad = []
    # 1: set inclusions, discrepancy set, F_d
    base = S | {run.u}
    if not base <= run.V_set or not run.V_set <= (aux | base):
        bad.append("1: V_set bounds")
    if any(X[v] != run.lam[v] or Y[v] != run.lam[v] for v in S) or not X[run.u] or Y[run.u]:
        bad.append("1: initial values")
    if set(run.V_d) != {v for v in run.V_set if X[v] != Y[v]}:
        bad.append("1: V_d")
    if set(run.F_d) != {c for c in range(f.m) if set(f.clause_vars[c]) & run.V_d}:
        bad.append("1: F_d")
    touched = set(run.V_d)
    for c in run.F_u:
        touched.update(f.clause_vars[c])
    # 2: failed clauses have all auxiliary variables set and are unsatisfied by one side
    for c in run.F_u:
        vs = set(f.clause_vars[c])
        if not (vs & aux) <= run.V_set:
            bad.append(f"2: clause {c} has unset auxiliary variables")
        if _satisfied(f, c, X) and _satisfied(f, c, Y):
            bad.append(f"2: clause {c} satisfied by both")
    # 3: remaining clauses avoid discrepancies and failed-clause variables
    for c in run.C_rem:
        if set(f.clause_vars[c]) & touched:
            bad.append(f"3: clause {c}")
    # 4: removed-but-not-failed clauses
    for c in set(range(f.m)) - set(run.C_rem) - set(run.F_u):
        vs = set(f.clause_vars[c])
        if not vs & touched:
            bad.append(f"4: clause {c} not adjacent to failures")
        if not (vs & aux) <= run.V_set:
            bad.append(f"4: clause {c} has unset auxiliary variables")
        if not (_satisfied(f, c, X) and _satisfied(f, c, Y)):
            bad.append(f"4: clause {c} unsatisfied")
    # 5: connectivity of the failed clauses
    if not _connected(f, set(run.F_d) | set(run.F_u)):
        bad.append("5: F_d ∪ F_u disconnected")
    # structure: outside F_u both residual formulas coincide and sit in C_rem
    rx = {c: l for c, l in _residual(f, X).items() if c not in run.F_u}
    ry = {c: l for c, l in _residual(f, Y).items() if c not in run.F_u}
    if rx != ry:
        bad.append("structure: residuals differ outside F_u")
    if not set(rx) <= set(run.C_rem):
        bad.append("structure: residual clause outside C_rem")
    return bad


# -- influences -------------------------------------------------------------------


def influence_exact(f, u, v, lam=None, counter=None):
    """I(u -> v) = Pr(v=T | u=T, lam) - Pr(v=T | u=F, lam), as a Fraction."""
    lam = {int(x): bool(y) for x, y in (lam or {}).items()}
    if u in lam:
        raise UndefinedConditional(f"x{u} is pinned")
    counter = counter or Counter()
    state = ResidualState(f, lam)
    if state.has_empty_clause():
        raise UndefinedConditional("the pinning falsifies a clause")
    t0, t1, _ = conditional_counts(state, u, counter)
    if t0 == 0 or t1 == 0:
        raise UndefinedConditional(f"x{u} has a degenerate marginal under the pinning")
    if v == u:
        return Fraction(1)
    if v in lam:
        return Fraction(0)
    probs = []
    for a in (1, 0):
        state.pin(u, a)
        s0, s1, _ = conditional_counts(state, v, counter)
        state.unpin(u)
        probs.append(Fraction(s1, s0 + s1))
    return probs[0] - probs[1]


@dataclass(frozen=True)
class InfluenceEstimate:
    u: int
    v: int
    lam: dict = field(repr=False)
    estimate: float  # mean X(v) - mean Y(v): unbiased for I(u -> v)
    stderr: float
    discrepancy: float  # Pr(X(v) != Y(v)), an upper bound on |I(u -> v)|
    discrepancy_stderr: float
    samples: int


@dataclass
class InfluenceSumReport:
    u: int
    runs: int
    estimates: list
    total: float  # Σ_v Pr(X(v) != Y(v)) over unpinned marked v != u
    total_stderr: float
    mean_F_u: float
    max_F_u: int
    aborted: int

    def as_dict(self):
        return {
            "u": self.u,
            "runs": self.runs,
            "sum_discrepancy": self.total,
            "sum_discrepancy_stderr": self.total_stderr,
            "mean_F_u": self.mean_F_u,
            "max_F_u": self.max_F_u,
            "aborted": self.aborted,
            "per_variable": [
                {
                    "v": e.v,
                    "influence_estimate": e.estimate,
                    "stderr": e.stderr,
                    "discrepancy": e.discrepancy,
                    "discrepancy_stderr": e.discrepancy_stderr,
                }
                for e in self.estimates
            ],
        }


def influence_sum_estimate(f, marking, u, lam=None, runs=1000, seed=0, cls=None, cap=None):
    """Monte-Carlo over extended coupling runs."""
    from .errors import ComponentTooLarge

    lam = {int(x): bool(y) for x, y in (lam or {}).items()}
    cls = cls if cls is not None else classify(f)
    targets = [v for v in sorted(marking.marked) if v != u and v not in lam]
    rng = py_rng(seed, 6)
    counter = Counter()
    xs = {v: 0 for v in targets}
    ys = {v: 0 for v in targets}
    diff = {v: 0 for v in targets}
    totals = []
    fu = []
    aborted = 0
    for _ in range(runs):
        try:
            r = run_coupling(f, marking, u, lam, seed=rng, cls=cls, cap=cap, extend=True, counter=counter)
        except ComponentTooLarge:
            aborted += 1
            continue
        d = 0
        for v in targets:
            xs[v] += r.X[v]
            ys[v] += r.Y[v]
            if r.X[v] != r.Y[v]:
                diff[v] += 1
                d += 1
        totals.append(d)
        fu.append(len(r.F_u))
    done = len(totals)
    ests = []
    for v in targets:
        if done:
            px, py_, pd = xs[v] / done, ys[v] / done, diff[v] / done
            se = math.sqrt((px * (1 - px) + py_ * (1 - py_)) / done)
            sed = math.sqrt(pd * (1 - pd) / done)
        else:
            px = py_ = pd = se = sed = math.nan
        ests.append(InfluenceEstimate(u, v, lam, px - py_, se, pd, sed, done))
    if done:
        mean = sum(totals) / done
        var = sum((t - mean) ** 2 for t in totals) / max(done - 1, 1)
        total_se = math.sqrt(var / done)
    else:
        mean = total_se = math.nan
    return InfluenceSumReport(
        u=u,
        runs=done,
        estimates=ests,
        total=mean,
        total_stderr=total_se,
        mean_F_u=sum(fu) / done if done else math.nan,
        max_F_u=max(fu, default=0),
        aborted=aborted,
    )
