"""r-markings: split the variables into marked / auxiliary / control sets.

Each good variable is labelled independently (marked with probability
``beta_marked``, auxiliary with ``beta_aux``, control otherwise), bad
variables are always control, and good clauses that end up with too few
variables of some class are repaired by Moser-Tardos resampling.
"""
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .classifier import R0
from .errors import DomainError, MalformedInput, ResampleBudgetExceeded
from .rng import numpy_rng, py_rng

MARKED, AUX, CONTROL = 0, 1, 2
_LABELS = "MAC"


def kl_divergence(x, y):
    """Bernoulli KL divergence D(x, y) in nats."""
    if not (0 < x < 1 and 0 < y < 1):
        raise DomainError(f"KL divergence needs x, y in (0, 1), got {x}, {y}")
    return x * math.log(x / y) + (1 - x) * math.log((1 - x) / (1 - y))


def _tail_margin(s, p, target):
    # the Chernoff lower-tail bound only applies when s < p
    if not 0 < p < 1 or s >= p:
        return -math.inf
    return kl_divergence(s, p) - target


def optimal_symmetric_beta(r=R0):
    """beta_marked = beta_aux maximising the smaller of the two KL margins."""

    def neg_min_margin(beta):
        target = r * math.log(2)
        return -min(_tail_margin(r, beta, target), _tail_margin(2 * r, 1 - 2 * beta, target))

    hi = (1 - 2 * r) / 2
    res = minimize_scalar(neg_min_margin, bounds=(r + 1e-12, hi - 1e-12), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


@dataclass(frozen=True)
class MarkingParams:
    beta_marked: float | None = None
    beta_aux: float | None = None
    r: float = R0
    max_resample_rounds: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.r < 0.5:
            raise ValueError("r must lie in (0, 1/2)")
        if self.beta_marked is None or self.beta_aux is None:
            beta = optimal_symmetric_beta(self.r)
            if self.beta_marked is None:
                object.__setattr__(self, "beta_marked", beta)
            if self.beta_aux is None:
                object.__setattr__(self, "beta_aux", beta)
        if self.beta_marked < 0 or self.beta_aux < 0 or self.beta_marked + self.beta_aux >= 1:
            raise ValueError("need beta_marked, beta_aux >= 0 and beta_marked + beta_aux < 1")

    @property
    def beta_control(self):
        return 1.0 - self.beta_marked - self.beta_aux


@dataclass(frozen=True)
class FeasibilityReport:
    marked_ok: bool
    aux_ok: bool
    control_ok: bool
    marked_margin: float
    aux_margin: float
    control_margin: float
    lll_bound: float

    @property
    def all_ok(self):
        return self.marked_ok and self.aux_ok and self.control_ok

    def as_dict(self):
        return {
            "marked_ok": self.marked_ok,
            "aux_ok": self.aux_ok,
            "control_ok": self.control_ok,
            "marked_margin": self.marked_margin,
            "aux_margin": self.aux_margin,
            "control_margin": self.control_margin,
            "per_clause_failure_bound": self.lll_bound,
        }


def check_feasibility(p, k):
    """Evaluate D(r, beta) >= r log 2 for both r-distributed classes and
    D(2r, beta_control) >= r log 2 for the good control variables.

    ``lll_bound`` is the Chernoff bound on the probability that one good
    clause with k - 3 good variables violates some class bound.
    """
    target = p.r * math.log(2)
    checks = []
    for s, q in ((p.r, p.beta_marked), (p.r, p.beta_aux), (2 * p.r, p.beta_control)):
        margin = kl_divergence(s, q) - target if 0 < q < 1 and 0 < s < 1 else -math.inf
        checks.append((s < q and margin >= 0, margin, s < q))
    width = max(k - 3, 0)
    bound = sum(math.exp(-(m + target) * width) if valid else 1.0 for _, m, valid in checks)
    (mo, mm, _), (ao, am, _), (co, cm, _) = checks
    return FeasibilityReport(mo, ao, co, mm, am, cm, min(bound, 1.0))


def feasibility_frontier(r, k, betas):
    """Symmetric sweep: feasibility report for beta_marked = beta_aux = each beta."""
    out = []
    for beta in betas:
        p = MarkingParams(beta_marked=beta, beta_aux=beta, r=r)
        out.append((beta, check_feasibility(p, k)))
    return out


@dataclass(frozen=True)
class Marking:
    marked: frozenset
    auxiliary: frozenset
    control: frozenset
    resample_rounds: int = field(default=0, compare=False)

    def labels(self, n):
        lab = np.full(n, -1, dtype=np.int8)
        lab[list(self.marked)] = MARKED
        lab[list(self.auxiliary)] = AUX
        lab[list(self.control)] = CONTROL
        return lab

    @classmethod
    def from_labels(cls, labels, resample_rounds=0):
        labels = np.asarray(labels)
        return cls(
            frozenset(np.flatnonzero(labels == MARKED).tolist()),
            frozenset(np.flatnonzero(labels == AUX).tolist()),
            frozenset(np.flatnonzero(labels == CONTROL).tolist()),
            resample_rounds,
        )

    def sizes(self):
        return {"marked": len(self.marked), "auxiliary": len(self.auxiliary), "control": len(self.control)}


def _thresholds(r, k):
    return r * (k - 3), r * (k - 3), 2 * r * (k - 3)


def _good_vars_per_clause(f, cls):
    bad = cls.bad_var_mask
    return [tuple(v for v in vs if not bad[v]) for vs in f.clause_vars]


def compute_marking(f, cls, p=None):
    p = p or MarkingParams()
    n = f.n
    good_clauses = np.flatnonzero(~cls.bad_clause_mask)
    if f.m > 0 and good_clauses.size == 0:
        return Marking(frozenset(), frozenset(), frozenset(range(n)))

    rng = numpy_rng(p.seed, 1)
    u = rng.random(n)
    labels = np.where(u < p.beta_marked, MARKED, np.where(u < p.beta_marked + p.beta_aux, AUX, CONTROL))
    labels[cls.bad_var_mask] = CONTROL
    if good_clauses.size == 0:
        return Marking.from_labels(labels)

    need = _thresholds(p.r, f.k)
    good_vars = _good_vars_per_clause(f, cls)
    lab = labels.tolist()
    is_good_clause = (~cls.bad_clause_mask).tolist()
    counts = [[0, 0, 0] for _ in range(f.m)]
    for c in good_clauses.tolist():
        cnt = counts[c]
        for v in good_vars[c]:
            cnt[lab[v]] += 1

    def violates(c):
        cnt = counts[c]
        return cnt[0] < need[0] or cnt[1] < need[1] or cnt[2] < need[2]

    heap = [c for c in good_clauses.tolist() if violates(c)]
    heapq.heapify(heap)
    queued = set(heap)
    starts, clause_ids = f.occurrence_csr
    starts = starts.tolist()
    clause_ids = clause_ids.tolist()
    budget = p.max_resample_rounds
    if budget is None:
        budget = 100 * f.m + 1000
    coin = py_rng(p.seed, 2)
    bm, ba = p.beta_marked, p.beta_marked + p.beta_aux
    rounds = 0
    while heap:
        c = heapq.heappop(heap)
        queued.discard(c)
        if not violates(c):
            continue
        if rounds >= budget:
            remaining = sum(1 for d in good_clauses.tolist() if violates(d))
            raise ResampleBudgetExceeded(rounds, remaining)
        rounds += 1
        for v in good_vars[c]:
            x = coin.random()
            new = MARKED if x < bm else (AUX if x < ba else CONTROL)
            old = lab[v]
            if new == old:
                continue
            lab[v] = new
            for d in clause_ids[starts[v]:starts[v + 1]]:
                if not is_good_clause[d]:
                    continue
                cnt = counts[d]
                cnt[old] -= 1
                cnt[new] += 1
                if d not in queued and violates(d):
                    heapq.heappush(heap, d)
                    queued.add(d)
        if c not in queued and violates(c):
            heapq.heappush(heap, c)
            queued.add(c)
    return Marking.from_labels(np.array(lab, dtype=np.int8), resample_rounds=rounds)


@dataclass
class Violation:
    kind: str
    clause: int | None = None
    var: int | None = None
    count: int | None = None
    need: float | None = None

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def verify_marking(f, cls, marking, r):
    """Exhaustive check of the partition, bad-containment and per-clause bounds.

    Returns ``(ok, violations)``.
    """
    n = f.n
    violations = []
    seen = np.zeros(n, dtype=np.int64)
    for s in (marking.marked, marking.auxiliary, marking.control):
        for v in s:
            if not 0 <= v < n:
                violations.append(Violation("out_of_range", var=v))
            else:
                seen[v] += 1
    for v in np.flatnonzero(seen != 1).tolist():
        violations.append(Violation("not_partition", var=v, count=int(seen[v])))
    for v in cls.bad_vars:
        if v not in marking.control:
            violations.append(Violation("bad_not_control", var=v))
    need = _thresholds(r, f.k)
    bad = cls.bad_var_mask
    for c in sorted(cls.good_clauses):
        vs = f.clause_vars[c]
        cm = sum(1 for v in vs if v in marking.marked and not bad[v])
        ca = sum(1 for v in vs if v in marking.auxiliary and not bad[v])
        cc = sum(1 for v in vs if v in marking.control and not bad[v])
        for kind, cnt, nd in (("marked", cm, need[0]), ("auxiliary", ca, need[1]), ("control", cc, need[2])):
            if cnt < nd:
                violations.append(Violation(kind, clause=c, count=cnt, need=nd))
    return not violations, violations


def marking_lines(marking, n):
    lab = marking.labels(n)
    return [f"c mark v {v} {_LABELS[int(x)]}" for v, x in enumerate(lab.tolist()) if x >= 0]


def read_marking(text, n):
    """Parse ``c mark v <idx> <M|A|C>`` comment lines; returns None if there are none."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode()
    labels = np.full(n, -1, dtype=np.int8)
    found = False
    for line in text.splitlines():
        parts = line.split()
        if len(parts) >= 2 and parts[0] == "c" and parts[1] == "mark":
            if len(parts) != 5 or parts[2] != "v" or parts[4] not in _LABELS:
                raise MalformedInput(f"bad marking line {line!r}")
            v = int(parts[3])
            if not 0 <= v < n:
                raise MalformedInput(f"marking line variable {v} out of range")
            labels[v] = _LABELS.index(parts[4])
            found = True
    if not found:
        return None
    if np.any(labels < 0):
        raise MalformedInput("marking does not label every variable")
    return Marking.from_labels(labels)
