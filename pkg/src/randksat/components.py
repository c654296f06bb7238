"""Exact counting and sampling on the connected components of a simplified formula.

A residual clause is normalised to ``(vars, forbidden)``: the sorted tuple
of its distinct unassigned variables and the single assignment of those
variables that falsifies it. Clauses containing both ``x`` and ``¬x`` are
tautologies and take no part in counting (their variables stay in the
variable set, so they still contribute a free factor of 2 each).

Counting follows the spanning-forest scheme: pick a BFS spanning forest of
the clause graph, pin the variables shared along non-tree edges, and sum
a rooted-tree dynamic program over all assignments of those pinned
variables. The cached counter pins them one at a time and splits the
residual into components after each pin.
"""
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ComponentTooLarge,
    EmptyClause,
    ExcessBudgetExceeded,
    NotAForest,
    UnsatisfiableResidual,
)
from .rng import py_rng

# -- residual formulas -----------------------------------------------------


@dataclass(frozen=True)
class SimplifiedFormula:
    n: int
    residual: tuple  # ((clause index, ((var, want), ...)), ...)
    variables: frozenset  # V minus dom(lam)
    empty_clause_present: bool

    @property
    def clause_indices(self):
        return tuple(c for c, _ in self.residual)

    def residual_vars(self):
        return frozenset(v for _, lits in self.residual for v, _ in lits)


def simplify(f, lam):
    """Drop clauses satisfied by ``lam`` and false literals from the others."""
    lam = dict(lam)
    residual = []
    empty = False
    for c, lits in enumerate(f.literals):
        keep = []
        sat = False
        for v, w in lits:
            val = lam.get(v)
            if val is None:
                keep.append((v, w))
            elif int(val) == w:
                sat = True
                break
        if sat:
            continue
        if not keep:
            empty = True
        residual.append((c, tuple(keep)))
    variables = frozenset(range(f.n)) - frozenset(lam)
    return SimplifiedFormula(f.n, tuple(residual), variables, empty)


def normalize(lits):
    """``(vars, forbidden)`` for a residual literal list, or None for a tautology."""
    want = {}
    for v, w in lits:
        prev = want.get(v)
        if prev is None:
            want[v] = w
        elif prev != w:
            return None
    vs = tuple(sorted(want))
    return vs, tuple(1 - want[v] for v in vs)


def _pin_clauses(clauses, var, val):
    """Simplify normalised clauses by ``var = val``; returns None if one becomes empty."""
    out = []
    for vs, forb in clauses:
        if var not in vs:
            out.append((vs, forb))
            continue
        i = vs.index(var)
        if forb[i] != val:
            continue  # satisfied
        if len(vs) == 1:
            return None
        out.append((vs[:i] + vs[i + 1:], forb[:i] + forb[i + 1:]))
    return out


def _groups(clauses):
    """Connected components (lists of clause positions) of the clause graph."""
    parent = list(range(len(clauses)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner = {}
    for i, (vs, _) in enumerate(clauses):
        for v in vs:
            j = owner.get(v)
            if j is None:
                owner[v] = i
            else:
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[ra] = rb
    groups = {}
    for i in range(len(clauses)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _incidence(clauses):
    occ = {}
    for i, (vs, _) in enumerate(clauses):
        for v in vs:
            occ.setdefault(v, []).append(i)
    return occ


def _bfs_forest(clauses, occ):
    """BFS spanning forest; returns (order, parent) over clause positions."""
    nodes = len(clauses)
    parent = [-2] * nodes
    order = []
    for root in range(nodes):
        if parent[root] != -2:
            continue
        parent[root] = -1
        queue = deque([root])
        while queue:
            a = queue.popleft()
            order.append(a)
            for v in clauses[a][0]:
                for b in occ[v]:
                    if parent[b] == -2:
                        parent[b] = a
                        queue.append(b)
    return order, parent


def cycle_variables(clauses, occ=None, forest=None):
    """Variables shared along some non-tree edge of a BFS spanning forest.

    A variable in three or more clauses always lies on a non-tree edge (a
    forest cannot contain a whole triangle); a variable in exactly two
    clauses does iff that pair is not a tree edge.
    """
    occ = occ if occ is not None else _incidence(clauses)
    order, parent = forest if forest is not None else _bfs_forest(clauses, occ)
    out = set()
    for v, cs in occ.items():
        if len(cs) >= 3:
            out.add(v)
        elif len(cs) == 2:
            a, b = cs
            if parent[a] != b and parent[b] != a:
                out.add(v)
    return out


def _projection_keys(vs, shared):
    pos = [vs.index(x) for x in shared]
    keys = []
    for sigma in range(1 << len(vs)):
        key = 0
        for j, p in enumerate(pos):
            key |= ((sigma >> p) & 1) << j
        keys.append(key)
    return keys


def _tree_count(clauses):
    """Satisfying assignments of a connected, acyclic set of normalised clauses
    over exactly the variables they mention."""
    if len(clauses) == 1:
        return (1 << len(clauses[0][0])) - 1
    occ = _incidence(clauses)
    pairs = set()
    for v, cs in occ.items():
        if len(cs) >= 3:
            raise NotAForest(f"variable {v} shared by {len(cs)} clauses")
        if len(cs) == 2:
            pairs.add((cs[0], cs[1]))
    if len(pairs) != len(clauses) - 1:
        raise NotAForest(f"{len(pairs)} edges on {len(clauses)} clauses")
    order, parent = _bfs_forest(clauses, occ)
    if sum(1 for p in parent if p == -1) != 1:
        raise NotAForest("clause set is not connected")
    tables = [None] * len(clauses)
    messages = [[] for _ in clauses]
    for a in reversed(order):
        vs, forb = clauses[a]
        size = 1 << len(vs)
        table = [1] * size
        forbidden = 0
        for i, bit in enumerate(forb):
            forbidden |= bit << i
        table[forbidden] = 0
        for keys, msg in messages[a]:
            for sigma in range(size):
                if table[sigma]:
                    table[sigma] *= msg[keys[sigma]]
        p = parent[a]
        if p == -1:
            return sum(table)
        pvs = clauses[p][0]
        shared = tuple(x for x in vs if x in pvs)
        child_keys = _projection_keys(vs, shared)
        msg = [0] * (1 << len(shared))
        for sigma, val in enumerate(table):
            if val:
                msg[child_keys[sigma]] += val
        messages[p].append((_projection_keys(pvs, shared), msg))
        tables[a] = table
    raise NotAForest("no root reached")


class Counter:
    """Exact model counter over normalised clause lists, with a component cache."""

    def __init__(self, max_cycle_vars=None, cache_size=1 << 18):
        self.max_cycle_vars = max_cycle_vars
        self.cache_size = cache_size
        self.cache = {}
        self.max_cycle_seen = 0
        self.marginals = {}

    def count_on(self, clauses, variables):
        """Satisfying assignments over ``variables`` (a superset of the clause variables)."""
        mentioned = set()
        for vs, _ in clauses:
            if not vs:
                return 0
            mentioned.update(vs)
        total = 1 << (len(variables) - len(mentioned))
        if not clauses:
            return total
        for group in _groups(clauses):
            total *= self.count_connected([clauses[i] for i in group])
            if total == 0:
                return 0
        return total

    def count_connected(self, clauses):
        if len(clauses) == 1:
            return (1 << len(clauses[0][0])) - 1
        key = tuple(sorted(clauses))
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        value = self._count_connected(list(key))
        if len(self.cache) >= self.cache_size:
            self.cache.clear()
        self.cache[key] = value
        return value

    def _count_connected(self, clauses):
        occ = _incidence(clauses)
        cyc = cycle_variables(clauses, occ)
        self.max_cycle_seen = max(self.max_cycle_seen, len(cyc))
        if not cyc:
            return _tree_count(clauses)
        if self.max_cycle_vars is not None and len(cyc) > self.max_cycle_vars:
            raise ExcessBudgetExceeded(len(cyc), self.max_cycle_vars)
        # branch on the busiest cycle variable; each branch may split again
        var = max(sorted(cyc), key=lambda v: len(occ[v]))
        rest = set(occ)
        rest.discard(var)
        total = 0
        for val in (0, 1):
            sub = _pin_clauses(clauses, var, val)
            if sub is not None:
                total += self.count_on(sub, rest)
        return total


def _forest_count(clauses, variables):
    """Count over ``variables`` for clauses whose graph must be a forest."""
    if any(not vs for vs, _ in clauses):
        return 0
    mentioned = set()
    for vs, _ in clauses:
        mentioned.update(vs)
    total = 1 << (len(variables) - len(mentioned & set(variables)))
    for group in _groups(clauses):
        total *= _tree_count([clauses[i] for i in group])
        if total == 0:
            return 0
    return total


def count_clauses(clauses, variables, max_cycle_vars=None):
    """Exact count for raw residual literal lists over ``variables``."""
    norm = []
    for lits in clauses:
        if not lits:
            return 0
        nc = normalize(lits)
        if nc is not None:
            norm.append(nc)
    return Counter(max_cycle_vars).count_on(norm, set(variables))


# -- decomposition ----------------------------------------------------------


@dataclass(frozen=True)
class Component:
    clauses: tuple  # clause indices, ascending
    literals: tuple  # residual literal tuple per clause, aligned with ``clauses``
    variables: frozenset
    parent: dict = field(repr=False)  # clause -> parent clause (None at the root)
    non_tree_edges: tuple = field(repr=False)
    cycle_vars: frozenset
    tree_excess: int

    @property
    def size(self):
        return len(self.clauses)


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple
    free_vars: frozenset  # residual variables in no residual clause

    def component_of_clause(self, c):
        for comp in self.components:
            if c in comp.clauses:
                return comp
        raise KeyError(c)

    def sizes(self):
        return [comp.size for comp in self.components]


def decompose(sf):
    if sf.empty_clause_present:
        raise EmptyClause("simplified formula contains an empty clause")
    idx = [c for c, _ in sf.residual]
    lits = {c: l for c, l in sf.residual}
    occ = {}
    for c in idx:
        for v in {v for v, _ in lits[c]}:
            occ.setdefault(v, []).append(c)
    seen = set()
    comps = []
    for root in idx:
        if root in seen:
            continue
        seen.add(root)
        parent = {root: None}
        order = [root]
        queue = deque([root])
        while queue:
            a = queue.popleft()
            for v in sorted({v for v, _ in lits[a]}):
                for b in occ[v]:
                    if b not in seen:
                        seen.add(b)
                        parent[b] = a
                        order.append(b)
                        queue.append(b)
        members = sorted(order)
        edges = {}
        for v in {v for c in members for v, _ in lits[c]}:
            cs = occ[v]
            for i in range(len(cs)):
                for j in range(i + 1, len(cs)):
                    edges.setdefault((cs[i], cs[j]), set()).add(v)
        non_tree = []
        cyc = set()
        for (a, b), shared in sorted(edges.items()):
            if parent.get(a) != b and parent.get(b) != a:
                non_tree.append((a, b))
                cyc |= shared
        variables = frozenset(v for c in members for v, _ in lits[c])
        comps.append(
            Component(
                clauses=tuple(members),
                literals=tuple(lits[c] for c in members),
                variables=variables,
                parent=parent,
                non_tree_edges=tuple(non_tree),
                cycle_vars=frozenset(cyc),
                tree_excess=len(edges) - (len(members) - 1),
            )
        )
    used = frozenset(occ)
    return ComponentDecomposition(tuple(comps), frozenset(sf.variables) - used)


def _component_clauses(component, pinned):
    out = []
    for lits in component.literals:
        keep = []
        sat = False
        for v, w in lits:
            val = pinned.get(v)
            if val is None:
                keep.append((v, w))
            elif int(val) == w:
                sat = True
                break
        if sat:
            continue
        if not keep:
            return None
        nc = normalize(keep)
        if nc is not None:
            out.append(nc)
    return out


def count_tree(component, pinned=None):
    """Count over the component's unpinned variables; the pinned graph must be a forest."""
    pinned = dict(pinned or {})
    clauses = _component_clauses(component, pinned)
    if clauses is None:
        return 0
    return _forest_count(clauses, component.variables - set(pinned))


def count_component(component, base=None, max_cycle_vars=None):
    """Sum of ``count_tree`` over every assignment of the component's cycle variables."""
    base = dict(base or {})
    cyc = sorted(component.cycle_vars - set(base))
    if max_cycle_vars is not None and len(cyc) > max_cycle_vars:
        raise ExcessBudgetExceeded(len(cyc), max_cycle_vars)
    clauses = _component_clauses(component, base)
    if clauses is None:
        return 0
    rest = component.variables - set(base) - set(cyc)
    total = 0
    # depth-first over cyc; a branch that falsifies a clause contributes 0
    stack = [(clauses, 0)]
    while stack:
        cl, i = stack.pop()
        if i == len(cyc):
            total += _forest_count(cl, rest)
            continue
        for val in (0, 1):
            sub = _pin_clauses(cl, cyc[i], val)
            if sub is not None:
                stack.append((sub, i + 1))
    return total


def count_formula(f, lam=None, max_cycle_vars=None):
    """Exact number of satisfying assignments of ``f`` simplified by ``lam``."""
    sf = simplify(f, lam or {})
    if sf.empty_clause_present:
        return 0
    return count_clauses([l for _, l in sf.residual], sf.variables, max_cycle_vars)


# -- dynamic residual state and conditional sampling -------------------------


class ResidualState:
    """Partial assignment with an incrementally maintained residual formula.

    ``true_count[c]`` is the number of literal slots of clause ``c`` made
    true by the current pins; the clause is residual iff it is zero.
    """

    def __init__(self, f, lam=None):
        self.f = f
        self.lits = f.literals
        n = f.n
        self.value = [-1] * n
        self.true_count = [0] * f.m
        occ = [[] for _ in range(n)]
        for c, lits in enumerate(self.lits):
            seen = {}
            for v, w in lits:
                cnt = seen.setdefault(v, [0, 0])
                cnt[w] += 1
            for v, (c0, c1) in seen.items():
                occ[v].append((c, c0, c1))
        self.occ = occ
        if lam:
            for v, val in lam.items():
                self.pin(v, int(val))

    def pin(self, v, val):
        self.value[v] = val
        tc = self.true_count
        if val:
            for c, _, c1 in self.occ[v]:
                tc[c] += c1
        else:
            for c, c0, _ in self.occ[v]:
                tc[c] += c0

    def unpin(self, v):
        val = self.value[v]
        self.value[v] = -1
        tc = self.true_count
        if val:
            for c, _, c1 in self.occ[v]:
                tc[c] -= c1
        else:
            for c, c0, _ in self.occ[v]:
                tc[c] -= c0

    def assignment(self, variables=None):
        vals = self.value
        if variables is None:
            variables = range(len(vals))
        return {v: bool(vals[v]) for v in variables if vals[v] >= 0}

    def has_empty_clause(self):
        value = self.value
        for c, tc in enumerate(self.true_count):
            if tc == 0 and all(value[v] >= 0 for v, _ in self.lits[c]):
                return True
        return False

    def component(self, v, cap=None):
        """Residual clauses connected to unassigned variable ``v``, and their unassigned variables."""
        tc = self.true_count
        value = self.value
        occ = self.occ
        lits = self.lits
        seen_c = set()
        seen_v = {v}
        queue = []
        for c, _, _ in occ[v]:
            if tc[c] == 0:
                seen_c.add(c)
                queue.append(c)
        i = 0
        while i < len(queue):
            c = queue[i]
            i += 1
            for x, _ in lits[c]:
                if value[x] < 0 and x not in seen_v:
                    seen_v.add(x)
                    for d, _, _ in occ[x]:
                        if tc[d] == 0 and d not in seen_c:
                            seen_c.add(d)
                            queue.append(d)
            if cap is not None and len(queue) > cap:
                raise ComponentTooLarge(len(queue), cap, v)
        return queue, seen_v

    def normalized(self, clause_ids):
        value = self.value
        out = []
        for c in clause_ids:
            keep = [(x, w) for x, w in self.lits[c] if value[x] < 0]
            if not keep:
                return None
            nc = normalize(keep)
            if nc is not None:
                out.append(nc)
        return out


def _split_counts(state, v, comp, comp_vars, counter):
    # the residual component is determined by its clause ids (in BFS order)
    # and its unassigned variables, so that pair keys the marginal cache
    key = (v, tuple(comp), frozenset(comp_vars))
    hit = counter.marginals.get(key)
    if hit is not None:
        return hit
    clauses = state.normalized(comp)
    if clauses is None:
        out = (0, 0)
    else:
        rest = comp_vars - {v}
        sub0 = _pin_clauses(clauses, v, 0)
        sub1 = _pin_clauses(clauses, v, 1)
        out = (
            0 if sub0 is None else counter.count_on(sub0, rest),
            0 if sub1 is None else counter.count_on(sub1, rest),
        )
    if len(counter.marginals) >= counter.cache_size:
        counter.marginals.clear()
    counter.marginals[key] = out
    return out


def conditional_counts(state, v, counter, cap=None):
    """``(t0, t1, size)``: counts of the component of ``v`` with v -> F and v -> T."""
    comp, comp_vars = state.component(v, cap)
    if not comp:
        return 1, 1, 0
    t0, t1 = _split_counts(state, v, comp, comp_vars, counter)
    return t0, t1, len(comp)


def sample_into(state, S, rng, counter, cap=None):
    """Sample the variables of ``S`` (in the given order) from the uniform
    distribution over satisfying assignments of the current residual formula,
    pinning each as it is drawn. Returns the largest component size met."""
    biggest = 0
    for v in S:
        comp, comp_vars = state.component(v, cap)
        if not comp:
            state.pin(v, rng.getrandbits(1))
            continue
        if len(comp) > biggest:
            biggest = len(comp)
        t0, t1 = _split_counts(state, v, comp, comp_vars, counter)
        if t0 + t1 == 0:
            raise UnsatisfiableResidual(v)
        state.pin(v, 0 if rng.randrange(t0 + t1) < t0 else 1)
    return biggest


def sample_marginals(f, lam, S, cap=None, seed=0, max_cycle_vars=None):
    """Exact sample of the variables in ``S`` from the uniform distribution over
    satisfying assignments of ``f`` simplified by ``lam``."""
    lam = dict(lam)
    S = sorted(S)
    if any(v in lam for v in S):
        raise ValueError("S must be disjoint from dom(lam)")
    state = ResidualState(f, lam)
    if state.has_empty_clause():
        raise UnsatisfiableResidual()
    rng = py_rng(seed, 3) if not hasattr(seed, "randrange") else seed
    sample_into(state, S, rng, Counter(max_cycle_vars), cap)
    return {v: bool(state.value[v]) for v in S}


def sample_marginals_law(f, lam, S, counter=None):
    """Exact output law of :func:`sample_marginals`, by following every random branch.

    Returns ``{tuple of bools over sorted(S): Fraction}``.
    """
    lam = dict(lam)
    S = sorted(S)
    state = ResidualState(f, lam)
    counter = counter or Counter()
    law = {}
    half = Fraction(1, 2)

    def walk(i, prob, prefix):
        if i == len(S):
            law[prefix] = law.get(prefix, 0) + prob
            return
        v = S[i]
        t0, t1, _ = conditional_counts(state, v, counter)
        total = t0 + t1
        if total == 0:
            raise UnsatisfiableResidual(v)
        for val, t in ((0, t0), (1, t1)):
            if t == 0:
                continue
            p = half if t0 == t1 else Fraction(t, total)
            state.pin(v, val)
            walk(i + 1, prob * p, prefix + (bool(val),))
            state.unpin(v)

    walk(0, Fraction(1), ())
    return law
