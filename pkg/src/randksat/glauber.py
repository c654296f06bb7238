"""ρ-uniform-block Glauber dynamics on the marked variables, then an exact
extension to the auxiliary and control variables."""
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .components import Counter, ResidualState, sample_into
from .errors import ComponentTooLarge, MarkingInvalid, UnsatisfiableResidual
from .rng import py_rng


def mixing_params(k, n, n_marked, theta=0.5, xi=1, epsilon=None):
    """Default ``(rho, T, cap)`` for the block dynamics.

    rho = ceil(2^{-k-1} |V_m|), T = ceil(2^{2k+3} n^theta log(2n / eps^2)),
    cap = ceil(2 k^4 (1 + xi) log n), with eps = n^{-xi} unless given.
    """
    if epsilon is None:
        epsilon = float(n) ** (-xi)
    rho = math.ceil(n_marked / 2 ** (k + 1))
    T = math.ceil(2 ** (2 * k + 3) * n**theta * math.log(2 * n / epsilon**2))
    cap = math.ceil(2 * k**4 * (1 + xi) * math.log(n))
    return rho, T, cap


@dataclass(frozen=True)
class GlauberConfig:
    theta: float = 0.5
    xi: int = 1
    epsilon: float | None = None
    rho: int | None = None
    T: int | None = None
    component_cap: int | None = None
    mode: str = "theory"
    retries: int = 0  # desk mode: fresh block draws after a cap error
    max_cycle_vars: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.xi < 1:
            raise ValueError("xi must be a positive integer")
        if self.mode not in ("theory", "desk"):
            raise ValueError("mode must be 'theory' or 'desk'")
        if self.mode == "theory" and (
            self.rho is not None or self.T is not None or self.component_cap is not None or self.retries
        ):
            raise ValueError("rho / T / cap overrides and retries need mode='desk'")

    def resolve(self, k, n, n_marked):
        """Concrete ``(rho, T, cap)`` for an instance."""
        rho, T, cap = mixing_params(k, n, n_marked, self.theta, self.xi, self.epsilon)
        if self.rho is not None:
            rho = self.rho
        if self.T is not None:
            T = self.T
        if self.component_cap is not None:
            cap = self.component_cap
        if n_marked == 0:
            rho = 0
        elif not 1 <= rho <= n_marked:
            raise ValueError(f"rho = {rho} outside [1, {n_marked}]")
        if T < 1:
            raise ValueError("T must be at least 1")
        return rho, T, cap


@dataclass
class ChainState:
    assignment: dict  # marked variable -> bool
    t: int = 0


@dataclass
class RunReport:
    status: str
    steps: int
    rho: int
    T: int
    cap: int
    seed: int
    mode: str
    max_component_sizes: list = field(repr=False)
    final_component_size: int = 0
    errors: list = field(default_factory=list)
    retries_used: int = 0
    wall_time: float = 0.0

    def as_dict(self, per_step=False):
        d = asdict(self)
        sizes = d.pop("max_component_sizes")
        d["max_component_size"] = max(sizes, default=0)
        if per_step:
            d["max_component_sizes"] = sizes
        return d


class GlauberChain:
    """Reusable chain over one formula and marking.

    The residual state is built once; :meth:`reset` clears it between runs
    so repeated runs cost O(run) rather than O(formula).
    """

    def __init__(self, f, marking, cfg=None, validate=True):
        cfg = cfg or GlauberConfig()
        if validate:
            sets = (marking.marked, marking.auxiliary, marking.control)
            if sum(map(len, sets)) != f.n or len(frozenset().union(*sets)) != f.n:
                raise MarkingInvalid("marking is not a partition of the variables")
        self.f = f
        self.marking = marking
        self.cfg = cfg
        self.marked = sorted(marking.marked)
        self.rest = sorted(marking.auxiliary | marking.control)
        self.rho, self.T, self.cap = cfg.resolve(f.k, f.n, len(self.marked))
        self.state = ResidualState(f)
        self.counter = Counter(cfg.max_cycle_vars)
        self.pool = list(self.marked)
        self.rng = py_rng(cfg.seed, 4)
        self.t = 0
        self.retries_used = 0

    def reset(self, seed=None):
        value = self.state.value
        for v in range(self.f.n):
            if value[v] >= 0:
                self.state.unpin(v)
        self.pool = list(self.marked)
        if seed is not None:
            self.rng = py_rng(seed, 4)
        self.t = 0

    def init(self):
        """X_0: i.i.d. fair coins on the marked variables."""
        bits = self.rng.getrandbits(len(self.marked)) if self.marked else 0
        for i, v in enumerate(self.marked):
            self.state.pin(v, (bits >> i) & 1)
        self.t = 0

    def chain_state(self):
        value = self.state.value
        return ChainState({v: bool(value[v]) for v in self.marked}, self.t)

    def load(self, cs):
        self.reset()
        for v in self.marked:
            self.state.pin(v, int(cs.assignment[v]))
        self.t = cs.t

    def choose_block(self):
        """Uniform ρ-subset of V_m by a partial Fisher-Yates shuffle of the persistent pool."""
        pool = self.pool
        rng = self.rng
        size = len(pool)
        for i in range(self.rho):
            j = rng.randrange(i, size)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[: self.rho])

    def step(self):
        """One block update; returns the largest component met. Raises on cap errors
        unless desk-mode retries remain (then a fresh block is drawn)."""
        state = self.state
        attempts = self.cfg.retries + 1
        for attempt in range(attempts):
            S = self.choose_block()
            old = [state.value[v] for v in S]
            for v in S:
                state.unpin(v)
            try:
                size = sample_into(state, S, self.rng, self.counter, self.cap)
            except ComponentTooLarge:
                for v, val in zip(S, old):
                    if state.value[v] >= 0:
                        state.unpin(v)
                    state.pin(v, val)
                if attempt + 1 == attempts:
                    raise
                self.retries_used += 1
                continue
            self.t += 1
            return size
        raise AssertionError("unreachable")

    def extend(self):
        """Exact sample of V_a ∪ V_c given the marked values; returns the largest component met."""
        return sample_into(self.state, self.rest, self.rng, self.counter, self.cap)

    def run(self, seed=None, record=True, check=True):
        """One full run; returns ``(assignment or None, RunReport)``."""
        start = time.perf_counter()
        if seed is not None or self.t or any(x >= 0 for x in self.state.value):
            self.reset(self.cfg.seed if seed is None else seed)
        run_seed = self.cfg.seed if seed is None else seed
        self.retries_used = 0
        sizes = [] if record else None
        errors = []
        status = "ok"
        final = 0
        self.init()
        try:
            for _ in range(self.T):
                s = self.step()
                if record:
                    sizes.append(s)
            final = self.extend()
        except (ComponentTooLarge, UnsatisfiableResidual) as exc:
            status = "error"
            errors.append({"step": self.t, "type": type(exc).__name__, "message": str(exc)})
        out = None
        if status == "ok":
            out = [bool(x) for x in self.state.value]
            if check and not all(self.state.true_count):
                status = "error"
                errors.append({"step": self.t, "type": "UnsatisfiedOutput", "message": "output violates a clause"})
                out = None
        report = RunReport(
            status=status,
            steps=self.t,
            rho=self.rho,
            T=self.T,
            cap=self.cap,
            seed=run_seed,
            mode=self.cfg.mode,
            max_component_sizes=sizes if record else [],
            final_component_size=final,
            errors=errors,
            retries_used=self.retries_used,
            wall_time=time.perf_counter() - start,
        )
        return out, report

    def sample_many(self, runs, seed=0):
        """``runs`` independent runs; returns ``(bool array runs x n, statuses)``.

        One random stream drives all runs in sequence, so the result is a
        deterministic function of ``seed``.
        """
        self.reset(seed)
        out = np.zeros((runs, self.f.n), dtype=bool)
        ok = np.zeros(runs, dtype=bool)
        for i in range(runs):
            if i:
                self.reset()
            assignment, report = self.run(record=False)
            if assignment is not None:
                out[i] = assignment
                ok[i] = True
        return out, ok


def init_chain(marking, seed=0):
    rng = py_rng(seed, 4)
    marked = sorted(marking.marked)
    bits = rng.getrandbits(len(marked)) if marked else 0
    return ChainState({v: bool((bits >> i) & 1) for i, v in enumerate(marked)}, 0)


def step(f, marking, state, cfg):
    """Functional single step: returns the next ChainState (the input is not modified)."""
    if cfg.T is not None and state.t >= cfg.T:
        raise ValueError("chain already ran T steps")
    chain = GlauberChain(f, marking, GlauberConfig(**{**asdict(cfg), "seed": cfg.seed + state.t}))
    chain.load(state)
    chain.retries_used = 0
    chain.step()
    return chain.chain_state()


def run(f, marking, cfg=None, seed=None):
    """Algorithm-level entry point: ``(assignment over all of V or None, RunReport)``."""
    chain = GlauberChain(f, marking, cfg)
    return chain.run(seed=seed)
