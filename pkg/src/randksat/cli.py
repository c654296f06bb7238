"""Command-line entry point: ``randksat <command> ...``."""
import argparse
import json
import sys
from pathlib import Path

from . import analysis
from .classifier import R0, ClassifierParams, classify
from .components import count_formula
from .coupling import influence_exact, influence_sum_estimate
from .errors import MalformedInput, RandKSATError
from .formula import generate_random, read_dimacs, write_dimacs
from .glauber import GlauberChain, GlauberConfig
from .marking import MarkingParams, compute_marking, marking_lines, read_marking, verify_marking


def read_partial(path, n):
    """Parse ``v <idx> <0|1>`` lines into ``{idx: bool}``."""
    lam = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if len(parts) != 3 or parts[0] != "v" or parts[2] not in ("0", "1"):
            raise MalformedInput(f"{path}:{lineno}: expected 'v <idx> <0|1>'")
        v = int(parts[1])
        if not 0 <= v < n:
            raise MalformedInput(f"{path}:{lineno}: variable {v} out of range")
        lam[v] = parts[2] == "1"
    return lam


def partial_lines(values):
    return [f"v {v} {int(bool(x))}" for v, x in sorted(values.items())]


def _load(path, k=None):
    text = Path(path).read_text()
    return read_dimacs(text, k), text


def _emit(obj, args=None):
    print(json.dumps(obj, indent=2, default=str))


def _marking_for(f, text, args, cls):
    marking = read_marking(text, f.n)
    if marking is None:
        marking = compute_marking(f, cls, MarkingParams(seed=args.seed))
    return marking


def cmd_generate(args):
    f = generate_random(args.k, args.n, args.alpha, args.seed)
    text = write_dimacs(f)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_classify(args):
    f, _ = _load(args.file, args.k)
    cls = classify(f, ClassifierParams(override_Delta=args.delta_override))
    _emit(cls.summary(), args)


def cmd_mark(args):
    f, text = _load(args.file)
    cls = classify(f, ClassifierParams(override_Delta=args.delta_override))
    p = MarkingParams(args.beta_marked, args.beta_aux, args.r, args.max_rounds, args.seed)
    marking = compute_marking(f, cls, p)
    ok, violations = verify_marking(f, cls, marking, args.r)
    kept = [line for line in text.splitlines() if not line.startswith("c mark ")]
    body = "\n".join(kept + marking_lines(marking, f.n)) + "\n"
    Path(args.out or args.file).write_text(body)
    _emit({"sizes": marking.sizes(), "resample_rounds": marking.resample_rounds, "valid": ok,
           "violations": [v.as_dict() for v in violations], "beta_marked": p.beta_marked,
           "beta_aux": p.beta_aux, "r": p.r}, args)


def cmd_count(args):
    f, _ = _load(args.file)
    lam = read_partial(args.assign, f.n) if args.assign else {}
    count = count_formula(f, lam, args.max_cycle_vars)
    _emit({"count": str(count), "n": f.n, "m": f.m, "pinned": len(lam)}, args)


def cmd_sample(args):
    f, text = _load(args.file)
    cls = classify(f, ClassifierParams(override_Delta=args.delta_override))
    marking = _marking_for(f, text, args, cls)
    cfg = GlauberConfig(theta=args.theta, xi=args.xi, rho=args.rho, T=args.steps, component_cap=args.cap,
                        mode=args.mode, retries=args.retries, seed=args.seed)
    chain = GlauberChain(f, marking, cfg)
    reports = []
    last = None
    for i in range(args.runs):
        out, report = chain.run(seed=args.seed + i)
        reports.append(report.as_dict())
        if out is not None:
            last = out
    lines = partial_lines(dict(enumerate(last))) if last is not None else []
    if args.json:
        _emit({"runs": reports, "assignment": lines}, args)
    else:
        for line in lines:
            print(line)
        _emit(reports if len(reports) > 1 else reports[0], args)
    return 0 if all(r["status"] == "ok" for r in reports) else 2


def cmd_couple(args):
    f, text = _load(args.file)
    cls = classify(f, ClassifierParams(override_Delta=args.delta_override))
    marking = _marking_for(f, text, args, cls)
    lam = read_partial(args.pin, f.n) if args.pin else {}
    rep = influence_sum_estimate(f, marking, args.u, lam, args.runs, args.seed, cls, args.cap)
    payload = rep.as_dict()
    if args.exact:
        targets = [v for v in sorted(marking.marked) if v != args.u and v not in lam]
        payload["exact_sum_abs_influence"] = float(sum(abs(influence_exact(f, args.u, v, lam)) for v in targets))
    _emit(payload, args)


def cmd_verify(args):
    from . import oracle

    f, text = _load(args.file)
    cls = classify(f, ClassifierParams(override_Delta=args.delta_override))
    if args.suite == "count":
        exact = count_formula(f)
        brute = oracle.brute_count(f)
        _emit({"suite": "count", "engine": str(exact), "brute": str(brute), "equal": exact == brute}, args)
        return 0 if exact == brute else 1
    marking = _marking_for(f, text, args, cls)
    if args.suite == "stationarity":
        rhos = sorted({1, 2, len(marking.marked)} & set(range(1, len(marking.marked) + 1)))
        reps = [oracle.stationarity_check(f, marking, r).as_dict() for r in (rhos or [1])]
        ok = all(r["residual"] <= 1e-10 for r in reps)
        _emit({"suite": "stationarity", "reports": reps, "ok": ok}, args)
        return 0 if ok else 1
    if args.suite == "tv":
        cfg = GlauberConfig(mode="desk", T=args.steps, rho=args.rho, retries=args.retries, seed=args.seed)
        chain = GlauberChain(f, marking, cfg)
        samples, ok = chain.sample_many(args.runs, args.seed)
        exact = oracle.uniform_over_satisfying(f)
        good = samples[ok]
        hist = {}
        for row in map(tuple, good.tolist()):
            hist[row] = hist.get(row, 0) + 1
        rep = oracle.tv_distance(exact, hist)
        violations = sum(1 for row in good if not f.is_satisfied_by(row))
        _emit({"suite": "tv", **rep.as_dict(), "ok_runs": int(ok.sum()), "violations": violations,
               "T": chain.T, "rho": chain.rho}, args)
        return 0 if violations == 0 else 1
    rep = oracle.spectral_check(f, marking)
    _emit({"suite": "spectral", **rep.as_dict()}, args)
    return 0 if rep.bound_holds else 1


def cmd_analyze(args):
    options = {key: getattr(args, key) for key in ("b", "samples", "draws", "delta_override", "rho", "theta",
                                                   "T_scale", "repeats", "max_cycle_vars")
               if getattr(args, key) is not None}
    grid = analysis.ExperimentGrid(args.experiment, tuple(args.k), tuple(args.n), tuple(args.alpha),
                                   tuple(range(args.seed, args.seed + args.seeds)), args.out, options)
    report = analysis.run_grid(grid)
    text = analysis.to_csv(report) if args.csv else json.dumps(report, indent=2, default=str)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def build_parser():
    p = argparse.ArgumentParser(prog="randksat", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="random k-CNF formula in DIMACS")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    def with_file(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("file")
        s.add_argument("--json", action="store_true")
        s.add_argument("--delta-override", type=int, dest="delta_override")
        return s

    c = with_file("classify", "bad/good classification summary")
    c.add_argument("--k", type=int)
    c.set_defaults(func=cmd_classify)

    m = with_file("mark", "compute a marking and append it to the CNF file")
    m.add_argument("--r", type=float, default=R0)
    m.add_argument("--beta-marked", type=float, dest="beta_marked")
    m.add_argument("--beta-aux", type=float, dest="beta_aux")
    m.add_argument("--max-rounds", type=int, dest="max_rounds")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", help="write the marked CNF here instead of appending in place")
    m.set_defaults(func=cmd_mark)

    n = with_file("count", "exact model count")
    n.add_argument("--assign", "--partial", dest="assign", help="file of 'v <idx> <0|1>' lines")
    n.add_argument("--max-cycle-vars", type=int, dest="max_cycle_vars")
    n.set_defaults(func=cmd_count)

    s = with_file("sample", "run the sampler")
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--xi", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=("theory", "desk"), default="theory")
    s.add_argument("--rho", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--cap", type=int)
    s.add_argument("--retries", type=int, default=0)
    s.add_argument("--runs", type=int, default=1)
    s.set_defaults(func=cmd_sample)

    cp = with_file("couple", "coupling-process influence estimates")
    cp.add_argument("--u", type=int, required=True)
    cp.add_argument("--pin", help="file of 'v <idx> <0|1>' lines")
    cp.add_argument("--runs", type=int, default=1000)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--cap", type=int)
    cp.add_argument("--exact", action="store_true", help="also report the exact influence sum")
    cp.set_defaults(func=cmd_couple)

    v = with_file("verify", "oracle checks on a small instance")
    v.add_argument("--suite", choices=("count", "stationarity", "tv", "spectral"), required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--runs", type=int, default=10000)
    v.add_argument("--steps", type=int, default=20)
    v.add_argument("--rho", type=int, default=1)
    v.add_argument("--retries", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", help="structural statistics and benchmarks")
    a.add_argument("--experiment", choices=analysis.EXPERIMENTS, required=True)
    a.add_argument("--k", type=int, nargs="+", default=[10])
    a.add_argument("--n", type=int, nargs="+", default=[1000])
    a.add_argument("--alpha", type=float, nargs="+", default=[2.0])
    a.add_argument("--seeds", type=int, default=1, help="number of seeds per cell")
    a.add_argument("--seed", type=int, default=0, help="first seed")
    fmt = a.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    a.add_argument("--out")
    a.add_argument("--b", type=float)
    a.add_argument("--samples", type=int)
    a.add_argument("--draws", type=int)
    a.add_argument("--delta-override", type=int, dest="delta_override")
    a.add_argument("--rho", type=int)
    a.add_argument("--theta", type=float)
    a.add_argument("--T-scale", type=float, dest="T_scale")
    a.add_argument("--repeats", type=int)
    a.add_argument("--max-cycle-vars", type=int, dest="max_cycle_vars")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (RandKSATError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
