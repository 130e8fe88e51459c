"""Command-line interface.

Exit codes: 0 success, 1 invalid input (bad file, unknown state, reducible
chain, inapplicable method), 2 numerical degeneracy (singular solve,
denominator failure, cross-check mismatch).
"""

import argparse
import sys

from .chain import ChainError, HittingQuery, TabooSet, format_chain, parse_chain, validate
from .errors import NumericalDegeneracy
from .green import green_function, taboo_green
from .lattice import LatticeSpec, build_lattice_walk
from .oracle import estimate_hitting, estimate_hitting_after_exit
from .probability import Method, applicable_methods, hitting_probability, normalize_query
from .reduction import format_trace, reduce_to_singleton

METHOD_CHOICES = [m.value for m in Method] + ["all"]
CROSS_CHECK_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _prob(v):
    return f"{v:.12f}"


def _num(v):
    return f"{v:.12g}"


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return parse_chain(fh.read())


def _query(gen, args, err):
    taboo = TabooSet.of(args.taboo or "")
    if args.to in taboo:
        print(f"notice: target {args.to} removed from taboo set", file=err)
    return normalize_query(gen, HittingQuery.normalized(args.source, args.to, taboo))


def _cmd_validate(args, out, err):
    gen = _load(args.file)
    report = validate(gen)
    for line in report.findings:
        print(line, file=out)
    print("valid" if report.ok else "invalid", file=out)
    return 0 if report.ok else 1


def _cmd_hit(args, out, err):
    gen = _load(args.file)
    q = _query(gen, args, err)
    opts = dict(trials=args.trials, seed=args.seed, horizon=args.horizon)
    if args.method == "all":
        results = [hitting_probability(gen, q.source, q.target, q.taboo, m) for m in applicable_methods(gen, q)]
        for r in results:
            print(f"value={_prob(r.value)} method={r.method.value}", file=out)
        values = [r.value for r in results]
        spread = max(values) - min(values)
        if spread > CROSS_CHECK_TOL:
            raise NumericalDegeneracy(f"methods disagree by {spread:.3g}", "cross-check")
        return 0
    r = hitting_probability(gen, q.source, q.target, q.taboo, args.method, **opts)
    line = f"value={_prob(r.value)} method={r.method.value}"
    if r.method is Method.MONTE_CARLO:
        est = r.trace[0]
        line += f" stderr={_prob(est.stderr)} censored={est.horizon_censored}"
    print(line, file=out)
    return 0


def _cmd_green(args, out, err):
    gen = _load(args.file)
    taboo = TabooSet.of(args.taboo or "").check(gen.states)
    if taboo:
        times = taboo_green(gen, taboo)
    else:
        g = green_function(gen)
        if g.recurrent:
            print("recurrent", file=out)
            return 0
        times = g.times
    m = times.matrix()
    print("taboo=" + ",".join(taboo), file=out)
    print("state " + " ".join(times.column_labels), file=out)
    for label, row in zip(gen.labels, m):
        print(label + " " + " ".join(_num(v) for v in row), file=out)
    return 0


def _cmd_reduce(args, out, err):
    gen = _load(args.file)
    q = _query(gen, args, err)
    order = None if args.order is None else [s for s in args.order.split(",") if s]
    try:
        r = reduce_to_singleton(gen, q, order=order)
    except NumericalDegeneracy as exc:
        trace = getattr(exc, "trace", ())
        if trace:
            print(format_trace(trace), file=out)
        raise
    print(f"value={_prob(r.value)} method={r.method.value}", file=out)
    print(format_trace(r.trace), file=out)
    return 0


def _cmd_simulate(args, out, err):
    gen = _load(args.file)
    q = _query(gen, args, err)
    estimator = estimate_hitting_after_exit if args.after_exit else estimate_hitting
    est = estimator(gen, q, trials=args.trials, seed=args.seed, horizon=args.horizon)
    print(f"mean={_prob(est.mean)}", file=out)
    print(f"stderr={_prob(est.stderr)}", file=out)
    print(f"trials={est.trials}", file=out)
    print(f"censored={est.horizon_censored}", file=out)
    if args.after_exit:
        print(f"zero_atom={_prob(est.zero_atom)}", file=out)
        print(f"zero_atom_stderr={_prob(est.zero_atom_stderr)}", file=out)
    return 0


def _cmd_lattice(args, out, err):
    gen = build_lattice_walk(LatticeSpec(args.dim, args.radius, args.rate))
    out.write(format_chain(gen))
    return 0


def _add_query(p, taboo_required=False):
    p.add_argument("file")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--taboo", required=taboo_required, help="comma-separated labels")


def build_parser():
    parser = _Parser(prog="taboohit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a chain file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("hit", help="hitting probability under taboo")
    _add_query(p)
    p.add_argument("--method", choices=METHOD_CHOICES, default=None)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, default=None)
    p.set_defaults(func=_cmd_hit)

    p = sub.add_parser("green", help="(taboo) Green matrix")
    p.add_argument("file")
    p.add_argument("--taboo")
    p.set_defaults(func=_cmd_green)

    p = sub.add_parser("reduce", help="taboo reduction with step trace")
    _add_query(p, taboo_required=True)
    p.add_argument("--order", help="comma-separated taboo order")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("simulate", help="Monte-Carlo hitting estimate")
    _add_query(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--after-exit", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("lattice", help="emit a truncated lattice walk chain file")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--rate", type=float, default=1.0)
    p.set_defaults(func=_cmd_lattice)
    return parser


def run(argv, out=None, err=None):
    """Run one CLI invocation; returns the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out, err)
    except UsageError as exc:
        print(exc, file=err)
        return 1
    except NumericalDegeneracy as exc:
        where = exc.equation or "solve"
        print(f"numerical degeneracy [{where}]: {exc}", file=err)
        return 2
    except (ChainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return 1


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
