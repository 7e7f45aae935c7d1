"""Command-line front end: ``sample``, ``optimize``, ``verify``, ``critical``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 verification failure.
Reports are ``key value`` lines on stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from shaken.critical import critical_limit, critical_solve, NoRootError
from shaken.dynamics import KERNELS, run
from shaken.graph import (
    GraphError,
    InteractionGraph,
    Orientation,
    build_doubling,
    orient,
    parse_graph,
    parse_orientation,
)
from shaken.lattice import TorusLattice, triangular_doubling
from shaken.optimize import (
    baseline_solve,
    ea_instance,
    ea_orientation,
    paired_flips,
    q_threshold,
    solve,
)
from shaken.verify import format_report, run_verification

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class IOFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_instance_args(p: argparse.ArgumentParser):
    src = p.add_argument_group("instance (exactly one of --instance, --lattice, --ea)")
    src.add_argument("--instance", type=Path, help="graph file (v/e/b records)")
    src.add_argument("--orientation", type=Path, help="orientation file (o records)")
    src.add_argument("--orient-seed", type=int, help="random edge orientation seed")
    src.add_argument("--lattice", choices=["z2", "triangular"])
    src.add_argument("--ea", type=int, metavar="L", help="Edwards-Anderson L x L instance")
    src.add_argument("--ea-seed", type=int, default=0)
    src.add_argument("--L", type=int, default=4)
    src.add_argument("--J", type=float, default=1.0)
    src.add_argument("--lam", type=float, default=0.0)
    src.add_argument("--boundary", default="",
                     help="frozen sites, e.g. '0,5' (+1) or '0:+1,5:-1'")
    p.add_argument("--q", type=float, default=None, help="self-interaction weight")
    p.add_argument("--beta", type=float, default=1.0, help="multiplies J, lambda and q")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--trace", type=Path, help="CSV trace output")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")


def _boundary(spec: str) -> dict[int, int]:
    out = {}
    for tok in filter(None, (t.strip() for t in spec.split(","))):
        site, _, val = tok.partition(":")
        try:
            out[int(site)] = int(val) if val else 1
        except ValueError:
            raise UsageError(f"bad boundary entry {tok!r}") from None
    return out


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: Path | None, text: str, force: bool):
    if path is None:
        return
    if path.exists() and not force:
        raise IOFailure(f"{path} exists; pass --force to overwrite")
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None


def _instance(args) -> tuple[InteractionGraph, Orientation, str]:
    """Parent graph (already scaled by beta), orientation and a label."""
    sources = [args.instance is not None, args.lattice is not None, args.ea is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --instance, --lattice, --ea")
    if args.sweeps < 0:
        raise UsageError("--sweeps must be >= 0")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.instance is not None:
        try:
            g, ids = parse_graph(_read(args.instance))
            if args.orientation is not None:
                o = parse_orientation(_read(args.orientation), g, ids)
            else:
                o = orient(g, args.orient_seed)
        except GraphError as exc:
            raise IOFailure(f"{args.instance}: {exc}") from None
        label = str(args.instance)
    elif args.ea is not None:
        g, o, label = ea_instance(args.ea, args.ea_seed), ea_orientation(args.ea), f"ea-L{args.ea}-s{args.ea_seed}"
    elif args.lattice == "z2":
        lattice = TorusLattice(args.L, _boundary(args.boundary))
        g, o = lattice.graph(args.J, args.lam)
        label = f"z2-L{args.L}"
    else:
        if args.lam or args.boundary:
            raise UsageError("the triangular lattice takes no field or boundary")
        d = triangular_doubling(args.L, args.J, 0.0)
        g, o, label = d.parent, d.orientation, f"triangular-L{args.L}"
    if args.beta != 1.0:
        g = g.scaled(args.beta)
    return g, o, label


def _scaled_q(args) -> float | None:
    return None if args.q is None else args.beta * args.q


def _kv(pairs) -> str:
    lines = []
    for k, v in pairs:
        if isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} {v}")
    return "\n".join(lines) + "\n"


def cmd_sample(args) -> int:
    g, o, label = _instance(args)
    q = _scaled_q(args)
    if args.kernel == "heatbath":
        model = g
    else:
        if q is None:
            raise UsageError(f"--q is required for kernel {args.kernel}")
        model = build_doubling(g, o, q)
    state, trace = run(model, args.kernel, args.sweeps, seed=args.seed, init=args.init,
                       workers=args.threads, burn_in=args.burn_in)
    _write(args.trace, trace.to_csv(), args.force)
    summary = _kv([
        ("instance", label),
        ("kernel", args.kernel),
        ("sweeps", args.sweeps),
        ("seed", args.seed),
        ("sites", g.n),
        ("mean_energy", float(state.mean_energy)),
        ("mean_abs_magnetization", float(state.mean_abs_magnetization)),
        ("final_energy", float(trace.energy[-1])),
        ("best_energy", float(trace.best_energy[-1])),
        ("attempted_updates", trace.attempted_updates),
    ])
    _write(args.summary, summary, args.force)
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_optimize(args) -> int:
    g, o, label = _instance(args)
    thr = q_threshold(g, o)
    if args.kernel == "heatbath":
        result = baseline_solve(g, paired_flips(g, args.sweeps), seed=args.seed, instance=label)
    else:
        q = _scaled_q(args)
        if q is None:
            q = thr + 0.01
        result = solve(g, o, q, kernel=args.kernel, sweeps=args.sweeps, seed=args.seed,
                       ramp=args.ramp, workers=args.threads, instance=label)
    _write(args.trace, result.trace_csv(), args.force)
    _write(args.best, result.best_string() + "\n", args.force)
    pairs = [
        ("instance", label),
        ("kernel", result.kernel),
        ("q", result.q if result.q is not None else "none"),
        ("q_threshold", thr),
        ("sweeps", args.sweeps),
        ("seed", args.seed),
        ("best_energy", float(result.best_energy)),
        ("time_to_best", result.time_to_best),
        ("attempted_updates", result.attempted_updates),
        ("wall_clock", result.wall_clock),
        ("best_config", result.best_string()),
    ]
    if result.warning:
        pairs.append(("warning", result.warning))
    sys.stdout.write(_kv(pairs))
    return EXIT_OK


def _parse_budget(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--budget expects NAME=VALUE, got {item!r}")
        try:
            out[name] = float(val)
        except ValueError:
            raise UsageError(f"bad budget value {val!r}") from None
    return out


def cmd_verify(args) -> int:
    try:
        results = run_verification(seed=args.seed, n_instances=args.instances,
                                   budgets=_parse_budget(args.budget))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    sys.stdout.write(format_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        sys.stderr.write(f"verification failed: {', '.join(failed)}\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_critical(args) -> int:
    try:
        if args.limit:
            point = critical_limit(args.limit)
        else:
            name, sep, val = args.fix.partition("=")
            if not sep or name not in ("J", "q"):
                raise UsageError(f"--fix expects J=<v> or q=<v>, got {args.fix!r}")
            try:
                value = float(val)
            except ValueError:
                raise UsageError(f"bad value {val!r}") from None
            point = critical_solve(**{name: value})
    except NoRootError as exc:
        sys.stderr.write(f"no critical point: {exc}\n")
        return EXIT_USAGE
    sys.stdout.write(_kv([("J", point.J), ("q", point.q), ("t", point.t),
                          ("s", point.s), ("residual", point.residual)]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shaken", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="run a sampling chain and write its trace")
    _add_instance_args(p)
    p.add_argument("--kernel", choices=KERNELS, default="shaken")
    p.add_argument("--init", choices=["random", "plus", "minus"], default="random")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--summary", type=Path, help="also write the summary here")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("optimize", help="heuristic ground-state search")
    _add_instance_args(p)
    p.add_argument("--kernel", choices=["shaken", "shaken-reversed", "alternate", "heatbath"], default="shaken")
    p.add_argument("--ramp", type=float, default=None, help="final (J, lambda) multiplier")
    p.add_argument("--best", type=Path, help="write the best configuration (+/- string)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="exact small-system verification suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--budget", action="append", metavar="CHECK=VALUE",
                   help="override a residual budget")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("critical", help="triangular-lattice critical curve")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fix", help="J=<v> or q=<v> (q=inf allowed)")
    g.add_argument("--limit", choices=["square", "hexagonal", "triangular"])
    p.set_defaults(func=cmd_critical)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"shaken: error: {exc}\n")
        return EXIT_USAGE
    except IOFailure as exc:
        sys.stderr.write(f"shaken: {exc}\n")
        return EXIT_IO
    except (GraphError, ValueError) as exc:
        sys.stderr.write(f"shaken: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
