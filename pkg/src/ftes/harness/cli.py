"""Command-line interface.

Exit codes: 0 success, 1 acceptance failed (only with ``--strict``), 2 invalid configuration
or arguments, 3 non-finite state in a single-trajectory run.
"""

from __future__ import annotations

import argparse
import sys

from .. import bounds
from ..averaging import moment_check_first, moment_check_second
from ..dither import FrequencySet, default_frequencies, is_nonresonant, resonances
from .config import ConfigError, build_config
from .reproduce import reproduce
from .run import EXIT_CONFIG, EXIT_NONFINITE, EXIT_OK, batch, output_dir, run_scenario
from .scenarios import FIGURE_IDS

EXIT_ACCEPTANCE = 1


def _add_common(p):
    p.add_argument("--out", help="output directory (default: $FTES_OUT or ./ftes-out)")
    p.add_argument("--backend", choices=("compiled", "python"), help="integrator backend")
    p.add_argument("--strict", action="store_true", help="exit with 1 when an acceptance check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftes", description="Fixed-time extremum seeking simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario from a configuration file")
    p.add_argument("config")
    _add_common(p)

    p = sub.add_parser("reproduce", help="run a prebaked figure scenario")
    p.add_argument("figure_id", choices=FIGURE_IDS)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("batch", help="run independent trajectories from random starts")
    p.add_argument("config")
    p.add_argument("--n", type=int, default=None, help="trajectory count (default: sim.batch)")
    p.add_argument("--seed", type=int, default=None, help="seed (default: sim.seed)")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("bounds", help="settling-time bound or gain design")
    p.add_argument("kind", choices=("gradient", "newton"))
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=float, help="gain; prints the bound")
    g.add_argument("--tstar", type=float, help="target bound; prints the gain")
    p.add_argument("--q1", type=float, default=3.0)
    p.add_argument("--q2", type=float, default=1.5)
    p.add_argument("--kappa", type=float, help="PL constant (gradient only)")

    p = sub.add_parser("verify-averaging", help="check the oscillator moment identities")
    p.add_argument("--freqs", help="frequency gains such as '1, 3/2' (default: builtin set for --n)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--a", type=float, default=0.1, help="dither amplitude for the second moments")
    return parser


def _cmd_bounds(args) -> int:
    a1, a2 = bounds.alphas(args.q1, args.q2)
    print(f"alpha1={a1:.17g} alpha2={a2:.17g}")
    if args.kind == "gradient":
        if args.kappa is None:
            raise ConfigError("--kappa", "the gradient bound needs a PL constant")
        if args.k is not None:
            print(f"tstar={bounds.t_star_gradient(args.k, args.q1, args.q2, args.kappa):.17g}")
        else:
            print(f"k={bounds.gain_for_tstar_gradient(args.tstar, args.q1, args.q2, args.kappa):.17g}")
    else:
        if args.k is not None:
            print(f"tstar={bounds.t_star_newton(args.k, args.q1, args.q2):.17g}")
        else:
            print(f"k={bounds.gain_for_tstar_newton(args.tstar, args.q1, args.q2):.17g}")
    return EXIT_OK


def _cmd_averaging(args) -> int:
    freqs = FrequencySet.parse(args.freqs) if args.freqs else default_frequencies(args.n)
    print(f"freqs={freqs}")
    res = resonances(freqs)
    print(f"nonresonant_order4={int(not res)}" + (f" resonances={res}" if res else ""))
    first = moment_check_first(freqs)
    print(f"first: max|<mu mu'> - I/2|={first.second_moment_deviation:.3e} "
          f"max|<mu>|={first.mean_deviation:.3e} {'PASS' if first.passed else 'FAIL'}")
    second = moment_check_second(freqs, args.a)
    for e in second.entries:
        print(f"  {e.name:<16} {str(tuple(i + 1 for i in e.indices)):<8} value={e.value:+.10e} "
              f"normalized={e.normalized:+.10e} stated={e.expected:g}")
    print(f"second: max zero-entry deviation={second.max_zero_deviation:.3e} "
          f"{'PASS' if second.passed else 'FAIL'}")
    ok = first.passed and second.passed and is_nonresonant(freqs)
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def _report(result, strict) -> int:
    print(result.status_line())
    if result.out_dir is not None:
        print(f"artifacts: {result.out_dir}")
    if len(result.results) == 1 and result.any_nonfinite:
        return EXIT_NONFINITE
    if strict and result.passed is False:
        return EXIT_ACCEPTANCE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "verify-averaging":
            return _cmd_averaging(args)
        out = output_dir(args.out)
        if args.command == "simulate":
            cfg = build_config(args.config)
            return _report(run_scenario(cfg, out=out / cfg.name, backend=args.backend), args.strict)
        if args.command == "batch":
            cfg = build_config(args.config)
            res = batch(cfg, n=args.n, seed=args.seed, out=out / cfg.name, backend=args.backend,
                        workers=args.workers)
            return _report(res, args.strict)
        if args.command == "reproduce":
            code = EXIT_OK
            for res in reproduce(args.figure_id, out=out, backend=args.backend, workers=args.workers):
                code = max(code, _report(res, args.strict))
            return code
    except (ConfigError, bounds.InadmissibleParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
