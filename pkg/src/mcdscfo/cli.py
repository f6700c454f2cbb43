"""
Command-line entry points.

``sim`` runs experiments from a config file; ``zcz`` generates and checks
code families.  Exit status: 0 success, 1 failed verification, 2
configuration error, 3 runtime budget error.
"""

import argparse
import sys

from .exceptions import BudgetError, ConfigurationError, InvalidArgumentError
from .harness.configfile import load_config
from .harness.experiments import make_spec, run_experiment
from .harness.report import emit_report
from .zcz import read_family, verify_zcz, write_family, generate_zcz

__all__ = ["main", "sim_main", "zcz_main", "EXIT_OK", "EXIT_VERIFY", "EXIT_CONFIG", "EXIT_BUDGET"]

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _run_options(p):
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--out", required=True, help="output report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, help="master seed (overrides harness.seed)")
    p.add_argument("--trials", type=int, help="trials per point (BER: frame cap)")
    p.add_argument("--workers", type=int, help="worker processes (overrides harness.workers)")


def _sim_parser():
    parser = argparse.ArgumentParser(prog="sim", description="Monte Carlo CFO-variance and BER experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    cfo = sub.add_parser("cfo-variance", help="estimator variance vs. N_CP, N_sym or SNR")
    cfo.add_argument("--sweep", choices=("ncp", "nsym", "snr"), required=True)
    _run_options(cfo)
    ber = sub.add_parser("ber", help="ML and MMSE bit error rate vs. SNR")
    _run_options(ber)
    return parser


def _zcz_parser():
    parser = argparse.ArgumentParser(prog="zcz", description="zero-correlation-zone code families")
    sub = parser.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("gen", help="generate a certified binary family")
    gen.add_argument("--length", type=int, required=True, help="sequence length L")
    gen.add_argument("--family", type=int, required=True, help="family size M")
    gen.add_argument("--out", required=True)
    ver = sub.add_parser("verify", help="check a family file against its claimed zone")
    ver.add_argument("file")
    return parser


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


def sim_main(argv=None):
    args = _sim_parser().parse_args(argv)
    try:
        settings = load_config(args.config)
        kind = "ber" if args.command == "ber" else "cfo-variance"
        sweep = "snr" if kind == "ber" else args.sweep
        if args.trials is not None and args.trials < 1:
            raise ConfigurationError("--trials must be at least 1")
        if args.workers is not None and args.workers < 1:
            raise ConfigurationError("--workers must be at least 1")
        spec = make_spec(settings, kind, sweep, trials=args.trials, seed=args.seed, workers=args.workers)
        report = run_experiment(spec)
        emit_report(report, args.format, args.out)
    except (ConfigurationError, InvalidArgumentError) as exc:
        return _fail(exc, EXIT_CONFIG)
    except BudgetError as exc:
        return _fail(exc, EXIT_BUDGET)
    except OSError as exc:
        return _fail(exc, EXIT_CONFIG)
    return EXIT_OK


def zcz_main(argv=None):
    args = _zcz_parser().parse_args(argv)
    try:
        if args.command == "gen":
            family = generate_zcz(args.length, args.family)
            write_family(family, args.out)
            print(f"L={family.L_seq} M={family.M_seq} Z0={family.Z0} eta={family.eta:g}")
            return EXIT_OK
        family = read_family(args.file)
    except (ConfigurationError, InvalidArgumentError) as exc:
        return _fail(exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail(exc, EXIT_CONFIG)
    report = verify_zcz(family)
    if report.passed:
        print(f"PASS L={family.L_seq} M={family.M_seq} Z0={family.Z0} max_in_zone={report.max_abs_in_zone:g}")
        return EXIT_OK
    q, r, lag = report.worst
    print(f"FAIL worst pair ({q}, {r}) at lag {lag}: |R|={report.max_abs_in_zone:g}")
    return EXIT_VERIFY


def main(argv=None):
    """``python -m mcdscfo {sim|zcz} ...``"""
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in ("sim", "zcz"):
        print("usage: python -m mcdscfo {sim|zcz} ...", file=sys.stderr)
        return EXIT_CONFIG
    return (sim_main if argv[0] == "sim" else zcz_main)(argv[1:])
