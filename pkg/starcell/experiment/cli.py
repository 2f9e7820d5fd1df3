# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Command line interface.

Exit codes: 0 on success, 2 when a validation fails, 1 on error. The
STARCELL_N_JOBS environment variable overrides the worker count.
"""

# Imports
import sys
import time
import argparse
import traceback
from starcell.info import __version__
from starcell.config import load_config
from starcell.utils import get_logger, setup_logging
from .profiles import PROFILES, load_profile, emit_profiles
from .results import emit
from .runner import (
    DEFAULT_EVALUATIONS, SWEEPABLE, Evaluation, SweepSpec, run_point,
    run_sweep, validate)


# Global parameters
logger = get_logger()
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


def parse_evaluation(text):
    """ Parse 'level:combiner[:decoder]', e.g. '1:mr:lsfd' or
    '2:global-mmse'.
    """
    items = text.split(":")
    if len(items) not in (2, 3):
        raise argparse.ArgumentTypeError(
            "Evaluation '{0}' is not of the form level:combiner[:decoder]."
            .format(text))
    decoder = items[2] if len(items) == 3 else None
    try:
        return Evaluation(int(items[0]), items[1], decoder)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "Invalid level in evaluation '{0}'.".format(text))


def get_parser():
    """ Build the command line parser.
    """
    parser = argparse.ArgumentParser(
        prog="starcell",
        description="Uplink spectral efficiency of STAR-RIS assisted "
                    "cell-free massive MIMO with hardware impairments.")
    parser.add_argument("--version", action="version",
                        version="%(prog)s {0}".format(__version__))
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="debug level logging.")
    parser.add_argument("--logfile", help="also log in this file.")
    subparsers = parser.add_subparsers(dest="command")

    def _add_config(subparser):
        group = subparser.add_mutually_exclusive_group()
        group.add_argument("--config", help="INI configuration file.")
        group.add_argument("--profile", choices=sorted(PROFILES),
                           help="named configuration profile.")
        subparser.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            dest="overrides", help="override one configuration key.")

    def _add_output(subparser):
        subparser.add_argument("--output", default="results.csv",
                               help="CSV destination.")
        subparser.add_argument("--curves", action="store_true",
                               help="also write gnuplot curve files.")
        subparser.add_argument(
            "--eval", action="append", type=parse_evaluation,
            dest="evaluations", metavar="LEVEL:COMBINER[:DECODER]",
            help="evaluation to run (default: all).")
        subparser.add_argument(
            "--analytic", action="store_true",
            help="Level 1 MR rows from the closed form.")

    run = subparsers.add_parser("run", help="evaluate one point.")
    _add_config(run)
    _add_output(run)

    sweep = subparsers.add_parser("sweep", help="sweep one parameter.")
    _add_config(sweep)
    _add_output(sweep)
    sweep.add_argument("--param", required=True, choices=SWEEPABLE,
                       help="the swept parameter.")
    sweep.add_argument("--values", required=True,
                       help="comma separated parameter values.")

    check = subparsers.add_parser(
        "validate", help="closed form versus Monte Carlo check.")
    _add_config(check)
    check.add_argument("--trials", type=int, help="number of trials.")
    check.add_argument("--perturb", type=float,
                       help="scale the closed-form statistics (negative "
                            "control).")

    profiles = subparsers.add_parser(
        "emit-profiles", help="write the named profiles as INI files.")
    profiles.add_argument("--outdir", default=".",
                          help="destination directory.")
    return parser


def _load(args):
    if getattr(args, "profile", None) is not None:
        return load_profile(args.profile, args.overrides)
    return load_config(args.config, args.overrides)


def _run(args):
    cfg = _load(args)
    evaluations = args.evaluations or DEFAULT_EVALUATIONS
    start = time.time()
    if args.command == "run":
        rows = run_point(cfg, evaluations, analytic=args.analytic).rows
    else:
        spec = SweepSpec(args.param, args.values.split(","), evaluations,
                         analytic=args.analytic)
        rows, _ = run_sweep(cfg, spec)
    emit(rows, args.output, cfg=cfg, wall_time=time.time() - start,
         curves=args.curves)
    return EXIT_OK


def _validate(args):
    cfg = _load(args)
    report = validate(cfg, n_trials=args.trials, perturb=args.perturb)
    for decoder in sorted(report.se_closed):
        for user, (closed, mc, gap) in enumerate(zip(
                report.se_closed[decoder], report.se_mc[decoder],
                report.rel_gap[decoder])):
            print("{0} user {1}: closed {2:.4f} - MC {3:.4f} - relative gap "
                  "{4:.2e}".format(decoder, user, closed, mc, gap))
    for name, value in sorted(report.z_max.items()):
        print("{0}: max z-score {1:.2f}".format(name, value))
    for decoder in sorted(report.se_kernel):
        for user, (kernel, gap) in enumerate(zip(
                report.se_kernel[decoder], report.kernel_gap[decoder])):
            print("{0} user {1}: kernel form {2:.4f} - gap to closed "
                  "{3:.2e}".format(decoder, user, kernel, gap))
    print("U kernel form: max z-score {0:.2f}".format(
        report.kernel_z_max["U"]))
    print("PASSED" if report.passed else "FAILED")
    return EXIT_OK if report.passed else EXIT_FAILED


def main(argv=None):
    """ Entry point of the 'starcell' command.
    """
    parser = get_parser()
    args = parser.parse_args(argv)
    setup_logging(level="debug" if args.verbose else "info",
                  logfile=args.logfile)
    if args.command is None:
        parser.print_help()
        return EXIT_ERROR
    try:
        if args.command == "emit-profiles":
            emit_profiles(args.outdir)
            return EXIT_OK
        if args.command == "validate":
            return _validate(args)
        return _run(args)
    except Exception as exc:
        logger.error("{0}: {1}".format(type(exc).__name__, exc))
        logger.debug(traceback.format_exc())
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
