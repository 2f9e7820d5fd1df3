# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

"""
Setup and trial orchestration: evaluation of one operating point, parameter
sweeps and the closed-form versus Monte Carlo validation.

Trials are split in chunks of `trial_block` trials, each drawn from its own
per-trial random streams. Chunk accumulators are merged pairwise in a fixed
tree order so that the results do not depend on the number of workers.
"""

# Imports
import time
from collections import namedtuple
import numpy as np
from joblib import Parallel, delayed
from starcell.config import SCHEMA, grid_shape
from starcell.scenario import generate_scenario, pilot_matrices
from starcell.correlation import build_correlation
from starcell.channel import sample_channels
from starcell.estimation import build_statistics, pilot_observation, estimate
from starcell.combining import (
    mr_combiner, local_mmse_combiner, global_mmse_combiner, lsfd_weights)
from starcell.spectral import (
    Level1Accumulator, Level2Accumulator, se_level1, se_level2,
    level2_trial_logdet, level2_optimal_logdet)
from starcell.closedform import closed_moments
from starcell.utils import get_logger, setup_generator, trial_generators
from starcell.utils.io import compute_and_store


# Global parameters
logger = get_logger()
Evaluation = namedtuple("Evaluation", ["level", "combiner", "decoder"])
Evaluation.__doc__ = """ One (level, combiner, decoder) triplet; the
decoder is None at Level 2 and the 'optimal' combiner stands for the
log-det form reached by global MMSE combining.
"""
DEFAULT_EVALUATIONS = (
    Evaluation(1, "mr", "lsfd"),
    Evaluation(1, "mr", "mf"),
    Evaluation(1, "local-mmse", "lsfd"),
    Evaluation(1, "local-mmse", "mf"),
    Evaluation(2, "mr", None),
    Evaluation(2, "global-mmse", None),
    Evaluation(2, "optimal", None))
LEVEL1_COMBINERS = ("mr", "local-mmse")
LEVEL2_COMBINERS = ("mr", "global-mmse", "optimal")
SWEEPABLE = ("N_u", "K", "M", "N_ap", "L", "kappa_ap", "kappa_u",
             "direct_blocked", "ris_mode", "d_ris")
SetupContext = namedtuple("SetupContext", [
    "setup", "scn", "corr", "stats", "phi"])
PointResult = namedtuple("PointResult", ["reports", "rows"])
PointResult.__doc__ = """ Result of one operating point.

reports: dict Evaluation -> list of SeReport (one per setup); rows: list of
ResultRow.
"""
ResultRow = namedtuple("ResultRow", [
    "sweep_param", "sweep_value", "level", "combiner", "decoder", "user",
    "se_mean", "se_stderr", "n_setups", "n_trials"])
ValidationReport = namedtuple("ValidationReport", [
    "passed", "se_closed", "se_mc", "abs_gap", "rel_gap", "z_max",
    "se_kernel", "kernel_gap", "kernel_z_max", "n_trials", "tolerances"])
ValidationReport.__doc__ = """ Closed-form versus Monte Carlo comparison.

se_closed, se_mc, abs_gap, rel_gap: dict decoder -> (K, ) arrays; z_max:
dict moment name -> largest |MC - closed| / stderr over the entries;
se_kernel, kernel_gap: dict decoder -> (K, ) SE of the kernel trace form
and its relative gap to the exact closed form; kernel_z_max: the z-scores
of the kernel form moments; tolerances: the (relative gap, z-score)
thresholds, which only apply to the exact closed form.
"""


def _normalize(evaluation):
    evaluation = Evaluation(*evaluation)
    level, combiner, decoder = evaluation
    if level == 1:
        if combiner not in LEVEL1_COMBINERS or decoder not in ("lsfd", "mf"):
            raise ValueError("Invalid Level 1 evaluation {0}.".format(
                evaluation))
    elif level == 2:
        if combiner not in LEVEL2_COMBINERS or decoder is not None:
            raise ValueError("Invalid Level 2 evaluation {0}.".format(
                evaluation))
    else:
        raise ValueError("Unknown processing level {0}.".format(level))
    return evaluation


class SweepSpec(object):
    """ One swept parameter and the evaluations run at every value.
    """
    def __init__(self, param, values, evaluations=DEFAULT_EVALUATIONS,
                 n_setups=None, n_trials=None, analytic=False):
        """ Init class.

        Parameters
        ----------
        param: str
            the swept parameter, one of SWEEPABLE.
        values: list
            the parameter values (strings are converted).
        evaluations: list of Evaluation, default DEFAULT_EVALUATIONS
            the (level, combiner, decoder) triplets.
        n_setups, n_trials: int, default None
            override the configuration Monte Carlo budget.
        analytic: bool, default False
            use the closed form for the Level 1 MR rows.
        """
        if param not in SWEEPABLE:
            raise ValueError("Parameter '{0}' cannot be swept, choose one "
                             "of {1}.".format(param, SWEEPABLE))
        if len(values) == 0:
            raise ValueError("A sweep needs at least one value.")
        self.param = param
        self.values = [convert_value(param, item) for item in values]
        self.evaluations = tuple(_normalize(item) for item in evaluations)
        self.n_setups = n_setups
        self.n_trials = n_trials
        self.analytic = analytic

    def configs(self, cfg):
        """ The validated configuration of every sweep point.
        """
        budget = {}
        if self.n_setups is not None:
            budget["n_setups"] = self.n_setups
        if self.n_trials is not None:
            budget["n_trials"] = self.n_trials
        return [apply_sweep_value(cfg.replace(**budget), self.param, value)
                for value in self.values]


def convert_value(param, value):
    """ Type a sweep value given as a string.
    """
    if not isinstance(value, str):
        return value
    if param == "L":
        return int(value)
    if param == "d_ris":
        return float(value)
    return SCHEMA[param][2](value)


def apply_sweep_value(cfg, param, value):
    """ Configuration of one sweep point.

    'L' is mapped on the most square element grid and 'd_ris' sets both
    element spacings.
    """
    if param not in SWEEPABLE:
        raise ValueError("Parameter '{0}' cannot be swept.".format(param))
    value = convert_value(param, value)
    if param == "L":
        L_h, L_v = grid_shape(value)
        return cfg.replace(L_h=L_h, L_v=L_v)
    if param == "d_ris":
        return cfg.replace(d_h=value, d_v=value)
    return cfg.replace(**{param: value})


def prepare_setup(cfg, setup):
    """ Draw one setup and its realization-free statistics.

    Returns
    -------
    ctx: SetupContext
        the setup, correlation set, estimation statistics and pilots.
    """
    rng = setup_generator(cfg.seed, setup)
    scn = generate_scenario(cfg, rng)
    corr = build_correlation(cfg, scn, rng)
    stats = build_statistics(scn, corr, cfg)
    return SetupContext(setup=setup, scn=scn, corr=corr, stats=stats,
                        phi=pilot_matrices(scn, cfg))


def simulate_trials(ctx, cfg, stream, start, stop):
    """ True channels and estimates of the trials in [start, stop).
    """
    rngs = trial_generators(cfg.seed, ctx.setup, stream, start, stop)
    kappa_ap = cfg.kappa_ap_vec
    realization = sample_channels(ctx.scn, ctx.corr, rngs, kappa_ap)
    Y = pilot_observation(realization, ctx.scn, cfg, rngs, ctx.phi)
    return realization, estimate(ctx.stats, Y, ctx.phi, kappa_ap)


def process_chunk(ctx, cfg, level1, level2, stream, start, stop):
    """ Accumulate the statistics of one chunk of trials.

    Parameters
    ----------
    ctx: SetupContext
        the setup.
    cfg: SystemConfig
        the system configuration.
    level1: list of str
        the Level 1 combiners whose moments are accumulated.
    level2: list of str
        the Level 2 combiners whose log-dets are accumulated.
    stream: str
        the random stream name.
    start, stop: int
        the trial range.

    Returns
    -------
    accs: dict
        (level, combiner) -> accumulator.
    """
    realization, est = simulate_trials(ctx, cfg, stream, start, stop)
    index = np.arange(start, stop)
    n_aps, n_users = ctx.scn.beta_mk.shape
    accs = {}
    for combiner in level1:
        if combiner == "mr":
            V = mr_combiner(est, level=1)
        else:
            V = local_mmse_combiner(est, ctx.stats, ctx.scn, cfg)
        accs[(1, combiner)] = Level1Accumulator(n_aps, n_users, cfg.N_u)
        accs[(1, combiner)].update(V, realization.G, ctx.scn, cfg,
                                   ctx.stats.C_bar_data, index)
    for combiner in level2:
        if combiner == "optimal":
            logdet = level2_optimal_logdet(est, ctx.scn, cfg)
        else:
            if combiner == "mr":
                V = mr_combiner(est, level=2)
            else:
                V = global_mmse_combiner(est, ctx.scn, cfg)
            logdet = level2_trial_logdet(est, V, ctx.scn, cfg)
        accs[(2, combiner)] = Level2Accumulator(n_users).update(logdet, index)
    logger.debug("chunk [{0}, {1}) of setup {2} done".format(
        start, stop, ctx.setup))
    return accs


def tree_merge(items):
    """ Merge accumulator dictionaries pairwise in a fixed tree order.
    """
    items = list(items)
    if len(items) == 0:
        raise ValueError("Nothing to merge.")
    while len(items) > 1:
        merged = []
        for idx in range(0, len(items) - 1, 2):
            left, right = items[idx], items[idx + 1]
            for key, acc in left.items():
                acc.merge(right[key])
            merged.append(left)
        if len(items) % 2 == 1:
            merged.append(items[-1])
        items = merged
    return items[0]


def run_trials(ctx, cfg, level1, level2, stream, n_trials):
    """ Accumulate n_trials trials of one stream, chunk by chunk.
    """
    chunks = [(start, min(start + cfg.trial_block, n_trials))
              for start in range(0, n_trials, cfg.trial_block)]
    results = Parallel(n_jobs=cfg.workers)(
        delayed(process_chunk)(ctx, cfg, level1, level2, stream, start, stop)
        for start, stop in chunks)
    return tree_merge(results)


def setup_closed_moments(cfg, setup):
    """ Closed-form moments of one setup, in a cache-able form.
    """
    ctx = prepare_setup(cfg, setup)
    return {"moments": closed_moments(ctx.stats, ctx.corr, ctx.scn, cfg,
                                      n_jobs=cfg.workers)}


def _closed_moments(cfg, setup, moments=None):
    return moments


def cached_closed_moments(cfg, setup):
    """ Closed-form moments of one setup, cached in cfg.cachedir.
    """
    loader = compute_and_store(setup_closed_moments, cfg.cachedir)(
        _closed_moments)
    return loader(cfg=cfg, setup=setup)


def evaluate_setup(cfg, setup, evaluations=DEFAULT_EVALUATIONS,
                   analytic=False):
    """ SE reports of every evaluation on one setup.

    MR with LSFD uses the weights built from the closed-form moments; local
    MMSE with LSFD uses weights estimated on n_warmup trials of the warm-up
    stream (or on the evaluation trials when n_warmup is 0).

    Returns
    -------
    reports: dict
        Evaluation -> SeReport.
    """
    evaluations = [_normalize(item) for item in evaluations]
    ctx = prepare_setup(cfg, setup)
    scn = ctx.scn
    closed = None
    needs_closed = any(
        item.level == 1 and item.combiner == "mr" and
        (analytic or item.decoder == "lsfd") for item in evaluations)
    if needs_closed:
        closed = cached_closed_moments(cfg, setup)
    level1 = sorted(set(
        item.combiner for item in evaluations if item.level == 1 and
        not (analytic and item.combiner == "mr")))
    level2 = sorted(set(
        item.combiner for item in evaluations if item.level == 2))
    weights = {"mr": lsfd_weights(closed, scn, cfg)
               if closed is not None else "lsfd"}
    if (Evaluation(1, "local-mmse", "lsfd") in evaluations and
            cfg.n_warmup > 0):
        warm = run_trials(ctx, cfg, ["local-mmse"], [], "warmup",
                          cfg.n_warmup)
        weights["local-mmse"] = lsfd_weights(
            warm[(1, "local-mmse")].moments(), scn, cfg)
    else:
        weights["local-mmse"] = "lsfd"
    accs = {}
    if level1 or level2:
        accs = run_trials(ctx, cfg, level1, level2, "trial", cfg.n_trials)

    reports = {}
    for item in evaluations:
        info = {"setup": setup, "combiner": item.combiner,
                "decoder": item.decoder, "seed": cfg.seed,
                "digest": cfg.digest()}
        if item.level == 1 and item.combiner == "mr" and analytic:
            info["analytic"] = True
            reports[item] = se_level1(closed, item.decoder, scn, cfg,
                                      metadata=info)
        elif item.level == 1:
            acc = accs[(1, item.combiner)]
            decoder = (weights[item.combiner] if item.decoder == "lsfd"
                       else "mf")
            reports[item] = se_level1(
                acc.moments(), decoder, scn, cfg,
                replicates=acc.jackknife(), metadata=info)
        else:
            reports[item] = se_level2(accs[(2, item.combiner)], cfg,
                                      metadata=info)
    logger.info("setup {0}: {1}".format(setup, ", ".join(
        "L{0}/{1}/{2}={3:.3f}".format(item.level, item.combiner,
                                      item.decoder, report.sum_se)
        for item, report in reports.items())))
    return reports


def aggregate_rows(reports, cfg, sweep_param=None, sweep_value=None,
                   analytic=False):
    """ Average the per-setup reports into result rows.

    The standard error is the spread across setups when there is more than
    one setup, the within-setup Monte Carlo error otherwise. Each
    evaluation yields one row per user, a 'sum' row and an 'avg' row.
    """
    rows = []
    for item, items in reports.items():
        se = np.stack([report.se for report in items])
        sums = np.array([report.sum_se for report in items])
        n_setups, n_users = se.shape
        if n_setups > 1:
            stderr = se.std(axis=0, ddof=1) / np.sqrt(n_setups)
            sum_stderr = sums.std(ddof=1) / np.sqrt(n_setups)
        else:
            stderr = items[0].stderr
            sum_stderr = items[0].sum_stderr
        exact = analytic and item.level == 1 and item.combiner == "mr"
        n_trials = 0 if exact else cfg.n_trials
        values = [(str(user), se[:, user].mean(), stderr[user])
                  for user in range(n_users)]
        values.append(("sum", sums.mean(), sum_stderr))
        values.append(("avg", sums.mean() / n_users, sum_stderr / n_users))
        for user, mean, err in values:
            rows.append(ResultRow(
                sweep_param=sweep_param, sweep_value=sweep_value,
                level=item.level, combiner=item.combiner,
                decoder=item.decoder or "none", user=user,
                se_mean=float(mean), se_stderr=float(err),
                n_setups=n_setups, n_trials=n_trials))
    return rows


def run_point(cfg, evaluations=DEFAULT_EVALUATIONS, analytic=False,
              overrides=None, sweep_param=None, sweep_value=None):
    """ Evaluate one operating point over cfg.n_setups setups.

    Parameters
    ----------
    cfg: SystemConfig
        the system configuration (seed included).
    evaluations: list of Evaluation, default DEFAULT_EVALUATIONS
        the (level, combiner, decoder) triplets.
    analytic: bool, default False
        Level 1 MR rows from the closed form (zero stderr on one setup).
    overrides: dict, default None
        configuration fields replaced before the run.
    sweep_param, sweep_value: default None
        the sweep coordinates written in the rows and error messages.

    Returns
    -------
    result: PointResult
        the per-setup reports and the aggregated rows.
    """
    if overrides:
        cfg = cfg.replace(**overrides)
    evaluations = [_normalize(item) for item in evaluations]
    reports = dict((item, []) for item in evaluations)
    for setup in range(cfg.n_setups):
        try:
            per_setup = evaluate_setup(cfg, setup, evaluations, analytic)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("Point {0}={1}, setup {2}: {3}".format(
                sweep_param, sweep_value, setup, exc))
        except ValueError as exc:
            raise ValueError("Point {0}={1}, setup {2}: {3}".format(
                sweep_param, sweep_value, setup, exc))
        for item, report in per_setup.items():
            reports[item].append(report)
    rows = aggregate_rows(reports, cfg, sweep_param, sweep_value, analytic)
    return PointResult(reports=reports, rows=rows)


def run_sweep(cfg, spec):
    """ Run every point of a sweep.

    Parameters
    ----------
    cfg: SystemConfig
        the base configuration.
    spec: SweepSpec
        the sweep description.

    Returns
    -------
    rows: list of ResultRow
        the rows of all the points, in sweep order.
    wall_time: float
        the elapsed time in seconds.
    """
    start = time.time()
    rows = []
    for value, point_cfg in zip(spec.values, spec.configs(cfg)):
        logger.info("sweep point {0}={1}".format(spec.param, value))
        result = run_point(point_cfg, spec.evaluations, spec.analytic,
                           sweep_param=spec.param, sweep_value=value)
        rows.extend(result.rows)
    return rows, time.time() - start


def perturb_statistics(stats, factor):
    """ Scale the estimate covariances and the estimation matrices.
    """
    return stats._replace(Delta_hat=factor * stats.Delta_hat,
                          Z=factor * stats.Z)


def _relative_gap(value, reference):
    gap = np.abs(value - reference)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(reference > 0, gap / reference, gap)


def moment_z_scores(mc, closed, rtol=1e-12):
    """ Largest |MC - closed| / stderr of every moment.

    Entries with a null standard error must agree to rtol of the moment
    scale, else their score is infinite.
    """
    scores = {}
    for name in ("H_bar", "U", "Gamma", "Lambda"):
        diff = np.abs(getattr(mc, name) - getattr(closed, name))
        stderr = mc.stderr[name]
        scale = max(np.abs(getattr(closed, name)).max(), 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(stderr > 0, diff / stderr,
                         np.where(diff <= rtol * scale, 0., np.inf))
        scores[name] = float(z.max())
    return scores


def validate(cfg, n_trials=None, perturb=None, rel_tol=0.02, z_tol=4.):
    """ Compare the closed-form Level 1 MR SE and moments with their Monte
    Carlo estimates on the first setup.

    The kernel trace form is evaluated on the same statistics and its gap
    to the exact closed form is reported without entering the verdict.

    Parameters
    ----------
    cfg: SystemConfig
        the system configuration.
    n_trials: int, default None
        the number of trials, cfg.n_trials by default.
    perturb: float, default None
        scale the closed-form estimation statistics by this factor.
    rel_tol: float, default 0.02
        the largest accepted relative SE gap.
    z_tol: float, default 4
        the largest accepted moment z-score.

    Returns
    -------
    report: ValidationReport
        the comparison and its verdict.
    """
    if n_trials is not None:
        cfg = cfg.replace(n_trials=n_trials)
    ctx = prepare_setup(cfg, 0)
    stats = ctx.stats
    if perturb is not None:
        stats = perturb_statistics(stats, perturb)
    closed = closed_moments(stats, ctx.corr, ctx.scn, cfg,
                            n_jobs=cfg.workers)
    kernel = closed_moments(stats, ctx.corr, ctx.scn, cfg,
                            n_jobs=cfg.workers, variant="kernel")
    acc = run_trials(ctx, cfg, ["mr"], [], "trial", cfg.n_trials)[(1, "mr")]
    mc = acc.moments()
    replicates = acc.jackknife()
    se_closed, se_mc, abs_gap, rel_gap = {}, {}, {}, {}
    se_kernel, kernel_gap = {}, {}
    for decoder in ("lsfd", "mf"):
        se_closed[decoder] = se_level1(closed, decoder, ctx.scn, cfg).se
        se_mc[decoder] = se_level1(mc, decoder, ctx.scn, cfg,
                                   replicates=replicates).se
        abs_gap[decoder] = np.abs(se_mc[decoder] - se_closed[decoder])
        rel_gap[decoder] = _relative_gap(se_mc[decoder], se_closed[decoder])
        se_kernel[decoder] = se_level1(kernel, decoder, ctx.scn, cfg).se
        kernel_gap[decoder] = _relative_gap(se_kernel[decoder],
                                            se_closed[decoder])
    z_max = moment_z_scores(mc, closed)
    passed = bool(
        all(np.all(gap <= rel_tol) for gap in rel_gap.values()) and
        all(value <= z_tol for value in z_max.values()))
    logger.info("validation {0}: max relative gap {1:.3e}, max z {2:.2f}"
                .format("passed" if passed else "failed",
                        max(float(gap.max()) for gap in rel_gap.values()),
                        max(z_max.values())))
    logger.info("kernel form: max relative gap to the exact form {0:.3e}"
                .format(max(float(gap.max()) for gap in kernel_gap.values())))
    return ValidationReport(
        passed=passed, se_closed=se_closed, se_mc=se_mc, abs_gap=abs_gap,
        rel_gap=rel_gap, z_max=z_max, se_kernel=se_kernel,
        kernel_gap=kernel_gap, kernel_z_max=moment_z_scores(mc, kernel),
        n_trials=cfg.n_trials,
        tolerances=(rel_tol, z_tol))
