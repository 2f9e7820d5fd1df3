# -*- coding: utf-8 -*-
##########################################################################
# NSAp - Copyright (C) CEA, 2021
# Distributed under the terms of the CeCILL-B license, as published by
# the CEA-CNRS-INRIA. Refer to the LICENSE file or to
# http://www.cecill.info/licences/Licence_CeCILL-B_V1-en.html
# for details.
##########################################################################

# Imports
import os
import json
import unittest
import tempfile
import numpy as np
from starcell.config import load_config
from starcell.experiment import (
    Evaluation, DEFAULT_EVALUATIONS, SweepSpec, run_point, run_sweep,
    validate, emit, read_rows, PROFILES, load_profile, emit_profiles)
from starcell.experiment.runner import (
    apply_sweep_value, cached_closed_moments, setup_closed_moments)
from starcell.experiment.results import COLUMNS
from starcell.experiment.cli import (
    EXIT_OK, EXIT_ERROR, EXIT_FAILED, main, parse_evaluation)


def se_values(rows):
    return np.array([row.se_mean for row in rows])


class TestSweep(unittest.TestCase):
    """ Test the sweep description.
    """
    def setUp(self):
        """ Setup test.
        """
        self.cfg = load_profile("desk")

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_sweep_values(self):
        """ Test the swept parameter conversions.
        """
        spec = SweepSpec("L", ["8", "100"])
        cfgs = spec.configs(self.cfg)
        self.assertEqual((cfgs[1].L_h, cfgs[1].L_v), (10, 10))
        self.assertEqual(cfgs[0].L, 8)
        cfg = apply_sweep_value(self.cfg, "d_ris", "0.5")
        self.assertEqual((cfg.d_h, cfg.d_v), (0.5, 0.5))
        cfg = apply_sweep_value(self.cfg, "direct_blocked", "true")
        self.assertTrue(cfg.direct_blocked)
        cfg = apply_sweep_value(self.cfg, "kappa_u", "0.8")
        self.assertEqual(cfg.kappa_u, 0.8)
        spec = SweepSpec("N_u", [1, 2], n_trials=10)
        self.assertEqual(spec.configs(self.cfg)[0].n_trials, 10)
        self.assertRaises(ValueError, SweepSpec, "seed", [1])
        self.assertRaises(ValueError, SweepSpec, "M", [])
        self.assertRaises(ValueError, SweepSpec, "M", [2],
                          [Evaluation(1, "global-mmse", "lsfd")])
        self.assertRaises(ValueError, SweepSpec, "M", [2],
                          [Evaluation(2, "mr", "mf")])
        spec = SweepSpec("L", [9])
        cfg = self.cfg.replace(ris_mode="cris-split")
        self.assertRaises(ValueError, spec.configs, cfg)

    def test_profiles(self):
        """ Test the named profiles.
        """
        self.assertEqual(sorted(PROFILES), ["desk", "figures", "full",
                                            "full-ris"])
        cfg = load_profile("full-ris", ["n_setups=2"])
        self.assertEqual(cfg.L, 100)
        self.assertEqual(cfg.n_setups, 2)
        self.assertTrue(cfg.direct_blocked)
        self.assertRaises(ValueError, load_profile, "unknown")
        self.assertRaises(ValueError, load_profile, "desk", ["M"])
        with tempfile.TemporaryDirectory() as tmpdir:
            paths = emit_profiles(tmpdir)
            self.assertEqual(len(paths), 4)
            cfg = load_config(os.path.join(tmpdir, "full.ini"))
            self.assertEqual((cfg.M, cfg.K, cfg.L, cfg.n_trials),
                             (20, 10, 16, 1000))
        self.assertRaises(ValueError, emit_profiles, "/nonexistent/dir")


class TestRunner(unittest.TestCase):
    """ Test the operating point evaluation.
    """
    def setUp(self):
        """ Setup test.
        """
        self.cfg = load_profile("desk", {
            "n_trials": "200", "n_warmup": "100", "trial_block": "64"})

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_rows(self):
        """ Test the aggregated rows of one point.
        """
        result = run_point(self.cfg)
        self.assertEqual(len(result.rows), len(DEFAULT_EVALUATIONS) * 4)
        users = [row.user for row in result.rows[:4]]
        self.assertEqual(users, ["0", "1", "sum", "avg"])
        for item in DEFAULT_EVALUATIONS:
            rows = [row for row in result.rows
                    if (row.level, row.combiner) == item[:2] and
                    row.decoder == (item.decoder or "none")]
            self.assertAlmostEqual(rows[2].se_mean,
                                   rows[0].se_mean + rows[1].se_mean)
            self.assertAlmostEqual(rows[3].se_mean, rows[2].se_mean / 2)
            self.assertTrue(all(row.se_mean >= 0 for row in rows))
            self.assertTrue(all(row.n_trials == 200 for row in rows))
        by_key = dict(((row.level, row.combiner, row.decoder, row.user),
                       row.se_mean) for row in result.rows)
        self.assertTrue(by_key[(2, "optimal", "none", "sum")] >=
                        by_key[(2, "mr", "none", "sum")])
        self.assertAlmostEqual(by_key[(2, "optimal", "none", "sum")],
                               by_key[(2, "global-mmse", "none", "sum")],
                               places=6)
        self.assertRaises(ValueError, run_point, self.cfg,
                          [Evaluation(3, "mr", None)])

    def test_determinism(self):
        """ Test that a seed fixes the results whatever the execution
        settings.
        """
        evaluations = [Evaluation(1, "local-mmse", "lsfd"),
                       Evaluation(2, "global-mmse", None)]
        reference = se_values(run_point(self.cfg, evaluations).rows)
        again = se_values(run_point(self.cfg, evaluations).rows)
        self.assertTrue(np.array_equal(reference, again))
        values = se_values(run_point(self.cfg, evaluations,
                                     overrides={"n_jobs": 2}).rows)
        self.assertTrue(np.array_equal(values, reference))
        values = se_values(run_point(self.cfg, evaluations,
                                     overrides={"trial_block": 50}).rows)
        self.assertTrue(np.allclose(values, reference, rtol=1e-9, atol=0))
        other = se_values(run_point(self.cfg.replace(seed=1),
                                    evaluations).rows)
        self.assertFalse(np.allclose(other, reference))

    def test_csv_workers(self):
        """ Test that the result files do not depend on the worker count.
        """
        evaluations = [Evaluation(1, "mr", "lsfd"),
                       Evaluation(1, "local-mmse", "mf"),
                       Evaluation(2, "optimal", None)]
        contents = []
        with tempfile.TemporaryDirectory() as tmpdir:
            for n_jobs in (1, 2, 3):
                path = os.path.join(tmpdir, "jobs{0}.csv".format(n_jobs))
                emit(run_point(self.cfg, evaluations,
                               overrides={"n_jobs": n_jobs}).rows, path)
                with open(path, "rb") as of:
                    contents.append(of.read())
        self.assertTrue(len(contents[0]) > 0)
        self.assertEqual(contents[0], contents[1])
        self.assertEqual(contents[0], contents[2])

    def test_analytic(self):
        """ Test the closed-form rows.
        """
        evaluations = [Evaluation(1, "mr", "lsfd"), Evaluation(1, "mr", "mf")]
        result = run_point(self.cfg, evaluations, analytic=True)
        for row in result.rows:
            self.assertEqual(row.n_trials, 0)
            self.assertEqual(row.se_stderr, 0.)
        lsfd, mf = [[row.se_mean for row in result.rows
                     if row.decoder == name and row.user == "sum"][0]
                    for name in ("lsfd", "mf")]
        self.assertTrue(lsfd >= mf - 1e-9)
        monte_carlo = run_point(self.cfg.replace(n_trials=2000), evaluations)
        for row, mc_row in zip(result.rows, monte_carlo.rows):
            self.assertTrue(abs(row.se_mean - mc_row.se_mean) <=
                            0.1 * row.se_mean + 5 * mc_row.se_stderr)

    def test_cache(self):
        """ Test the cached closed-form moments.
        """
        reference = setup_closed_moments(self.cfg, 0)["moments"]
        with tempfile.TemporaryDirectory() as tmpdir:
            cfg = self.cfg.replace(cachedir=tmpdir)
            first = cached_closed_moments(cfg, 0)
            second = cached_closed_moments(cfg, 0)
            self.assertTrue(len(os.listdir(tmpdir)) > 0)
        self.assertTrue(np.array_equal(first.U, second.U))
        self.assertTrue(np.allclose(first.U, reference.U, rtol=0,
                                    atol=1e-12 * np.abs(reference.U).max()))

    def test_sweep(self):
        """ Test a sweep and its result files.
        """
        spec = SweepSpec("N_u", ["1", "2"], [Evaluation(1, "mr", "mf"),
                                             Evaluation(2, "optimal", None)])
        rows, wall_time = run_sweep(self.cfg, spec)
        self.assertEqual(len(rows), 2 * 2 * 4)
        self.assertTrue(wall_time > 0)
        self.assertEqual(rows[0].sweep_param, "N_u")
        self.assertEqual({row.sweep_value for row in rows}, {1, 2})
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "sweep.csv")
            outputs = emit(rows, path, cfg=self.cfg, wall_time=wall_time,
                           curves=True)
            frame = read_rows(path)
            self.assertEqual(list(frame.columns), COLUMNS)
            self.assertEqual(len(frame), len(rows))
            self.assertTrue(np.allclose(frame["se_mean"], se_values(rows)))
            with open(os.path.join(tmpdir, "sweep.json"), "rt") as of:
                manifest = json.load(of)
            self.assertEqual(manifest["digest"], self.cfg.digest())
            self.assertEqual(manifest["n_rows"], len(rows))
            curves = os.listdir(os.path.join(tmpdir, "sweep_curves"))
            self.assertEqual(len(curves), 2 * 4)
            self.assertEqual(len(outputs), 2 + 2 * 4)
            self.assertIn("L2_optimal_none_sum.dat", curves)
            with open(os.path.join(tmpdir, "sweep_curves",
                                   "L1_mr_mf_0.dat"), "rt") as of:
                lines = of.read().splitlines()
            self.assertEqual(lines[0], "# N_u se_mean")
            self.assertEqual(len(lines), 3)
        self.assertRaises(ValueError, emit, [], "out.csv")
        self.assertRaises(ValueError, emit, rows, "/nonexistent/dir/out.csv")

    def test_point_rows(self):
        """ Test the rows of a point outside a sweep.
        """
        result = run_point(self.cfg, [Evaluation(2, "mr", None)])
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "point.csv")
            emit(result.rows, path)
            frame = read_rows(path)
        self.assertTrue(all(frame["sweep_param"] == "none"))
        self.assertTrue(all(frame["sweep_value"] == "none"))
        self.assertEqual(list(frame["user"]), ["0", "1", "sum", "avg"])


class TestTrends(unittest.TestCase):
    """ Test the orderings between schemes, surfaces and system sizes.
    """
    def setUp(self):
        """ Setup test.
        """
        self.cfg = load_profile("desk", {"phases": "zero"})
        self.blocked = self.cfg.replace(direct_blocked=True)

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def analytic_sum(self, cfg, **overrides):
        result = run_point(cfg, [Evaluation(1, "mr", "lsfd")], analytic=True,
                           overrides=overrides)
        return [row.se_mean for row in result.rows if row.user == "sum"][0]

    def test_surface_size(self):
        """ Test that the SE grows with the number of surface elements when
        the direct links are blocked.
        """
        values = [self.analytic_sum(apply_sweep_value(self.blocked, "L", L))
                  for L in (4, 16, 64)]
        self.assertTrue(values[0] > 0)
        self.assertTrue(values[0] < values[1] < values[2], str(values))

    def test_surface_kind(self):
        """ Test the simultaneously transmitting and reflecting surface
        against the split surface and against no surface.
        """
        blocked = apply_sweep_value(self.blocked, "L", 16)
        star = self.analytic_sum(blocked)
        split = self.analytic_sum(blocked, ris_mode="cris-split")
        self.assertTrue(star > split > 0, "{0} {1}".format(star, split))
        direct = apply_sweep_value(self.cfg.replace(tau_p=4), "L", 100)
        with_surface = self.analytic_sum(direct)
        without = self.analytic_sum(direct, ris_mode="none")
        gain = with_surface / without - 1
        self.assertTrue(0 < gain < 1, str(gain))

    def test_hardware(self):
        """ Test the ordering of the hardware quality pairs.
        """
        cfg = self.cfg.replace(sigma2=self.cfg.sigma2 * 1e-3)
        values = [self.analytic_sum(cfg, kappa_ap=kappa_ap, kappa_u=kappa_u)
                  for kappa_ap, kappa_u in ((1., 1.), (0.95, 1.), (1., 0.95),
                                            (0.9, 0.95))]
        self.assertTrue(values[0] > values[1] > values[2] > values[3],
                        str(values))

    def test_user_antennas(self):
        """ Test that the SE does not decrease with the user antennas.
        """
        cfg = self.cfg.replace(sigma2=self.cfg.sigma2 * 1e-3)
        values = [self.analytic_sum(cfg, N_u=N_u) for N_u in (1, 2, 4)]
        self.assertTrue(values[0] <= values[1] <= values[2], str(values))

    def test_combiners(self):
        """ Test the combiner orderings on the same trials.
        """
        cfg = self.cfg.replace(sigma2=self.cfg.sigma2 * 1e-3, n_trials=500,
                               n_warmup=200)
        evaluations = [Evaluation(1, "mr", "lsfd"),
                       Evaluation(1, "local-mmse", "lsfd"),
                       Evaluation(2, "mr", None),
                       Evaluation(2, "global-mmse", None)]
        rows = run_point(cfg, evaluations).rows
        by_key = dict(((row.level, row.combiner, row.user), row)
                      for row in rows)
        mr, mmse = by_key[(1, "mr", "sum")], by_key[(1, "local-mmse", "sum")]
        margin = 2 * np.hypot(mr.se_stderr, mmse.se_stderr)
        self.assertTrue(mmse.se_mean >= mr.se_mean - margin)
        for user in ("0", "1", "sum"):
            self.assertTrue(by_key[(2, "global-mmse", user)].se_mean >=
                            by_key[(2, "mr", user)].se_mean - 1e-9)

    def test_levels_blocked(self):
        """ Test that centralized processing outperforms local processing
        when the direct links are blocked.
        """
        cfg = self.blocked.replace(n_trials=300, n_warmup=100)
        evaluations = [Evaluation(1, "mr", "lsfd"),
                       Evaluation(1, "local-mmse", "lsfd"),
                       Evaluation(2, "optimal", None)]
        rows = run_point(cfg, evaluations).rows
        sums = dict(((row.level, row.combiner), row.se_mean) for row in rows
                    if row.user == "sum")
        self.assertTrue(sums[(2, "optimal")] > sums[(1, "mr")])
        self.assertTrue(sums[(2, "optimal")] > sums[(1, "local-mmse")])


class TestValidation(unittest.TestCase):
    """ Test the closed-form versus Monte Carlo gate.
    """
    def setUp(self):
        """ Setup test.
        """
        self.cfg = load_profile("desk", {"sigma2_dbm": "-120"})

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_validate(self):
        """ Test that the closed form matches the trials.
        """
        report = validate(self.cfg, n_trials=100000)
        self.assertTrue(report.passed, str(report))
        self.assertEqual(report.n_trials, 100000)
        self.assertEqual(report.tolerances, (0.02, 4.))
        self.assertTrue(all(value <= 4 for value in report.z_max.values()))
        self.assertEqual(sorted(report.se_kernel), ["lsfd", "mf"])
        for decoder, gap in report.kernel_gap.items():
            self.assertTrue(np.all(np.isfinite(gap)), decoder)
            self.assertTrue(np.all(gap >= 0), decoder)
            self.assertTrue(np.allclose(
                gap, np.abs(report.se_kernel[decoder] -
                            report.se_closed[decoder]) /
                report.se_closed[decoder]))
        self.assertEqual(sorted(report.kernel_z_max), sorted(report.z_max))
        self.assertEqual(sorted(report.se_closed), ["lsfd", "mf"])
        self.assertTrue(all(np.all(gap <= 0.02)
                            for gap in report.rel_gap.values()))

    def test_negative_control(self):
        """ Test that perturbed statistics are detected.
        """
        report = validate(self.cfg, n_trials=100000, perturb=1.05)
        self.assertFalse(report.passed)
        self.assertTrue(report.z_max["H_bar"] > 4)


class TestCli(unittest.TestCase):
    """ Test the command line interface.
    """
    def setUp(self):
        """ Setup test.
        """
        self.small = ["--profile", "desk", "--set", "n_trials=100",
                      "--set", "n_warmup=50"]

    def tearDown(self):
        """ Run after each test.
        """
        pass

    def test_parse_evaluation(self):
        """ Test the evaluation option parsing.
        """
        self.assertEqual(parse_evaluation("1:mr:lsfd"),
                         Evaluation(1, "mr", "lsfd"))
        self.assertEqual(parse_evaluation("2:optimal"),
                         Evaluation(2, "optimal", None))
        with self.assertRaises(SystemExit):
            main(["run", "--eval", "mr"])

    def test_commands(self):
        """ Test the exit codes.
        """
        self.assertEqual(main([]), EXIT_ERROR)
        with tempfile.TemporaryDirectory() as tmpdir:
            self.assertEqual(main(["emit-profiles", "--outdir", tmpdir]),
                             EXIT_OK)
            self.assertTrue(os.path.isfile(os.path.join(tmpdir, "desk.ini")))
            output = os.path.join(tmpdir, "run.csv")
            code = main(["run", "--config", os.path.join(tmpdir, "desk.ini"),
                         "--set", "n_trials=100", "--eval", "2:optimal",
                         "--eval", "1:mr:mf", "--output", output])
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(len(read_rows(output)), 8)
            output = os.path.join(tmpdir, "sweep.csv")
            code = main(["sweep"] + self.small + [
                "--param", "K", "--values", "1,2", "--eval", "2:mr",
                "--output", output, "--curves"])
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(len(read_rows(output)), 3 + 4)
            self.assertTrue(os.path.isdir(os.path.join(tmpdir,
                                                       "sweep_curves")))
        self.assertEqual(main(["run", "--config", "/nonexistent.ini"]),
                         EXIT_ERROR)
        self.assertEqual(main(["run"] + self.small + ["--set", "M=0"]),
                         EXIT_ERROR)
        code = main(["validate", "--profile", "desk", "--trials", "500",
                     "--perturb", "1.5"])
        self.assertEqual(code, EXIT_FAILED)


if __name__ == "__main__":
    from starcell.utils import setup_logging

    setup_logging(level="debug")
    unittest.main()
