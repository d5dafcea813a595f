import math
import unittest
from unittest.mock import patch

import numpy as np
import pandas as pd

from app.config.experiment import ExperimentConfig, ExperimentMode, SweepAxis
from app.errors import BaseAppException, DualStateError, ValidationError
from app.services.experiment_service import (
    ORACLE_COLUMNS,
    RECORD_COLUMNS,
    TRACE_COLUMNS,
    aggregate_records,
    emit_convergence_trace,
    generate_instance,
    run_solve,
    run_sweep,
)
from app.tests.helpers import small_params


def _config(**overrides):
    values = dict(params=small_params(), n_channel_samples=2, master_seed=3)
    values.update(overrides)
    return ExperimentConfig(**values)


class TestGenerateInstance(unittest.TestCase):
    def test_deterministic(self):
        params = small_params()
        _, first = generate_instance(params, 99)
        _, second = generate_instance(params, 99)
        np.testing.assert_array_equal(first.g_bs_ue, second.g_bs_ue)
        _, other = generate_instance(params, 100)
        self.assertFalse(np.array_equal(first.g_bs_ue, other.g_bs_ue))

    def test_same_draws_across_budget_sweep(self):
        _, low = generate_instance(small_params(p_max_dbm=-10.0), 5)
        _, high = generate_instance(small_params(p_max_dbm=10.0), 5)
        np.testing.assert_array_equal(low.g_bs_ue, high.g_bs_ue)
        np.testing.assert_array_equal(low.g_rn_ue, high.g_rn_ue)


class TestRunSolve(unittest.TestCase):
    def test_both_modes(self):
        frame = run_solve(_config(mode=ExperimentMode.BOTH))
        self.assertEqual(list(frame.columns), RECORD_COLUMNS)
        self.assertEqual(len(frame), 4)
        self.assertEqual(list(frame["mode"]), ["EEM", "SEM", "EEM", "SEM"])
        self.assertEqual(list(frame["sample"]), [0, 0, 1, 1])
        self.assertTrue((frame["error"] == "").all())
        self.assertTrue(frame["converged"].all())
        params = small_params()
        np.testing.assert_allclose(
            frame["sum_rate_bps"],
            frame["se"] * params.n_subcarriers * params.subcarrier_bandwidth_hz,
        )
        eem, sem = frame[frame["mode"] == "EEM"], frame[frame["mode"] == "SEM"]
        self.assertTrue(
            np.all(eem["ee"].to_numpy() >= sem["ee"].to_numpy() * (1 - 1e-12))
        )

    def test_reproducible(self):
        config = _config(mode=ExperimentMode.EEM)
        pd.testing.assert_frame_equal(run_solve(config), run_solve(config))

    def test_seed_changes_results(self):
        first = run_solve(_config(master_seed=1))
        second = run_solve(_config(master_seed=2))
        self.assertFalse(np.array_equal(first["ee"], second["ee"]))

    def test_worker_count_does_not_change_results(self):
        serial = run_solve(_config(n_channel_samples=3, workers=1))
        parallel = run_solve(_config(n_channel_samples=3, workers=2))
        pd.testing.assert_frame_equal(serial, parallel)

    def test_solver_failure_is_recorded(self):
        with patch(
            "app.services.experiment_service.DinkelbachSolver",
            side_effect=DualStateError("boom"),
        ):
            frame = run_solve(_config(n_channel_samples=1))
        self.assertEqual(len(frame), 1)
        self.assertEqual(frame.loc[0, "error"], "DualStateError: boom")
        self.assertTrue(math.isnan(frame.loc[0, "ee"]))
        self.assertFalse(frame.loc[0, "converged"])

    def test_oracle_check(self):
        config = _config(
            mode=ExperimentMode.ORACLE_CHECK,
            n_channel_samples=1,
            oracle_levels_per_power=8,
            oracle_beta_levels=4,
        )
        frame = run_solve(config)
        self.assertEqual(list(frame.columns), ORACLE_COLUMNS)
        row = frame.iloc[0]
        self.assertEqual(row["error"], "")
        self.assertAlmostEqual(row["gap"], row["oracle_ee"] - row["dinkelbach_ee"])
        self.assertGreaterEqual(row["slack"], -1e-15)

    def test_oracle_budget_failure_is_recorded(self):
        config = _config(
            mode=ExperimentMode.ORACLE_CHECK,
            n_channel_samples=1,
            oracle_max_evaluations=10,
        )
        frame = run_solve(config)
        self.assertTrue(frame.loc[0, "error"].startswith("EnumerationBudgetError"))
        self.assertTrue(math.isnan(frame.loc[0, "oracle_ee"]))


class TestAggregate(unittest.TestCase):
    def test_mean_and_standard_error(self):
        records = pd.DataFrame(
            {
                "sweep_value": [0.0, 0.0, 0.0, 10.0],
                "mode": ["EEM", "EEM", "EEM", "EEM"],
                "se": [1.0, 3.0, 100.0, 2.0],
                "ee": [0.1, 0.3, 9.0, 0.2],
                "rho": [0.0, 0.5, 1.0, 0.5],
                "power_w": [80.0, 80.0, 80.0, 80.0],
                "error": ["", "", "DualStateError: x", ""],
            }
        )
        summary = aggregate_records(records)
        self.assertEqual(len(summary), 2)
        first = summary.iloc[0]
        self.assertEqual(first["n_samples"], 2)
        self.assertAlmostEqual(first["se_mean"], 2.0)
        self.assertAlmostEqual(first["se_sem"], 1.0)
        self.assertAlmostEqual(first["power_w_sem"], 0.0)
        self.assertTrue(math.isnan(summary.iloc[1]["se_sem"]))


class TestRunSweep(unittest.TestCase):
    def test_sweep_summary(self):
        config = _config(
            mode=ExperimentMode.BOTH,
            sweep_axis=SweepAxis.P_MAX_DBM,
            sweep_values=(-10.0, 0.0),
        )
        summary = run_sweep(config)
        self.assertEqual(len(summary), 4)
        self.assertEqual(list(summary["sweep_value"]), [-10.0, -10.0, 0.0, 0.0])
        self.assertEqual(list(summary["mode"]), ["EEM", "SEM", "EEM", "SEM"])
        self.assertTrue((summary["n_samples"] == 2).all())
        self.assertTrue(np.all(np.isfinite(summary["ee_sem"])))

    def test_requires_axis(self):
        with self.assertRaises(ValidationError):
            run_sweep(_config())

    def test_rejects_oracle_mode(self):
        config = _config(
            mode=ExperimentMode.ORACLE_CHECK,
            sweep_axis=SweepAxis.N_USERS,
            sweep_values=(1, 2),
        )
        with self.assertRaises(ValidationError):
            run_sweep(config)

    def test_unexpected_failure_is_wrapped(self):
        config = _config(sweep_axis=SweepAxis.N_USERS, sweep_values=(1, 2))
        with patch(
            "app.services.experiment_service.run_solve", side_effect=KeyError("se")
        ):
            with self.assertRaises(BaseAppException) as ctx:
                run_sweep(config)
        self.assertEqual(ctx.exception.message, "Sweep failed")


class TestConvergenceTrace(unittest.TestCase):
    def test_trace_ends_at_solver_ee(self):
        config = _config(mode=ExperimentMode.EEM)
        trace = emit_convergence_trace(config)
        records = run_solve(config)
        self.assertEqual(list(trace.columns), TRACE_COLUMNS)
        for sample, rows in trace.groupby("sample"):
            ee = rows["ee"].to_numpy()
            iterations = rows["inner_iteration"].to_numpy()
            self.assertTrue(np.all(np.diff(ee) >= -1e-12))
            self.assertTrue(np.all(np.diff(iterations) > 0))
            expected = records.loc[records["sample"] == sample, "ee"].iloc[0]
            self.assertEqual(ee[-1], expected)

    def test_requires_eem(self):
        with self.assertRaises(ValidationError):
            emit_convergence_trace(_config(mode=ExperimentMode.SEM))


if __name__ == "__main__":
    unittest.main()
