"""
Monte-Carlo acceptance checks. Run with `pytest -m slow`; they take minutes.
"""

import math
import unittest

import numpy as np
import pytest

from app.config.experiment import ExperimentConfig, ExperimentMode, SweepAxis
from app.models import GridSpec, SystemParams
from app.services.experiment_service import generate_instance, run_sweep
from app.services.objective_service import check_feasible
from app.services.oracle_service import oracle_best_ee
from app.services.solver_service import dinkelbach_solve, sem_solve
from app.utils.seed_util import derive_seed

N_INSTANCES = 100
# Dinkelbach may beat the grid optimum by at most this relative margin on top
# of the discretization error the refined grid exposes.
EXCESS_RTOL = 1e-3


@pytest.mark.slow
class TestOracleAgreement(unittest.TestCase):
    def test_dinkelbach_matches_exhaustive_search(self):
        params = SystemParams(n_subcarriers=2, n_users=2, n_relays=1, p_max_dbm=0.0)
        grid = GridSpec(levels_per_power=32, beta_levels=16)
        for sample in range(N_INSTANCES):
            _, chan = generate_instance(params, derive_seed(2024, sample))
            eem_allocation, report = dinkelbach_solve(chan, params)
            sem_allocation, _ = sem_solve(chan, params)
            oracle_ee, oracle_allocation = oracle_best_ee(chan, params, grid)
            refined_ee, _ = oracle_best_ee(chan, params, grid.refined())

            with self.subTest(sample=sample):
                for allocation in (eem_allocation, sem_allocation, oracle_allocation):
                    self.assertEqual(check_feasible(allocation, params), [])
                # One grid cell of EE variation, measured by halving the cell.
                slack = max(refined_ee - oracle_ee, 1e-9 * oracle_ee)
                self.assertGreaterEqual(report.final_ee, oracle_ee - slack)
                # The grid error at the base resolution is a small multiple of
                # the improvement one refinement brings.
                self.assertLessEqual(
                    report.final_ee,
                    oracle_ee + 3.0 * slack + EXCESS_RTOL * oracle_ee,
                )


@pytest.mark.slow
class TestBudgetSweep(unittest.TestCase):
    def test_eem_saturates_while_sem_keeps_growing(self):
        config = ExperimentConfig(
            params=SystemParams(n_users=4),
            sweep_axis=SweepAxis.P_MAX_DBM,
            sweep_values=(-20.0, 0.0, 20.0, 45.0, 50.0),
            n_channel_samples=20,
            master_seed=7,
            mode=ExperimentMode.BOTH,
        )
        summary = run_sweep(config)
        eem = summary[summary["mode"] == "EEM"].set_index("sweep_value")
        sem = summary[summary["mode"] == "SEM"].set_index("sweep_value")
        self.assertTrue((summary["n_samples"] == 20).all())

        low_gap = abs(eem.loc[-20.0, "ee_mean"] - sem.loc[-20.0, "ee_mean"])
        self.assertLess(low_gap / sem.loc[-20.0, "ee_mean"], 1e-3)

        self.assertTrue(np.all(eem["ee_mean"] >= sem["ee_mean"] * (1 - 1e-12)))
        self.assertTrue(np.all(np.diff(sem["se_mean"].to_numpy()) > 0))

        plateau = abs(eem.loc[50.0, "ee_mean"] - eem.loc[45.0, "ee_mean"])
        self.assertLessEqual(
            plateau, max(eem.loc[50.0, "ee_sem"], 1e-6 * eem.loc[50.0, "ee_mean"])
        )
        self.assertLess(sem.loc[50.0, "ee_mean"], eem.loc[50.0, "ee_mean"])


@pytest.mark.slow
class TestMultiUserTrends(unittest.TestCase):
    """Direction checks at two standard errors on an N=16, M=3 cell."""

    N_SAMPLES = 200

    def _sweep(self, axis, values):
        config = ExperimentConfig(
            params=SystemParams(n_subcarriers=16, n_relays=3, n_users=8),
            sweep_axis=axis,
            sweep_values=values,
            n_channel_samples=self.N_SAMPLES,
            master_seed=99,
            mode=ExperimentMode.EEM,
        )
        summary = run_sweep(config)
        self.assertTrue((summary["n_samples"] == self.N_SAMPLES).all())
        return summary.sort_values("sweep_value")

    def _assert_direction(self, summary, metric, increasing):
        means = summary[f"{metric}_mean"].to_numpy()
        sems = summary[f"{metric}_sem"].to_numpy()
        for i in range(len(means) - 1):
            margin = 2.0 * math.hypot(sems[i], sems[i + 1])
            with self.subTest(metric=metric, point=i):
                if increasing:
                    self.assertGreaterEqual(means[i + 1], means[i] - margin)
                else:
                    self.assertLessEqual(means[i + 1], means[i] + margin)

    def test_more_users_raise_efficiency_and_lower_relay_use(self):
        summary = self._sweep(SweepAxis.N_USERS, (4.0, 8.0, 16.0))
        self._assert_direction(summary, "ee", increasing=True)
        self._assert_direction(summary, "se", increasing=True)
        self._assert_direction(summary, "rho", increasing=False)

    def test_larger_budget_lowers_relay_use(self):
        # Below about -10 dBm water-filling leaves subcarriers unused, so the
        # relay share grows with the budget there; the trend starts above it.
        summary = self._sweep(SweepAxis.P_MAX_DBM, (0.0, 10.0, 20.0))
        self._assert_direction(summary, "rho", increasing=False)


if __name__ == "__main__":
    unittest.main()
