import os
import tempfile
import unittest

from app.config.experiment import (
    TRACE_PARAM_DEFAULTS,
    ExperimentConfig,
    ExperimentMode,
    SweepAxis,
    load_experiment_config,
    parse_config_values,
)
from app.errors import ResourceNotFoundError, ValidationError
from app.models import SystemParams


class TestParseConfigValues(unittest.TestCase):
    def test_defaults(self):
        config = parse_config_values({})
        self.assertEqual(config.params, SystemParams())
        self.assertEqual(config.sweep_axis, SweepAxis.NONE)
        self.assertEqual(config.mode, ExperimentMode.EEM)
        self.assertEqual(config.n_channel_samples, 1)
        self.assertIsNone(config.output_path)

    def test_param_and_experiment_keys(self):
        config = parse_config_values(
            {
                "n_users": "3",
                "p_max_dbm": " 10 ",
                "mode": "BOTH",
                "n_channel_samples": "20",
                "sweep_axis": "p_max_dbm",
                "sweep_values": "-10, 0,10",
                "output_path": "out/results.csv",
            }
        )
        self.assertEqual(config.params.n_users, 3)
        self.assertEqual(config.params.p_max_dbm, 10.0)
        self.assertEqual(config.mode, ExperimentMode.BOTH)
        self.assertEqual(config.n_channel_samples, 20)
        self.assertEqual(config.sweep_values, (-10.0, 0.0, 10.0))
        self.assertEqual(config.output_path, "out/results.csv")

    def test_empty_output_path_means_stdout(self):
        self.assertIsNone(parse_config_values({"output_path": ""}).output_path)

    def test_unknown_key(self):
        with self.assertRaises(ValidationError) as ctx:
            parse_config_values({"n_userz": "3"})
        self.assertIn("n_userz", ctx.exception.message)

    def test_key_without_value(self):
        with self.assertRaises(ValidationError):
            parse_config_values({"n_users": None})

    def test_invalid_values(self):
        for values in (
            {"n_channel_samples": "0"},
            {"n_users": "-1"},
            {"mode": "FASTEST"},
            {"sweep_axis": "p_max_dbm", "sweep_values": "10,0"},
            {"sweep_axis": "p_max_dbm"},
            {"sweep_values": "1,2"},
            {"sweep_axis": "n_users", "sweep_values": "2,2.5"},
        ):
            with self.subTest(values=values):
                with self.assertRaises(ValidationError):
                    parse_config_values(values)

    def test_param_defaults_yield_to_explicit_values(self):
        config = parse_config_values({"p_max_dbm": "5"}, TRACE_PARAM_DEFAULTS)
        self.assertEqual(config.params.n_relays, 0)
        self.assertEqual(config.params.cell_radius_m, 1000.0)
        self.assertEqual(config.params.p_max_dbm, 5.0)


class TestExperimentConfig(unittest.TestCase):
    def test_sweep_points_on_integer_axis(self):
        config = ExperimentConfig(sweep_axis=SweepAxis.N_USERS, sweep_values=(2, 4))
        points = config.sweep_points()
        self.assertEqual([value for value, _ in points], [2, 4])
        self.assertEqual([params.n_users for _, params in points], [2, 4])
        self.assertIsInstance(points[0][1].n_users, int)

    def test_sweep_points_without_axis(self):
        config = ExperimentConfig()
        self.assertEqual(config.sweep_points(), [(None, config.params)])

    def test_invalid_sweep_point_is_reported(self):
        config = ExperimentConfig(sweep_axis=SweepAxis.N_USERS, sweep_values=(0, 2))
        with self.assertRaises(ValidationError):
            config.sweep_points()

    def test_grid(self):
        config = ExperimentConfig(oracle_levels_per_power=8, oracle_beta_levels=4)
        grid = config.grid
        self.assertEqual((grid.levels_per_power, grid.beta_levels), (8, 4))

    def test_with_overrides(self):
        config = ExperimentConfig(master_seed=1)
        updated = config.with_overrides(
            master_seed=9, workers=3, mode=ExperimentMode.SEM
        )
        self.assertEqual(updated.master_seed, 9)
        self.assertEqual(updated.workers, 3)
        self.assertEqual(updated.mode, ExperimentMode.SEM)
        self.assertEqual(config.master_seed, 1)
        self.assertEqual(config.with_overrides(), config)

    def test_with_invalid_override(self):
        with self.assertRaises(ValidationError):
            ExperimentConfig().with_overrides(workers=0)


class TestLoadExperimentConfig(unittest.TestCase):
    def test_missing_file(self):
        with self.assertRaises(ResourceNotFoundError) as ctx:
            load_experiment_config("/nonexistent/experiment.cfg")
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_load_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "sweep.cfg")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(
                    "# P_max sweep\n"
                    "n_subcarriers=4\n"
                    "sweep_axis=p_max_dbm\n"
                    "sweep_values=-20,-10,0\n"
                    "master_seed=7\n"
                )
            config = load_experiment_config(path)
        self.assertEqual(config.params.n_subcarriers, 4)
        self.assertEqual(config.sweep_values, (-20.0, -10.0, 0.0))
        self.assertEqual(config.master_seed, 7)


if __name__ == "__main__":
    unittest.main()
