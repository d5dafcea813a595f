import os
import tempfile
import unittest

import pandas as pd

from app.models import Protocol, SolveReport
from app.repositories.result_repository import (
    ALLOCATION_COLUMNS,
    REPORT_COLUMNS,
    ResultRepository,
)
from app.tests.helpers import make_allocation


class TestResultRepository(unittest.TestCase):
    def setUp(self):
        self.repository = ResultRepository()
        self.allocation = make_allocation(
            2,
            3,
            [
                (0, Protocol.DIRECT, 1, 0.25, 0.0, 0.0),
                (2, Protocol.AF, 0, 0.0, 0.125, 0.375),
            ],
        )
        self.report = SolveReport(
            mode="EEM",
            q_trace=[0.0, 0.5],
            lambda_trace=[2.0, 0.0],
            f_trace=[1.5, 0.0],
            inner_iters_trace=[30, 1],
            ee_trace=[(30, 0.5), (31, 0.5)],
            final_se=1.5,
            final_ee=0.5,
            final_power_w=3.0,
            final_rho=1.0 / 3.0,
            converged=True,
            total_inner_iters=31,
        )

    def test_allocation_frame(self):
        frame = self.repository.allocation_frame(self.allocation)
        self.assertEqual(list(frame.columns), ALLOCATION_COLUMNS)
        self.assertEqual(list(frame["protocol"]), ["DIRECT", "UNUSED", "AF"])
        self.assertEqual(list(frame["k"]), [1, -1, 0])
        self.assertEqual(list(frame["p_direct"]), [0.25, 0.0, 0.0])
        self.assertEqual(list(frame["p_af_rn"]), [0.0, 0.0, 0.375])

    def test_report_frame(self):
        frame = self.repository.report_frame(self.report)
        self.assertEqual(list(frame.columns), REPORT_COLUMNS)
        self.assertEqual(list(frame["record"]), ["iteration", "iteration", "summary"])
        self.assertEqual(list(frame["i"][:2]), [0, 1])
        self.assertTrue(pd.isna(frame.loc[2, "i"]))
        self.assertEqual(frame.loc[2, "inner_iters"], 31)
        self.assertEqual(frame.loc[1, "lambda"], 0.0)
        self.assertAlmostEqual(frame.loc[2, "rho"], 1.0 / 3.0)
        self.assertTrue(pd.isna(frame.loc[0, "ee"]))

    def test_save_and_read_back(self):
        with tempfile.TemporaryDirectory() as tmp:
            allocation_path = os.path.join(tmp, "allocation.csv")
            report_path = os.path.join(tmp, "report.csv")
            self.repository.save_allocation(self.allocation, allocation_path)
            self.repository.save_report(self.report, report_path)
            allocation = self.repository.read_table(allocation_path)
            report = self.repository.read_table(report_path)
            with open(report_path, encoding="utf-8") as handle:
                header = handle.readline().strip()
        self.assertEqual(len(allocation), 3)
        self.assertEqual(allocation.loc[2, "p_af_bs"], 0.125)
        self.assertEqual(header, ",".join(REPORT_COLUMNS))
        self.assertEqual(report.loc[2, "record"], "summary")
        self.assertAlmostEqual(report.loc[2, "rho"], 1.0 / 3.0, places=8)

    def test_save_records(self):
        frame = pd.DataFrame({"sample": [0], "ee": [0.1], "error": [""]})
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "out", "records.csv")
            self.repository.save_records(frame, path)
            self.assertTrue(os.path.isfile(path))


if __name__ == "__main__":
    unittest.main()
