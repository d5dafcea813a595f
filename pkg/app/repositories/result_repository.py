"""
Result repository module.

Writes experiment tables, allocations and solve reports as CSV. Allocation
files hold one row per subcarrier (n, protocol, k, p_direct, p_af_bs,
p_af_rn) with the owner's powers; report files hold one `iteration` row per
outer iteration followed by one `summary` row.
"""

from typing import Any, Dict, List, Optional

import pandas as pd

from app.models import Allocation, Protocol, SolveReport
from app.repositories.generic_repository import GenericRepository
from app.utils.logger import get_logger

logger = get_logger(__name__)

ALLOCATION_COLUMNS = ["n", "protocol", "k", "p_direct", "p_af_bs", "p_af_rn"]
REPORT_COLUMNS = [
    "record",
    "mode",
    "i",
    "q",
    "f",
    "lambda",
    "inner_iters",
    "se",
    "ee",
    "power_w",
    "rho",
    "converged",
]


class ResultRepository(GenericRepository):
    def save_records(self, frame: pd.DataFrame, path: Optional[str] = None) -> None:
        """Write an experiment table to `path`, or stdout when None."""
        self.write_table(frame, path)

    def allocation_frame(self, allocation: Allocation) -> pd.DataFrame:
        rows: List[Dict[str, Any]] = []
        for n, (protocol, k) in enumerate(allocation.assignment()):
            owner = max(k, 0)
            used = protocol is not Protocol.UNUSED
            rows.append(
                {
                    "n": n,
                    "protocol": protocol.name,
                    "k": k,
                    "p_direct": allocation.p_direct[owner, n] if used else 0.0,
                    "p_af_bs": allocation.p_af_bs[owner, n] if used else 0.0,
                    "p_af_rn": allocation.p_af_rn[owner, n] if used else 0.0,
                }
            )
        return pd.DataFrame(rows, columns=ALLOCATION_COLUMNS)

    def report_frame(self, report: SolveReport) -> pd.DataFrame:
        rows: List[Dict[str, Any]] = [
            {
                "record": "iteration",
                "mode": report.mode,
                "i": i,
                "q": q,
                "f": f,
                "lambda": lam,
                "inner_iters": inner,
            }
            for i, (q, f, lam, inner) in enumerate(
                zip(
                    report.q_trace,
                    report.f_trace,
                    report.lambda_trace,
                    report.inner_iters_trace,
                )
            )
        ]
        rows.append(
            {
                "record": "summary",
                "mode": report.mode,
                "inner_iters": report.total_inner_iters,
                "se": report.final_se,
                "ee": report.final_ee,
                "power_w": report.final_power_w,
                "rho": report.final_rho,
                "converged": report.converged,
            }
        )
        return pd.DataFrame(rows, columns=REPORT_COLUMNS).astype(
            {"i": "Int64", "inner_iters": "Int64"}
        )

    def save_allocation(self, allocation: Allocation, path: Optional[str]) -> None:
        self.write_table(self.allocation_frame(allocation), path)
        logger.info("[ResultRepository] Saved allocation to %s", path or "stdout")

    def save_report(self, report: SolveReport, path: Optional[str]) -> None:
        self.write_table(self.report_frame(report), path)
        logger.info(
            "[ResultRepository] Saved %s report to %s", report.mode, path or "stdout"
        )
