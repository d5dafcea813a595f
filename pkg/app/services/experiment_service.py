"""Seeded Monte-Carlo experiments over generated channel instances.

Each (sweep point, sample) pair is an independent task: its instance seed is
derived from the master seed and the sample index only, so a sample sees the
same placement and fading draws at every sweep point where the dimensions
agree. Tasks may run on a process pool; results are collected in task order,
so the produced tables do not depend on the worker count.
"""

import math
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from scipy import stats

from app.config.experiment import ExperimentConfig, ExperimentMode, SweepAxis
from app.errors import BaseAppException, ValidationError
from app.models import (
    Allocation,
    ChannelRealization,
    GridSpec,
    SolveReport,
    SystemParams,
    Topology,
)
from app.services.channel_service import generate_channel, generate_topology
from app.services.oracle_service import oracle_best_ee
from app.services.solver_service import DinkelbachSolver
from app.utils.logger import get_logger
from app.utils.seed_util import derive_seed

logger = get_logger(__name__)

RECORD_COLUMNS = [
    "sample",
    "sweep_value",
    "mode",
    "se",
    "ee",
    "power_w",
    "rho",
    "sum_rate_bps",
    "outer_iters",
    "inner_iters",
    "converged",
    "error",
]

ORACLE_COLUMNS = [
    "sample",
    "sweep_value",
    "dinkelbach_ee",
    "oracle_ee",
    "gap",
    "slack",
    "error",
]

TRACE_COLUMNS = ["sample", "sweep_value", "inner_iteration", "ee", "error"]

SWEEP_METRICS = ("se", "ee", "rho", "power_w")


@dataclass(frozen=True)
class SampleTask:
    """One unit of experiment work."""

    sweep_index: int
    sweep_value: Optional[float]
    sample: int
    params: SystemParams
    master_seed: int
    mode: ExperimentMode
    grid: GridSpec


def generate_instance(
    params: SystemParams, sample_seed: int
) -> Tuple[Topology, ChannelRealization]:
    """Draw the topology and channel of one sample from its seed."""
    topology = generate_topology(params, derive_seed(sample_seed, 0))
    chan = generate_channel(topology, params, derive_seed(sample_seed, 1))
    return topology, chan


def _instance(task: SampleTask) -> Tuple[Topology, ChannelRealization]:
    return generate_instance(task.params, derive_seed(task.master_seed, task.sample))


def _solver_modes(mode: ExperimentMode) -> List[str]:
    if mode is ExperimentMode.BOTH:
        return ["EEM", "SEM"]
    return [mode.value]


def _record(task: SampleTask, mode: str, report: SolveReport) -> Dict[str, Any]:
    params = task.params
    return {
        "sample": task.sample,
        "sweep_value": task.sweep_value,
        "mode": mode,
        "se": report.final_se,
        "ee": report.final_ee,
        "power_w": report.final_power_w,
        "rho": report.final_rho,
        "sum_rate_bps": report.final_se
        * params.n_subcarriers
        * params.subcarrier_bandwidth_hz,
        "outer_iters": report.outer_iters,
        "inner_iters": report.total_inner_iters,
        "converged": report.converged,
        "error": "",
    }


def _failed(task: SampleTask, error: Exception, **columns: Any) -> Dict[str, Any]:
    logger.warning(
        "[ExperimentService] Sample %s at sweep value %s failed: %s",
        task.sample,
        task.sweep_value,
        error,
        exc_info=True,
    )
    record = {"sample": task.sample, "sweep_value": task.sweep_value}
    record.update(columns)
    record["error"] = f"{type(error).__name__}: {error}"
    return record


def _failed_solve(task: SampleTask, mode: str, error: Exception) -> Dict[str, Any]:
    nan = math.nan
    return _failed(
        task,
        error,
        mode=mode,
        se=nan,
        ee=nan,
        power_w=nan,
        rho=nan,
        sum_rate_bps=nan,
        outer_iters=0,
        inner_iters=0,
        converged=False,
    )


def _solve(solver: DinkelbachSolver, mode: str) -> Tuple[Allocation, SolveReport]:
    return solver.dinkelbach_solve() if mode == "EEM" else solver.sem_solve()


def solve_sample(task: SampleTask) -> List[Dict[str, Any]]:
    """Run the solver modes of `task` on its instance; one record per mode."""
    try:
        _, chan = _instance(task)
    except Exception as error:
        return [_failed_solve(task, mode, error) for mode in _solver_modes(task.mode)]

    records = []
    for mode in _solver_modes(task.mode):
        try:
            _, report = _solve(DinkelbachSolver(chan, task.params), mode)
            records.append(_record(task, mode, report))
        except Exception as error:
            records.append(_failed_solve(task, mode, error))
    return records


def oracle_check_sample(task: SampleTask) -> List[Dict[str, Any]]:
    """
    Compare the Dinkelbach EE of one instance with the exhaustive-search EE.

    `slack` is how much the oracle optimum grows when both grid resolutions
    are doubled, a per-instance measure of the grid error.
    """
    nan = math.nan
    try:
        _, chan = _instance(task)
        _, report = DinkelbachSolver(chan, task.params).dinkelbach_solve()
        oracle_ee, _ = oracle_best_ee(chan, task.params, task.grid)
        refined_ee, _ = oracle_best_ee(chan, task.params, task.grid.refined())
    except Exception as error:
        return [
            _failed(
                task, error, dinkelbach_ee=nan, oracle_ee=nan, gap=nan, slack=nan
            )
        ]
    return [
        {
            "sample": task.sample,
            "sweep_value": task.sweep_value,
            "dinkelbach_ee": report.final_ee,
            "oracle_ee": oracle_ee,
            "gap": oracle_ee - report.final_ee,
            "slack": refined_ee - oracle_ee,
            "error": "",
        }
    ]


def trace_sample(task: SampleTask) -> List[Dict[str, Any]]:
    """Return the (cumulative inner iteration, EE) rows of one EEM solve."""
    try:
        _, chan = _instance(task)
        _, report = DinkelbachSolver(chan, task.params).dinkelbach_solve()
    except Exception as error:
        return [_failed(task, error, inner_iteration=0, ee=math.nan)]
    return [
        {
            "sample": task.sample,
            "sweep_value": task.sweep_value,
            "inner_iteration": iteration,
            "ee": ee,
            "error": "",
        }
        for iteration, ee in report.ee_trace
    ]


def _tasks(config: ExperimentConfig) -> List[SampleTask]:
    grid = config.grid
    return [
        SampleTask(
            sweep_index=index,
            sweep_value=value,
            sample=sample,
            params=params,
            master_seed=config.master_seed,
            mode=config.mode,
            grid=grid,
        )
        for index, (value, params) in enumerate(config.sweep_points())
        for sample in range(config.n_channel_samples)
    ]


def _run(config: ExperimentConfig, worker) -> List[Dict[str, Any]]:
    """Apply `worker` to every task, in parallel when config.workers > 1."""
    tasks = _tasks(config)
    logger.info(
        "[ExperimentService] Running %s tasks on %s worker(s)",
        len(tasks),
        config.workers,
    )
    if config.workers > 1 and len(tasks) > 1:
        with Pool(processes=min(config.workers, len(tasks))) as pool:
            # Pool.map keeps task order.
            results = pool.map(worker, tasks)
    else:
        results = [worker(task) for task in tasks]
    rows = [row for result in results for row in result]
    failures = sum(1 for row in rows if row.get("error"))
    if failures:
        logger.warning("[ExperimentService] %s of %s rows failed", failures, len(rows))
    return rows


def _frame(rows: List[Dict[str, Any]], columns: List[str]) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=columns)
    frame["error"] = frame["error"].fillna("")
    return frame


def run_solve(config: ExperimentConfig) -> pd.DataFrame:
    """
    Run the configured mode on every sample of every sweep point.

    Returns:
        pd.DataFrame: One row per (sweep point, sample, mode) with
        RECORD_COLUMNS, or one row per (sweep point, sample) with
        ORACLE_COLUMNS when mode is ORACLE_CHECK. Failed samples carry the
        error class and message in `error`.
    """
    if config.mode is ExperimentMode.ORACLE_CHECK:
        return _frame(_run(config, oracle_check_sample), ORACLE_COLUMNS)
    return _frame(_run(config, solve_sample), RECORD_COLUMNS)


def _standard_error(values: pd.Series) -> float:
    if values.count() < 2:
        return math.nan
    return float(stats.sem(values, nan_policy="omit"))


def aggregate_records(records: pd.DataFrame) -> pd.DataFrame:
    """Return mean and standard error of each metric per (sweep value, mode)."""
    rows = []
    valid = records[records["error"] == ""]
    for (value, mode), group in valid.groupby(
        ["sweep_value", "mode"], sort=True, dropna=False
    ):
        row: Dict[str, Any] = {
            "sweep_value": value,
            "mode": mode,
            "n_samples": len(group),
        }
        for metric in SWEEP_METRICS:
            row[f"{metric}_mean"] = float(group[metric].mean())
            row[f"{metric}_sem"] = _standard_error(group[metric])
        rows.append(row)
    columns = ["sweep_value", "mode", "n_samples"] + [
        f"{metric}_{stat}" for metric in SWEEP_METRICS for stat in ("mean", "sem")
    ]
    return pd.DataFrame(rows, columns=columns)


def run_sweep(config: ExperimentConfig) -> pd.DataFrame:
    """
    Run the configured solver modes over the sweep and aggregate per point.

    Raises:
        ValidationError: If no sweep axis is set or the mode is ORACLE_CHECK.
    """
    if config.sweep_axis is SweepAxis.NONE:
        raise ValidationError("A sweep needs sweep_axis and sweep_values")
    if config.mode is ExperimentMode.ORACLE_CHECK:
        raise ValidationError("ORACLE_CHECK is not a sweep mode; use oracle-check")
    try:
        summary = aggregate_records(run_solve(config))
    except BaseAppException:
        raise
    except Exception as error:
        logger.error("[ExperimentService] Sweep failed: %s", error, exc_info=True)
        raise BaseAppException("Sweep failed", details=str(error)) from error
    logger.info(
        "[ExperimentService] Sweep over %s finished with %s rows",
        config.sweep_axis.value,
        len(summary),
    )
    return summary


def emit_convergence_trace(config: ExperimentConfig) -> pd.DataFrame:
    """
    Return per-sample convergence rows (sample, sweep value, cumulative inner
    iteration, EE of the best allocation so far).

    Raises:
        ValidationError: If the mode is not EEM.
    """
    if config.mode is not ExperimentMode.EEM:
        raise ValidationError("Convergence traces require mode=EEM")
    return _frame(_run(config, trace_sample), TRACE_COLUMNS)
