"""Dinkelbach solver for energy-efficient power and subcarrier allocation.

The outer loop maximizes SE/P by solving max SE - q*P for an increasing
sequence of q. Each of those subproblems is solved in the dual: for a budget
multiplier lambda every (user, subcarrier) entry has a closed-form optimum,
the winner rule makes the allocation binary, and lambda is updated from the
budget residual until the budget is met.

Internally powers are normalized by P_max and gains by the noise floor, so
q and lambda become q_hat = N*q*P_max and lambda_hat = lambda*P_max; every
returned quantity is converted back to Watts.
"""

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from app.errors import ValidationError
from app.models import (
    Allocation,
    ChannelRealization,
    DualState,
    Protocol,
    SolveReport,
    SystemParams,
)
from app.services.allocator_methods import IAllocator
from app.services.objective_service import (
    af_fraction,
    energy_efficiency,
    system_power,
    system_se,
)
from app.services.subproblem_service import (
    allocate_subcarriers,
    effective_af_gain,
    rate_metric,
    split_from_costs,
    water_fill,
)
from app.utils.logger import get_logger

logger = get_logger(__name__)

# Relative width below which the lambda bracket is treated as a single point.
BRACKET_RTOL = 1e-12


class InnerSolution(NamedTuple):
    """Result of one inner (lambda) loop.

    Attributes:
        allocation (Allocation): Feasible binary allocation, Watts.
        lam (float): Final budget multiplier, 1/Watts.
        iterations (int): Lambda iterations spent, including refinements.
        converged (bool): False only when max_inner_iters ran out.
        termination (str): "tolerance", "inactive", "bracket" or "max_iter".
    """

    allocation: Allocation
    lam: float
    iterations: int
    converged: bool
    termination: str


@dataclass
class _Iterate:
    """Normalized primal point of one lambda evaluation."""

    protocol: np.ndarray
    user: np.ndarray
    p_direct: np.ndarray
    p_af_total: np.ndarray
    beta: np.ndarray
    total: float


@dataclass
class _Search:
    iterate: _Iterate
    lam_hat: float
    iterations: int
    termination: str
    over: Optional[_Iterate] = None
    under: Optional[_Iterate] = None


class DinkelbachSolver:
    """
    Solver bound to one channel realization.

    An instance is single-owner mutable state: `state` tracks the current
    (q, lambda) pair and iteration counters. Distinct instances share nothing.
    """

    def __init__(self, chan: ChannelRealization, params: SystemParams) -> None:
        chan.check_against(params)
        params.check_derived()
        self.chan = chan
        self.params = params
        self.state = DualState(lam=0.0, q=0.0, n_subcarriers=params.n_subcarriers)

        scale = params.p_max_w / params.noise_floor_w
        self._alpha_d = chan.g_bs_ue * scale
        if chan.has_relays:
            self._alpha_br = chan.first_hop_gains() * scale
            self._alpha_ru = chan.g_rn_ue * scale
        self._columns = np.arange(params.n_subcarriers)

    def _q_hat(self, q: float) -> float:
        return q * self.params.n_subcarriers * self.params.p_max_w

    def _evaluate(
        self,
        lam_hat: float,
        q_hat: float,
        frozen: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    ) -> _Iterate:
        """Closed-form powers, metrics and winners at one (q, lambda)."""
        xi_b, xi_r = self.params.inv_drain_eff_bs, self.params.inv_drain_eff_rn
        shape = self._alpha_d.shape

        p_direct = water_fill(self._alpha_d, q_hat * xi_b + lam_hat)
        direct_metric = rate_metric(self._alpha_d * p_direct)

        if self.chan.has_relays:
            x = q_hat * xi_b + 2.0 * lam_hat
            y = q_hat * xi_r + 2.0 * lam_hat
            beta = split_from_costs(self._alpha_br, self._alpha_ru, x, y)
            alpha_af = effective_af_gain(self._alpha_br, self._alpha_ru, beta)
            p_af = water_fill(alpha_af, beta * x + (1.0 - beta) * y)
            af_metric = 0.5 * rate_metric(alpha_af * p_af)
        else:
            beta = np.zeros(shape)
            p_af = np.zeros(shape)
            af_metric = np.full(shape, -math.inf)

        if frozen is None:
            protocol, user = allocate_subcarriers(direct_metric, af_metric)
        else:
            protocol, user = frozen

        chosen_direct = np.zeros(shape)
        chosen_af = np.zeros(shape)
        direct = protocol == Protocol.DIRECT
        relayed = protocol == Protocol.AF
        rows, cols = user[direct], self._columns[direct]
        chosen_direct[rows, cols] = p_direct[rows, cols]
        rows, cols = user[relayed], self._columns[relayed]
        chosen_af[rows, cols] = p_af[rows, cols]

        return _Iterate(
            protocol=protocol,
            user=user,
            p_direct=chosen_direct,
            p_af_total=chosen_af,
            beta=beta,
            total=float(chosen_direct.sum() + chosen_af.sum()),
        )

    def _dual_search(
        self, q_hat: float, frozen: Optional[Tuple[np.ndarray, np.ndarray]] = None
    ) -> _Search:
        """
        Drive the budget residual 1 - sum(P)/P_max to zero over lambda.

        Each step proposes the projected constant-step update
        lambda <- [lambda - dual_step*(1 - sum(P))]^+. A bracket [lo, hi] with
        sum(P) > P_max at lo and < P_max at hi is kept; while hi is unknown the
        proposal is at least a doubling, and once bracketed a proposal that
        leaves the bracket or fails to halve the residual is replaced by the
        midpoint.
        """
        params = self.params
        # lambda = 0 with q = 0 is an unbounded water level.
        lam = 1.0 if q_hat == 0 else 0.0
        lo, hi = 0.0, math.inf
        prev_gap = math.inf
        over: Optional[_Iterate] = None
        under: Optional[_Iterate] = None

        current = self._evaluate(lam, q_hat, frozen)
        for iteration in range(1, params.max_inner_iters + 1):
            if iteration > 1:
                current = self._evaluate(lam, q_hat, frozen)
            gap = 1.0 - current.total
            logger.debug(
                "[DinkelbachSolver] inner %s lambda_hat=%s residual=%s",
                iteration,
                lam,
                gap,
            )
            if abs(gap) <= params.dual_tol:
                return _Search(current, lam, iteration, "tolerance")
            if lam == 0.0 and gap > 0:
                return _Search(current, lam, iteration, "inactive")

            if gap < 0:
                lo, over = lam, current
            else:
                hi, under = lam, current
            if hi < math.inf and hi - lo <= BRACKET_RTOL * hi:
                return _Search(
                    over if over is not None else current,
                    lo,
                    iteration,
                    "bracket",
                    over=over,
                    under=under,
                )

            proposal = max(lam - params.dual_step * gap, 0.0)
            if hi == math.inf:
                proposal = max(proposal, 2.0 * lam)
            elif not lo < proposal < hi or abs(gap) > 0.5 * abs(prev_gap):
                proposal = 0.5 * (lo + hi)
            prev_gap = gap
            if iteration < params.max_inner_iters:
                lam = proposal

        return _Search(current, lam, params.max_inner_iters, "max_iter")

    def _to_allocation(self, iterate: _Iterate, q_hat: float) -> Allocation:
        """De-normalize an iterate into a feasible allocation in Watts."""
        total = iterate.total
        scale = 1.0
        if total > 1.0:
            scale = 1.0 / total
        elif q_hat == 0 and 0.0 < total < 1.0:
            # With no power penalty, spending the rest of the budget only helps.
            scale = 1.0 / total
        factor = scale * self.params.p_max_w

        powered = (iterate.p_direct + iterate.p_af_total)[
            np.maximum(iterate.user, 0), self._columns
        ] > 0
        used = (iterate.protocol != Protocol.UNUSED) & powered
        normalized = Allocation(
            protocol=np.where(used, iterate.protocol, Protocol.UNUSED),
            user=np.where(used, iterate.user, -1),
            p_direct=iterate.p_direct,
            p_af_bs=iterate.beta * iterate.p_af_total,
            p_af_rn=(1.0 - iterate.beta) * iterate.p_af_total,
        )
        return normalized.scaled(factor)

    def _objective(self, allocation: Allocation, q: float) -> float:
        return system_se(allocation, self.chan, self.params) - q * system_power(
            allocation, self.params
        )

    def inner_solve(self, q: float) -> InnerSolution:
        """
        Solve max SE - q*P under the budget for a fixed q >= 0.

        Returns:
            InnerSolution: A feasible binary allocation and the final lambda.
        """
        if not (q >= 0 and math.isfinite(q)):
            raise ValidationError(
                "q must be finite and nonnegative", details=f"q={q!r}"
            )
        q_hat = self._q_hat(q)
        search = self._dual_search(q_hat)
        iterations = search.iterations
        lam_hat = search.lam_hat
        termination = search.termination

        if search.termination == "bracket":
            # The winners switch inside the bracket; re-solve the powers with
            # each side's assignment frozen and keep the better one.
            best: Optional[Tuple[float, Allocation, float]] = None
            for side in (search.over, search.under):
                if side is None:
                    continue
                refined = self._dual_search(q_hat, frozen=(side.protocol, side.user))
                iterations += refined.iterations
                if refined.termination == "max_iter":
                    termination = "max_iter"
                candidate = self._to_allocation(refined.iterate, q_hat)
                value = self._objective(candidate, q)
                if best is None or value > best[0]:
                    best = (value, candidate, refined.lam_hat)
            _, allocation, lam_hat = best
        else:
            allocation = self._to_allocation(search.iterate, q_hat)

        converged = termination != "max_iter"
        if not converged:
            logger.warning(
                "[DinkelbachSolver] Inner loop hit max_inner_iters=%s at q=%s; "
                "returning the rescaled last iterate",
                self.params.max_inner_iters,
                q,
            )
        lam = lam_hat / self.params.p_max_w
        self.state.lam = lam
        self.state.q = q
        self.state.inner_iter += iterations
        return InnerSolution(allocation, lam, iterations, converged, termination)

    def _finalize(self, report: SolveReport, allocation: Allocation) -> None:
        report.final_se = system_se(allocation, self.chan, self.params)
        report.final_power_w = system_power(allocation, self.params)
        report.final_ee = energy_efficiency(allocation, self.chan, self.params)
        report.final_rho = af_fraction(allocation)
        report.total_inner_iters = sum(report.inner_iters_trace)

    def dinkelbach_solve(self) -> Tuple[Allocation, SolveReport]:
        """
        Maximize EE with Dinkelbach's iteration starting from q = 0.

        An inner solution whose R - q*P falls below zero (possible only at a
        bracketed switch of winners) is discarded in favour of the incumbent,
        which attains exactly zero at that q. Its F is still recorded in
        f_trace and `incumbent_kept` is set; q_trace stays nondecreasing.
        """
        params = self.params
        report = SolveReport(mode="EEM")
        q = 0.0
        incumbent: Optional[Allocation] = None
        inner_ok: List[bool] = []
        cumulative = 0
        self.state = DualState(lam=0.0, q=0.0, n_subcarriers=params.n_subcarriers)

        for outer in range(1, params.max_outer_iters + 1):
            inner = self.inner_solve(q)
            inner_ok.append(inner.converged)
            cumulative += inner.iterations
            self.state.outer_iter = outer

            se = system_se(inner.allocation, self.chan, params)
            power = system_power(inner.allocation, params)
            f_value = se - q * power
            report.q_trace.append(q)
            report.lambda_trace.append(inner.lam)
            report.inner_iters_trace.append(inner.iterations)
            logger.debug(
                "[DinkelbachSolver] outer %s q=%s F=%s lambda=%s inner=%s",
                outer,
                q,
                f_value,
                inner.lam,
                inner.iterations,
            )

            report.f_trace.append(f_value)
            if incumbent is not None and f_value < 0:
                # The incumbent's EE equals q, so its F is zero here.
                logger.info(
                    "[DinkelbachSolver] Keeping the incumbent at q=%s; inner F=%s",
                    q,
                    f_value,
                )
                report.incumbent_kept = True
                report.ee_trace.append((cumulative, q))
                report.converged = True
                break

            incumbent = inner.allocation
            q_next = se / power
            report.ee_trace.append((cumulative, q_next))
            if f_value < params.convergence_tol:
                report.converged = True
                break
            q = q_next

        report.converged = report.converged and all(inner_ok)
        if not report.converged:
            logger.warning(
                "[DinkelbachSolver] No convergence after %s outer iterations",
                report.outer_iters,
            )
        self._finalize(report, incumbent)
        return incumbent, report

    def sem_solve(self) -> Tuple[Allocation, SolveReport]:
        """Maximize SE under the budget: the q = 0 inner problem."""
        report = SolveReport(mode="SEM")
        inner = self.inner_solve(0.0)
        se = system_se(inner.allocation, self.chan, self.params)
        report.q_trace.append(0.0)
        report.lambda_trace.append(inner.lam)
        report.f_trace.append(se)
        report.inner_iters_trace.append(inner.iterations)
        report.converged = inner.converged
        self._finalize(report, inner.allocation)
        report.ee_trace.append((report.total_inner_iters, report.final_ee))
        return inner.allocation, report


def inner_solve(
    chan: ChannelRealization, q: float, params: SystemParams
) -> InnerSolution:
    """Solve the parameterized subproblem for one q on a fresh solver."""
    return DinkelbachSolver(chan, params).inner_solve(q)


def dinkelbach_solve(
    chan: ChannelRealization, params: SystemParams
) -> Tuple[Allocation, SolveReport]:
    """Return the EE-maximizing allocation and its report."""
    return DinkelbachSolver(chan, params).dinkelbach_solve()


def sem_solve(
    chan: ChannelRealization, params: SystemParams
) -> Tuple[Allocation, SolveReport]:
    """Return the SE-maximizing allocation and its report."""
    return DinkelbachSolver(chan, params).sem_solve()


class EemAllocator(IAllocator):
    """Energy-efficiency maximization through Dinkelbach's iteration."""

    mode = "EEM"

    def __init__(self, params: SystemParams) -> None:
        self.params = params

    def solve(self, chan: ChannelRealization) -> Tuple[Allocation, SolveReport]:
        return dinkelbach_solve(chan, self.params)


class SemAllocator(IAllocator):
    """Spectral-efficiency maximization under the power budget."""

    mode = "SEM"

    def __init__(self, params: SystemParams) -> None:
        self.params = params

    def solve(self, chan: ChannelRealization) -> Tuple[Allocation, SolveReport]:
        return sem_solve(chan, self.params)
