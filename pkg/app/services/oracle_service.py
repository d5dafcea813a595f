"""Exhaustive-search reference maximizer for small instances.

Every per-subcarrier assignment pattern (unused, Direct to user k, or AF to
user k) is enumerated. For each pattern the transmit power of the active
subcarriers walks a simplex grid whose shares sum to at most P_max, and each AF
subcarrier additionally walks a grid of first-hop splits. The objective of
every grid point is evaluated with the rate and power functions of
`objective_service` and the first maximum in enumeration order is kept.
"""

import itertools
import math
from functools import lru_cache
from typing import Callable, Iterator, List, Tuple

import numpy as np

from app.errors import BaseAppException, EnumerationBudgetError
from app.models import (
    Allocation,
    ChannelRealization,
    GridSpec,
    Protocol,
    SolveReport,
    SystemParams,
)
from app.services.allocator_methods import IAllocator
from app.services.objective_service import (
    af_fraction,
    af_rate,
    check_feasible,
    consumed_power,
    direct_rate,
    energy_efficiency,
    system_power,
    system_se,
)
from app.utils.logger import get_logger

logger = get_logger(__name__)

# Upper bound on grid points evaluated in one vectorized block.
_BLOCK_SIZE = 1 << 20

Choice = Tuple[Protocol, int]


@lru_cache(maxsize=64)
def simplex_grid(n_active: int, levels: int) -> np.ndarray:
    """
    Return every integer vector of length `n_active` with entries summing to
    at most `levels`, shape (C(levels + n_active, n_active), n_active).

    Built by stars and bars: each sorted choice of `n_active` bar positions
    among levels + n_active slots gives the gaps between consecutive bars.
    """
    if n_active == 0:
        grid = np.zeros((1, 0), dtype=int)
    else:
        bars = np.array(
            list(itertools.combinations(range(levels + n_active), n_active)), dtype=int
        )
        grid = np.diff(bars, axis=1, prepend=-1) - 1
    grid.setflags(write=False)
    return grid


@lru_cache(maxsize=64)
def split_grid(n_af: int, beta_levels: int) -> np.ndarray:
    """Return every combination of splits j/beta_levels, j = 1..beta_levels-1."""
    if n_af == 0:
        grid = np.zeros((1, 0))
    else:
        values = np.arange(1, beta_levels) / beta_levels
        grid = np.array(list(itertools.product(values, repeat=n_af)), dtype=float)
    grid.setflags(write=False)
    return grid


def _choices(chan: ChannelRealization) -> List[Choice]:
    options: List[Choice] = [(Protocol.UNUSED, -1)]
    options += [(Protocol.DIRECT, k) for k in range(chan.n_users)]
    if chan.has_relays:
        options += [(Protocol.AF, k) for k in range(chan.n_users)]
    return options


def required_evaluations(chan: ChannelRealization, grid: GridSpec) -> int:
    """
    Return the number of grid points the exhaustive search evaluates.

    Counts patterns by their number of active subcarriers a and AF
    subcarriers r: C(N, a) * C(a, r) * K^a patterns, each with
    C(L + a, a) power points times (B - 1)^r split points.
    """
    n_sub, n_users = chan.n_subcarriers, chan.n_users
    max_af = n_sub if chan.has_relays else 0
    total = 0
    for active in range(n_sub + 1):
        power_points = math.comb(grid.levels_per_power + active, active)
        patterns = math.comb(n_sub, active) * n_users**active
        for n_af in range(min(active, max_af) + 1):
            splits = (grid.beta_levels - 1) ** n_af
            total += patterns * math.comb(active, n_af) * power_points * splits
    return total


def _patterns(chan: ChannelRealization) -> Iterator[Tuple[Choice, ...]]:
    return itertools.product(_choices(chan), repeat=chan.n_subcarriers)


def _evaluate_pattern(
    pattern: Tuple[Choice, ...],
    chan: ChannelRealization,
    params: SystemParams,
    grid: GridSpec,
    objective: str,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Return (best value, power shares, splits) of one pattern.

    Power shares are the P_max fractions of the active subcarriers in pattern
    order; splits are the betas of its AF subcarriers.
    """
    active = [
        (n, proto, k)
        for n, (proto, k) in enumerate(pattern)
        if proto != Protocol.UNUSED
    ]
    direct_pos = [i for i, entry in enumerate(active) if entry[1] == Protocol.DIRECT]
    af_pos = [i for i, entry in enumerate(active) if entry[1] == Protocol.AF]

    shares = simplex_grid(len(active), grid.levels_per_power) / grid.levels_per_power
    powers = shares * params.p_max_w
    splits = split_grid(len(af_pos), grid.beta_levels)

    direct_sum = np.zeros(len(powers))
    direct_power = np.zeros(len(powers))
    for i in direct_pos:
        n, _, k = active[i]
        direct_sum += direct_rate(powers[:, i], chan.g_bs_ue[k, n], params)
        direct_power += powers[:, i]

    first_hop = chan.first_hop_gains() if af_pos else None
    block = max(1, _BLOCK_SIZE // max(len(powers), 1))
    best_value, best_index = -math.inf, (0, 0)
    for start in range(0, len(splits), block):
        betas = splits[start : start + block]
        rate = np.repeat(direct_sum[:, None], len(betas), axis=1)
        p_bs = np.zeros_like(rate)
        p_rn = np.zeros_like(rate)
        for column, i in enumerate(af_pos):
            n, _, k = active[i]
            hop_bs = powers[:, i][:, None] * betas[:, column][None, :]
            hop_rn = powers[:, i][:, None] * (1.0 - betas[:, column])[None, :]
            rate = rate + af_rate(
                hop_bs, first_hop[k, n], hop_rn, chan.g_rn_ue[k, n], params
            )
            p_bs += hop_bs
            p_rn += hop_rn

        se = rate / chan.n_subcarriers
        if objective == "EE":
            power = consumed_power(direct_power[:, None], p_bs, p_rn, params)
            with np.errstate(divide="ignore", invalid="ignore"):
                values = np.where(power > 0, se / power, 0.0)
        else:
            values = se
        flat = int(np.argmax(values))
        row, col = divmod(flat, values.shape[1])
        if values[row, col] > best_value:
            best_value, best_index = float(values[row, col]), (row, start + col)

    row, col = best_index
    return best_value, shares[row], splits[col]


def _build_allocation(
    pattern: Tuple[Choice, ...],
    shares: np.ndarray,
    betas: np.ndarray,
    chan: ChannelRealization,
    params: SystemParams,
) -> Allocation:
    shape = (chan.n_users, chan.n_subcarriers)
    p_direct, p_af_bs, p_af_rn = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    protocol = np.full(chan.n_subcarriers, Protocol.UNUSED)
    user = np.full(chan.n_subcarriers, -1)

    position, af_column = 0, 0
    for n, (proto, k) in enumerate(pattern):
        if proto == Protocol.UNUSED:
            continue
        power = shares[position] * params.p_max_w
        position += 1
        if proto == Protocol.AF:
            beta = betas[af_column]
            af_column += 1
            p_af_bs[k, n] = beta * power
            p_af_rn[k, n] = (1.0 - beta) * power
        else:
            p_direct[k, n] = power
        # A zero-power winner carries nothing; report it as unused.
        if power > 0:
            protocol[n], user[n] = proto, k
    return Allocation(protocol, user, p_direct, p_af_bs, p_af_rn)


def _search(
    chan: ChannelRealization, params: SystemParams, grid: GridSpec, objective: str
) -> Tuple[float, Allocation]:
    chan.check_against(params)
    required = required_evaluations(chan, grid)
    if required > grid.max_evaluations:
        logger.error(
            "[OracleService] Refusing search: %s evaluations exceed budget %s",
            required,
            grid.max_evaluations,
        )
        raise EnumerationBudgetError(required, grid.max_evaluations)

    best_value = -math.inf
    best = None
    for pattern in _patterns(chan):
        value, shares, betas = _evaluate_pattern(pattern, chan, params, grid, objective)
        if value > best_value:
            best_value, best = value, (pattern, shares, betas)

    allocation = _build_allocation(*best, chan, params)
    violations = check_feasible(allocation, params)
    if violations:
        logger.error(
            "[OracleService] Infeasible optimum: %s", [v.constraint for v in violations]
        )
        raise BaseAppException(
            "Exhaustive search produced an infeasible allocation",
            details="; ".join(v.message for v in violations),
        )
    if objective == "EE":
        value = energy_efficiency(allocation, chan, params)
    else:
        value = system_se(allocation, chan, params)
    logger.debug(
        "[OracleService] %s optimum %s over %s evaluations", objective, value, required
    )
    return value, allocation


def oracle_best_ee(
    chan: ChannelRealization, params: SystemParams, grid: GridSpec = GridSpec()
) -> Tuple[float, Allocation]:
    """
    Return the best energy efficiency on the grid and its allocation.

    Raises:
        EnumerationBudgetError: If the grid needs more than
            grid.max_evaluations evaluations.
    """
    return _search(chan, params, grid, "EE")


def oracle_best_se(
    chan: ChannelRealization, params: SystemParams, grid: GridSpec = GridSpec()
) -> Tuple[float, Allocation]:
    """Return the best spectral efficiency on the grid and its allocation."""
    return _search(chan, params, grid, "SE")


class OracleAllocator(IAllocator):
    """Exhaustive search exposed through the allocator contract."""

    mode = "ORACLE"

    def __init__(
        self, params: SystemParams, grid: GridSpec = GridSpec(), objective: str = "EE"
    ) -> None:
        self.params = params
        self.grid = grid
        self._search: Callable = oracle_best_ee if objective == "EE" else oracle_best_se

    def solve(self, chan: ChannelRealization) -> Tuple[Allocation, SolveReport]:
        _, allocation = self._search(chan, self.params, self.grid)
        report = SolveReport(mode=self.mode, converged=True)
        report.final_se = system_se(allocation, chan, self.params)
        report.final_power_w = system_power(allocation, self.params)
        report.final_ee = energy_efficiency(allocation, chan, self.params)
        report.final_rho = af_fraction(allocation)
        return allocation, report
