"""Spectral efficiency, power consumption and energy efficiency of allocations.

Every number the application reports about an allocation is computed here.
The rate functions accept scalars or numpy arrays so the exhaustive search can
evaluate whole grids at once. AF rates carry their single half-duplex factor
of 1/2 inside `af_rate`; `system_se` does not apply a second one.
"""

from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from app.errors import ValidationError
from app.models import Allocation, ChannelRealization, Protocol, SystemParams

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class FeasibilityViolation:
    """One violated constraint.

    Attributes:
        constraint (str): "power_budget", "single_owner", "single_protocol",
            "nonnegative_power" or "unassigned_power".
        indices (Tuple[int, ...]): (k, n), (n,) or () depending on the constraint.
        message (str): Human-readable description.
    """

    constraint: str
    indices: Tuple[int, ...]
    message: str


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def _check_nonnegative(**powers: ArrayLike) -> None:
    for name, value in powers.items():
        if np.any(np.asarray(value) < 0):
            raise ValidationError(f"Power '{name}' must be nonnegative")


def direct_rate(p_w: ArrayLike, gain: ArrayLike, params: SystemParams) -> ArrayLike:
    """Return log2(1 + p*g/(Δγ*N0*W)) in bits/s/Hz."""
    _check_nonnegative(p_w=p_w)
    snr = np.asarray(p_w, dtype=float) * np.asarray(gain, dtype=float)
    return _scalar_or_array(np.log2(1.0 + snr / params.noise_floor_w))


def af_rate(
    p_bs_w: ArrayLike,
    gain_bs_rn: ArrayLike,
    p_rn_w: ArrayLike,
    gain_rn_ue: ArrayLike,
    params: SystemParams,
) -> ArrayLike:
    """
    Return the high-SNR two-hop AF rate 1/2*log2(1 + a*b/(Δγ*N0*W*(a + b))).

    a and b are the received powers of the two hops; the rate is zero when
    both powers are zero.
    """
    _check_nonnegative(p_bs_w=p_bs_w, p_rn_w=p_rn_w)
    a = np.asarray(p_bs_w, dtype=float) * np.asarray(gain_bs_rn, dtype=float)
    b = np.asarray(p_rn_w, dtype=float) * np.asarray(gain_rn_ue, dtype=float)
    total = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(total > 0, a * b / np.where(total > 0, total, 1.0), 0.0)
    return _scalar_or_array(0.5 * np.log2(1.0 + snr / params.noise_floor_w))


def _check_dimensions(alloc: Allocation, chan: ChannelRealization) -> None:
    if alloc.p_direct.shape != chan.g_bs_ue.shape:
        raise ValidationError(
            "Allocation and channel dimensions differ",
            details=f"allocation={alloc.p_direct.shape} channel={chan.g_bs_ue.shape}",
        )


def per_subcarrier_rates(
    alloc: Allocation, chan: ChannelRealization, params: SystemParams
) -> np.ndarray:
    """Return the rate carried by each subcarrier, shape (N,)."""
    _check_dimensions(alloc, chan)
    n_sub = alloc.n_subcarriers
    columns = np.arange(n_sub)
    rates = np.zeros(n_sub)

    direct = alloc.protocol == Protocol.DIRECT
    if np.any(direct):
        users, cols = alloc.user[direct], columns[direct]
        rates[direct] = direct_rate(
            alloc.p_direct[users, cols], chan.g_bs_ue[users, cols], params
        )

    relayed = alloc.protocol == Protocol.AF
    if np.any(relayed):
        if not chan.has_relays:
            raise ValidationError("Allocation uses AF links but the cell has no relays")
        users, cols = alloc.user[relayed], columns[relayed]
        rates[relayed] = af_rate(
            alloc.p_af_bs[users, cols],
            chan.first_hop_gains()[users, cols],
            alloc.p_af_rn[users, cols],
            chan.g_rn_ue[users, cols],
            params,
        )
    return rates


def system_se(
    alloc: Allocation, chan: ChannelRealization, params: SystemParams
) -> float:
    """Return the average SE per subcarrier, (1/N)*sum of the owners' rates."""
    return float(per_subcarrier_rates(alloc, chan, params).sum() / alloc.n_subcarriers)


def consumed_power(
    p_direct: ArrayLike, p_af_bs: ArrayLike, p_af_rn: ArrayLike, params: SystemParams
) -> ArrayLike:
    """
    Return total consumption for summed transmit powers.

    The arguments are the sums (over users and subcarriers) of each power
    type; arrays evaluate many candidates at once.
    """
    variable = params.inv_drain_eff_bs * np.asarray(p_direct, dtype=float) + 0.5 * (
        params.inv_drain_eff_bs * np.asarray(p_af_bs, dtype=float)
        + params.inv_drain_eff_rn * np.asarray(p_af_rn, dtype=float)
    )
    return _scalar_or_array(params.fixed_power_w + variable)


def system_power(alloc: Allocation, params: SystemParams) -> float:
    """Return the total power consumption in Watts."""
    return float(
        consumed_power(
            alloc.p_direct.sum(), alloc.p_af_bs.sum(), alloc.p_af_rn.sum(), params
        )
    )


def energy_efficiency(
    alloc: Allocation, chan: ChannelRealization, params: SystemParams
) -> float:
    """Return SE over consumed power, in bits/Joule/Hz."""
    return system_se(alloc, chan, params) / system_power(alloc, params)


def af_fraction(alloc: Allocation) -> float:
    """Return the fraction of subcarriers carrying AF transmissions."""
    return float(np.count_nonzero(alloc.protocol == Protocol.AF) / alloc.n_subcarriers)


def check_feasible(
    alloc: Allocation, params: SystemParams
) -> List[FeasibilityViolation]:
    """
    List every violated constraint of `alloc`.

    An empty list means: total transmit power within P_max*(1 + dual_tol),
    at most one user carrying power per subcarrier, at most one protocol per
    user-subcarrier pair, no negative powers and no power outside the
    selected (user, protocol) of each subcarrier. Subcarriers already flagged
    for ownership or protocol conflicts are not reported again as unassigned.
    """
    violations: List[FeasibilityViolation] = []

    for name in ("p_direct", "p_af_bs", "p_af_rn"):
        for k, n in np.argwhere(getattr(alloc, name) < 0):
            violations.append(
                FeasibilityViolation(
                    "nonnegative_power", (int(k), int(n)), f"{name}[{k}, {n}] < 0"
                )
            )

    total = alloc.total_transmit_power_w
    if total > params.p_max_w * (1.0 + params.dual_tol):
        violations.append(
            FeasibilityViolation(
                "power_budget",
                (),
                f"total transmit power {total!r} W exceeds P_max {params.p_max_w!r} W",
            )
        )

    direct_on = alloc.p_direct != 0
    relay_on = (alloc.p_af_bs != 0) | (alloc.p_af_rn != 0)
    flagged = np.zeros(alloc.n_subcarriers, dtype=bool)

    for k, n in np.argwhere(direct_on & relay_on):
        flagged[n] = True
        violations.append(
            FeasibilityViolation(
                "single_protocol",
                (int(k), int(n)),
                f"user {k} uses both protocols on subcarrier {n}",
            )
        )

    owners_per_subcarrier = np.count_nonzero(direct_on | relay_on, axis=0)
    for n in np.flatnonzero(owners_per_subcarrier > 1):
        flagged[n] = True
        violations.append(
            FeasibilityViolation(
                "single_owner",
                (int(n),),
                f"{owners_per_subcarrier[n]} users carry power on subcarrier {n}",
            )
        )

    selected_direct = np.zeros_like(direct_on)
    selected_relay = np.zeros_like(relay_on)
    columns = np.arange(alloc.n_subcarriers)
    direct = alloc.protocol == Protocol.DIRECT
    relayed = alloc.protocol == Protocol.AF
    selected_direct[alloc.user[direct], columns[direct]] = True
    selected_relay[alloc.user[relayed], columns[relayed]] = True
    stray = ((direct_on & ~selected_direct) | (relay_on & ~selected_relay)) & ~flagged
    for k, n in np.argwhere(stray):
        violations.append(
            FeasibilityViolation(
                "unassigned_power",
                (int(k), int(n)),
                f"power on (user {k}, subcarrier {n}) outside the selected protocol",
            )
        )
    return violations
