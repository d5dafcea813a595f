"""Closed-form solutions of the per-(user, subcarrier) subproblems.

For a fixed multiplier pair (q, lambda) the Lagrangian separates over users
and subcarriers. Each direct entry is a water-filling problem; each AF entry
is a water-filling problem on an effective gain once the split beta between
the two hops is fixed, and beta itself has a closed form. The metric of an
entry equals its maximized Lagrangian contribution, so the winner rule picks,
per subcarrier, the (user, protocol) that raises the Lagrangian the most.

The vectorized helpers (`water_fill`, `split_from_costs`,
`effective_af_gain`, `rate_metric`) are unit-agnostic; the solver calls them
with powers normalized by P_max and gains normalized by the noise floor.
"""

import math
from typing import Tuple, Union

import numpy as np

from app.errors import DualStateError, ValidationError
from app.models import ChannelRealization, DualState, Protocol, SystemParams

LN2 = math.log(2.0)

ArrayLike = Union[float, np.ndarray]


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def water_fill(alpha: ArrayLike, cost: ArrayLike) -> ArrayLike:
    """Return [1/(ln2*cost) - 1/alpha]^+ elementwise."""
    alpha = np.asarray(alpha, dtype=float)
    cost = np.asarray(cost, dtype=float)
    return _out(np.maximum(1.0 / (LN2 * cost) - 1.0 / alpha, 0.0))


def split_from_costs(
    alpha_bs_rn: ArrayLike, alpha_rn_ue: ArrayLike, x: ArrayLike, y: ArrayLike
) -> ArrayLike:
    """
    Return the first-hop power share beta = sqrt(g_ru*Y)/(sqrt(g_br*X) + sqrt(g_ru*Y)).

    Algebraically equal to the ratio-of-differences form, but free of the 0/0
    that form hits when g_br*X == g_ru*Y.
    """
    first = np.sqrt(np.asarray(alpha_bs_rn, dtype=float) * np.asarray(x, dtype=float))
    second = np.sqrt(np.asarray(alpha_rn_ue, dtype=float) * np.asarray(y, dtype=float))
    return _out(second / (first + second))


def effective_af_gain(
    alpha_bs_rn: ArrayLike, alpha_rn_ue: ArrayLike, beta: ArrayLike
) -> ArrayLike:
    """Return beta*(1-beta)*a*b/(beta*a + (1-beta)*b) for hop gains a, b."""
    a = np.asarray(alpha_bs_rn, dtype=float)
    b = np.asarray(alpha_rn_ue, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return _out(beta * (1.0 - beta) * a * b / (beta * a + (1.0 - beta) * b))


def rate_metric(snr: ArrayLike) -> ArrayLike:
    """
    Return log2(1 + x) - x/(ln2*(1 + x)) for x = alpha*P*.

    Zero at x = 0 and strictly increasing for x > 0; clamped at zero against
    rounding for tiny x.
    """
    x = np.asarray(snr, dtype=float)
    return _out(np.maximum((np.log1p(x) - x / (1.0 + x)) / LN2, 0.0))


def _af_costs(state: DualState, params: SystemParams) -> Tuple[float, float]:
    x = state.q_sum * params.inv_drain_eff_bs + 2.0 * state.lam
    y = state.q_sum * params.inv_drain_eff_rn + 2.0 * state.lam
    if x <= 0 or y <= 0:
        raise DualStateError(
            "AF hop costs must be positive; q and lambda cannot both be zero",
            details=f"X={x!r} Y={y!r}",
        )
    return x, y


def _check_positive(name: str, value: ArrayLike) -> None:
    if np.any(~(np.asarray(value, dtype=float) > 0)):
        raise ValidationError(f"'{name}' must be strictly positive")


def direct_power(
    alpha_d: ArrayLike, state: DualState, params: SystemParams
) -> ArrayLike:
    """
    Return the optimal direct power [1/(ln2*(q*ξB + λ)) - 1/alpha_d]^+ in Watts.

    Raises:
        DualStateError: If q*ξB + λ is not positive (unbounded water level).
    """
    _check_positive("alpha_d", alpha_d)
    cost = state.q_sum * params.inv_drain_eff_bs + state.lam
    if cost <= 0:
        raise DualStateError(
            "Direct water level is unbounded; lambda must be positive when q = 0",
            details=f"q={state.q!r} lambda={state.lam!r}",
        )
    return water_fill(alpha_d, cost)


def af_split(
    gain_bs_rn: ArrayLike, gain_rn_ue: ArrayLike, state: DualState, params: SystemParams
) -> ArrayLike:
    """Return the share beta in (0, 1) of the AF power spent on the BS-to-RN hop."""
    _check_positive("gain_bs_rn", gain_bs_rn)
    _check_positive("gain_rn_ue", gain_rn_ue)
    x, y = _af_costs(state, params)
    return split_from_costs(gain_bs_rn, gain_rn_ue, x, y)


def af_effective_gain(
    gain_bs_rn: ArrayLike, gain_rn_ue: ArrayLike, beta: ArrayLike, params: SystemParams
) -> ArrayLike:
    """
    Return the effective AF gain for a split beta, normalized by Δγ*N0*W.

    Raises:
        ValidationError: If beta is outside (0, 1), where the gain degenerates to 0.
    """
    _check_positive("gain_bs_rn", gain_bs_rn)
    _check_positive("gain_rn_ue", gain_rn_ue)
    beta_arr = np.asarray(beta, dtype=float)
    if np.any(~((beta_arr > 0) & (beta_arr < 1))):
        raise ValidationError("beta must lie strictly between 0 and 1")
    noise = params.noise_floor_w
    return effective_af_gain(
        np.asarray(gain_bs_rn, dtype=float) / noise,
        np.asarray(gain_rn_ue, dtype=float) / noise,
        beta_arr,
    )


def af_total_power(
    alpha_a: ArrayLike, beta: ArrayLike, state: DualState, params: SystemParams
) -> ArrayLike:
    """
    Return the optimal total AF power of one entry in Watts.

    The hop powers are (beta*P, (1 - beta)*P).
    """
    _check_positive("alpha_a", alpha_a)
    x, y = _af_costs(state, params)
    beta = np.asarray(beta, dtype=float)
    return water_fill(alpha_a, beta * x + (1.0 - beta) * y)


def subcarrier_metrics(
    k: int, n: int, chan: ChannelRealization, state: DualState, params: SystemParams
) -> Tuple[float, float]:
    """
    Return the (direct, AF) metrics of user k on subcarrier n.

    The AF metric is -inf when the cell has no relays, so it is never selected.
    """
    noise = params.noise_floor_w
    alpha_d = chan.g_bs_ue[k, n] / noise
    d_metric = float(rate_metric(alpha_d * direct_power(alpha_d, state, params)))
    if not chan.has_relays:
        return d_metric, -math.inf

    g_br = chan.g_bs_rn[chan.relay_of_user[k], n]
    g_ru = chan.g_rn_ue[k, n]
    beta = af_split(g_br, g_ru, state, params)
    alpha_a = af_effective_gain(g_br, g_ru, beta, params)
    p_total = af_total_power(alpha_a, beta, state, params)
    a_metric = 0.5 * float(rate_metric(alpha_a * p_total))
    return d_metric, a_metric


def allocate_subcarriers(
    direct_metrics: np.ndarray, af_metrics: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pick the winning (user, protocol) of every subcarrier.

    Args:
        direct_metrics (np.ndarray): Direct metrics, shape (K, N).
        af_metrics (np.ndarray): AF metrics, shape (K, N); -inf where AF is
            unavailable.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (protocol, user) per subcarrier. A
        subcarrier whose best metric is <= 0 is left unused (user -1). Ties go
        to the lowest user index, then to Direct.
    """
    direct_metrics = np.asarray(direct_metrics, dtype=float)
    af_metrics = np.asarray(af_metrics, dtype=float)
    n_users, n_sub = direct_metrics.shape
    # Rows ordered (k0 D, k0 A, k1 D, ...) so argmax's first hit is the tie-break.
    stacked = np.stack((direct_metrics, af_metrics), axis=1).reshape(2 * n_users, n_sub)
    best_row = np.argmax(stacked, axis=0)
    best = stacked[best_row, np.arange(n_sub)]

    used = best > 0
    protocol = np.where(
        used, np.where(best_row % 2 == 0, Protocol.DIRECT, Protocol.AF), Protocol.UNUSED
    ).astype(np.int8)
    user = np.where(used, best_row // 2, -1)
    return protocol, user
