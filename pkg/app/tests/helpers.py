# app/tests/helpers.py
from typing import Iterable, Optional, Tuple

import numpy as np

from app.models import Allocation, ChannelRealization, Protocol, SystemParams
from app.services.experiment_service import generate_instance


def unit_params(**overrides) -> SystemParams:
    """
    Parameters whose noise floor (W=1 Hz, N0=30 dBm/Hz, 0 dB gap) and power
    budget (30 dBm) are both exactly 1 W, so gains read as SNR per Watt.
    """
    values = dict(
        n_subcarriers=1,
        subcarrier_bandwidth_hz=1.0,
        noise_psd_dbm_hz=30.0,
        snr_gap_db=0.0,
        p_max_dbm=30.0,
        n_relays=0,
        n_users=1,
    )
    values.update(overrides)
    return SystemParams(**values)


def small_params(**overrides) -> SystemParams:
    """Default physical constants on a desk-sized K=2, N=2, M=1 cell."""
    values = dict(n_subcarriers=2, n_users=2, n_relays=1)
    values.update(overrides)
    return SystemParams(**values)


def make_channel(
    g_bs_ue,
    g_bs_rn=None,
    g_rn_ue=None,
    relay_of_user: Optional[Iterable[int]] = None,
    seed: int = 0,
) -> ChannelRealization:
    """Build a channel; omitted relay matrices mean a cell without relays."""
    g_bs_ue = np.atleast_2d(np.asarray(g_bs_ue, dtype=float))
    n_users, n_sub = g_bs_ue.shape
    if g_bs_rn is None:
        return ChannelRealization(
            g_bs_ue=g_bs_ue,
            g_bs_rn=np.zeros((0, n_sub)),
            g_rn_ue=np.zeros((0, n_sub)),
            relay_of_user=np.zeros(0, dtype=int),
            seed=seed,
        )
    return ChannelRealization(
        g_bs_ue=g_bs_ue,
        g_bs_rn=np.atleast_2d(np.asarray(g_bs_rn, dtype=float)),
        g_rn_ue=np.atleast_2d(np.asarray(g_rn_ue, dtype=float)),
        relay_of_user=(
            np.zeros(n_users, dtype=int)
            if relay_of_user is None
            else np.asarray(list(relay_of_user), dtype=int)
        ),
        seed=seed,
    )


def make_allocation(
    n_users: int,
    n_subcarriers: int,
    entries: Iterable[Tuple[int, Protocol, int, float, float, float]] = (),
) -> Allocation:
    """
    Build an allocation from (n, protocol, k, p_direct, p_af_bs, p_af_rn)
    entries; subcarriers without an entry stay unused.
    """
    shape = (n_users, n_subcarriers)
    p_direct, p_af_bs, p_af_rn = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    protocol = np.full(n_subcarriers, int(Protocol.UNUSED))
    user = np.full(n_subcarriers, -1)
    for n, proto, k, direct, bs, rn in entries:
        protocol[n], user[n] = int(proto), k
        p_direct[k, n], p_af_bs[k, n], p_af_rn[k, n] = direct, bs, rn
    return Allocation(protocol, user, p_direct, p_af_bs, p_af_rn)


def random_channel(params: SystemParams, seed: int) -> ChannelRealization:
    """Draw the channel an experiment would use for a sample seed."""
    _, chan = generate_instance(params, seed)
    return chan
