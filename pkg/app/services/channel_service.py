"""Cell geometry and channel generation.

This module places the relays and users of a single cell, assigns each user to
its nearest relay and draws per-subcarrier link gains as path loss times
Rayleigh fading. All randomness comes from `numpy.random.default_rng(seed)`,
so equal (params, seed) inputs give bit-identical outputs.
"""

from typing import Union

import numpy as np

from app.errors import ValidationError
from app.models import ChannelRealization, LinkClass, SystemParams, Topology
from app.utils.logger import get_logger

logger = get_logger(__name__)

# Guard against near-singular path loss for users sitting on the BS.
MIN_BS_UE_DISTANCE_M = 10.0

ArrayLike = Union[float, np.ndarray]


def generate_topology(params: SystemParams, seed: int) -> Topology:
    """
    Place the BS, the relays and the users of one cell.

    Relays sit at half the cell radius in the centres of M equal sectors
    (angles 2*pi*m/M + pi/M). Users are uniform over the disc, at least
    MIN_BS_UE_DISTANCE_M from the BS, and are served by their nearest relay
    (lowest index on ties).

    Args:
        params (SystemParams): The system parameters.
        seed (int): Seed of the placement stream.

    Returns:
        Topology: The generated cell.
    """
    rng = np.random.default_rng(seed)
    radius = params.cell_radius_m
    n_relays, n_users = params.n_relays, params.n_users

    angles = 2 * np.pi * np.arange(n_relays) / max(n_relays, 1) + np.pi / max(
        n_relays, 1
    )
    rn_positions = 0.5 * radius * np.column_stack((np.cos(angles), np.sin(angles)))

    # Inverse-CDF sampling of the radius gives uniform density over the annulus.
    r_min = min(MIN_BS_UE_DISTANCE_M, radius)
    u_radius = rng.random(n_users)
    u_angle = rng.random(n_users)
    ue_radius = np.sqrt(u_radius * (radius**2 - r_min**2) + r_min**2)
    ue_angle = 2 * np.pi * u_angle
    ue_positions = np.column_stack(
        (ue_radius * np.cos(ue_angle), ue_radius * np.sin(ue_angle))
    )

    if n_relays:
        distances = np.linalg.norm(
            ue_positions[:, None, :] - rn_positions[None, :, :], axis=2
        )
        relay_of_user = np.argmin(distances, axis=1)
    else:
        relay_of_user = np.zeros(0, dtype=int)

    logger.debug(
        "[ChannelService] Generated topology K=%s M=%s seed=%s", n_users, n_relays, seed
    )
    return Topology(
        bs_position=np.zeros(2),
        rn_positions=rn_positions,
        ue_positions=ue_positions,
        relay_of_user=relay_of_user,
    )


def path_loss_gain(
    link_class: LinkClass, distance_m: ArrayLike, params: SystemParams
) -> ArrayLike:
    """
    Return the linear path-loss gain 10^(-(A + B*log10(d_km))/10).

    Args:
        link_class (LinkClass): LOS or NLOS, selecting (A, B).
        distance_m (float | np.ndarray): Link distance(s) in meters.
        params (SystemParams): Source of the coefficients.

    Raises:
        ValidationError: If any distance is not strictly positive.
    """
    distance = np.asarray(distance_m, dtype=float)
    if np.any(~(distance > 0)):
        raise ValidationError(
            "Path-loss distance must be strictly positive",
            details=f"distance_m={distance_m!r}",
        )
    if LinkClass(link_class) is LinkClass.LOS:
        a_db, b_db = params.pl_los_a_db, params.pl_los_b_db
    else:
        a_db, b_db = params.pl_nlos_a_db, params.pl_nlos_b_db
    gain = 10.0 ** (-(a_db + b_db * np.log10(distance / 1000.0)) / 10.0)
    return float(gain) if gain.ndim == 0 else gain


def rayleigh_power(rng: np.random.Generator, shape) -> np.ndarray:
    """Draw |h|^2 for h ~ CN(0, 1): unit-mean exponential power samples."""
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    power = np.abs(h) ** 2
    # |h|^2 == 0 has probability zero but would break the positivity contract.
    return np.maximum(power, np.finfo(float).tiny)


def generate_channel(
    topology: Topology, params: SystemParams, seed: int
) -> ChannelRealization:
    """
    Draw one channel realization for a topology.

    BS-to-RN links use the LOS coefficients, BS-to-UE and RN-to-UE links the
    NLOS ones. Fading is i.i.d. per link and subcarrier, drawn in the fixed
    order BS-UE, BS-RN, RN-UE.

    Raises:
        ValidationError: If the topology does not match (K, M) of `params`.
    """
    if topology.n_users != params.n_users or topology.n_relays != params.n_relays:
        raise ValidationError(
            "Topology does not match the system parameters",
            details=(
                f"(K, M) params=({params.n_users}, {params.n_relays}) "
                f"topology=({topology.n_users}, {topology.n_relays})"
            ),
        )
    rng = np.random.default_rng(seed)
    n_users, n_relays, n_sub = params.n_users, params.n_relays, params.n_subcarriers

    d_bs_ue = np.linalg.norm(topology.ue_positions - topology.bs_position, axis=1)
    pl_bs_ue = path_loss_gain(LinkClass.NLOS, d_bs_ue, params)
    g_bs_ue = pl_bs_ue[:, None] * rayleigh_power(rng, (n_users, n_sub))

    if n_relays:
        d_bs_rn = np.linalg.norm(topology.rn_positions - topology.bs_position, axis=1)
        pl_bs_rn = path_loss_gain(LinkClass.LOS, d_bs_rn, params)
        g_bs_rn = pl_bs_rn[:, None] * rayleigh_power(rng, (n_relays, n_sub))

        serving = topology.rn_positions[topology.relay_of_user]
        # A user can stand on its relay; reuse the BS-side distance guard.
        d_rn_ue = np.maximum(
            np.linalg.norm(topology.ue_positions - serving, axis=1),
            MIN_BS_UE_DISTANCE_M,
        )
        pl_rn_ue = path_loss_gain(LinkClass.NLOS, d_rn_ue, params)
        g_rn_ue = pl_rn_ue[:, None] * rayleigh_power(rng, (n_users, n_sub))
    else:
        g_bs_rn = np.zeros((0, n_sub))
        g_rn_ue = np.zeros((0, n_sub))

    return ChannelRealization(
        g_bs_ue=g_bs_ue,
        g_bs_rn=g_bs_rn,
        g_rn_ue=g_rn_ue,
        relay_of_user=topology.relay_of_user,
        seed=seed,
    )
