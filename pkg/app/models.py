"""Domain models for the application.

This module defines the system parameters, the cell geometry, the channel
realizations, candidate allocations and the solver state and reports shared by
all services. Array-carrying models are frozen dataclasses whose numpy arrays
are made read-only at construction; parameter models are pydantic models.
"""

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.errors import ValidationError


def _frozen(array: Any, dtype=float) -> np.ndarray:
    """Return a read-only copy of `array` with the given dtype."""
    result = np.array(array, dtype=dtype, copy=True)
    result.setflags(write=False)
    return result


class LinkClass(str, Enum):
    """Propagation class selecting the path-loss coefficients."""

    LOS = "LOS"
    NLOS = "NLOS"


class Protocol(IntEnum):
    """Per-subcarrier transmission protocol."""

    UNUSED = 0
    DIRECT = 1
    AF = 2


class SystemParams(BaseModel):
    """Scalar constants of the cell, the power model and the solver.

    Attributes:
        n_subcarriers (int): Number of subcarriers N.
        subcarrier_bandwidth_hz (float): Subcarrier bandwidth W.
        noise_psd_dbm_hz (float): Noise power spectral density N0.
        snr_gap_db (float): SNR gap of the transceivers.
        p_max_dbm (float): Total instantaneous transmit power budget.
        p_fixed_bs_w (float): Fixed consumption of the BS.
        p_fixed_rn_w (float): Fixed consumption of each RN.
        inv_drain_eff_bs (float): Reciprocal drain efficiency of the BS amplifier.
        inv_drain_eff_rn (float): Reciprocal drain efficiency of the RN amplifiers.
        n_relays (int): Number of relays M.
        n_users (int): Number of users K.
        cell_radius_m (float): Cell radius.
        convergence_tol (float): Outer-loop stop threshold on R - q*P.
        dual_tol (float): Budget residual tolerance, relative to P_max.
        dual_step (float): Constant step of the lambda update, normalized units.
        max_outer_iters (int): Outer-loop iteration cap.
        max_inner_iters (int): Inner-loop iteration cap.
        pl_*_db (float): Path-loss intercept A and slope B per link class,
            PL(dB) = A + B*log10(d_km).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_subcarriers: int = Field(16, gt=0)
    subcarrier_bandwidth_hz: float = Field(12e3, gt=0)
    noise_psd_dbm_hz: float = -174.0
    snr_gap_db: float = Field(0.0, ge=0)
    p_max_dbm: float = 0.0
    p_fixed_bs_w: float = Field(60.0, ge=0)
    p_fixed_rn_w: float = Field(20.0, ge=0)
    inv_drain_eff_bs: float = Field(2.6, gt=1)
    inv_drain_eff_rn: float = Field(5.0, gt=1)
    n_relays: int = Field(3, ge=0)
    n_users: int = Field(8, gt=0)
    cell_radius_m: float = Field(1500.0, gt=0)
    convergence_tol: float = Field(1e-8, gt=0)
    dual_tol: float = Field(1e-6, gt=0)
    dual_step: float = Field(1e-2, gt=0)
    max_outer_iters: int = Field(50, gt=0)
    max_inner_iters: int = Field(5000, gt=0)
    pl_los_a_db: float = 100.7
    pl_los_b_db: float = Field(23.5, gt=0)
    pl_nlos_a_db: float = 131.1
    pl_nlos_b_db: float = Field(42.8, gt=0)

    @property
    def noise_w(self) -> float:
        """Noise power N0*W on one subcarrier, in Watts."""
        noise_psd_w_hz = 10 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0)
        return noise_psd_w_hz * self.subcarrier_bandwidth_hz

    @property
    def snr_gap_linear(self) -> float:
        return 10 ** (self.snr_gap_db / 10.0)

    @property
    def noise_floor_w(self) -> float:
        """Effective noise Δγ*N0*W dividing every received power."""
        return self.snr_gap_linear * self.noise_w

    @property
    def p_max_w(self) -> float:
        return 10 ** ((self.p_max_dbm - 30.0) / 10.0)

    @property
    def fixed_power_w(self) -> float:
        """Circuit consumption P_C^(B) + M*P_C^(R)."""
        return self.p_fixed_bs_w + self.n_relays * self.p_fixed_rn_w

    def check_derived(self) -> None:
        """Raise ValidationError unless the derived linear quantities are usable."""
        for name in ("noise_w", "noise_floor_w", "p_max_w"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(
                    f"Derived quantity '{name}' must be finite and positive",
                    details=f"{name}={value!r}",
                )


@dataclass(frozen=True)
class Topology:
    """Node positions and the user-to-relay map.

    Attributes:
        bs_position (np.ndarray): BS coordinates, shape (2,).
        rn_positions (np.ndarray): RN coordinates, shape (M, 2).
        ue_positions (np.ndarray): UE coordinates, shape (K, 2).
        relay_of_user (np.ndarray): Index of the nearest RN for each UE, shape
            (K,), or (0,) when there are no relays.
    """

    bs_position: np.ndarray
    rn_positions: np.ndarray
    ue_positions: np.ndarray
    relay_of_user: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bs_position", _frozen(self.bs_position).reshape(2))
        object.__setattr__(
            self, "rn_positions", _frozen(self.rn_positions).reshape(-1, 2)
        )
        object.__setattr__(
            self, "ue_positions", _frozen(self.ue_positions).reshape(-1, 2)
        )
        object.__setattr__(self, "relay_of_user", _frozen(self.relay_of_user, int))
        expected = self.n_users if self.n_relays else 0
        if self.relay_of_user.shape != (expected,):
            raise ValidationError(
                "relay_of_user must hold one relay index per user",
                details=f"shape={self.relay_of_user.shape} expected=({expected},)",
            )
        if expected and (
            self.relay_of_user.min() < 0 or self.relay_of_user.max() >= self.n_relays
        ):
            raise ValidationError("relay_of_user references an unknown relay")

    @property
    def n_users(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def n_relays(self) -> int:
        return self.rn_positions.shape[0]


@dataclass(frozen=True)
class ChannelRealization:
    """Per-subcarrier linear power gains of every link.

    Attributes:
        g_bs_ue (np.ndarray): BS-to-UE gains, shape (K, N).
        g_bs_rn (np.ndarray): BS-to-RN gains, shape (M, N).
        g_rn_ue (np.ndarray): Gains from each user's assigned RN to the user,
            shape (K, N); shape (0, N) when there are no relays.
        relay_of_user (np.ndarray): The user-to-relay map of the topology.
        seed (int): The seed the fading was drawn with.
    """

    g_bs_ue: np.ndarray
    g_bs_rn: np.ndarray
    g_rn_ue: np.ndarray
    relay_of_user: np.ndarray
    seed: int = 0

    def __post_init__(self):
        g_bs_ue = _frozen(self.g_bs_ue)
        if g_bs_ue.ndim != 2:
            raise ValidationError("g_bs_ue must be a K x N matrix")
        n_sub = g_bs_ue.shape[1]
        object.__setattr__(self, "g_bs_ue", g_bs_ue)
        object.__setattr__(self, "g_bs_rn", _frozen(self.g_bs_rn).reshape(-1, n_sub))
        object.__setattr__(self, "g_rn_ue", _frozen(self.g_rn_ue).reshape(-1, n_sub))
        object.__setattr__(self, "relay_of_user", _frozen(self.relay_of_user, int))

        n_users, n_relays = self.n_users, self.n_relays
        relay_rows = n_users if n_relays else 0
        if self.g_rn_ue.shape != (relay_rows, n_sub):
            raise ValidationError(
                "g_rn_ue must be K x N when relays exist and empty otherwise",
                details=f"shape={self.g_rn_ue.shape}",
            )
        if self.relay_of_user.shape != (relay_rows,):
            raise ValidationError(
                "relay_of_user does not match the number of users",
                details=f"shape={self.relay_of_user.shape}",
            )
        for name in ("g_bs_ue", "g_bs_rn", "g_rn_ue"):
            gains = getattr(self, name)
            if gains.size and not (np.all(np.isfinite(gains)) and np.all(gains > 0)):
                raise ValidationError(
                    f"All gains in {name} must be finite and positive"
                )

    @property
    def n_users(self) -> int:
        return self.g_bs_ue.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.g_bs_ue.shape[1]

    @property
    def n_relays(self) -> int:
        return self.g_bs_rn.shape[0]

    @property
    def has_relays(self) -> bool:
        return self.n_relays > 0

    def first_hop_gains(self) -> np.ndarray:
        """Return the BS-to-RN gain seen by each user's relay path, shape (K, N)."""
        return self.g_bs_rn[self.relay_of_user]

    def check_against(self, params: SystemParams) -> None:
        """Raise ValidationError if the dimensions disagree with `params`."""
        expected = (params.n_users, params.n_subcarriers, params.n_relays)
        actual = (self.n_users, self.n_subcarriers, self.n_relays)
        if expected != actual:
            raise ValidationError(
                "Channel dimensions do not match the system parameters",
                details=f"(K, N, M) expected={expected} actual={actual}",
            )


@dataclass(frozen=True)
class Allocation:
    """A binary subcarrier assignment with its transmit powers.

    Attributes:
        protocol (np.ndarray): Protocol per subcarrier, shape (N,).
        user (np.ndarray): Owning user per subcarrier, -1 when unused, shape (N,).
        p_direct (np.ndarray): Direct BS-to-UE powers in Watts, shape (K, N).
        p_af_bs (np.ndarray): AF first-hop powers in Watts, shape (K, N).
        p_af_rn (np.ndarray): AF second-hop powers in Watts, shape (K, N).
    """

    protocol: np.ndarray
    user: np.ndarray
    p_direct: np.ndarray
    p_af_bs: np.ndarray
    p_af_rn: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "protocol", _frozen(self.protocol, np.int8))
        object.__setattr__(self, "user", _frozen(self.user, int))
        for name in ("p_direct", "p_af_bs", "p_af_rn"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        shape = self.p_direct.shape
        if len(shape) != 2 or {self.p_af_bs.shape, self.p_af_rn.shape} != {shape}:
            raise ValidationError("Power matrices must share one K x N shape")
        if self.protocol.shape != (shape[1],) or self.user.shape != (shape[1],):
            raise ValidationError(
                "Assignment vectors must have one entry per subcarrier"
            )
        unused = self.protocol == Protocol.UNUSED
        if np.any(self.user[unused] != -1) or np.any(
            (self.user[~unused] < 0) | (self.user[~unused] >= shape[0])
        ):
            raise ValidationError("Assignment owners are inconsistent with protocols")

    @property
    def n_users(self) -> int:
        return self.p_direct.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.p_direct.shape[1]

    @property
    def total_transmit_power_w(self) -> float:
        """Sum of every transmit power, as counted by the budget constraint."""
        return float(self.p_direct.sum() + self.p_af_bs.sum() + self.p_af_rn.sum())

    def assignment(self) -> List[Tuple[Protocol, int]]:
        """Return (protocol, user) per subcarrier; user is -1 when unused."""
        return [
            (Protocol(int(proto)), int(owner))
            for proto, owner in zip(self.protocol, self.user)
        ]

    def scaled(self, factor: float) -> "Allocation":
        """Return a copy whose powers are multiplied by `factor`."""
        return Allocation(
            protocol=self.protocol,
            user=self.user,
            p_direct=self.p_direct * factor,
            p_af_bs=self.p_af_bs * factor,
            p_af_rn=self.p_af_rn * factor,
        )


@dataclass
class DualState:
    """Multiplier pair of the parameterized subproblem.

    `n_subcarriers` converts the averaged-SE parameter q into the summed-rate
    parameter seen by the per-subcarrier closed forms (q_sum = N*q).
    """

    lam: float
    q: float
    inner_iter: int = 0
    outer_iter: int = 0
    n_subcarriers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValidationError("lambda must be finite and nonnegative")
        if not (self.q >= 0 and math.isfinite(self.q)):
            raise ValidationError("q must be finite and nonnegative")
        if self.n_subcarriers < 1:
            raise ValidationError("n_subcarriers must be positive")

    @property
    def q_sum(self) -> float:
        return self.q * self.n_subcarriers


@dataclass
class SolveReport:
    """Iteration traces and final metrics of one solve.

    Attributes:
        mode (str): "EEM", "SEM" or "ORACLE".
        q_trace (List[float]): q_i used by each outer iteration.
        lambda_trace (List[float]): Final lambda of each inner loop, Watts^-1.
        f_trace (List[float]): R - q_i*P of each outer iteration's allocation.
        inner_iters_trace (List[int]): Inner iterations spent per outer iteration.
        ee_trace (List[Tuple[int, float]]): (cumulative inner iterations, EE of
            the incumbent allocation) after each outer iteration.
        incumbent_kept (bool): True when the last inner solution had
            R - q*P < 0 and the previous allocation was returned instead.
    """

    mode: str
    q_trace: List[float] = field(default_factory=list)
    lambda_trace: List[float] = field(default_factory=list)
    f_trace: List[float] = field(default_factory=list)
    inner_iters_trace: List[int] = field(default_factory=list)
    ee_trace: List[Tuple[int, float]] = field(default_factory=list)
    final_se: float = 0.0
    final_ee: float = 0.0
    final_power_w: float = 0.0
    final_rho: float = 0.0
    converged: bool = False
    total_inner_iters: int = 0
    incumbent_kept: bool = False

    @property
    def outer_iters(self) -> int:
        return len(self.q_trace)


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the exhaustive search.

    Powers take the values i*P_max/levels_per_power, i = 0..levels_per_power,
    with the active subcarriers' shares summing to at most P_max. AF splits take
    the values j/beta_levels, j = 1..beta_levels-1. Doubling either level count
    keeps every previous grid point.
    """

    levels_per_power: int = 32
    beta_levels: int = 16
    includes_zero: bool = True
    max_evaluations: int = 20_000_000

    def __post_init__(self):
        if self.levels_per_power < 2:
            raise ValidationError("levels_per_power must be at least 2")
        if self.beta_levels < 2:
            raise ValidationError("beta_levels must be at least 2")
        if not self.includes_zero:
            raise ValidationError("The power grid always includes zero")
        if self.max_evaluations < 1:
            raise ValidationError("max_evaluations must be positive")

    def refined(self) -> "GridSpec":
        """Return the grid with both level counts doubled."""
        return GridSpec(
            levels_per_power=2 * self.levels_per_power,
            beta_levels=2 * self.beta_levels,
            max_evaluations=self.max_evaluations * 8,
        )
