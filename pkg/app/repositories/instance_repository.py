"""
Instance repository module.

An instance file is a long-format CSV with columns
record, index, n, x, y, relay, gain. Records are:

- seed:    index holds the fading seed
- bs:      x, y of the base station
- rn:      index m and x, y of relay m
- ue:      index k, x, y and the serving relay of user k
- g_bs_ue, g_bs_rn, g_rn_ue: index (user or relay), subcarrier n, gain

Gains and positions are written with 17 significant digits so a saved
instance reloads bit-identically. The parameters an instance was generated
with go to a sidecar key=value file that is itself a valid experiment config.
"""

import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.errors import ResourceNotFoundError, ValidationError
from app.models import ChannelRealization, SystemParams, Topology
from app.repositories.generic_repository import GenericRepository
from app.utils.logger import get_logger

logger = get_logger(__name__)

INSTANCE_COLUMNS = ["record", "index", "n", "x", "y", "relay", "gain"]
_INTEGER_COLUMNS = {"index": "Int64", "n": "Int64", "relay": "Int64"}
_GAIN_RECORDS = ("g_bs_ue", "g_bs_rn", "g_rn_ue")


def params_path_for(instance_path: str) -> str:
    """Return the sidecar parameter file of an instance file."""
    return os.path.splitext(instance_path)[0] + ".params"


class InstanceRepository(GenericRepository):
    def __init__(self) -> None:
        super().__init__(float_format="%.17g")

    @staticmethod
    def _gain_rows(record: str, gains: np.ndarray) -> List[Dict[str, Any]]:
        return [
            {"record": record, "index": int(i), "n": int(n), "gain": float(gains[i, n])}
            for i in range(gains.shape[0])
            for n in range(gains.shape[1])
        ]

    def to_frame(self, topology: Topology, chan: ChannelRealization) -> pd.DataFrame:
        """Convert an instance to its long-format table."""
        rows: List[Dict[str, Any]] = [{"record": "seed", "index": int(chan.seed)}]
        bs_x, bs_y = topology.bs_position
        rows.append({"record": "bs", "index": 0, "x": bs_x, "y": bs_y})
        for m, (x, y) in enumerate(topology.rn_positions):
            rows.append({"record": "rn", "index": m, "x": x, "y": y})
        for k, (x, y) in enumerate(topology.ue_positions):
            row = {"record": "ue", "index": k, "x": x, "y": y}
            if topology.n_relays:
                row["relay"] = int(topology.relay_of_user[k])
            rows.append(row)
        for record in _GAIN_RECORDS:
            rows.extend(self._gain_rows(record, getattr(chan, record)))

        # Column-wise construction keeps 63-bit seeds out of float64.
        columns = {}
        for column in INSTANCE_COLUMNS:
            values = [row.get(column) for row in rows]
            if column == "record":
                columns[column] = values
            elif column in _INTEGER_COLUMNS:
                columns[column] = pd.array(values, dtype="Int64")
            else:
                filled = [np.nan if value is None else value for value in values]
                columns[column] = np.array(filled, dtype=float)
        return pd.DataFrame(columns)

    def from_frame(self, frame: pd.DataFrame) -> Tuple[Topology, ChannelRealization]:
        """
        Rebuild an instance from its long-format table.

        Raises:
            ValidationError: If records are missing or inconsistent.
        """
        missing = set(INSTANCE_COLUMNS) - set(frame.columns)
        if missing:
            raise ValidationError(f"Instance file lacks columns {sorted(missing)}")

        def records(name: str) -> pd.DataFrame:
            return frame[frame["record"] == name].sort_values(["index"], kind="stable")

        seed_rows, bs_rows = records("seed"), records("bs")
        if len(seed_rows) != 1 or len(bs_rows) != 1:
            raise ValidationError(
                "Instance file needs exactly one seed and one bs record"
            )
        rn, ue = records("rn"), records("ue")
        n_relays, n_users = len(rn), len(ue)
        g_bs_ue = records("g_bs_ue")
        if n_users == 0 or len(g_bs_ue) % n_users:
            raise ValidationError("Instance file has inconsistent g_bs_ue records")
        n_sub = len(g_bs_ue) // n_users

        def matrix(name: str, n_rows: int) -> np.ndarray:
            rows = frame[frame["record"] == name]
            if len(rows) != n_rows * n_sub:
                raise ValidationError(f"Instance file has {len(rows)} {name} records")
            gains = np.empty((n_rows, n_sub))
            gains[rows["index"].to_numpy(int), rows["n"].to_numpy(int)] = rows[
                "gain"
            ].to_numpy(float)
            return gains

        relay_of_user = np.zeros(0, dtype=int)
        if n_relays:
            relay_of_user = ue["relay"].to_numpy(int)
        topology = Topology(
            bs_position=bs_rows[["x", "y"]].to_numpy(float)[0],
            rn_positions=rn[["x", "y"]].to_numpy(float).reshape(-1, 2),
            ue_positions=ue[["x", "y"]].to_numpy(float),
            relay_of_user=relay_of_user,
        )
        chan = ChannelRealization(
            g_bs_ue=matrix("g_bs_ue", n_users),
            g_bs_rn=matrix("g_bs_rn", n_relays),
            g_rn_ue=matrix("g_rn_ue", n_users if n_relays else 0),
            relay_of_user=relay_of_user,
            seed=int(seed_rows["index"].iloc[0]),
        )
        return topology, chan

    def save_instance(
        self,
        path: str,
        topology: Topology,
        chan: ChannelRealization,
        params: Optional[SystemParams] = None,
    ) -> None:
        """Write an instance file and, when given, its parameter sidecar."""
        self.write_table(self.to_frame(topology, chan), path)
        if params is not None:
            with open(params_path_for(path), "w", encoding="utf-8") as handle:
                for key, value in params.model_dump().items():
                    handle.write(f"{key}={value!r}\n")
        logger.info("[InstanceRepository] Saved instance to %s", path)

    def load_instance(self, path: str) -> Tuple[Topology, ChannelRealization]:
        """
        Read an instance file.

        Raises:
            ResourceNotFoundError: If the file does not exist.
            ValidationError: If its content is inconsistent.
        """
        frame = self.read_table(path, dtype=_INTEGER_COLUMNS)
        return self.from_frame(frame)

    def find_params_file(self, path: str) -> str:
        """Return the parameter sidecar of `path`, which must exist."""
        sidecar = params_path_for(path)
        if not os.path.isfile(sidecar):
            raise ResourceNotFoundError(f"Parameter file '{sidecar}' not found")
        return sidecar
