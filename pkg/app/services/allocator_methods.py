from abc import ABC, abstractmethod
from typing import Tuple

from app.models import Allocation, ChannelRealization, SolveReport


class IAllocator(ABC):
    """Common contract of the EEM, SEM and exhaustive-search strategies."""

    #: Label written to experiment records ("EEM", "SEM", ...).
    mode: str = ""

    @abstractmethod
    def solve(self, chan: ChannelRealization) -> Tuple[Allocation, SolveReport]:
        """
        Return the allocation chosen for `chan` and a report whose final
        metrics were recomputed from that allocation.
        """
