"""
Generic repository module.

This module defines a generic repository for CSV tables. Tables are written
with a fixed float format and newline row terminator, so equal frames always
produce equal bytes. Concrete repositories should inherit from
GenericRepository and convert their domain objects to and from frames.
"""

import os
import sys
from abc import ABC
from typing import Dict, Optional

import pandas as pd

from app.errors import BaseAppException, ResourceNotFoundError
from app.utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.9g"


class GenericRepository(ABC):
    """
    A generic repository for CSV tables.

    Provides writing to a file or stdout and reading with a column dtype map.
    """

    def __init__(self, float_format: str = FLOAT_FORMAT) -> None:
        """
        Initialize the repository.

        Args:
            float_format (str): printf-style format of float cells.
        """
        self.float_format = float_format

    def write_table(self, frame: pd.DataFrame, path: Optional[str] = None) -> None:
        """
        Write a table as CSV.

        Args:
            frame (pd.DataFrame): The table to write.
            path (Optional[str]): Destination file; stdout when None.

        Raises:
            BaseAppException: If the file cannot be written.
        """
        try:
            if path:
                directory = os.path.dirname(os.path.abspath(path))
                os.makedirs(directory, exist_ok=True)
            frame.to_csv(
                path if path else sys.stdout,
                index=False,
                float_format=self.float_format,
                lineterminator="\n",
            )
            logger.debug(
                "[GenericRepository] Wrote %s rows to %s", len(frame), path or "stdout"
            )
        except Exception as error:
            logger.error(
                "[GenericRepository] Error writing table: %s", error, exc_info=True
            )
            raise BaseAppException("Error writing table", details=str(error)) from error

    def read_table(
        self, path: str, dtype: Optional[Dict[str, str]] = None
    ) -> pd.DataFrame:
        """
        Read a CSV table.

        Args:
            path (str): Source file.
            dtype (Optional[Dict[str, str]]): Column dtypes passed to pandas.

        Returns:
            pd.DataFrame: The table; empty cells are NaN or NA.

        Raises:
            ResourceNotFoundError: If the file does not exist.
            BaseAppException: If the file cannot be parsed.
        """
        if not os.path.isfile(path):
            logger.info("[GenericRepository] File %s not found", path)
            raise ResourceNotFoundError(f"File '{path}' not found")
        try:
            return pd.read_csv(
                path,
                dtype=dtype,
                keep_default_na=True,
                float_precision="round_trip",
            )
        except Exception as error:
            logger.error(
                "[GenericRepository] Error reading table: %s", error, exc_info=True
            )
            raise BaseAppException("Error reading table", details=str(error)) from error
