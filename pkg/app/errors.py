"""Module for application-specific exceptions.

This module defines the exceptions raised by the solver library and the
experiment CLI. Every exception carries the process exit code the CLI returns
when it escapes a command, so the error class is visible to calling scripts.
"""

from typing import Optional


class BaseAppException(Exception):
    """Base exception for the application's domain errors.

    Attributes:
        message (str): The error message.
        exit_code (int): Process exit code associated with the error.
        details (Optional[str]): Additional error details.
    """

    def __init__(self, message: str, exit_code: int = 1, details: Optional[str] = None):
        """
        Initialize a BaseAppException.

        Args:
            message (str): The error message.
            exit_code (int): The process exit code (default 1).
            details (Optional[str]): Additional error details.
        """
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.details = details


class ValidationError(BaseAppException):
    """Exception raised for invalid parameters, inputs or configs (exit code 2)."""

    def __init__(self, message: str, details: Optional[str] = None):
        """
        Initialize a ValidationError.

        Args:
            message (str): The error message.
            details (Optional[str]): Additional error details.
        """
        super().__init__(message, exit_code=2, details=details)


class ResourceNotFoundError(BaseAppException):
    """Exception raised when a config or instance file is missing (exit code 3)."""

    def __init__(
        self, message: str = "Resource not found", details: Optional[str] = None
    ):
        """
        Initialize a ResourceNotFoundError.

        Args:
            message (str): The error message. Defaults to "Resource not found".
            details (Optional[str]): Additional error details.
        """
        super().__init__(message, exit_code=3, details=details)


class DualStateError(BaseAppException):
    """Exception raised when (q, lambda) make a water level unbounded (exit code 4)."""

    def __init__(
        self, message: str = "Degenerate dual state", details: Optional[str] = None
    ):
        super().__init__(message, exit_code=4, details=details)


class EnumerationBudgetError(BaseAppException):
    """Exception raised when exhaustive search would exceed its budget (exit code 5).

    Attributes:
        required (int): Number of grid evaluations the search would need.
    """

    def __init__(self, required: int, budget: int):
        super().__init__(
            "Exhaustive search exceeds the enumeration budget",
            exit_code=5,
            details=f"required={required} budget={budget}",
        )
        self.required = required
        self.budget = budget
