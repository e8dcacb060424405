# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""Exception hierarchy shared by the library and the command line front end."""
from typing import Iterable, List, Optional, Tuple


class RegenInventoryError(Exception):
    """Base class for every error raised on purpose by this package."""


class ConfigParseError(RegenInventoryError, ValueError):
    """The configuration document could not be read or is not shaped like a config."""


class ConfigValidationError(RegenInventoryError, ValueError):
    """One or more configuration fields hold inadmissible values.

    Attributes:
        issues: ``(field_path, message)`` pairs, in the order they were found.
    """

    def __init__(self, issues: Iterable[Tuple[str, str]]):
        self.issues: List[Tuple[str, str]] = list(issues)
        super().__init__("\n".join(f"{field}: {message}" for field, message in self.issues))


class QuadratureError(RegenInventoryError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance.

    Attributes:
        abserr: Best error estimate achieved before giving up.
        what: Short description of the integral being evaluated.
    """

    def __init__(self, what: str, abserr: float, detail: Optional[str] = None):
        self.what = what
        self.abserr = float(abserr)
        message = f"quadrature for {what} did not converge (error estimate {self.abserr:.3e})"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class DispatchError(RegenInventoryError, AssertionError):
    """An (r, s) pair matched no case range, or more than one."""


class TruncationError(RegenInventoryError):
    """A flagged series truncation was promoted to an error."""
