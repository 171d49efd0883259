"""Exception types shared across the workbench.

Every error carries a short machine-parsable slug so the CLI and server can
map failures to exit messages and HTTP status codes without string matching.
"""


class NavlearnError(Exception):
    """Base class; `slug` identifies the failure category."""

    slug = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class GeometryMismatchError(NavlearnError):
    slug = "geometry-mismatch"


class OutOfBoundsError(NavlearnError):
    slug = "out-of-bounds"


class SchemaMismatchError(NavlearnError):
    slug = "schema-mismatch"


class ValidationError(NavlearnError):
    slug = "invalid-input"


class UnreachableGoalError(NavlearnError):
    slug = "unreachable-goal"


class NotFoundError(NavlearnError):
    slug = "not-found"


class BusyError(NavlearnError):
    slug = "busy"
