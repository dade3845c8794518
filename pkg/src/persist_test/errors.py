"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the process exit code used by the command line tool.
"""


class PersistTestError(Exception):
    exit_code = 1


class InputError(PersistTestError, ValueError):
    """Invalid user input: bad shapes, missing columns, out-of-range parameters."""

    exit_code = 2


class ResourceError(PersistTestError, MemoryError):
    """A configured size budget would be exceeded."""

    exit_code = 3

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget


class ConsistencyError(PersistTestError, RuntimeError):
    """Internal invariant violated, e.g. a simplex whose face is missing."""

    exit_code = 4
