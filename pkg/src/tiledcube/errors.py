"""Exception types for malformed input data."""


class DataError(Exception):
    """Input data violates a format or invariant (CLI exit status 2)."""


class RateTableError(DataError):
    pass


class TraceError(DataError):
    pass
